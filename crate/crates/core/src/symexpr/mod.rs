//! Phase-space expressions: parsing, printing, symbolic differentiation and evaluation.
//!
//! Variables are `x1..xn` and `xi1..xin` (1-indexed in text, 0-indexed in [`Var`]).
//! `i` is the imaginary unit. Powers take integer exponents only.

mod diff;
pub(crate) mod eval;
mod ext;
mod parse;
mod print;

use std::fmt;
use std::ops;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use diff::{differentiate, differentiate_multi, flat_poly};
pub use eval::{evaluate, evaluate_ext, eval_in, Algebra, ComplexAlgebra, ExtAlgebra};
pub use ext::ExtC;
pub use parse::parse_expression;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{name}` at byte {offset} is out of range for dimension {n}")]
    IndexOutOfRange { name: String, offset: usize, n: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

impl ExprError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ExprError::Syntax { offset, .. }
            | ExprError::UnknownIdentifier { offset, .. }
            | ExprError::IndexOutOfRange { offset, .. } => Some(*offset),
            ExprError::Domain(_) => None,
        }
    }
}

/// A base (`X`) or fiber (`Xi`) coordinate, 0-indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Xi(usize),
}

impl Var {
    /// Position in the stacked coordinate vector `(x1..xn, xi1..xin)`.
    pub fn slot(self, n: usize) -> usize {
        match self {
            Var::X(k) => k,
            Var::Xi(k) => n + k,
        }
    }

    pub fn from_slot(slot: usize, n: usize) -> Var {
        if slot < n {
            Var::X(slot)
        } else {
            Var::Xi(slot - n)
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(k) => write!(f, "x{}", k + 1),
            Var::Xi(k) => write!(f, "xi{}", k + 1),
        }
    }
}

/// Flat building blocks `e^{-1/t^2}` and `e^{-1/t}` (zero for `t <= 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlatKind {
    Square,
    Linear,
}

impl FlatKind {
    pub fn power(self) -> u32 {
        match self {
            FlatKind::Square => 2,
            FlatKind::Linear => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Complex64),
    Var(Var),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, i32),
    Exp(Expr),
    /// `cutoff(t, -1, 1)`
    Bump(Expr),
    /// `|xi'| = |(xi2, .., xin)|`
    NormXiPrime,
    /// `order`-th derivative of the flat function of the given kind.
    Flat { kind: FlatKind, order: u32, arg: Expr },
    /// `flatExp(t - a) * flatExp(b - t)`
    Cutoff(Expr, Expr, Expr),
}

/// Immutable shared expression tree.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn wrap(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn constant(c: Complex64) -> Expr {
        Expr::wrap(Node::Const(c))
    }

    pub fn real(v: f64) -> Expr {
        Expr::constant(Complex64::new(v, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn one() -> Expr {
        Expr::real(1.0)
    }

    pub fn imag_unit() -> Expr {
        Expr::constant(Complex64::i())
    }

    pub fn var(v: Var) -> Expr {
        Expr::wrap(Node::Var(v))
    }

    pub fn x(k: usize) -> Expr {
        Expr::var(Var::X(k))
    }

    pub fn xi(k: usize) -> Expr {
        Expr::var(Var::Xi(k))
    }

    pub fn norm_xi_prime() -> Expr {
        Expr::wrap(Node::NormXiPrime)
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(Complex64::new(0.0, 0.0))
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(Complex64::new(1.0, 0.0))
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-*c),
            Node::Neg(a) => a.clone(),
            _ => Expr::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            _ if self.is_zero() => other.clone(),
            _ if other.is_zero() => self.clone(),
            _ => match other.node() {
                Node::Neg(b) => Expr::wrap(Node::Sub(self.clone(), b.clone())),
                _ => Expr::wrap(Node::Add(self.clone(), other.clone())),
            },
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            _ if other.is_zero() => self.clone(),
            _ if self.is_zero() => other.neg(),
            _ => match other.node() {
                Node::Neg(b) => Expr::wrap(Node::Add(self.clone(), b.clone())),
                _ => Expr::wrap(Node::Sub(self.clone(), other.clone())),
            },
        }
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            _ if self.is_zero() || other.is_zero() => Expr::zero(),
            _ if self.is_one() => other.clone(),
            _ if other.is_one() => self.clone(),
            (Some(a), _) if a == Complex64::new(-1.0, 0.0) => other.neg(),
            (_, Some(b)) if b == Complex64::new(-1.0, 0.0) => self.neg(),
            _ => Expr::wrap(Node::Mul(self.clone(), other.clone())),
        }
    }

    pub fn div(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) if b != Complex64::new(0.0, 0.0) => Expr::constant(a / b),
            _ if self.is_zero() => Expr::zero(),
            _ if other.is_one() => self.clone(),
            _ => Expr::wrap(Node::Div(self.clone(), other.clone())),
        }
    }

    pub fn powi(&self, k: i32) -> Expr {
        match self.as_const() {
            Some(c) if k >= 0 || c != Complex64::new(0.0, 0.0) => Expr::constant(c.powi(k)),
            _ if k == 0 => Expr::one(),
            _ if k == 1 => self.clone(),
            _ => Expr::wrap(Node::Pow(self.clone(), k)),
        }
    }

    pub fn exp(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(c.exp()),
            None => Expr::wrap(Node::Exp(self.clone())),
        }
    }

    pub fn bump(&self) -> Expr {
        Expr::wrap(Node::Bump(self.clone()))
    }

    pub fn flat(kind: FlatKind, order: u32, arg: &Expr) -> Expr {
        Expr::wrap(Node::Flat { kind, order, arg: arg.clone() })
    }

    pub fn flat_exp(arg: &Expr) -> Expr {
        Expr::flat(FlatKind::Square, 0, arg)
    }

    pub fn flat_exp1(arg: &Expr) -> Expr {
        Expr::flat(FlatKind::Linear, 0, arg)
    }

    pub fn cutoff(t: &Expr, a: &Expr, b: &Expr) -> Expr {
        Expr::wrap(Node::Cutoff(t.clone(), a.clone(), b.clone()))
    }

    pub fn scale(&self, c: Complex64) -> Expr {
        Expr::constant(c).mul(self)
    }

    /// Sum of a list, zero when empty.
    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        items.into_iter().fold(Expr::zero(), |acc, e| acc.add(&e))
    }

    /// Complex conjugate, valid because variables are real and all builtins
    /// have real Taylor coefficients.
    pub fn conj(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(c.conj()),
            Node::Var(_) | Node::NormXiPrime => self.clone(),
            Node::Neg(a) => a.conj().neg(),
            Node::Add(a, b) => a.conj().add(&b.conj()),
            Node::Sub(a, b) => a.conj().sub(&b.conj()),
            Node::Mul(a, b) => a.conj().mul(&b.conj()),
            Node::Div(a, b) => a.conj().div(&b.conj()),
            Node::Pow(a, k) => a.conj().powi(*k),
            Node::Exp(a) => a.conj().exp(),
            Node::Bump(a) => a.conj().bump(),
            Node::Flat { kind, order, arg } => Expr::flat(*kind, *order, &arg.conj()),
            Node::Cutoff(t, a, b) => Expr::cutoff(&t.conj(), &a.conj(), &b.conj()),
        }
    }

    /// Largest 1-based variable index used, counting `normXiPrime` as needing 2.
    pub fn max_index(&self) -> usize {
        let mut m = 0;
        self.visit(&mut |node| match node {
            Node::Var(Var::X(k)) | Node::Var(Var::Xi(k)) => m = m.max(k + 1),
            Node::NormXiPrime => m = m.max(2),
            _ => {}
        });
        m
    }

    /// True if the variable occurs (directly or through `normXiPrime`).
    pub fn depends_on(&self, var: Var) -> bool {
        let mut hit = false;
        self.visit(&mut |node| match node {
            Node::Var(v) if *v == var => hit = true,
            Node::NormXiPrime => {
                if let Var::Xi(k) = var {
                    if k >= 1 {
                        hit = true;
                    }
                }
            }
            _ => {}
        });
        hit
    }

    pub fn node_count(&self) -> usize {
        let mut c = 0;
        self.visit(&mut |_| c += 1);
        c
    }

    fn visit(&self, f: &mut dyn FnMut(&Node)) {
        f(self.node());
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::NormXiPrime => {}
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Bump(a) => a.visit(f),
            Node::Flat { arg, .. } => arg.visit(f),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Node::Cutoff(t, a, b) => {
                t.visit(f);
                a.visit(f);
                b.visit(f);
            }
        }
    }
}

impl ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
