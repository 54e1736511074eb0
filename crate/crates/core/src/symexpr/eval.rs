use num_complex::Complex64;

use super::diff::flat_poly;
use super::{Expr, ExprError, ExtC, FlatKind, Node, Var};

/// A commutative algebra in which expressions can be interpreted.
///
/// Implemented for plain complex numbers, [`ExtC`], and truncated jets.
pub trait Algebra {
    type T: Clone;

    fn constant(&self, c: Complex64) -> Self::T;
    fn var(&self, v: Var) -> Result<Self::T, ExprError>;
    fn norm_xi_prime(&self) -> Result<Self::T, ExprError>;
    fn add(&self, a: &Self::T, b: &Self::T) -> Self::T;
    fn sub(&self, a: &Self::T, b: &Self::T) -> Self::T;
    fn mul(&self, a: &Self::T, b: &Self::T) -> Self::T;
    fn neg(&self, a: &Self::T) -> Self::T;
    fn div(&self, a: &Self::T, b: &Self::T) -> Result<Self::T, ExprError>;
    fn powi(&self, a: &Self::T, k: i32) -> Result<Self::T, ExprError>;
    fn exp(&self, a: &Self::T) -> Result<Self::T, ExprError>;
    /// `order`-th derivative of the flat function of `kind`, applied to `a`.
    fn flat(&self, kind: FlatKind, order: u32, a: &Self::T) -> Result<Self::T, ExprError>;
}

/// Interpret `e` in the algebra `alg`.
pub fn eval_in<A: Algebra + ?Sized>(alg: &A, e: &Expr) -> Result<A::T, ExprError> {
    Ok(match e.node() {
        Node::Const(c) => alg.constant(*c),
        Node::Var(v) => alg.var(*v)?,
        Node::NormXiPrime => alg.norm_xi_prime()?,
        Node::Neg(a) => alg.neg(&eval_in(alg, a)?),
        Node::Add(a, b) => alg.add(&eval_in(alg, a)?, &eval_in(alg, b)?),
        Node::Sub(a, b) => alg.sub(&eval_in(alg, a)?, &eval_in(alg, b)?),
        Node::Mul(a, b) => alg.mul(&eval_in(alg, a)?, &eval_in(alg, b)?),
        Node::Div(a, b) => alg.div(&eval_in(alg, a)?, &eval_in(alg, b)?)?,
        Node::Pow(a, k) => alg.powi(&eval_in(alg, a)?, *k)?,
        Node::Exp(a) => alg.exp(&eval_in(alg, a)?)?,
        Node::Flat { kind, order, arg } => alg.flat(*kind, *order, &eval_in(alg, arg)?)?,
        Node::Bump(t) => {
            let t = eval_in(alg, t)?;
            let one = alg.constant(Complex64::new(1.0, 0.0));
            let l = alg.flat(FlatKind::Square, 0, &alg.add(&t, &one))?;
            let r = alg.flat(FlatKind::Square, 0, &alg.sub(&one, &t))?;
            alg.mul(&l, &r)
        }
        Node::Cutoff(t, a, b) => {
            let t = eval_in(alg, t)?;
            let a = eval_in(alg, a)?;
            let b = eval_in(alg, b)?;
            let l = alg.flat(FlatKind::Square, 0, &alg.sub(&t, &a))?;
            let r = alg.flat(FlatKind::Square, 0, &alg.sub(&b, &t))?;
            alg.mul(&l, &r)
        }
    })
}

pub(crate) fn real_arg(z: Complex64, what: &str) -> Result<f64, ExprError> {
    if z.im.abs() > 1e-12 * (1.0 + z.re.abs()) {
        return Err(ExprError::Domain(format!("{what} of non-real argument {z}")));
    }
    Ok(z.re)
}

/// Flat function derivative evaluated with an extended exponent.
pub(crate) fn flat_ext(kind: FlatKind, order: u32, u: f64) -> ExtC {
    if u <= 0.0 {
        return ExtC::ZERO;
    }
    let s = ExtC::from_real(1.0 / u);
    let poly = flat_poly(kind, order);
    let mut acc = ExtC::ZERO;
    for &c in poly.iter().rev() {
        acc = acc * s + ExtC::from_real(c);
    }
    let expo = -(1.0 / u).powi(kind.power() as i32);
    acc * ExtC::exp_of(Complex64::new(expo, 0.0))
}

fn norm_prime(xi: &[f64]) -> Result<f64, ExprError> {
    if xi.len() < 2 {
        return Err(ExprError::Domain("normXiPrime needs dimension >= 2".into()));
    }
    let r = xi[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(ExprError::Domain("normXiPrime evaluated at xi' = 0".into()));
    }
    Ok(r)
}

fn lookup(x: &[f64], xi: &[f64], v: Var) -> Result<f64, ExprError> {
    let (arr, k) = match v {
        Var::X(k) => (x, k),
        Var::Xi(k) => (xi, k),
    };
    arr.get(k)
        .copied()
        .ok_or_else(|| ExprError::Domain(format!("variable {v} not defined at point of dimension {}", arr.len())))
}

/// Plain IEEE complex evaluation at `(x, xi)`.
pub struct ComplexAlgebra<'a> {
    pub x: &'a [f64],
    pub xi: &'a [f64],
}

impl Algebra for ComplexAlgebra<'_> {
    type T = Complex64;

    fn constant(&self, c: Complex64) -> Complex64 {
        c
    }
    fn var(&self, v: Var) -> Result<Complex64, ExprError> {
        Ok(Complex64::new(lookup(self.x, self.xi, v)?, 0.0))
    }
    fn norm_xi_prime(&self) -> Result<Complex64, ExprError> {
        Ok(Complex64::new(norm_prime(self.xi)?, 0.0))
    }
    fn add(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a + b
    }
    fn sub(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a - b
    }
    fn mul(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a * b
    }
    fn neg(&self, a: &Complex64) -> Complex64 {
        -a
    }
    fn div(&self, a: &Complex64, b: &Complex64) -> Result<Complex64, ExprError> {
        if b.norm() == 0.0 {
            return Err(ExprError::Domain("division by zero".into()));
        }
        Ok(a / b)
    }
    fn powi(&self, a: &Complex64, k: i32) -> Result<Complex64, ExprError> {
        if k < 0 && a.norm() == 0.0 {
            return Err(ExprError::Domain("negative power of zero".into()));
        }
        Ok(a.powi(k))
    }
    fn exp(&self, a: &Complex64) -> Result<Complex64, ExprError> {
        Ok(a.exp())
    }
    fn flat(&self, kind: FlatKind, order: u32, a: &Complex64) -> Result<Complex64, ExprError> {
        let u = real_arg(*a, "flatExp")?;
        Ok(flat_ext(kind, order, u).to_complex())
    }
}

/// Evaluation with an extended exponent so that flat factors never underflow to zero.
pub struct ExtAlgebra<'a> {
    pub x: &'a [f64],
    pub xi: &'a [f64],
}

impl Algebra for ExtAlgebra<'_> {
    type T = ExtC;

    fn constant(&self, c: Complex64) -> ExtC {
        ExtC::from_complex(c)
    }
    fn var(&self, v: Var) -> Result<ExtC, ExprError> {
        Ok(ExtC::from_real(lookup(self.x, self.xi, v)?))
    }
    fn norm_xi_prime(&self) -> Result<ExtC, ExprError> {
        Ok(ExtC::from_real(norm_prime(self.xi)?))
    }
    fn add(&self, a: &ExtC, b: &ExtC) -> ExtC {
        *a + *b
    }
    fn sub(&self, a: &ExtC, b: &ExtC) -> ExtC {
        *a - *b
    }
    fn mul(&self, a: &ExtC, b: &ExtC) -> ExtC {
        *a * *b
    }
    fn neg(&self, a: &ExtC) -> ExtC {
        -*a
    }
    fn div(&self, a: &ExtC, b: &ExtC) -> Result<ExtC, ExprError> {
        a.checked_div(*b).ok_or_else(|| ExprError::Domain("division by zero".into()))
    }
    fn powi(&self, a: &ExtC, k: i32) -> Result<ExtC, ExprError> {
        a.powi(k).ok_or_else(|| ExprError::Domain("negative power of zero".into()))
    }
    fn exp(&self, a: &ExtC) -> Result<ExtC, ExprError> {
        Ok(ExtC::exp_of(a.to_complex()))
    }
    fn flat(&self, kind: FlatKind, order: u32, a: &ExtC) -> Result<ExtC, ExprError> {
        let u = real_arg(a.to_complex(), "flatExp")?;
        // arguments below f64 range are treated as exact zero
        Ok(flat_ext(kind, order, u))
    }
}

/// Evaluate at the phase-space point `(x, xi)`.
pub fn evaluate(e: &Expr, x: &[f64], xi: &[f64]) -> Result<Complex64, ExprError> {
    eval_in(&ComplexAlgebra { x, xi }, e)
}

/// Evaluate keeping an extended exponent (for sign tests on flat functions).
pub fn evaluate_ext(e: &Expr, x: &[f64], xi: &[f64]) -> Result<ExtC, ExprError> {
    eval_in(&ExtAlgebra { x, xi }, e)
}
