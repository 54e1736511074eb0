//! Classical symbols `p_m + p_{m-1} + ...` and the symbol calculus.

mod calculus;
mod fixtures;
#[cfg(test)]
mod tests;

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jet::{jet_of, Jet, JetError};
use crate::symexpr::{evaluate, parse_expression, Expr, ExprError};

pub use calculus::{adjoint_symbol, compose_symbols, iterated_hamilton, poisson, MAX_DEPTH};
pub use fixtures::{fixture, fixture_names, lewy, model, model2d, p1, p1_im, p2, p2_im, profile_f, template};

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error("symbol has no terms")]
    Empty,
    #[error("term degrees must descend by one: got {0} after {1}")]
    Degrees(i32, i32),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("expression uses variable index {used} but n = {n}")]
    IndexOutOfRange { used: usize, n: usize },
    #[error("requested depth {0} exceeds the cap {1}")]
    DepthExceeded(usize, usize),
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error("singular sample at x = {x:?}, xi = {xi:?}: {msg}")]
    SingularSample { x: Vec<f64>, xi: Vec<f64>, msg: String },
    #[error("point is not characteristic: |p| = {0:e}")]
    NotCharacteristic(f64),
    #[error("fiber coordinate xi = 0 is excluded")]
    ZeroFiber,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// A term `a(x, xi)` positively homogeneous of degree `degree` in `xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousTerm {
    pub degree: i32,
    pub expr: Expr,
    pub n: usize,
}

impl HomogeneousTerm {
    pub fn new(degree: i32, expr: Expr, n: usize) -> Result<HomogeneousTerm, SymbolError> {
        let used = expr.max_index();
        if used > n {
            return Err(SymbolError::IndexOutOfRange { used, n });
        }
        Ok(HomogeneousTerm { degree, expr, n })
    }

    pub fn parse(degree: i32, text: &str, n: usize) -> Result<HomogeneousTerm, SymbolError> {
        Ok(HomogeneousTerm { degree, expr: parse_expression(text, n)?, n })
    }

    pub fn zero(degree: i32, n: usize) -> HomogeneousTerm {
        HomogeneousTerm { degree, expr: Expr::zero(), n }
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<Complex64, SymbolError> {
        Ok(evaluate(&self.expr, x, xi)?)
    }

    pub fn jet_at(&self, x: &[f64], xi: &[f64], order: usize) -> Result<Jet, SymbolError> {
        Ok(jet_of(&self.expr, x, xi, order)?)
    }
}

/// Config form of a term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub degree: i32,
    pub expr: String,
}

/// Finite descending list of homogeneous terms. Terms past the end of the
/// list are zero, so a symbol of depth `D` is exact rather than truncated.
///
/// `tangential` marks symbols of operators in `x'` alone, with `x1` a
/// parameter; such symbols do not depend on `xi1` and their adjoint only
/// differentiates in the `x'` directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSymbol {
    n: usize,
    terms: Vec<HomogeneousTerm>,
    tangential: bool,
}

impl ClassicalSymbol {
    pub fn new(n: usize, terms: Vec<HomogeneousTerm>) -> Result<ClassicalSymbol, SymbolError> {
        let first = terms.first().ok_or(SymbolError::Empty)?;
        let mut prev = first.degree + 1;
        for t in &terms {
            if t.n != n {
                return Err(SymbolError::DimensionMismatch(t.n, n));
            }
            if t.degree != prev - 1 {
                return Err(SymbolError::Degrees(t.degree, prev));
            }
            prev = t.degree;
        }
        Ok(ClassicalSymbol { n, terms, tangential: false })
    }

    /// Symbol with a single (principal) term.
    pub fn single(degree: i32, expr: Expr, n: usize) -> Result<ClassicalSymbol, SymbolError> {
        ClassicalSymbol::new(n, vec![HomogeneousTerm::new(degree, expr, n)?])
    }

    /// Build from consecutive expressions starting at `top_degree`.
    pub fn from_exprs(n: usize, top_degree: i32, exprs: Vec<Expr>) -> Result<ClassicalSymbol, SymbolError> {
        let terms = exprs
            .into_iter()
            .enumerate()
            .map(|(i, e)| HomogeneousTerm::new(top_degree - i as i32, e, n))
            .collect::<Result<Vec<_>, _>>()?;
        ClassicalSymbol::new(n, terms)
    }

    pub fn from_specs(n: usize, specs: &[TermSpec]) -> Result<ClassicalSymbol, SymbolError> {
        let terms = specs
            .iter()
            .map(|s| HomogeneousTerm::parse(s.degree, &s.expr, n))
            .collect::<Result<Vec<_>, _>>()?;
        ClassicalSymbol::new(n, terms)
    }

    pub fn to_specs(&self) -> Vec<TermSpec> {
        self.terms
            .iter()
            .map(|t| TermSpec { degree: t.degree, expr: t.expr.to_string() })
            .collect()
    }

    /// The identity operator's symbol `1`.
    pub fn identity(n: usize) -> ClassicalSymbol {
        ClassicalSymbol { n, terms: vec![HomogeneousTerm { degree: 0, expr: Expr::one(), n }], tangential: false }
    }

    pub fn with_tangential(mut self, flag: bool) -> ClassicalSymbol {
        self.tangential = flag;
        self
    }

    pub fn is_tangential(&self) -> bool {
        self.tangential
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn top_degree(&self) -> i32 {
        self.terms[0].degree
    }

    pub fn depth(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn terms(&self) -> &[HomogeneousTerm] {
        &self.terms
    }

    pub fn principal(&self) -> &HomogeneousTerm {
        &self.terms[0]
    }

    /// Term of degree `top_degree - i`; zero past the end of the list.
    pub fn term_expr(&self, i: usize) -> Expr {
        self.terms.get(i).map(|t| t.expr.clone()).unwrap_or_else(Expr::zero)
    }

    /// Term of the given degree, zero if absent.
    pub fn term_of_degree(&self, degree: i32) -> Expr {
        let i = self.top_degree() - degree;
        if i < 0 {
            return Expr::zero();
        }
        self.term_expr(i as usize)
    }

    /// Drop trailing terms beyond `depth`.
    pub fn truncated(&self, depth: usize) -> ClassicalSymbol {
        let mut out = self.clone();
        out.terms.truncate(depth + 1);
        out
    }

    /// Extend with zero terms up to `depth`.
    pub fn padded(&self, depth: usize) -> ClassicalSymbol {
        let mut out = self.clone();
        while out.terms.len() <= depth {
            let d = out.terms.last().unwrap().degree - 1;
            out.terms.push(HomogeneousTerm::zero(d, self.n));
        }
        out
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<Complex64, SymbolError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            acc += t.eval(x, xi)?;
        }
        Ok(acc)
    }

    /// Jets of every listed term at the base point.
    pub fn jets_at(&self, x: &[f64], xi: &[f64], order: usize) -> Result<Vec<Jet>, SymbolError> {
        self.terms.iter().map(|t| t.jet_at(x, xi, order)).collect()
    }
}

impl fmt::Display for ClassicalSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "[{}] {}", t.degree, t.expr)?;
        }
        Ok(())
    }
}

/// Largest relative Euler residual `|<xi, d_xi a> - m a| / (1 + |a|)` over
/// random samples with `x` in `[-2, 3]^n` and `|xi|` in `[0.5, 2]`.
pub fn check_homogeneity(term: &HomogeneousTerm, samples: usize, seed: u64) -> Result<f64, SymbolError> {
    let n = term.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..3.0)).collect();
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let r = rng.gen_range(0.5..2.0);
        let xi: Vec<f64> = dir.iter().map(|v| v * r / len).collect();
        worst = worst.max(euler_residual(term, &x, &xi)?);
    }
    Ok(worst)
}

/// Relative Euler residual at one point.
pub fn euler_residual(term: &HomogeneousTerm, x: &[f64], xi: &[f64]) -> Result<f64, SymbolError> {
    let n = term.n;
    let j = jet_of(&term.expr, x, xi, 1).map_err(|e| SymbolError::SingularSample {
        x: x.to_vec(),
        xi: xi.to_vec(),
        msg: e.to_string(),
    })?;
    let a = j.value();
    let mut euler = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let pos = j.table().unit(n + k);
        euler += j.derivative_at(pos) * xi[k];
    }
    Ok((euler - a * term.degree as f64).norm() / (1.0 + a.norm()))
}

/// Principal type at a characteristic point: the Hamilton field
/// `(d_xi p, -d_x p)` and the radial field `(0, xi)` are linearly independent.
pub fn is_principal_type(p: &HomogeneousTerm, x: &[f64], xi: &[f64]) -> Result<bool, SymbolError> {
    let n = p.n;
    if x.len() != n || xi.len() != n {
        return Err(SymbolError::DimensionMismatch(x.len().max(xi.len()), n));
    }
    if xi.iter().all(|v| *v == 0.0) {
        return Err(SymbolError::ZeroFiber);
    }
    let j = p.jet_at(x, xi, 1)?;
    let v = j.value().norm();
    if v > 1e-8 {
        return Err(SymbolError::NotCharacteristic(v));
    }
    let mut m = DMatrix::<Complex64>::zeros(2 * n, 2);
    for k in 0..n {
        m[(k, 0)] = j.derivative_at(j.table().unit(n + k));
        m[(n + k, 0)] = -j.derivative_at(j.table().unit(k));
        m[(n + k, 1)] = Complex64::new(xi[k], 0.0);
    }
    let sv = m.singular_values();
    Ok(sv.min() > 1e-8)
}
