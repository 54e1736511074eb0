//! Truncated Taylor expansions ("jets") at a phase-space point.
//!
//! A jet over `n` base and `n` fiber variables stores a dense table of
//! coefficients for every multi-index `(alpha, beta)` with `|alpha|+|beta| <= K`.
//! The public accessors speak in derivative values `d^alpha_x d^beta_xi f(base)`;
//! internally the table holds Taylor coefficients (derivatives divided by
//! `alpha! beta!`), which keeps products free of binomials.

mod division;
mod homog;
mod order;
mod table;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symexpr::{eval_in, Algebra, Expr, ExprError, FlatKind, Var};

pub use division::{divide_by_factor, DivisionResult, DIVISION_TOL};
pub use homog::{homogenize, HomogeneousExtension};
pub use order::{compare_indices, coverage_depth, first_nonvanishing, OrderedIndex};
pub use table::{multi_indices, IndexTable};

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 10;
/// Default truncation order.
pub const DEFAULT_ORDER: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jets have different base points")]
    BaseMismatch,
    #[error("jets have different orders ({0} vs {1})")]
    OrderMismatch(usize, usize),
    #[error("jets have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("jet order {order} exceeds the cap {cap} for n = {n}")]
    OrderCap { order: usize, cap: usize, n: usize },
    #[error("divisor does not vanish at the base point (|p| = {0:e})")]
    NotCharacteristic(f64),
    #[error("divisor is not transversal to the chosen direction (|d p| = {0:e})")]
    NonTransversal(f64),
    #[error("inconsistent truncation depths: {0}")]
    InconsistentDepth(String),
    #[error("base fiber point is not on the unit sphere (|xi| = {0})")]
    NotOnSphere(f64),
    #[error("evaluation at xi = 0")]
    ZeroFiber,
    #[error("singular base point: {0}")]
    Singular(#[from] ExprError),
}

/// Truncated Taylor expansion at `(x0, xi0)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "JetRepr", try_from = "JetRepr")]
pub struct Jet {
    n: usize,
    base_x: Vec<f64>,
    base_xi: Vec<f64>,
    order: usize,
    taylor: Vec<Complex64>,
    table: Arc<IndexTable>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Jet) -> bool {
        self.n == other.n
            && self.order == other.order
            && self.base_x == other.base_x
            && self.base_xi == other.base_xi
            && self.taylor == other.taylor
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

pub(crate) fn multi_factorial(idx: &[u8]) -> f64 {
    idx.iter().map(|&k| factorial(k as usize)).product()
}

impl Jet {
    /// Zero jet at a base point.
    pub fn zeros(x0: &[f64], xi0: &[f64], order: usize) -> Result<Jet, JetError> {
        let n = x0.len();
        if xi0.len() != n {
            return Err(JetError::DimensionMismatch(n, xi0.len()));
        }
        if order > MAX_ORDER || n > 4 {
            return Err(JetError::OrderCap { order, cap: MAX_ORDER, n });
        }
        let table = IndexTable::get(2 * n, order);
        Ok(Jet {
            n,
            base_x: x0.to_vec(),
            base_xi: xi0.to_vec(),
            order,
            taylor: vec![Complex64::new(0.0, 0.0); table.len()],
            table,
        })
    }

    pub fn constant_like(&self, c: Complex64) -> Jet {
        let mut out = self.zeros_like();
        out.taylor[0] = c;
        out
    }

    pub fn zeros_like(&self) -> Jet {
        Jet { taylor: vec![Complex64::new(0.0, 0.0); self.taylor.len()], ..self.clone() }
    }

    /// The coordinate function of stacked slot `slot` (x first, then xi).
    pub fn coordinate_like(&self, slot: usize) -> Jet {
        let mut out = self.zeros_like();
        out.taylor[0] = Complex64::new(self.base_value(slot), 0.0);
        if self.order >= 1 {
            let idx = self.table.unit(slot);
            out.taylor[idx] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_x(&self) -> &[f64] {
        &self.base_x
    }

    pub fn base_xi(&self) -> &[f64] {
        &self.base_xi
    }

    pub fn base_value(&self, slot: usize) -> f64 {
        if slot < self.n {
            self.base_x[slot]
        } else {
            self.base_xi[slot - self.n]
        }
    }

    pub fn table(&self) -> &IndexTable {
        &self.table
    }

    pub fn value(&self) -> Complex64 {
        self.taylor[0]
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.taylor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taylor.is_empty()
    }

    /// Stacked multi-index of table position `pos`.
    pub fn index_at(&self, pos: usize) -> &[u8] {
        self.table.index(pos)
    }

    pub fn taylor_at(&self, pos: usize) -> Complex64 {
        self.taylor[pos]
    }

    pub fn set_taylor_at(&mut self, pos: usize, v: Complex64) {
        self.taylor[pos] = v;
    }

    /// Derivative value at table position `pos`.
    pub fn derivative_at(&self, pos: usize) -> Complex64 {
        self.taylor[pos] * multi_factorial(self.table.index(pos))
    }

    pub fn set_derivative_at(&mut self, pos: usize, v: Complex64) {
        self.taylor[pos] = v / multi_factorial(self.table.index(pos));
    }

    fn stacked(&self, alpha: &[usize], beta: &[usize]) -> Option<Vec<u8>> {
        if alpha.len() > self.n || beta.len() > self.n {
            return None;
        }
        let mut idx = vec![0u8; 2 * self.n];
        for (k, &a) in alpha.iter().enumerate() {
            idx[k] = a as u8;
        }
        for (k, &b) in beta.iter().enumerate() {
            idx[self.n + k] = b as u8;
        }
        Some(idx)
    }

    /// Position of a stacked multi-index, `None` beyond the truncation.
    pub fn position(&self, idx: &[u8]) -> Option<usize> {
        self.table.position(idx)
    }

    /// `d^alpha_x d^beta_xi f(base)`; zero beyond the truncation.
    pub fn derivative(&self, alpha: &[usize], beta: &[usize]) -> Complex64 {
        self.stacked(alpha, beta)
            .and_then(|idx| self.position(&idx))
            .map(|p| self.derivative_at(p))
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn set_derivative(&mut self, alpha: &[usize], beta: &[usize], v: Complex64) -> bool {
        match self.stacked(alpha, beta).and_then(|idx| self.position(&idx)) {
            Some(p) => {
                self.set_derivative_at(p, v);
                true
            }
            None => false,
        }
    }

    fn check_compatible(&self, other: &Jet) -> Result<(), JetError> {
        if self.n != other.n {
            return Err(JetError::DimensionMismatch(self.n, other.n));
        }
        if self.order != other.order {
            return Err(JetError::OrderMismatch(self.order, other.order));
        }
        if self.base_x != other.base_x || self.base_xi != other.base_xi {
            return Err(JetError::BaseMismatch);
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        Ok(self.sub_unchecked(other))
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, other: &Jet) -> Jet {
        let mut out = self.clone();
        for (a, b) in out.taylor.iter_mut().zip(&other.taylor) {
            *a += b;
        }
        out
    }

    pub(crate) fn sub_unchecked(&self, other: &Jet) -> Jet {
        let mut out = self.clone();
        for (a, b) in out.taylor.iter_mut().zip(&other.taylor) {
            *a -= b;
        }
        out
    }

    pub(crate) fn mul_unchecked(&self, other: &Jet) -> Jet {
        let mut out = self.zeros_like();
        for (t, pairs) in self.table.products().iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(i, j) in pairs {
                acc += self.taylor[i as usize] * other.taylor[j as usize];
            }
            out.taylor[t] = acc;
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        let mut out = self.clone();
        for a in out.taylor.iter_mut() {
            *a *= c;
        }
        out
    }

    pub fn neg(&self) -> Jet {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn conj(&self) -> Jet {
        let mut out = self.clone();
        for a in out.taylor.iter_mut() {
            *a = a.conj();
        }
        out
    }

    /// `sum_k derivs[k] / k! * (self - self(base))^k`, the jet of `g(self)`
    /// when `derivs[k] = g^{(k)}(self(base))`.
    pub fn compose_univariate(&self, derivs: &[Complex64]) -> Jet {
        let mut h = self.clone();
        h.taylor[0] = Complex64::new(0.0, 0.0);
        let mut out = self.constant_like(derivs[0]);
        let mut power = self.constant_like(Complex64::new(1.0, 0.0));
        for k in 1..=self.order {
            power = power.mul_unchecked(&h);
            let c = derivs.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0)) / factorial(k);
            if c != Complex64::new(0.0, 0.0) {
                out = out.add_unchecked(&power.scale(c));
            }
        }
        out
    }

    pub fn reciprocal(&self) -> Result<Jet, JetError> {
        let u = self.value();
        if u.norm() == 0.0 {
            return Err(JetError::Singular(ExprError::Domain("division by zero".into())));
        }
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut c = Complex64::new(1.0, 0.0) / u;
        for k in 0..=self.order {
            derivs.push(c);
            c = c * Complex64::new(-((k + 1) as f64), 0.0) / u;
        }
        Ok(self.compose_univariate(&derivs))
    }

    /// Partial derivative in stacked slot `slot`; the result has order `K - 1`.
    pub fn partial(&self, slot: usize) -> Jet {
        let order = self.order.saturating_sub(1);
        let table = IndexTable::get(2 * self.n, order);
        let mut taylor = vec![Complex64::new(0.0, 0.0); table.len()];
        if self.order > 0 {
            for (pos, t) in taylor.iter_mut().enumerate() {
                let mut idx = table.index(pos).to_vec();
                idx[slot] += 1;
                let src = self.table.position(&idx).expect("index within truncation");
                *t = self.taylor[src] * idx[slot] as f64;
            }
        }
        Jet { taylor, table, order, ..self.clone() }
    }

    /// Same expansion truncated to a lower order.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        let table = IndexTable::get(2 * self.n, order);
        let taylor = (0..table.len()).map(|p| self.taylor[p]).collect();
        Jet { taylor, table, order, ..self.clone() }
    }

    /// Raise the nominal order, padding with zeros (used only where the
    /// higher coefficients are known to be irrelevant).
    pub fn pad(&self, order: usize) -> Jet {
        if order <= self.order {
            return self.truncate(order);
        }
        let table = IndexTable::get(2 * self.n, order);
        let mut taylor = vec![Complex64::new(0.0, 0.0); table.len()];
        taylor[..self.taylor.len()].copy_from_slice(&self.taylor);
        Jet { taylor, table, order, ..self.clone() }
    }

    /// Largest coefficient modulus (derivative values) up to total order `upto`.
    pub fn max_abs_upto(&self, upto: usize) -> f64 {
        (0..self.taylor.len())
            .filter(|&p| self.table.degree(p) <= upto)
            .map(|p| self.derivative_at(p).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_upto(self.order)
    }

    /// Evaluate the Taylor polynomial at `(x, xi)`.
    pub fn eval_polynomial(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        let d = 2 * self.n;
        let h: Vec<f64> = (0..d)
            .map(|s| if s < self.n { x[s] - self.base_x[s] } else { xi[s - self.n] - self.base_xi[s - self.n] })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for pos in 0..self.taylor.len() {
            let idx = self.table.index(pos);
            let mono: f64 = idx.iter().zip(&h).map(|(&k, &v)| v.powi(k as i32)).product();
            acc += self.taylor[pos] * mono;
        }
        acc
    }

    /// Largest difference in derivative values against another jet of the same shape.
    pub fn max_diff(&self, other: &Jet) -> f64 {
        let top = self.order.min(other.order);
        let table = IndexTable::get(2 * self.n, top);
        (0..table.len())
            .map(|p| ((self.taylor[p] - other.taylor[p]) * multi_factorial(table.index(p))).norm())
            .fold(0.0, f64::max)
    }
}

/// Jets as an expression algebra: evaluating an expression here yields its jet.
pub struct JetAlgebra {
    proto: Jet,
}

impl JetAlgebra {
    pub fn new(x0: &[f64], xi0: &[f64], order: usize) -> Result<JetAlgebra, JetError> {
        Ok(JetAlgebra { proto: Jet::zeros(x0, xi0, order)? })
    }
}

impl Algebra for JetAlgebra {
    type T = Jet;

    fn constant(&self, c: Complex64) -> Jet {
        self.proto.constant_like(c)
    }
    fn var(&self, v: Var) -> Result<Jet, ExprError> {
        let n = self.proto.n;
        let (Var::X(k) | Var::Xi(k)) = v;
        if k >= n {
            return Err(ExprError::Domain(format!("variable {v} not defined in dimension {n}")));
        }
        Ok(self.proto.coordinate_like(v.slot(n)))
    }
    fn norm_xi_prime(&self) -> Result<Jet, ExprError> {
        let n = self.proto.n;
        if n < 2 {
            return Err(ExprError::Domain("normXiPrime needs dimension >= 2".into()));
        }
        let mut sq = self.proto.zeros_like();
        for k in 1..n {
            let c = self.proto.coordinate_like(n + k);
            sq = sq.add_unchecked(&c.mul_unchecked(&c));
        }
        let u = sq.value().re;
        if u <= 0.0 {
            return Err(ExprError::Domain("normXiPrime evaluated at xi' = 0".into()));
        }
        // derivatives of sqrt at u
        let mut derivs = Vec::with_capacity(self.proto.order + 1);
        let mut coef = 1.0;
        let mut expo = 0.5;
        for _ in 0..=self.proto.order {
            derivs.push(Complex64::new(coef * u.powf(expo), 0.0));
            coef *= expo;
            expo -= 1.0;
        }
        Ok(sq.compose_univariate(&derivs))
    }
    fn add(&self, a: &Jet, b: &Jet) -> Jet {
        a.add_unchecked(b)
    }
    fn sub(&self, a: &Jet, b: &Jet) -> Jet {
        a.sub_unchecked(b)
    }
    fn mul(&self, a: &Jet, b: &Jet) -> Jet {
        a.mul_unchecked(b)
    }
    fn neg(&self, a: &Jet) -> Jet {
        a.neg()
    }
    fn div(&self, a: &Jet, b: &Jet) -> Result<Jet, ExprError> {
        let r = b.reciprocal().map_err(|_| ExprError::Domain("division by zero".into()))?;
        Ok(a.mul_unchecked(&r))
    }
    fn powi(&self, a: &Jet, k: i32) -> Result<Jet, ExprError> {
        let base = if k < 0 {
            a.reciprocal().map_err(|_| ExprError::Domain("negative power of zero".into()))?
        } else {
            a.clone()
        };
        let mut out = self.proto.constant_like(Complex64::new(1.0, 0.0));
        for _ in 0..k.unsigned_abs() {
            out = out.mul_unchecked(&base);
        }
        Ok(out)
    }
    fn exp(&self, a: &Jet) -> Result<Jet, ExprError> {
        let v = a.value().exp();
        Ok(a.compose_univariate(&vec![v; self.proto.order + 1]))
    }
    fn flat(&self, kind: FlatKind, order: u32, a: &Jet) -> Result<Jet, ExprError> {
        let u = crate::symexpr::eval::real_arg(a.value(), "flatExp")?;
        let derivs: Vec<Complex64> = (0..=self.proto.order as u32)
            .map(|j| crate::symexpr::eval::flat_ext(kind, order + j, u).to_complex())
            .collect();
        Ok(a.compose_univariate(&derivs))
    }
}

/// Jet of an expression at `(x0, xi0)` through order `order`.
pub fn jet_of(e: &Expr, x0: &[f64], xi0: &[f64], order: usize) -> Result<Jet, JetError> {
    let alg = JetAlgebra::new(x0, xi0, order)?;
    Ok(eval_in(&alg, e)?)
}

#[derive(Serialize, Deserialize)]
struct CoeffRepr {
    alpha: Vec<usize>,
    beta: Vec<usize>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct BaseRepr {
    x: Vec<f64>,
    xi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JetRepr {
    base: BaseRepr,
    order: usize,
    coeffs: Vec<CoeffRepr>,
}

impl From<Jet> for JetRepr {
    fn from(j: Jet) -> JetRepr {
        let n = j.n;
        let coeffs = (0..j.len())
            .map(|p| {
                let idx = j.index_at(p);
                let v = j.derivative_at(p);
                CoeffRepr {
                    alpha: idx[..n].iter().map(|&k| k as usize).collect(),
                    beta: idx[n..].iter().map(|&k| k as usize).collect(),
                    re: v.re,
                    im: v.im,
                }
            })
            .collect();
        JetRepr { base: BaseRepr { x: j.base_x, xi: j.base_xi }, order: j.order, coeffs }
    }
}

impl TryFrom<JetRepr> for Jet {
    type Error = String;
    fn try_from(r: JetRepr) -> Result<Jet, String> {
        let mut j = Jet::zeros(&r.base.x, &r.base.xi, r.order).map_err(|e| e.to_string())?;
        for c in r.coeffs {
            if !j.set_derivative(&c.alpha, &c.beta, Complex64::new(c.re, c.im)) {
                return Err(format!("coefficient {:?}/{:?} beyond order {}", c.alpha, c.beta, r.order));
            }
        }
        Ok(j)
    }
}

#[cfg(test)]
mod tests;
