//! Jet-level factorization `Q = P E + R` with `R` independent of `xi1`.


use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jet::{divide_by_factor, first_nonvanishing, Jet, JetError, OrderedIndex, MAX_ORDER};
use crate::symbol::{poisson, ClassicalSymbol, SymbolError};
use crate::symexpr::{differentiate, evaluate, Expr, Var};

pub const DEFAULT_DEPTH: usize = 3;

/// Threshold for the `xi1`-form checks.
pub const FORM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("principal symbol is not of the form xi1 + i f(x, xi'): {0}")]
    PrincipalForm(String),
    #[error("d p / d xi1 = {0} is not 1 at the base point")]
    NonUnitDerivative(Complex64),
    #[error("symbols have different dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("no jet order left at stage {0}")]
    OrderExhausted(usize),
    #[error("point is not characteristic: |p| = {0:e}")]
    NotCharacteristic(f64),
    #[error("bracket {{Re p, Im p}} = {0} is not positive")]
    BracketNotPositive(f64),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Expr(#[from] crate::symexpr::ExprError),
}

/// Jets at one base point of the terms of a classical symbol, highest degree
/// first. Each term carries its own valid order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "JetSymbolRepr", into = "JetSymbolRepr")]
pub struct JetSymbol {
    pub top_degree: i32,
    pub terms: Vec<Jet>,
}

#[derive(Serialize, Deserialize)]
struct JetSymbolRepr {
    top_degree: i32,
    terms: Vec<Jet>,
}

impl From<JetSymbol> for JetSymbolRepr {
    fn from(j: JetSymbol) -> Self {
        JetSymbolRepr { top_degree: j.top_degree, terms: j.terms }
    }
}

impl TryFrom<JetSymbolRepr> for JetSymbol {
    type Error = String;
    fn try_from(r: JetSymbolRepr) -> Result<Self, String> {
        if r.terms.is_empty() {
            return Err("jet symbol without terms".into());
        }
        Ok(JetSymbol { top_degree: r.top_degree, terms: r.terms })
    }
}

impl JetSymbol {
    pub fn from_symbol(s: &ClassicalSymbol, x0: &[f64], xi0: &[f64], order: usize) -> Result<JetSymbol, FactorError> {
        Ok(JetSymbol { top_degree: s.top_degree(), terms: s.jets_at(x0, xi0, order)? })
    }

    pub fn n(&self) -> usize {
        self.terms[0].n()
    }

    pub fn term(&self, i: usize) -> Option<&Jet> {
        self.terms.get(i)
    }

    pub fn orders(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.order()).collect()
    }
}

fn lower_to_common(a: &Jet, b: &Jet) -> (Jet, Jet) {
    let k = a.order().min(b.order());
    (a.truncate(k), b.truncate(k))
}

fn jet_add(a: &Jet, b: &Jet) -> Result<Jet, FactorError> {
    let (a, b) = lower_to_common(a, b);
    Ok(a.try_add(&b)?)
}

fn jet_sub(a: &Jet, b: &Jet) -> Result<Jet, FactorError> {
    let (a, b) = lower_to_common(a, b);
    Ok(a.try_sub(&b)?)
}

fn jet_mul(a: &Jet, b: &Jet) -> Result<Jet, FactorError> {
    let (a, b) = lower_to_common(a, b);
    Ok(a.try_mul(&b)?)
}

fn indices_of_degree(n: usize, s: usize) -> Vec<Vec<usize>> {
    crate::jet::multi_indices(n, s)
        .into_iter()
        .filter(|a| a.iter().map(|&v| v as usize).sum::<usize>() == s)
        .map(|a| a.into_iter().map(|v| v as usize).collect())
        .collect()
}

fn weight(alpha: &[usize]) -> Complex64 {
    let s: usize = alpha.iter().sum();
    let denom: f64 = alpha.iter().map(|&a| (1..=a).map(|v| v as f64).product::<f64>()).product();
    Complex64::new(0.0, -1.0).powi(s as i32) / denom
}

fn partial_multi(j: &Jet, alpha: &[usize], fiber: bool) -> Jet {
    let n = j.n();
    let mut out = j.clone();
    for (k, &c) in alpha.iter().enumerate() {
        for _ in 0..c {
            out = out.partial(if fiber { n + k } else { k });
        }
    }
    out
}

/// Term `d` (degree `m_a + m_b - d`) of `a # b` computed from jets,
/// leaving out the pairs `(i, l)` rejected by `skip`.
fn composition_term<F>(a: &[Jet], b: &[Jet], d: usize, skip: F) -> Result<Option<Jet>, FactorError>
where
    F: Fn(usize, usize, usize) -> bool,
{
    let n = a.first().or(b.first()).map(|j| j.n()).unwrap_or(1);
    let mut acc: Option<Jet> = None;
    for s in 0..=d {
        let alphas = indices_of_degree(n, s);
        for i in 0..=(d - s) {
            let l = d - s - i;
            if skip(i, l, s) {
                continue;
            }
            let (ai, bl) = match (a.get(i), b.get(l)) {
                (Some(x), Some(y)) => (x, y),
                _ => continue,
            };
            if ai.order() < s || bl.order() < s {
                return Err(FactorError::OrderExhausted(d));
            }
            for alpha in &alphas {
                let da = partial_multi(ai, alpha, true);
                let db = partial_multi(bl, alpha, false);
                let term = jet_mul(&da, &db)?.scale(weight(alpha));
                acc = Some(match acc {
                    None => term,
                    Some(prev) => jet_add(&prev, &term)?,
                });
            }
        }
    }
    Ok(acc)
}

/// Zero every coefficient carrying a `xi1` derivative.
fn project_xi1_free(j: &Jet) -> Jet {
    let n = j.n();
    let mut out = j.clone();
    for pos in 0..out.len() {
        if out.index_at(pos)[n] != 0 {
            out.set_taylor_at(pos, Complex64::new(0.0, 0.0));
        }
    }
    out
}

/// Largest coefficient of `j` carrying a `xi1` derivative.
pub fn xi1_content(j: &Jet) -> f64 {
    let n = j.n();
    (0..j.len()).filter(|&p| j.index_at(p)[n] != 0).map(|p| j.derivative_at(p).norm()).fold(0.0, f64::max)
}

/// Formal division `q = p e + r` at the base point with `r` free of `xi1`.
///
/// `e` is valid through order `K - 1` and `r` through `K`; every coefficient
/// of `r` with a `xi1` derivative is exactly zero. When `p` does not vanish at
/// the base point the division is trivial: `e = q / p`, `r = 0`.
pub fn malgrange_divide_term(q: &Jet, p: &Jet) -> Result<(Jet, Jet), FactorError> {
    let (q, p) = lower_to_common(q, p);
    let n = p.n();
    let unit = p.table().unit(n);
    let d1 = p.derivative_at(unit);
    if (d1 - Complex64::new(1.0, 0.0)).norm() > FORM_TOL {
        return Err(FactorError::NonUnitDerivative(d1));
    }
    if p.value().norm() > crate::jet::DIVISION_TOL {
        let e = q.try_mul(&p.reciprocal()?)?;
        return Ok((e, q.zeros_like()));
    }
    let div = divide_by_factor(&q, &p, Var::Xi(0))?;
    let e = div.quotient.truncate(q.order().saturating_sub(1));
    Ok((e, project_xi1_free(&div.residual)))
}

/// Check that `p1 - xi1` has no `xi1` dependence in its jet.
fn check_principal_form(p1: &Jet) -> Result<(), FactorError> {
    let n = p1.n();
    let unit = p1.table().unit(n);
    for pos in 0..p1.len() {
        if p1.index_at(pos)[n] == 0 {
            continue;
        }
        let want = if pos == unit { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        let got = p1.derivative_at(pos);
        if (got - want).norm() > FORM_TOL {
            return Err(FactorError::PrincipalForm(format!(
                "coefficient {:?} is {got}",
                p1.index_at(pos)
            )));
        }
    }
    Ok(())
}

/// `(I - a) P` with `a` of order `-1` chosen so that the lower-order terms
/// are independent of `xi1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizedSymbol {
    pub symbol: JetSymbol,
    /// Jets of `a_{-1}, a_{-2}, ...`.
    pub a: Vec<Jet>,
}

pub fn normalize_lower_order(p: &JetSymbol, depth: usize) -> Result<NormalizedSymbol, FactorError> {
    let p1 = &p.terms[0];
    check_principal_form(p1)?;
    let mut a: Vec<Jet> = Vec::new();
    let mut terms = vec![p1.clone()];
    // a_{-l} is stored at index l - 1; as a symbol list starting at degree -1
    for d in 1..=depth {
        let pd = match p.term(d) {
            Some(j) => j.clone(),
            None => p1.zeros_like(),
        };
        // degree 1 - d part of a # P without the new a_{-d} p1 term
        let known = composition_term(&a, &p.terms, d - 1, |i, l, s| i + 1 == d && l == 0 && s == 0)?;
        let target = match known {
            Some(k) => jet_sub(&pd, &k)?,
            None => pd,
        };
        if target.order() == 0 && d < depth {
            return Err(FactorError::OrderExhausted(d));
        }
        let (ad, rd) = malgrange_divide_term(&target, p1)?;
        a.push(ad);
        terms.push(rd);
    }
    Ok(NormalizedSymbol { symbol: JetSymbol { top_degree: p.top_degree, terms }, a })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorizationResult {
    /// Jets of `e_{k'-k}, e_{k'-k-1}, ...`.
    pub e: JetSymbol,
    /// Jets of `r_{k'}, r_{k'-1}, ...`, all free of `xi1`.
    pub r: JetSymbol,
    /// Jets of `sigma_Q - sigma_{P E} - sigma_R`, degree by degree.
    pub residual: Vec<Jet>,
    pub residual_norms: Vec<f64>,
    pub depth: usize,
}

impl FactorizationResult {
    pub fn max_residual(&self) -> f64 {
        self.residual_norms.iter().copied().fold(0.0, f64::max)
    }

    /// First nonvanishing Taylor coefficient of `R` under the ordering of indices.
    pub fn first_nonvanishing_r(&self, tol: f64) -> Result<Option<(OrderedIndex, Complex64)>, FactorError> {
        Ok(first_nonvanishing(&self.r.terms, tol)?)
    }
}

/// Degree-by-degree division of `Q` by the normalized `P`.
pub fn factor_symbol(q: &JetSymbol, p: &JetSymbol, depth: usize) -> Result<FactorizationResult, FactorError> {
    if q.n() != p.n() {
        return Err(FactorError::DimensionMismatch(q.n(), p.n()));
    }
    let p1 = &p.terms[0];
    let mut e: Vec<Jet> = Vec::new();
    let mut r: Vec<Jet> = Vec::new();
    for d in 0..=depth {
        let qd = match q.term(d) {
            Some(j) => j.clone(),
            None => q.terms[0].zeros_like(),
        };
        let known = composition_term(&p.terms, &e, d, |i, l, s| i == 0 && l == d && s == 0)?;
        let target = match known {
            Some(k) => jet_sub(&qd, &k)?,
            None => qd,
        };
        let (ed, rd) = malgrange_divide_term(&target, p1)?;
        e.push(ed);
        r.push(rd);
    }
    let mut residual = Vec::with_capacity(depth + 1);
    let mut norms = Vec::with_capacity(depth + 1);
    for d in 0..=depth {
        let qd = q.term(d).cloned().unwrap_or_else(|| q.terms[0].zeros_like());
        let pe = composition_term(&p.terms, &e, d, |_, _, _| false)?.unwrap_or_else(|| qd.zeros_like());
        let res = jet_sub(&jet_sub(&qd, &pe)?, &r[d])?;
        norms.push(res.max_abs());
        residual.push(res);
    }
    let e_top = q.top_degree - p.top_degree;
    Ok(FactorizationResult {
        e: JetSymbol { top_degree: e_top, terms: e },
        r: JetSymbol { top_degree: q.top_degree, terms: r },
        residual,
        residual_norms: norms,
        depth,
    })
}

/// Jet order needed at the inputs so that stage `depth` is still valid
/// through `order`, capped by the jet library.
pub fn working_order(order: usize, depth: usize) -> usize {
    (order + 2 * depth).min(MAX_ORDER)
}

/// Factor symbolic `Q` by `P` at `(x0, xi0)`, normalizing `P` first.
pub fn factor_at(
    q: &ClassicalSymbol,
    p: &ClassicalSymbol,
    x0: &[f64],
    xi0: &[f64],
    depth: usize,
    order: usize,
) -> Result<FactorizationResult, FactorError> {
    let k = working_order(order, depth);
    let pj = JetSymbol::from_symbol(p, x0, xi0, k)?;
    let qj = JetSymbol::from_symbol(q, x0, xi0, k)?;
    let normalized = normalize_lower_order(&pj, depth)?;
    factor_symbol(&qj, &normalized.symbol, depth)
}

/// `Re p` and `Im p` as expressions.
pub fn real_imag(p: &Expr) -> (Expr, Expr) {
    let c = p.conj();
    let re = p.add(&c).scale(Complex64::new(0.5, 0.0));
    let im = p.sub(&c).scale(Complex64::new(0.0, -0.5));
    (re, im)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProportionalityReport {
    pub mu: Complex64,
    pub bracket: f64,
    /// `max_k |q1(x0, e_k) - mu p1(x0, e_k)|`, the coefficients of the
    /// first-order polynomial difference.
    pub principal_residual: f64,
    /// `|q0(x0) - mu p0(x0)|`.
    pub zeroth_order_residual: f64,
    /// `|d_xi e0(x0, xi0)|`.
    pub gradient_residual: f64,
    pub proportional: bool,
}

/// `mu` with `Q*(x0, D) = mu P*(x0, D)` for first-order differential symbols,
/// read off as `e0(x0, xi0)` of the factorization.
pub fn proportionality(
    p: &ClassicalSymbol,
    q: &ClassicalSymbol,
    x0: &[f64],
    xi0: &[f64],
) -> Result<ProportionalityReport, FactorError> {
    let n = p.n();
    if q.n() != n {
        return Err(FactorError::DimensionMismatch(q.n(), n));
    }
    let p1 = &p.principal().expr;
    let pv = evaluate(p1, x0, xi0)?.norm();
    if pv > 1e-8 {
        return Err(FactorError::NotCharacteristic(pv));
    }
    let (re, im) = real_imag(p1);
    let bracket = evaluate(&poisson(&re, &im, n), x0, xi0)?.re;
    if bracket <= 0.0 {
        return Err(FactorError::BracketNotPositive(bracket));
    }
    let res = factor_at(q, p, x0, xi0, 1, 2)?;
    let e0 = &res.e.terms[0];
    let mu = e0.value();
    let mut gradient = 0.0f64;
    for k in 0..n {
        gradient = gradient.max(e0.derivative_at(e0.table().unit(n + k)).norm());
    }
    let q1 = &q.principal().expr;
    let mut principal = 0.0f64;
    for k in 0..n {
        let mut ek = vec![0.0; n];
        ek[k] = 1.0;
        let d = evaluate(q1, x0, &ek)? - mu * evaluate(p1, x0, &ek)?;
        principal = principal.max(d.norm());
    }
    let q0 = evaluate(&q.term_of_degree(q.top_degree() - 1), x0, xi0)?;
    let p0 = evaluate(&p.term_of_degree(p.top_degree() - 1), x0, xi0)?;
    let zeroth = (q0 - mu * p0).norm();
    Ok(ProportionalityReport {
        mu,
        bracket,
        principal_residual: principal,
        zeroth_order_residual: zeroth,
        gradient_residual: gradient,
        proportional: principal < 1e-8 && zeroth < 1e-8 && gradient < 1e-8,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommutatorPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    /// `|H_p^m q|` for `m = 1..=m_max`.
    pub hamilton: Vec<f64>,
    /// `|sum_j d_xi_j p D_x_j mu|` when `mu` is given.
    pub transport: Option<f64>,
    pub pass: bool,
}

/// Iterated Hamilton derivatives of `q` along `p` at the given points, and
/// the transport identity for a scalar factor `mu(x)`.
pub fn commutator_test(
    p: &Expr,
    q: &Expr,
    n: usize,
    points: &[(Vec<f64>, Vec<f64>)],
    m_max: usize,
    mu: Option<&Expr>,
) -> Result<Vec<CommutatorPoint>, FactorError> {
    let mut iterates = Vec::with_capacity(m_max);
    let mut cur = q.clone();
    for _ in 0..m_max {
        cur = poisson(p, &cur, n);
        iterates.push(cur.clone());
    }
    let transport = mu.map(|m| {
        let parts = (0..n).map(|j| {
            differentiate(p, Var::Xi(j))
                .mul(&differentiate(m, Var::X(j)))
                .scale(Complex64::new(0.0, -1.0))
        });
        Expr::sum(parts)
    });
    let mut out = Vec::with_capacity(points.len());
    for (x, xi) in points {
        let mut h = Vec::with_capacity(m_max);
        for e in &iterates {
            h.push(evaluate(e, x, xi)?.norm());
        }
        let t = match &transport {
            Some(e) => Some(evaluate(e, x, xi)?.norm()),
            None => None,
        };
        let pass = h.iter().all(|v| *v < 1e-7) && t.map_or(true, |v| v < 1e-7);
        out.push(CommutatorPoint { x: x.clone(), xi: xi.clone(), hamilton: h, transport: t, pass });
    }
    Ok(out)
}
