use std::collections::HashMap;

use num_complex::Complex64;

use super::{ClassicalSymbol, HomogeneousTerm, SymbolError};
use crate::symexpr::{differentiate, Expr, Var};

/// Largest composition/adjoint depth accepted.
pub const MAX_DEPTH: usize = 12;

/// Multi-indices in `n` variables with `|alpha| = s`.
pub(crate) fn indices_of_degree(n: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, slot: usize, left: usize) {
        if slot + 1 == cur.len() {
            cur[slot] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[slot] = v;
            rec(out, cur, slot + 1, left - v);
        }
        cur[slot] = 0;
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = vec![0; n];
    rec(&mut out, &mut cur, 0, s);
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Memoized mixed derivatives of one expression in a fixed kind of variable.
struct DerivCache {
    base: Expr,
    fiber: bool,
    cache: HashMap<Vec<usize>, Expr>,
}

impl DerivCache {
    fn new(base: Expr, fiber: bool) -> DerivCache {
        DerivCache { base, fiber, cache: HashMap::new() }
    }

    fn get(&mut self, alpha: &[usize]) -> Expr {
        if alpha.iter().all(|&a| a == 0) {
            return self.base.clone();
        }
        if let Some(e) = self.cache.get(alpha) {
            return e.clone();
        }
        let k = alpha.iter().position(|&a| a > 0).unwrap();
        let mut lower = alpha.to_vec();
        lower[k] -= 1;
        let prev = self.get(&lower);
        let var = if self.fiber { Var::Xi(k) } else { Var::X(k) };
        let e = if prev.is_zero() { prev } else { differentiate(&prev, var) };
        self.cache.insert(alpha.to_vec(), e.clone());
        e
    }
}

/// `(-i)^s / alpha!`
fn weight(alpha: &[usize]) -> Complex64 {
    let s: usize = alpha.iter().sum();
    let denom: f64 = alpha.iter().map(|&a| factorial(a)).product();
    Complex64::new(0.0, -1.0).powi(s as i32) / denom
}

/// Terms of `a # b ~ sum_alpha (1/alpha!) d_xi^alpha a D_x^alpha b` of
/// degrees `m_a + m_b - d` for `d = 0..=depth`, with `D = -i d`.
pub fn compose_symbols(a: &ClassicalSymbol, b: &ClassicalSymbol, depth: usize) -> Result<ClassicalSymbol, SymbolError> {
    if a.n() != b.n() {
        return Err(SymbolError::DimensionMismatch(a.n(), b.n()));
    }
    if depth > MAX_DEPTH {
        return Err(SymbolError::DepthExceeded(depth, MAX_DEPTH));
    }
    let n = a.n();
    let mut da: Vec<DerivCache> = (0..=depth).map(|i| DerivCache::new(a.term_expr(i), true)).collect();
    let mut db: Vec<DerivCache> = (0..=depth).map(|l| DerivCache::new(b.term_expr(l), false)).collect();
    let top = a.top_degree() + b.top_degree();
    let mut terms = Vec::with_capacity(depth + 1);
    for d in 0..=depth {
        let mut parts = Vec::new();
        for s in 0..=d {
            let alphas = indices_of_degree(n, s);
            for i in 0..=(d - s) {
                let l = d - s - i;
                if da[i].base.is_zero() || db[l].base.is_zero() {
                    continue;
                }
                for alpha in &alphas {
                    let pa = da[i].get(alpha);
                    if pa.is_zero() {
                        continue;
                    }
                    let pb = db[l].get(alpha);
                    if pb.is_zero() {
                        continue;
                    }
                    parts.push(pa.mul(&pb).scale(weight(alpha)));
                }
            }
        }
        terms.push(HomogeneousTerm { degree: top - d as i32, expr: Expr::sum(parts), n });
    }
    ClassicalSymbol::new(n, terms)
}

/// Terms of the adjoint symbol `sum_alpha d_xi^alpha D_x^alpha conj(r) / alpha!`
/// to the given depth. For tangential symbols only `alpha` with `alpha_1 = 0`
/// enter, matching an operator in `x'` with `x1` as a parameter.
pub fn adjoint_symbol(r: &ClassicalSymbol, depth: usize) -> Result<ClassicalSymbol, SymbolError> {
    if depth > MAX_DEPTH {
        return Err(SymbolError::DepthExceeded(depth, MAX_DEPTH));
    }
    let n = r.n();
    let top = r.top_degree();
    let mut terms = Vec::with_capacity(depth + 1);
    let conj: Vec<Expr> = (0..=depth).map(|i| r.term_expr(i).conj()).collect();
    let mut dx: Vec<DerivCache> = conj.iter().map(|e| DerivCache::new(e.clone(), false)).collect();
    for d in 0..=depth {
        let mut parts = Vec::new();
        for s in 0..=d {
            let i = d - s;
            if conj[i].is_zero() {
                continue;
            }
            for alpha in indices_of_degree(n, s) {
                if r.is_tangential() && alpha[0] > 0 {
                    continue;
                }
                let mut e = dx[i].get(&alpha);
                for (k, &c) in alpha.iter().enumerate() {
                    for _ in 0..c {
                        if e.is_zero() {
                            break;
                        }
                        e = differentiate(&e, Var::Xi(k));
                    }
                }
                if !e.is_zero() {
                    parts.push(e.scale(weight(&alpha)));
                }
            }
        }
        terms.push(HomogeneousTerm { degree: top - d as i32, expr: Expr::sum(parts), n });
    }
    Ok(ClassicalSymbol::new(n, terms)?.with_tangential(r.is_tangential()))
}

/// `{a, b} = sum_j d_xi_j a d_x_j b - d_x_j a d_xi_j b`.
pub fn poisson(a: &Expr, b: &Expr, n: usize) -> Expr {
    let mut parts = Vec::with_capacity(2 * n);
    for j in 0..n {
        let t1 = differentiate(a, Var::Xi(j)).mul(&differentiate(b, Var::X(j)));
        let t2 = differentiate(a, Var::X(j)).mul(&differentiate(b, Var::Xi(j)));
        parts.push(t1.sub(&t2));
    }
    Expr::sum(parts)
}

/// `H_p^m(q)`, with `H_p^1(q) = {p, q}`.
pub fn iterated_hamilton(p: &Expr, q: &Expr, m: usize, n: usize) -> Result<Expr, SymbolError> {
    if m == 0 {
        return Err(SymbolError::ZeroIterations);
    }
    let mut out = q.clone();
    for _ in 0..m {
        out = poisson(p, &out, n);
    }
    Ok(out)
}
