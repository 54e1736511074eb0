use num_complex::Complex64;

use super::poly::TPoly;
use super::WkbError;
use crate::jet::jet_of;
use crate::symexpr::Expr;

/// Powers `delta_k^e`, built lazily.
pub(crate) struct DeltaPowers<'a> {
    delta: &'a [TPoly],
    pows: Vec<Vec<TPoly>>,
}

impl<'a> DeltaPowers<'a> {
    pub fn new(delta: &'a [TPoly]) -> Self {
        let pows = delta
            .iter()
            .map(|p| vec![TPoly::constant(p.dim(), p.order(), Complex64::new(1.0, 0.0))])
            .collect();
        DeltaPowers { delta, pows }
    }

    fn power(&mut self, k: usize, e: usize) -> &TPoly {
        while self.pows[k].len() <= e {
            let next = self.pows[k].last().unwrap().mul(&self.delta[k]);
            self.pows[k].push(next);
        }
        &self.pows[k][e]
    }

    /// `delta^b`.
    pub fn monomial(&mut self, b: &[u8]) -> TPoly {
        let mut acc: Option<TPoly> = None;
        for (k, &e) in b.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let p = self.power(k, e as usize).clone();
            acc = Some(match acc {
                None => p,
                Some(a) => a.mul(&p),
            });
        }
        acc.unwrap_or_else(|| {
            let d = &self.delta[0];
            TPoly::constant(d.dim(), d.order(), Complex64::new(1.0, 0.0))
        })
    }
}

/// Taylor expansion of `g(t, y + z, eta + delta(z))` in `z` through `order`,
/// where `delta` vanishes at `z = 0`. `g` is an expression in `n = d + 1`
/// variables with `x1 = t`; `xi1` is frozen at zero.
pub(crate) fn expand_along(
    g: &Expr,
    t: f64,
    y: &[f64],
    eta: &[f64],
    powers: &mut DeltaPowers<'_>,
    order: usize,
) -> Result<TPoly, WkbError> {
    let d = y.len();
    let n = d + 1;
    let mut x = Vec::with_capacity(n);
    x.push(t);
    x.extend_from_slice(y);
    let mut xi = Vec::with_capacity(n);
    xi.push(0.0);
    xi.extend_from_slice(eta);
    let j = jet_of(g, &x, &xi, order)?;
    let mut out = TPoly::zeros(d, order);
    for pos in 0..j.len() {
        let idx = j.index_at(pos);
        if idx[0] != 0 || idx[n] != 0 {
            continue;
        }
        let c = j.taylor_at(pos);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let a = &idx[1..n];
        let b = &idx[n + 1..];
        let term = powers.monomial(b).shift(a);
        out.add_scaled(&term, c);
    }
    Ok(out)
}

/// `sum_b d_xi^b g(t, x, eta) delta^b / b!` at a fixed point `x`, with
/// `delta` given numerically.
pub(crate) fn expand_fiber_at(g: &Expr, t: f64, x: &[f64], eta: &[f64], delta: &[Complex64], order: usize) -> Result<Complex64, WkbError> {
    let d = x.len();
    let n = d + 1;
    let mut xb = Vec::with_capacity(n);
    xb.push(t);
    xb.extend_from_slice(x);
    let mut xi = Vec::with_capacity(n);
    xi.push(0.0);
    xi.extend_from_slice(eta);
    let j = jet_of(g, &xb, &xi, order)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for pos in 0..j.len() {
        let idx = j.index_at(pos);
        if idx[..=n].iter().any(|&v| v != 0) {
            continue;
        }
        let mut m = j.taylor_at(pos);
        for (k, &e) in idx[n + 1..].iter().enumerate() {
            m *= delta[k].powi(e as i32);
        }
        acc += m;
    }
    Ok(acc)
}
