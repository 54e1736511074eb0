use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::expand::{expand_along, DeltaPowers};
use super::phase::PhaseExpansion;
use super::poly::{factorial_u8, TPoly};
use super::{hermite, WkbError};
use crate::ode::{integrate_to, OdeError, OdeOptions};
use crate::symexpr::{differentiate, Expr, Var};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone)]
pub struct TransportOptions {
    pub ode: OdeOptions,
    /// Time where the prescription is imposed; defaults to the phase midpoint.
    pub t0: Option<f64>,
    /// `D_x^beta0 phi_0 = 1` and every other coefficient zero at `t0`.
    pub beta0: Vec<u8>,
}

impl TransportOptions {
    pub fn new(d: usize) -> TransportOptions {
        TransportOptions { ode: OdeOptions::default(), t0: None, beta0: vec![0; d] }
    }
}

/// Coefficients `phi_{0 alpha}(t)` of `phi_0 = sum phi_{0 alpha} (x - y(t))^alpha`,
/// `|alpha| < M`, on the phase time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeSet {
    pub n: usize,
    /// Highest degree kept, `M - 1`.
    pub order: usize,
    pub t0: f64,
    pub beta0: Vec<u8>,
    pub t_grid: Vec<f64>,
    pub coeffs: Vec<TPoly>,
    rates: Vec<TPoly>,
}

impl AmplitudeSet {
    pub fn d(&self) -> usize {
        self.n - 1
    }

    fn flat(p: &TPoly) -> Vec<f64> {
        p.coeffs().iter().flat_map(|c| [c.re, c.im]).collect()
    }

    fn unflat(&self, s: &[f64]) -> TPoly {
        let mut p = TPoly::zeros(self.d(), self.order);
        for (k, c) in p.coeffs_mut().iter_mut().enumerate() {
            *c = Complex64::new(s[2 * k], s[2 * k + 1]);
        }
        p
    }

    /// Amplitude polynomial in `z = x - y(t)` at any `t` of the span.
    pub fn poly_at(&self, t: f64) -> Result<TPoly, WkbError> {
        let ys: Vec<Vec<f64>> = self.coeffs.iter().map(Self::flat).collect();
        let ds: Vec<Vec<f64>> = self.rates.iter().map(Self::flat).collect();
        let s = hermite(&self.t_grid, &ys, &ds, t).ok_or(WkbError::OutOfRange(t))?;
        Ok(self.unflat(&s))
    }

    /// `phi_0(t, x)` given the curve point `y(t)`.
    pub fn value(&self, t: f64, z: &[f64]) -> Result<Complex64, WkbError> {
        Ok(self.poly_at(t)?.eval(z))
    }
}

struct TransportData {
    fk: Vec<Expr>,
    fjk: Vec<Vec<Expr>>,
    lower: Option<Expr>,
}

/// `d phi / dt` from `D_t phi + sum_k a^(k) D_k phi + (1/2i) sum a^(jk) w_jk phi + c phi = 0`
/// with `a = xi1 - i f`, after moving to `z = x - y(t)`.
fn transport_rate(
    phase: &PhaseExpansion,
    f: &Expr,
    data: &TransportData,
    order: usize,
    t: f64,
    phi: &TPoly,
) -> Result<TPoly, WkbError> {
    let d = phase.d();
    let (st, dy) = phase.dy_at(f, t)?;
    let delta: Vec<TPoly> = (0..d).map(|k| st.poly.derivative(k).with_order(order)).collect();
    let mut pw = DeltaPowers::new(&delta);
    let mut out = TPoly::zeros(d, order);
    for k in 0..d {
        let fk = expand_along(&data.fk[k], t, &st.y, &st.eta, &mut pw, order)?;
        let mut coef = fk.scale(I);
        coef.coeffs_mut()[0] += dy[k];
        out.add_assign(&coef.mul(&phi.derivative(k)));
    }
    let mut s = TPoly::zeros(d, order);
    for j in 0..d {
        let wj = st.poly.derivative(j);
        for k in 0..d {
            let fjk = expand_along(&data.fjk[j][k], t, &st.y, &st.eta, &mut pw, order)?;
            s.add_assign(&fjk.mul(&wj.derivative(k).with_order(order)));
        }
    }
    out.add_assign(&s.mul(phi).scale(I * 0.5));
    if let Some(c) = &data.lower {
        let cz = expand_along(c, t, &st.y, &st.eta, &mut pw, order)?;
        out.add_assign(&cz.mul(phi).scale(-I));
    }
    Ok(out)
}

/// Solve the transport system for `phi_0` along the phase curve.
///
/// `lower` is the order-zero part of the symbol of `P*` as a function of
/// `(t, x, xi')`; `None` means zero. At `t0` the amplitude is
/// `i^|beta0| z^beta0 / beta0!`, so that `D^beta0 phi_0 = 1` there and all
/// other derivatives of order `< M` vanish.
pub fn solve_transport(
    f: &Expr,
    lower: Option<&Expr>,
    phase: &PhaseExpansion,
    opts: &TransportOptions,
) -> Result<AmplitudeSet, WkbError> {
    let d = phase.d();
    let order = phase.m - 1;
    if opts.beta0.len() != d {
        return Err(WkbError::DimensionMismatch { expected: d, got: opts.beta0.len() });
    }
    let b0: usize = opts.beta0.iter().map(|&v| v as usize).sum();
    if b0 > order {
        return Err(WkbError::Prescription(opts.beta0.clone(), b0 + 1));
    }
    if f.depends_on(Var::Xi(0)) || lower.is_some_and(|c| c.depends_on(Var::Xi(0))) {
        return Err(WkbError::DependsOnXi1);
    }
    let data = TransportData {
        fk: (1..=d).map(|k| differentiate(f, Var::Xi(k))).collect(),
        fjk: (1..=d)
            .map(|j| (1..=d).map(|k| differentiate(&differentiate(f, Var::Xi(j)), Var::Xi(k))).collect())
            .collect(),
        lower: lower.cloned(),
    };
    let (lo, hi) = phase.span();
    let t0 = opts.t0.unwrap_or(phase.t_mid);
    if t0 < lo || t0 > hi {
        return Err(WkbError::OutOfRange(t0));
    }
    let ib = opts.beta0.iter().map(|&v| v as i32).sum::<i32>();
    let init = TPoly::monomial(d, order, &opts.beta0, I.powi(ib) / factorial_u8(&opts.beta0));
    let s0 = AmplitudeSet::flat(&init);

    let mut up: Vec<f64> = vec![t0];
    up.extend(phase.t_grid.iter().copied().filter(|&t| t > t0 + 1e-14));
    let mut down: Vec<f64> = vec![t0];
    down.extend(phase.t_grid.iter().rev().copied().filter(|&t| t < t0 - 1e-14));

    let shell = AmplitudeSet {
        n: phase.n,
        order,
        t0,
        beta0: opts.beta0.clone(),
        t_grid: Vec::new(),
        coeffs: Vec::new(),
        rates: Vec::new(),
    };
    let run = |times: &[f64]| -> Result<Vec<Vec<f64>>, WkbError> {
        let mut failure: Option<WkbError> = None;
        let res = integrate_to(
            |t, s, ds| match transport_rate(phase, f, &data, order, t, &shell.unflat(s)) {
                Ok(r) => {
                    ds.copy_from_slice(&AmplitudeSet::flat(&r));
                    Ok(())
                }
                Err(e) => {
                    let msg = e.to_string();
                    failure = Some(e);
                    Err(msg)
                }
            },
            &s0,
            times,
            &opts.ode,
            |_, _| Ok(()),
        );
        match (res, failure) {
            (Ok(v), _) => Ok(v),
            (Err(OdeError::Aborted { .. }), Some(inner)) => Err(inner),
            (Err(e), _) => Err(e.into()),
        }
    };
    let fwd = if up.len() > 1 { run(&up)? } else { vec![s0.clone()] };
    let bwd = if down.len() > 1 { run(&down)? } else { vec![s0.clone()] };

    let mut ts: Vec<f64> = down.iter().rev().copied().collect();
    let mut states: Vec<Vec<f64>> = bwd.into_iter().rev().collect();
    ts.extend_from_slice(&up[1..]);
    states.extend(fwd.into_iter().skip(1));

    let mut out = shell.clone();
    for (t, s) in ts.iter().zip(&states) {
        let p = shell.unflat(s);
        out.rates.push(transport_rate(phase, f, &data, order, *t, &p)?);
        out.coeffs.push(p);
    }
    out.t_grid = ts;
    Ok(out)
}
