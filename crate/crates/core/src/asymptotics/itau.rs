use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::action::{check_tangential, xi_zero, ActionTerms};
use super::window::ProbeWindow;
use super::AsymptoticsError;
use crate::symbol::{adjoint_symbol, ClassicalSymbol};
use crate::wkb::{model_phase, ApproxSolution, SolutionKind};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ITauOptions {
    /// Gauss–Legendre points per panel and axis.
    pub points: usize,
    pub panels: usize,
    /// Terms `|a| < expansion` of the wave packet expansion.
    pub expansion: usize,
    /// Depth of the adjoint symbol.
    pub depth: usize,
    /// Recompute with doubled points and require this relative agreement.
    pub doubling_tol: Option<f64>,
}

impl Default for ITauOptions {
    fn default() -> Self {
        ITauOptions { points: 24, panels: 4, expansion: 8, depth: 4, doubling_tol: Some(1e-8) }
    }
}

fn scaled_pairing(
    terms: &ActionTerms,
    v: &ApproxSolution,
    window: &ProbeWindow,
    points: usize,
    panels: usize,
) -> Result<Complex64, AsymptoticsError> {
    let tau = v.tau;
    let rule = window.rule(points, panels);
    let mut x = vec![0.0; v.n];
    let sum = rule.integrate(|y| {
        let h = window.value(y);
        if h == 0.0 {
            return Ok::<_, AsymptoticsError>(Complex64::new(0.0, 0.0));
        }
        for (xk, yk) in x.iter_mut().zip(y) {
            *xk = yk / tau;
        }
        let e = (I * tau * model_phase(&x)).exp();
        Ok(e * terms.eval(y)? * h)
    })?;
    Ok(sum * v.prefactor())
}

/// `I_tau = tau^n int H(tau x) q(x, D) v_tau dx` for `q = R*` given directly,
/// evaluated after the substitution `tau x -> x`.
pub fn compute_i_tau_adjoint(
    rstar: &ClassicalSymbol,
    v: &ApproxSolution,
    window: &ProbeWindow,
    opts: &ITauOptions,
) -> Result<Complex64, AsymptoticsError> {
    let amp = match &v.kind {
        SolutionKind::Model { amplitude } => amplitude,
        SolutionKind::Expansion { .. } => return Err(AsymptoticsError::Unsupported("I_tau")),
    };
    if window.n() != v.n || rstar.n() != v.n {
        return Err(AsymptoticsError::DimensionMismatch { expected: v.n, got: window.n().max(rstar.n()) });
    }
    let limit = 0.5 * v.radius;
    let extent = window.extent() / v.tau;
    if extent > limit {
        return Err(AsymptoticsError::WindowTooWide { tau: v.tau, extent, limit });
    }
    let terms = ActionTerms::new(rstar, amp, v.tau, opts.expansion, v.tau)?;
    let value = scaled_pairing(&terms, v, window, opts.points, opts.panels)?;
    if let Some(tol) = opts.doubling_tol {
        let fine = scaled_pairing(&terms, v, window, 2 * opts.points, opts.panels)?;
        let scale = fine.norm().max(f64::MIN_POSITIVE);
        let change = (fine - value).norm() / scale;
        if fine.norm() > 0.0 && change > tol {
            return Err(AsymptoticsError::Resolution { tau: v.tau, change });
        }
        return Ok(fine);
    }
    Ok(value)
}

/// `I_tau` for an operator `R` in `x'`; `R*` is formed with `adjoint_symbol`.
pub fn compute_i_tau(
    r: &ClassicalSymbol,
    v: &ApproxSolution,
    window: &ProbeWindow,
    opts: &ITauOptions,
) -> Result<Complex64, AsymptoticsError> {
    check_tangential(r)?;
    let rstar = adjoint_symbol(&r.clone().with_tangential(true), opts.depth)?;
    compute_i_tau_adjoint(&rstar, v, window, opts)
}

/// The same pairing in the original variables, `tau^n int H(tau x) R* v dx`
/// over the shrunken window. Used to cross-check the scaled form.
pub fn compute_i_tau_unscaled(
    rstar: &ClassicalSymbol,
    v: &ApproxSolution,
    window: &ProbeWindow,
    opts: &ITauOptions,
) -> Result<Complex64, AsymptoticsError> {
    let amp = match &v.kind {
        SolutionKind::Model { amplitude } => amplitude,
        SolutionKind::Expansion { .. } => return Err(AsymptoticsError::Unsupported("I_tau")),
    };
    let tau = v.tau;
    let terms = ActionTerms::new(rstar, amp, tau, opts.expansion, 1.0)?;
    let shrunk = ProbeWindow {
        center: window.center.iter().map(|c| c / tau).collect(),
        half_width: window.half_width.iter().map(|r| r / tau).collect(),
        ..window.clone()
    };
    let rule = shrunk.rule(opts.points, opts.panels);
    let mut y = vec![0.0; v.n];
    let sum = rule.integrate(|x| {
        for (yk, xk) in y.iter_mut().zip(x) {
            *yk = tau * xk;
        }
        let h = window.value(&y);
        if h == 0.0 {
            return Ok::<_, AsymptoticsError>(Complex64::new(0.0, 0.0));
        }
        let e = (I * tau * model_phase(x)).exp();
        Ok(e * terms.eval(x)? * h)
    })?;
    Ok(sum * tau.powi(v.n as i32) * v.prefactor())
}

/// Oscillating weight `e^{i t w0'(0) + i <x, eta(0)>}` and drift `y'(0)` of the
/// limit integrand. The model has `w0' = 0`, `eta = xi0`, `y' = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitWeights {
    pub w0_rate: Complex64,
    pub eta0: Vec<f64>,
    pub y_rate: Vec<f64>,
}

impl LimitWeights {
    pub fn model(n: usize) -> LimitWeights {
        let mut eta0 = vec![0.0; n - 1];
        eta0[n - 2] = 1.0;
        LimitWeights { w0_rate: Complex64::new(0.0, 0.0), eta0, y_rate: vec![0.0; n - 1] }
    }
}

fn fact(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Predicted `lim tau^m I_tau`:
/// `int H e^{i t w0' + i <x, eta>} sum t^k (x + y' t)^a
///   d_t^k d_x^a d_xi^b0 q_{-j}(0, 0, xi0) / (k! a! b0!)`
/// over `j + k + |a| + |b0| = m`, for an amplitude with `D^b0 phi(0) = 1`.
pub fn predicted_limit(
    rstar: &ClassicalSymbol,
    beta0: &[u8],
    window: &ProbeWindow,
    m: i32,
    weights: &LimitWeights,
    points: usize,
) -> Result<Complex64, AsymptoticsError> {
    check_tangential(rstar)?;
    let n = rstar.n();
    if beta0.len() != n - 1 || window.n() != n {
        return Err(AsymptoticsError::DimensionMismatch { expected: n - 1, got: beta0.len() });
    }
    let b0: i32 = beta0.iter().map(|&v| v as i32).sum();
    let jmax = m - b0;
    if jmax < -1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let lowest = rstar.terms().last().map(|t| t.degree).unwrap_or(0);
    if lowest > -jmax {
        return Err(AsymptoticsError::DepthInsufficient { have: lowest, need: -jmax });
    }
    let order = (jmax + 1) as usize + b0 as usize;
    let x0 = vec![0.0; n];
    let xi0 = xi_zero(n);
    let mut beta_full = vec![0usize; n];
    for (k, &b) in beta0.iter().enumerate() {
        beta_full[k + 1] = b as usize;
    }
    let b0_fact: f64 = beta0.iter().map(|&b| fact(b as usize)).product();
    // (coefficient, k, a) of the bracket polynomial
    let mut bracket: Vec<(Complex64, usize, Vec<usize>)> = Vec::new();
    for t in rstar.terms() {
        let j = -t.degree;
        if j < -1 || j > jmax || t.expr.is_zero() {
            continue;
        }
        let jet = t.jet_at(&x0, &xi0, order)?;
        let rest = (jmax - j) as usize;
        for a in crate::jet::multi_indices(n, rest) {
            let deg: usize = a.iter().map(|&v| v as usize).sum();
            if deg != rest {
                continue;
            }
            let alpha: Vec<usize> = a.iter().map(|&v| v as usize).collect();
            let c = jet.derivative(&alpha, &beta_full);
            if c.norm() == 0.0 {
                continue;
            }
            let denom: f64 = alpha.iter().map(|&v| fact(v)).product::<f64>() * b0_fact;
            bracket.push((c / denom, alpha[0], alpha[1..].to_vec()));
        }
    }
    if bracket.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let rule = window.rule(points, 4);
    rule.integrate(|y| {
        let h = window.value(y);
        if h == 0.0 {
            return Ok::<_, AsymptoticsError>(Complex64::new(0.0, 0.0));
        }
        let t = y[0];
        let x = &y[1..];
        let phase: f64 = x.iter().zip(&weights.eta0).map(|(a, b)| a * b).sum();
        let weight = (I * t * weights.w0_rate + I * phase).exp();
        let mut poly = Complex64::new(0.0, 0.0);
        for (c, k, a) in &bracket {
            let mut mono = t.powi(*k as i32);
            for (l, &e) in a.iter().enumerate() {
                mono *= (x[l] + weights.y_rate[l] * t).powi(e as i32);
            }
            poly += c * mono;
        }
        Ok(weight * poly * h)
    })
}
