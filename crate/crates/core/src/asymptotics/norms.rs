use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fit::line_fit;
use super::sobolev::{sobolev_norm, sobolev_norm_against};
use super::AsymptoticsError;
use crate::wkb::{assemble_v, ck_residual, check_model, ApproxSolution, GridFunction, GridSpec, SolutionKind};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
/// Slack added to a cited exponent before a measured slope fails.
const SLOPE_SLACK: f64 = 0.2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormCheck {
    pub s: f64,
    pub taus: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub r_squared: f64,
    pub cited: f64,
    pub pass: bool,
}

/// Fit `log ||g_tau||_(s)` against `log tau` and compare with `cited`.
pub fn norm_slope(family: &[(f64, GridFunction)], s: f64, cited: f64) -> Result<NormCheck, AsymptoticsError> {
    if family.len() < 2 {
        return Err(AsymptoticsError::DegenerateFit("need at least two tau values".into()));
    }
    let mut taus = Vec::new();
    let mut norms = Vec::new();
    for (t, g) in family {
        taus.push(*t);
        norms.push(sobolev_norm(g, s)?);
    }
    if norms.iter().any(|v| !(*v > 0.0)) {
        return Err(AsymptoticsError::DegenerateFit("vanishing norm".into()));
    }
    let lx: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let (slope, r2) = line_fit(&lx, &ly);
    Ok(NormCheck { s, taus, norms, slope, r_squared: r2, cited, pass: slope <= cited + SLOPE_SLACK })
}

/// Cube grid about the origin that contains the packet down to `e^{-30}`
/// and the support ball, whichever is smaller.
pub fn model_grid(tau: f64, n: usize, radius: f64, points: usize) -> Result<GridSpec, AsymptoticsError> {
    let half = (1.05 * radius).min(11.0 / tau.sqrt());
    Ok(GridSpec::cube(&vec![0.0; n], half, points)?)
}

/// `P* v` for the model operator `P = D_1 + i x_1 D_n`. Since `P* w = 0`,
/// `P* v = tau^(N+n) e^{i tau w} P*(chi phi)`, and the amplitude part is
/// the exact power series residual.
pub fn model_pstar(v: &ApproxSolution, grid: &GridSpec) -> Result<GridFunction, AsymptoticsError> {
    let amp = match &v.kind {
        SolutionKind::Model { amplitude } => amplitude,
        SolutionKind::Expansion { .. } => return Err(AsymptoticsError::Unsupported("P* v")),
    };
    let n = v.n;
    let res = ck_residual(amp);
    let h = 1e-6;
    let mut data = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.point(i);
        let chi = v.cutoff_factor(&x)?;
        let mut xp = x.clone();
        let mut d = [0.0; 2];
        for (slot, k) in [0, n - 1].into_iter().enumerate() {
            xp[k] = x[k] + h;
            let a = v.cutoff_factor(&xp)?;
            xp[k] = x[k] - h;
            let b = v.cutoff_factor(&xp)?;
            xp[k] = x[k];
            d[slot] = (a - b) / (2.0 * h);
        }
        if chi == 0.0 && d == [0.0, 0.0] {
            data.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let pchi = Complex64::new(d[0], 0.0) - I * x[0] * d[1];
        let inner = pchi * amp.eval(&x) + res.eval(&x) * chi;
        let e = (I * v.tau * v.phase(&x)?).exp();
        data.push(-I * e * inner * v.prefactor());
    }
    Ok(GridFunction { spec: grid.clone(), data })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PStarCheck {
    pub s: f64,
    pub k: i32,
    pub taus: Vec<f64>,
    /// `tau^k ||P* v_tau||_(s)`
    pub values: Vec<f64>,
    pub slope: f64,
    pub decreasing: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormEstimateReport {
    /// `||v_tau||_(-m)` against `tau^(N + n - m)`.
    pub v_checks: Vec<NormCheck>,
    pub pstar: PStarCheck,
    /// `min (Im w - |x|^2/4) / |x|^2` on the support ball.
    pub phase_margin: f64,
    pub pass: bool,
}

/// Norm estimates for the model family: `||v_tau||_(-m)` for every `m` in
/// `ms`, and `tau^k ||P* v_tau||_(s)` which must decrease along the grid.
pub fn verify_norm_estimates(
    v: &ApproxSolution,
    taus: &[f64],
    points: usize,
    k: i32,
    s: f64,
    ms: &[u32],
) -> Result<NormEstimateReport, AsymptoticsError> {
    let mut vs = Vec::with_capacity(taus.len());
    let mut ps = Vec::with_capacity(taus.len());
    for &tau in taus {
        let vt = v.with_tau(tau);
        let grid = model_grid(tau, v.n, v.radius, points)?;
        vs.push((tau, assemble_v(&vt, &grid)?));
        ps.push((tau, model_pstar(&vt, &grid)?));
    }
    let lift = (v.big_n + v.n as i32) as f64;
    let v_checks = ms
        .iter()
        .map(|&m| norm_slope(&vs, -(m as f64), lift - m as f64))
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = Vec::with_capacity(taus.len());
    for ((tau, g), (_, vt)) in ps.iter().zip(&vs) {
        values.push(tau.powi(k) * sobolev_norm_against(g, s, vt.max_abs())?);
    }
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let lx: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, _) = line_fit(&lx, &ly);
    let phase_margin = check_model(v.n, v.radius).min_margin_ratio;
    let pass = v_checks.iter().all(|c| c.pass) && decreasing && phase_margin > 0.0;
    Ok(NormEstimateReport {
        v_checks,
        pstar: PStarCheck { s, k, taus: taus.to_vec(), values, slope, decreasing },
        phase_margin,
        pass,
    })
}
