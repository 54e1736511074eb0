use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AsymptoticsError;

/// Relative agreement required for a `match` verdict.
pub const MATCH_TOL: f64 = 0.05;
/// Fits with a smaller coefficient of determination are flagged.
pub const LOW_R2: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Match,
    Decay,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Match | Verdict::Decay => 0,
            Verdict::Inconclusive => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub tau_grid: Vec<f64>,
    pub i_values: Vec<Complex64>,
    pub fitted_slope: f64,
    pub r_squared: f64,
    pub low_r_squared: bool,
    pub extrapolated_limit: Complex64,
    pub predicted_limit: Option<Complex64>,
    pub relative_error: Option<f64>,
    pub m: i32,
    pub verdict: Verdict,
}

impl AsymptoticReport {
    /// `tau,|I|,re,im` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,abs_i,re_i,im_i\n");
        for (t, v) in self.tau_grid.iter().zip(&self.i_values) {
            s.push_str(&format!("{},{:.12e},{:.12e},{:.12e}\n", t, v.norm(), v.re, v.im));
        }
        s
    }
}

/// Least-squares line through `(x, y)`: slope and `R^2`.
pub(crate) fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// Polynomial extrapolation to `h = 0` through the points `(h_i, a_i)` (Neville).
fn extrapolate_zero(h: &[f64], a: &[Complex64]) -> Complex64 {
    let mut p = a.to_vec();
    let k = p.len();
    for level in 1..k {
        for i in 0..k - level {
            let (hi, hj) = (h[i], h[i + level]);
            p[i] = (p[i + 1] * hi - p[i] * hj) / (hi - hj);
        }
    }
    p[0]
}

/// Slope of `log |I|` against `log tau`, Richardson extrapolation of
/// `tau^m I_tau` in powers of `1/tau`, and the verdict.
pub fn decay_fit(
    taus: &[f64],
    values: &[Complex64],
    m: i32,
    predicted: Option<Complex64>,
) -> Result<AsymptoticReport, AsymptoticsError> {
    if taus.len() != values.len() {
        return Err(AsymptoticsError::DegenerateFit("tau grid and values differ in length".into()));
    }
    if taus.len() < 5 {
        return Err(AsymptoticsError::DegenerateFit(format!("need at least 5 tau values, got {}", taus.len())));
    }
    if taus.windows(2).any(|w| !(w[1] > w[0])) || taus[0] <= 0.0 {
        return Err(AsymptoticsError::DegenerateFit("tau grid must be positive and strictly increasing".into()));
    }
    if values.iter().any(|v| !(v.norm() > 0.0) || !v.norm().is_finite()) {
        return Err(AsymptoticsError::DegenerateFit("zero or non-finite value".into()));
    }
    let lx: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.norm().ln()).collect();
    let (slope, r2) = line_fit(&lx, &ly);
    let scaled: Vec<Complex64> = taus.iter().zip(values).map(|(t, v)| v * t.powi(m)).collect();
    let take = scaled.len().min(4);
    let start = scaled.len() - take;
    let h: Vec<f64> = taus[start..].iter().map(|t| 1.0 / t).collect();
    let extrapolated = extrapolate_zero(&h, &scaled[start..]);
    let relative = predicted.filter(|p| p.norm() > 0.0).map(|p| (extrapolated - p).norm() / p.norm());
    let verdict = if relative.is_some_and(|r| r < MATCH_TOL) {
        Verdict::Match
    } else if slope <= -(m as f64 + 0.8) {
        Verdict::Decay
    } else {
        Verdict::Inconclusive
    };
    Ok(AsymptoticReport {
        tau_grid: taus.to_vec(),
        i_values: values.to_vec(),
        fitted_slope: slope,
        r_squared: r2,
        low_r_squared: r2 < LOW_R2,
        extrapolated_limit: extrapolated,
        predicted_limit: predicted,
        relative_error: relative,
        m,
        verdict,
    })
}
