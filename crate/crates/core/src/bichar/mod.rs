//! Bicharacteristics of `Re p`, sign changes of `Im p` along them and
//! minimal bicharacteristic intervals.

mod minimal;
mod sign;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jet::{jet_of, JetError};
use crate::ode::{integrate_to, OdeError, OdeOptions};
use crate::symexpr::{Expr, ExprError};

pub use minimal::{
    approximating_sequence, estimate_l, find_minimal_interval, rho_minimality, ApproxEntry, ApproxSequence,
    MinimalityOptions, MinimalityReport, RhoReport, SideReport,
};
pub use sign::{detect_sign_change, im_sign, sign_grid, strong_sign_change, SignOptions, StrongSignChange};

#[derive(Debug, Error)]
pub enum BicharError {
    #[error("start point is not characteristic: |Re p| = {0:e}")]
    NotCharacteristic(f64),
    #[error("gradient of Re p vanishes at t = {0}")]
    Degenerate(f64),
    #[error("flow left the chart box at t = {0}")]
    LeftChart(f64),
    #[error("empty parameter interval [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("transverse label has length {0}, expected {1}")]
    BadLabel(usize, usize),
    #[error("curve needs at least {0} samples")]
    TooFewSamples(usize),
    #[error("curve velocity vanishes at t = {0}")]
    ZeroVelocity(f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

/// A parametrized curve in phase space.
///
/// Curves in normal form are `t -> ((t, x'), (0, xi'))` for a frozen
/// transverse label `w = (x', xi')` and are evaluated exactly; integrated
/// curves are interpolated from their samples with cubic Hermite pieces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bicharacteristic {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub samples: Vec<CurvePoint>,
    velocity: Vec<Vec<f64>>,
    pub label: Option<Vec<f64>>,
}

impl Bicharacteristic {
    /// `[a, b] x {w}` with `w = (x2..xn, xi2..xin)`.
    pub fn normal_form(n: usize, a: f64, b: f64, w: &[f64], count: usize) -> Result<Bicharacteristic, BicharError> {
        if !(b > a) {
            return Err(BicharError::EmptyInterval(a, b));
        }
        if w.len() != 2 * (n - 1) {
            return Err(BicharError::BadLabel(w.len(), 2 * (n - 1)));
        }
        let count = count.max(2);
        let mut g = Bicharacteristic { n, a, b, samples: Vec::new(), velocity: Vec::new(), label: Some(w.to_vec()) };
        for i in 0..count {
            let t = a + (b - a) * i as f64 / (count - 1) as f64;
            let (x, xi) = g.point_at(t);
            g.samples.push(CurvePoint { t, x, xi });
            let mut v = vec![0.0; 2 * n];
            v[0] = 1.0;
            g.velocity.push(v);
        }
        Ok(g)
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Same transverse label moved by `delta`, same parameter interval.
    pub fn shifted(&self, delta: &[f64], count: usize) -> Result<Bicharacteristic, BicharError> {
        let w = self.label.as_ref().ok_or(BicharError::BadLabel(0, 2 * (self.n - 1)))?;
        let moved: Vec<f64> = w.iter().zip(delta).map(|(a, b)| a + b).collect();
        Bicharacteristic::normal_form(self.n, self.a, self.b, &moved, count)
    }

    pub fn point_at(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        if let Some(w) = &self.label {
            let mut x = vec![t; 1];
            x.extend_from_slice(&w[..n - 1]);
            let mut xi = vec![0.0; 1];
            xi.extend_from_slice(&w[n - 1..]);
            return (x, xi);
        }
        let s = &self.samples;
        let t = t.clamp(s[0].t.min(s[s.len() - 1].t), s[0].t.max(s[s.len() - 1].t));
        let mut lo = 0;
        let mut hi = s.len() - 1;
        let increasing = s[hi].t >= s[0].t;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if (s[mid].t <= t) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (p0, p1) = (&s[lo], &s[hi]);
        let h = p1.t - p0.t;
        let u = if h == 0.0 { 0.0 } else { (t - p0.t) / h };
        let h00 = 2.0 * u.powi(3) - 3.0 * u * u + 1.0;
        let h10 = u.powi(3) - 2.0 * u * u + u;
        let h01 = -2.0 * u.powi(3) + 3.0 * u * u;
        let h11 = u.powi(3) - u * u;
        let z0 = stack(&p0.x, &p0.xi);
        let z1 = stack(&p1.x, &p1.xi);
        let (v0, v1) = (&self.velocity[lo], &self.velocity[hi]);
        let z: Vec<f64> =
            (0..2 * n).map(|i| h00 * z0[i] + h10 * h * v0[i] + h01 * z1[i] + h11 * h * v1[i]).collect();
        (z[..n].to_vec(), z[n..].to_vec())
    }
}

fn stack(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let mut z = x.to_vec();
    z.extend_from_slice(xi);
    z
}

/// `Re p` and the Hamilton field `(d_xi Re p, -d_x Re p)` at a point.
fn real_hamilton(p_re: &Expr, n: usize, z: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>), BicharError> {
    let j = jet_of(p_re, &z[..n], &z[n..], 1)?;
    let mut grad = vec![0.0; 2 * n];
    for (s, g) in grad.iter_mut().enumerate() {
        *g = j.derivative_at(j.table().unit(s)).re;
    }
    let mut h = vec![0.0; 2 * n];
    for k in 0..n {
        h[k] = grad[n + k];
        h[n + k] = -grad[k];
    }
    Ok((j.value().re, grad, h))
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub ode: OdeOptions,
    /// The flow aborts once `|(x, xi)|_inf` exceeds this.
    pub chart_radius: f64,
    /// Newton re-projection onto `Re p = 0` after every accepted step.
    pub project: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { ode: OdeOptions::default(), chart_radius: 1e3, project: true }
    }
}

/// Integral curve of `H_{Re p}` through a characteristic point, sampled at
/// `count` equally spaced parameters over `t_span`.
pub fn integrate_bicharacteristic(
    p_re: &Expr,
    n: usize,
    x0: &[f64],
    xi0: &[f64],
    t_span: (f64, f64),
    count: usize,
    opts: &FlowOptions,
) -> Result<Bicharacteristic, BicharError> {
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(BicharError::EmptyInterval(t0, t1));
    }
    if count < 2 {
        return Err(BicharError::TooFewSamples(2));
    }
    let z0 = stack(x0, xi0);
    let (v0, grad0, _) = real_hamilton(p_re, n, &z0)?;
    if v0.abs() > 1e-8 {
        return Err(BicharError::NotCharacteristic(v0.abs()));
    }
    if grad0.iter().all(|g| *g == 0.0) {
        return Err(BicharError::Degenerate(t0));
    }
    let radius = opts.chart_radius;
    let rhs = |t: f64, z: &[f64], dz: &mut [f64]| -> Result<(), String> {
        if z.iter().any(|v| v.abs() > radius) {
            return Err(format!("left chart at t = {t}"));
        }
        let (_, _, h) = real_hamilton(p_re, n, z).map_err(|e| e.to_string())?;
        dz.copy_from_slice(&h);
        Ok(())
    };
    let project = opts.project;
    let hook = |t: f64, z: &mut [f64]| -> Result<(), String> {
        if z.iter().any(|v| v.abs() > radius) {
            return Err(format!("left chart at t = {t}"));
        }
        if !project {
            return Ok(());
        }
        for _ in 0..4 {
            let (v, g, _) = real_hamilton(p_re, n, z).map_err(|e| e.to_string())?;
            if v.abs() < 1e-12 {
                break;
            }
            let g2: f64 = g.iter().map(|c| c * c).sum();
            if g2 == 0.0 {
                return Err(format!("gradient of Re p vanishes at t = {t}"));
            }
            for (zi, gi) in z.iter_mut().zip(&g) {
                *zi -= v * gi / g2;
            }
        }
        Ok(())
    };
    let times: Vec<f64> = (0..count).map(|i| t0 + (t1 - t0) * i as f64 / (count - 1) as f64).collect();
    let states = integrate_to(rhs, &z0, &times, &opts.ode, hook).map_err(|e| match e {
        OdeError::Aborted { t, reason } if reason.starts_with("left chart") => BicharError::LeftChart(t),
        other => BicharError::Ode(other),
    })?;
    let mut g = Bicharacteristic { n, a: t0, b: t1, samples: Vec::new(), velocity: Vec::new(), label: None };
    for (t, z) in times.iter().zip(states) {
        let (_, _, h) = real_hamilton(p_re, n, &z)?;
        g.samples.push(CurvePoint { t: *t, x: z[..n].to_vec(), xi: z[n..].to_vec() });
        g.velocity.push(h);
    }
    Ok(g)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneDimReport {
    pub one_dimensional: bool,
    /// `(t, c(t))` with `gamma'(t) ~ c(t) H_p(gamma(t))`.
    pub c: Vec<(f64, Complex64)>,
    pub max_residual: f64,
    pub max_abs_p: f64,
}

fn lagrange_derivative(ts: [f64; 3], zs: [&[f64]; 3], at: usize) -> Vec<f64> {
    let t = ts[at];
    let mut w = [0.0; 3];
    for j in 0..3 {
        let mut num = 0.0;
        for m in 0..3 {
            if m == j {
                continue;
            }
            let mut prod = 1.0;
            for l in 0..3 {
                if l != j && l != m {
                    prod *= t - ts[l];
                }
            }
            num += prod;
        }
        let den: f64 = (0..3).filter(|&l| l != j).map(|l| ts[j] - ts[l]).product();
        w[j] = num / den;
    }
    (0..zs[0].len()).map(|i| w[0] * zs[0][i] + w[1] * zs[1][i] + w[2] * zs[2][i]).collect()
}

/// Whether the sampled curve is a one-dimensional bicharacteristic of the
/// complex symbol `p`: `p = 0` on it and `gamma' = c H_p` for some complex `c(t)`.
pub fn check_one_dim_bichar(p: &Expr, gamma: &Bicharacteristic) -> Result<OneDimReport, BicharError> {
    let s = &gamma.samples;
    if s.len() < 3 {
        return Err(BicharError::TooFewSamples(3));
    }
    let n = gamma.n;
    let zs: Vec<Vec<f64>> = s.iter().map(|c| stack(&c.x, &c.xi)).collect();
    let mut out = OneDimReport { one_dimensional: true, c: Vec::new(), max_residual: 0.0, max_abs_p: 0.0 };
    for i in 0..s.len() {
        let (base, at) = if i == 0 {
            (0, 0)
        } else if i == s.len() - 1 {
            (i - 2, 2)
        } else {
            (i - 1, 1)
        };
        let ts = [s[base].t, s[base + 1].t, s[base + 2].t];
        let d = lagrange_derivative(ts, [&zs[base], &zs[base + 1], &zs[base + 2]], at);
        let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dn < 1e-12 {
            return Err(BicharError::ZeroVelocity(s[i].t));
        }
        let j = jet_of(p, &s[i].x, &s[i].xi, 1)?;
        let mut h = vec![Complex64::new(0.0, 0.0); 2 * n];
        for k in 0..n {
            h[k] = j.derivative_at(j.table().unit(n + k));
            h[n + k] = -j.derivative_at(j.table().unit(k));
        }
        let hh: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        let c = if hh == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            h.iter().zip(&d).map(|(hv, dv)| hv.conj() * dv).sum::<Complex64>() / hh
        };
        let res = h.iter().zip(&d).map(|(hv, dv)| (dv - c * hv).norm_sqr()).sum::<f64>().sqrt() / dn;
        let pv = j.value().norm();
        out.max_residual = out.max_residual.max(res);
        out.max_abs_p = out.max_abs_p.max(pv);
        out.c.push((s[i].t, c));
    }
    out.one_dimensional = out.max_abs_p < 1e-7 && out.max_residual < 1e-4;
    Ok(out)
}
