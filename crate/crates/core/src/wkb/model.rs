use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{ApproxSolution, SolutionKind};
use super::poly::TPoly;
use super::WkbError;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `w(x) = x_n + i (x_1^2 + .. + x_{n-1}^2 + (x_n + i x_1^2/2)^2) / 2`,
/// which solves `(D_1 - i x_1 D_n) w = 0`.
pub fn model_phase(x: &[f64]) -> Complex64 {
    let n = x.len();
    let head: f64 = x[..n - 1].iter().map(|v| v * v).sum();
    let u = Complex64::new(x[n - 1], 0.5 * x[0] * x[0]);
    x[n - 1] + I * (head + u * u) * 0.5
}

pub fn model_gradient(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let u = Complex64::new(x[n - 1], 0.5 * x[0] * x[0]);
    let mut g: Vec<Complex64> = x.iter().map(|&v| I * v).collect();
    // d/dx1 of (u^2)/2 is u * i x1
    g[0] = I * x[0] + I * u * I * x[0];
    if n == 1 {
        return g;
    }
    g[n - 1] = Complex64::new(1.0, 0.0) + I * u;
    g
}

/// Power series solution of `D_1 phi - i x_1 D_n phi = 0` with
/// `phi(0, x') = initial(x')`, truncated at total degree `order`.
///
/// `initial` is a polynomial in all `n` variables without `x_1`. The
/// recursion in the `x_1` degree gives
/// `phi = sum_j x_1^(2j) (i/2)^j / j! d_n^j initial`.
pub fn solve_ck_amplitude(initial: &TPoly, order: usize) -> TPoly {
    let n = initial.dim();
    let g0 = initial.with_order(order);
    let mut out = TPoly::zeros(n, order);
    let mut dj = g0.clone();
    let mut coef = Complex64::new(1.0, 0.0);
    let mut shift = vec![0u8; n];
    for j in 0..=order / 2 {
        if j > 0 {
            dj = dj.derivative(n - 1);
            coef *= I * 0.5 / j as f64;
        }
        shift[0] = (2 * j) as u8;
        out.add_scaled(&dj.shift(&shift), coef);
    }
    out
}

/// `d_1 phi - i x_1 d_n phi`; vanishes below the truncation degree.
pub fn ck_residual(phi: &TPoly) -> TPoly {
    let n = phi.dim();
    let mut e1 = vec![0u8; n];
    e1[0] = 1;
    let mut r = phi.derivative(0);
    r.add_scaled(&phi.derivative(n - 1).shift(&e1), -I);
    r
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelCheck {
    /// `min (Im w - |x|^2/4) / |x|^2` over nonzero samples of the ball.
    pub min_margin_ratio: f64,
    /// `min |d Re w|` over the samples.
    pub min_grad_re: f64,
    pub samples: usize,
}

fn ball_samples(n: usize, radius: f64) -> Vec<Vec<f64>> {
    let per: usize = if n <= 2 { 61 } else if n == 3 { 21 } else { 9 };
    let total = per.pow(n as u32);
    let mut out = Vec::new();
    let mut x = vec![0.0; n];
    for idx in 0..total {
        let mut r = idx;
        for v in x.iter_mut() {
            let k = r % per;
            r /= per;
            *v = radius * (2.0 * k as f64 / (per - 1) as f64 - 1.0);
        }
        if x.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
            out.push(x.clone());
        }
    }
    out
}

pub fn check_model(n: usize, radius: f64) -> ModelCheck {
    let mut ratio = f64::INFINITY;
    let mut grad = f64::INFINITY;
    let pts = ball_samples(n, radius);
    for x in &pts {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 > 0.0 {
            ratio = ratio.min((model_phase(x).im - 0.25 * r2) / r2);
        }
        let g: f64 = model_gradient(x).iter().map(|c| c.re * c.re).sum::<f64>().sqrt();
        grad = grad.min(g);
    }
    ModelCheck { min_margin_ratio: ratio, min_grad_re: grad, samples: pts.len() }
}

/// Largest support radius for which `Im w >= |x|^2/4` holds on the ball.
pub const MODEL_MAX_RADIUS: f64 = std::f64::consts::SQRT_2;

/// Explicit approximate solution for `P = D_1 + i x_1 D_n` supported in the
/// ball of the given radius, with amplitude from the power series of
/// `initial` (default `1`) truncated at degree `order`.
pub fn model_solution(
    tau: f64,
    n: usize,
    radius: f64,
    big_n: i32,
    initial: Option<&TPoly>,
    order: usize,
) -> Result<(ApproxSolution, ModelCheck), WkbError> {
    if n < 2 {
        return Err(WkbError::DimensionMismatch { expected: 2, got: n });
    }
    if !(radius > 0.0 && radius < MODEL_MAX_RADIUS) {
        return Err(WkbError::RadiusTooLarge { radius, max: MODEL_MAX_RADIUS });
    }
    let one = TPoly::constant(n, 0, Complex64::new(1.0, 0.0));
    let init = initial.unwrap_or(&one);
    if init.dim() != n {
        return Err(WkbError::DimensionMismatch { expected: n, got: init.dim() });
    }
    let amp = solve_ck_amplitude(init, order);
    let check = check_model(n, radius);
    if !(check.min_margin_ratio > 0.0) {
        return Err(WkbError::RadiusTooLarge { radius, max: MODEL_MAX_RADIUS });
    }
    let sol = ApproxSolution { n, tau, big_n, radius, kind: SolutionKind::Model { amplitude: amp } };
    Ok((sol, check))
}
