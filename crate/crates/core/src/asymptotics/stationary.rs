use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AsymptoticsError;
use crate::symexpr::{differentiate, evaluate, Expr, Var};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const CRITICAL_TOL: f64 = 1e-8;
const DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryPhase {
    /// `e^{i lambda phi(x0)} A0 u(x0) lambda^{-d/2}`
    pub value: Complex64,
    /// `(2 pi)^{d/2} e^{i pi sgn / 4} / |det phi''|^{1/2}`
    pub a0: Complex64,
    pub signature: i32,
    pub det: f64,
    /// `lambda^{-d/2-1} sum_{|a| <= 2} |d^a u(x0)|`, the size of the first
    /// neglected term up to a constant.
    pub error_scale: f64,
}

/// Leading stationary phase term of `int e^{i lambda phi(x)} u(x) dx` over
/// `R^d` at a non-degenerate critical point `x0` of the real phase `phi`.
/// Both fields are expressions in `x1..xd`.
pub fn stationary_phase(phi: &Expr, u: &Expr, lambda: f64, x0: &[f64]) -> Result<StationaryPhase, AsymptoticsError> {
    let d = x0.len();
    let xi = vec![0.0; d];
    let grads: Vec<Expr> = (0..d).map(|k| differentiate(phi, Var::X(k))).collect();
    let mut g2 = 0.0;
    for g in &grads {
        g2 += evaluate(g, x0, &xi)?.norm_sqr();
    }
    if g2.sqrt() > CRITICAL_TOL {
        return Err(AsymptoticsError::NotCritical(g2.sqrt()));
    }
    let mut hess = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let v = evaluate(&differentiate(&grads[j], Var::X(k)), x0, &xi)?.re;
            hess[(j, k)] = v;
            hess[(k, j)] = v;
        }
    }
    let eig = hess.symmetric_eigen().eigenvalues;
    let det: f64 = eig.iter().product();
    if det.abs() < DET_TOL {
        return Err(AsymptoticsError::DegenerateHessian(det.abs()));
    }
    let signature: i32 = eig.iter().map(|&e| if e > 0.0 { 1 } else { -1 }).sum();
    let a0 = (2.0 * PI).powf(0.5 * d as f64) * (I * PI * signature as f64 / 4.0).exp() / det.abs().sqrt();
    let u0 = evaluate(u, x0, &xi)?;
    let p0 = evaluate(phi, x0, &xi)?;
    let value = (I * lambda * p0).exp() * a0 * u0 * lambda.powf(-0.5 * d as f64);
    let mut budget = u0.norm();
    for j in 0..d {
        let uj = differentiate(u, Var::X(j));
        budget += evaluate(&uj, x0, &xi)?.norm();
        for k in 0..d {
            budget += evaluate(&differentiate(&uj, Var::X(k)), x0, &xi)?.norm();
        }
    }
    Ok(StationaryPhase {
        value,
        a0,
        signature,
        det,
        error_scale: budget * lambda.powf(-0.5 * d as f64 - 1.0),
    })
}

/// `int e^{i lambda sum a_k x_k^2 / 2} e^{-|x|^2/2} dx = prod_k (2 pi)^{1/2} (1 - i lambda a_k)^{-1/2}`.
pub fn gaussian_quadratic_exact(a: &[f64], lambda: f64) -> Complex64 {
    a.iter()
        .map(|&ak| (2.0 * PI).sqrt() / Complex64::new(1.0, -lambda * ak).sqrt())
        .product()
}
