//! WKB approximate solutions `v = tau^(N+n) e^{i tau w} (phi_0 + ...)` of
//! `P* v = 0`: eiconal and transport systems along a curve, the explicit
//! model solution for `D_1 + i x_1 D_n`, and grid assembly.
//!
//! Throughout, `t = x1` and `x = (x2, .., xn)`; the symbol data `f` is an
//! expression in `n` variables that does not involve `xi1`.

#[cfg(test)]
mod tests;

mod expand;
mod grid;
mod model;
mod phase;
pub mod poly;
mod transport;

use thiserror::Error;

pub use grid::{assemble_v, smooth_step, ApproxSolution, GridFunction, GridSpec, SolutionKind};
pub use model::{check_model, ck_residual, model_gradient, model_phase, model_solution, solve_ck_amplitude, ModelCheck, MODEL_MAX_RADIUS};
pub use phase::{
    eiconal_residual, eiconal_slope, normalize_w0, solve_phase_system, EiconalFit, NormalizeMode, PhaseExpansion,
    PhaseOptions, PhaseState, W0Normalization,
};
pub use poly::TPoly;
pub use transport::{solve_transport, AmplitudeSet, TransportOptions};

use crate::jet::JetError;
use crate::ode::OdeError;
use crate::symexpr::ExprError;

#[derive(Debug, Error)]
pub enum WkbError {
    #[error("positive definiteness of Im w_jk - delta_jk/2 lost at t = {t} (min eigenvalue {min_eigen:e})")]
    PositiveDefinitenessLost { t: f64, min_eigen: f64 },
    #[error("f depends on xi1")]
    DependsOnXi1,
    #[error("expansion order {0} is not supported (need 2 <= M <= 8)")]
    BadOrder(usize),
    #[error("Im w0 has no interior minimum; f never changes sign from - to +")]
    NoInteriorMinimum,
    #[error("Im w0 is not positive at the end points: {0:e}, {1:e}")]
    EndpointNotPositive(f64, f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("t = {0} lies outside the solved interval")]
    OutOfRange(f64),
    #[error("Im w_jk is singular at t = {0}")]
    Singular(f64),
    #[error("prescribed index {0:?} needs amplitude order {1}")]
    Prescription(Vec<u8>, usize),
    #[error("grid too coarse along axis {axis}: tau |d Re w| = {freq:.3e} exceeds pi / h = {nyquist:.3e}")]
    GridTooCoarse { axis: usize, freq: f64, nyquist: f64 },
    #[error("support radius {radius} too large for Im w >= |x|^2/4; shrink below {max}")]
    RadiusTooLarge { radius: f64, max: f64 },
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Cubic Hermite interpolation of sampled vectors with known derivatives.
pub(crate) fn hermite(ts: &[f64], ys: &[Vec<f64>], dys: &[Vec<f64>], t: f64) -> Option<Vec<f64>> {
    let last = ts.len().checked_sub(1)?;
    let slack = 1e-12 * (1.0 + ts[last].abs().max(ts[0].abs()));
    if t < ts[0] - slack || t > ts[last] + slack {
        return None;
    }
    if last == 0 {
        return Some(ys[0].clone());
    }
    let i = match ts.partition_point(|&s| s <= t) {
        0 => 0,
        k => (k - 1).min(last - 1),
    };
    let h = ts[i + 1] - ts[i];
    let s = (t - ts[i]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    Some(
        (0..ys[i].len())
            .map(|k| h00 * ys[i][k] + h10 * h * dys[i][k] + h01 * ys[i + 1][k] + h11 * h * dys[i + 1][k])
            .collect(),
    )
}
