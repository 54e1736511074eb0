//! Oscillatory pairings `I_tau`, Sobolev norms of wave packets, decay fits
//! and the stationary phase approximation.

mod action;
mod fit;
mod itau;
mod norms;
mod sobolev;
mod stationary;
mod window;

#[cfg(test)]
mod tests;

pub use action::{apply_symbol_gaussian, lambda_profile, LambdaProfile};
pub use fit::{decay_fit, AsymptoticReport, Verdict, LOW_R2, MATCH_TOL};
pub use itau::{compute_i_tau, compute_i_tau_adjoint, compute_i_tau_unscaled, predicted_limit, ITauOptions, LimitWeights};
pub use norms::{
    model_grid, model_pstar, norm_slope, verify_norm_estimates, NormCheck, NormEstimateReport, PStarCheck,
};
pub use sobolev::{sobolev_norm, sobolev_norm_against};
pub use stationary::{gaussian_quadratic_exact, stationary_phase, StationaryPhase};
pub use window::{bump, ProbeWindow, TensorRule};

use thiserror::Error;

use crate::jet::JetError;
use crate::symbol::SymbolError;
use crate::symexpr::ExprError;
use crate::wkb::WkbError;

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("grid function does not vanish at the box edge: edge {edge:.3e} against max {max:.3e}")]
    SupportViolation { edge: f64, max: f64 },
    #[error("Im w'' is not positive definite at the minimum of Im w (smallest eigenvalue {0:.3e})")]
    HessianNotPositive(f64),
    #[error("quadrature not resolved at tau = {tau}: relative change {change:.3e} on doubling")]
    Resolution { tau: f64, change: f64 },
    #[error("scaled window reaches {extent:.3} at tau = {tau}, beyond the region {limit:.3} where the cutoff is 1")]
    WindowTooWide { tau: f64, extent: f64, limit: f64 },
    #[error("the symbol depends on xi1; an operator in x' is required")]
    NotTangential,
    #[error("symbol has degrees down to {have}, the limit needs degree {need}")]
    DepthInsufficient { have: i32, need: i32 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("degenerate Hessian, |det| = {0:.3e}")]
    DegenerateHessian(f64),
    #[error("not a critical point, |grad| = {0:.3e}")]
    NotCritical(f64),
    #[error("{0} is only available for the model solution")]
    Unsupported(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Wkb(#[from] WkbError),
    #[error(transparent)]
    Jet(#[from] JetError),
}
