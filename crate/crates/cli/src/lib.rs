//! Subcommand drivers for the `psiwork` binary. Each command reads a
//! [`RunConfig`], runs the corresponding core routines and writes JSON, CSV
//! and SVG artifacts to the output directory.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Inconclusive(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(..) => 1,
        }
    }

    pub(crate) fn schema(msg: impl Into<String>) -> CliError {
        CliError::Schema(vec![msg.into()])
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> CliError {
                CliError::Numerical(e.to_string())
            }
        })*
    };
}

numerical_from!(
    psiwork::asymptotics::AsymptoticsError,
    psiwork::bichar::BicharError,
    psiwork::factor::FactorError,
    psiwork::jet::JetError,
    psiwork::symbol::SymbolError,
    psiwork::wkb::WkbError
);

impl From<psiwork::symexpr::ExprError> for CliError {
    fn from(e: psiwork::symexpr::ExprError) -> CliError {
        CliError::schema(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    PsiScan,
    Minimal,
    Factor,
    Wkb,
    Itau,
    Fixtures,
    Proportionality,
    Commutator,
}

/// Command-line overrides shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub tol: Option<f64>,
    /// Fixture used when no config is given (`minimal`, `psi-scan`).
    pub fixture: Option<String>,
    /// Fixture names for `fixtures`; all of `p1`, `p2` if empty.
    pub names: Vec<String>,
}

/// Outcome of a successful run: artifacts written and a one-line summary.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

/// Run one subcommand inside a worker pool of the requested size.
pub fn run(cmd: Command, flags: &Flags) -> Result<Outcome, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = flags.workers {
        if w == 0 {
            return Err(CliError::schema("--workers must be at least 1"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::schema(format!("worker pool: {e}")))?;
    pool.install(|| commands::dispatch(cmd, flags))
}
