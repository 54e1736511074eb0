//! JSON run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use psiwork::asymptotics::{ITauOptions, ProbeWindow};
use psiwork::symbol::{fixture, fixture_names, ClassicalSymbol, TermSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A named symbol: either a built-in fixture or an explicit list of terms.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
    #[serde(default)]
    pub tangential: bool,
}

/// Curve in normal form `[a, b] x {w}`, `w = (x2..xn, xi2..xin)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub symbol: String,
    pub a: f64,
    pub b: f64,
    pub w: Vec<f64>,
    /// Transverse offsets along `direction` scanned by `psi-scan`.
    #[serde(default)]
    pub offsets: Vec<f64>,
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimalSpec {
    /// Approach side `+1` or `-1`; the side with smaller `L` if absent.
    #[serde(default)]
    pub side: Option<i8>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: usize,
    #[serde(default = "default_approx")]
    pub approx_count: usize,
}

impl Default for MinimalSpec {
    fn default() -> Self {
        MinimalSpec { side: None, eps0: default_eps0(), k_max: default_k_max(), rho_grid: default_rho_grid(), approx_count: default_approx() }
    }
}

fn default_eps0() -> f64 {
    0.25
}
fn default_k_max() -> usize {
    12
}
fn default_rho_grid() -> usize {
    20
}
fn default_approx() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub p: String,
    pub q: String,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_order")]
    pub order: usize,
}

fn default_depth() -> usize {
    2
}
fn default_order() -> usize {
    6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WkbSpec {
    /// Symbol data `f(t, x, xi')` of the eiconal system; must not involve `xi1`.
    pub f: String,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub t_span: (f64, f64),
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Time of the eiconal residual check; the midpoint if absent.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_hs")]
    pub hs: Vec<f64>,
    /// Prescribed `beta0` for the transport solve; skipped if absent.
    #[serde(default)]
    pub beta0: Option<Vec<u8>>,
    /// Order-zero part of the adjoint symbol for the transport equations.
    #[serde(default)]
    pub lower: Option<String>,
}

fn default_m() -> usize {
    3
}
fn default_samples() -> usize {
    81
}
fn default_hs() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ITauSpec {
    /// Symbol of the tangential operator `R`.
    #[serde(default)]
    pub r: Option<String>,
    /// Symbol of `R*`; used instead of `r` when given.
    #[serde(default)]
    pub rstar: Option<String>,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    #[serde(default)]
    pub window: Option<ProbeWindow>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Power `N` in `v = tau^(N+n) e^{i tau w} phi`; `-n` if absent.
    #[serde(default)]
    pub big_n: Option<i32>,
    /// Truncation order of the amplitude power series.
    #[serde(default = "default_amp_order")]
    pub amplitude_order: usize,
    /// Order `m` with `tau^m I_tau` tested for a limit.
    pub m: i32,
    /// `beta0` for the predicted limit; the limit is skipped if absent.
    #[serde(default)]
    pub beta0: Option<Vec<u8>>,
    #[serde(default = "default_limit_points")]
    pub limit_points: usize,
    #[serde(default)]
    pub options: ITauOptions,
}

fn default_taus() -> Vec<f64> {
    (4..=10).map(|k| 2f64.powi(k)).collect()
}
fn default_radius() -> f64 {
    1.0
}
fn default_amp_order() -> usize {
    4
}
fn default_limit_points() -> usize {
    48
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProportionalitySpec {
    pub p: String,
    pub q: String,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorSpec {
    pub p: String,
    pub q: String,
    #[serde(default)]
    pub mu: Option<String>,
    pub points: Vec<PointSpec>,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
}

fn default_m_max() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(default)]
    pub symbols: BTreeMap<String, SymbolSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub curve: Option<CurveSpec>,
    #[serde(default)]
    pub minimal: Option<MinimalSpec>,
    #[serde(default)]
    pub factor: Option<FactorSpec>,
    #[serde(default)]
    pub wkb: Option<WkbSpec>,
    #[serde(default)]
    pub itau: Option<ITauSpec>,
    #[serde(default)]
    pub proportionality: Option<ProportionalitySpec>,
    #[serde(default)]
    pub commutator: Option<CommutatorSpec>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        RunConfig::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Schema(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every problem found, so a broken config is reported in one pass.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errs = Vec::new();
        if self.n < 1 {
            errs.push("n must be at least 1".to_string());
        }
        for (name, s) in &self.symbols {
            match (&s.fixture, &s.terms) {
                (Some(_), Some(_)) => errs.push(format!("symbol '{name}': give either 'fixture' or 'terms', not both")),
                (None, None) => errs.push(format!("symbol '{name}': one of 'fixture' or 'terms' is required")),
                (Some(f), None) if !fixture_names().contains(&f.as_str()) => {
                    errs.push(format!("symbol '{name}': unknown fixture '{f}' (known: {})", fixture_names().join(", ")))
                }
                (None, Some(t)) if t.is_empty() => errs.push(format!("symbol '{name}': 'terms' is empty")),
                _ => {}
            }
        }
        let mut need = |what: &str, name: &str| {
            if !self.symbols.contains_key(name) && !fixture_names().contains(&name) {
                errs.push(format!("{what} refers to unknown symbol '{name}'"));
            }
        };
        if let Some(c) = &self.curve {
            need("curve.symbol", &c.symbol);
        }
        if let Some(f) = &self.factor {
            need("factor.p", &f.p);
            need("factor.q", &f.q);
        }
        if let Some(p) = &self.proportionality {
            need("proportionality.p", &p.p);
            need("proportionality.q", &p.q);
        }
        if let Some(c) = &self.commutator {
            need("commutator.p", &c.p);
            need("commutator.q", &c.q);
        }
        if let Some(t) = &self.itau {
            match (&t.r, &t.rstar) {
                (None, None) => errs.push("itau: one of 'r' or 'rstar' is required".to_string()),
                (r, s) => {
                    for name in r.iter().chain(s.iter()) {
                        need("itau", name);
                    }
                }
            }
        }
        if let Some(c) = &self.curve {
            if self.n >= 1 && c.w.len() != 2 * (self.n - 1) {
                errs.push(format!("curve.w has length {}, expected {}", c.w.len(), 2 * (self.n - 1)));
            }
            if !(c.b > c.a) {
                errs.push(format!("curve: need a < b, got [{}, {}]", c.a, c.b));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Schema(errs))
        }
    }

    /// Resolve a symbol by name: config entries first, then fixtures.
    pub fn symbol(&self, name: &str) -> Result<ClassicalSymbol, CliError> {
        let spec = match self.symbols.get(name) {
            Some(s) => s.clone(),
            None => SymbolSpec { fixture: Some(name.to_string()), ..Default::default() },
        };
        let sym = match (&spec.fixture, &spec.terms) {
            (Some(f), _) => fixture(f, self.n).ok_or_else(|| CliError::Schema(vec![format!("unknown symbol '{name}'")]))?,
            (None, Some(t)) => ClassicalSymbol::from_specs(self.n, t).map_err(|e| CliError::Schema(vec![format!("symbol '{name}': {e}")]))?,
            (None, None) => return Err(CliError::Schema(vec![format!("symbol '{name}' is empty")])),
        };
        if sym.n() != self.n {
            return Err(CliError::Schema(vec![format!("symbol '{name}' lives in dimension {}, config has n = {}", sym.n(), self.n)]));
        }
        Ok(sym.with_tangential(spec.tangential))
    }
}
