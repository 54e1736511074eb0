use std::path::{Path, PathBuf};

use num_complex::Complex64;
use psiwork::asymptotics::{
    compute_i_tau_adjoint, decay_fit, predicted_limit, AsymptoticReport, LimitWeights, ProbeWindow, Verdict,
};
use psiwork::bichar::{
    approximating_sequence, detect_sign_change, find_minimal_interval, rho_minimality, sign_grid, strong_sign_change,
    ApproxSequence, Bicharacteristic, MinimalityOptions, MinimalityReport, SignOptions, StrongSignChange,
};
use psiwork::factor::{commutator_test, factor_at, proportionality, CommutatorPoint, FactorizationResult, ProportionalityReport};
use psiwork::jet::OrderedIndex;
use psiwork::symbol::{adjoint_symbol, fixture, ClassicalSymbol};
use psiwork::symexpr::parse_expression;
use psiwork::wkb::{
    eiconal_slope, model_solution, solve_phase_system, solve_transport, AmplitudeSet, EiconalFit, PhaseOptions,
    TransportOptions,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CurveSpec, MinimalSpec, RunConfig};
use crate::output::{sign_grid_csv, sign_grid_svg, write_json, write_text};
use crate::{CliError, Command, Flags, Outcome};

/// Sign grid resolution for `fixtures`.
const GRID_X1: (f64, f64, usize) = (-1.0, 3.0, 201);
const GRID_X2: (f64, f64, usize) = (-1.0, 1.0, 101);
const DEFAULT_TOL: f64 = 1e-9;

pub fn dispatch(cmd: Command, flags: &Flags) -> Result<Outcome, CliError> {
    if cmd == Command::Fixtures {
        let out = flags.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        return fixtures(flags, &out);
    }
    let cfg = load_config(cmd, flags)?;
    let out = flags.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match cmd {
        Command::PsiScan => psi_scan(&cfg, flags, &out),
        Command::Minimal => minimal(&cfg, flags, &out),
        Command::Factor => factor(&cfg, flags, &out),
        Command::Wkb => wkb(&cfg, &out),
        Command::Itau => itau(&cfg, flags, &out),
        Command::Proportionality => run_proportionality(&cfg, &out),
        Command::Commutator => commutator(&cfg, &out),
        Command::Fixtures => unreachable!(),
    }
}

fn load_config(cmd: Command, flags: &Flags) -> Result<RunConfig, CliError> {
    if let Some(path) = &flags.config {
        return RunConfig::load(path);
    }
    match (&flags.fixture, cmd) {
        (Some(name), Command::Minimal | Command::PsiScan) => fixture_config(name),
        _ => Err(CliError::schema("a configuration file is required (--config)")),
    }
}

/// Default two-dimensional setup for `minimal` and `psi-scan` on a fixture:
/// the curve `x2 = 0`, `xi' = 1` over a parameter interval containing the
/// flat pieces.
pub fn fixture_config(name: &str) -> Result<RunConfig, CliError> {
    let (a, b) = match name {
        "p1" => (-1.0, 3.0),
        "p2" => (-0.5, 3.5),
        "model" | "model2d" => (-1.0, 1.0),
        _ => return Err(CliError::schema(format!("no default curve for fixture '{name}'; use p1, p2 or model2d"))),
    };
    let text = serde_json::json!({
        "n": 2,
        "curve": { "symbol": name, "a": a, "b": b, "w": [0.0, 1.0], "offsets": [-0.5, -0.25, 0.0, 0.25, 0.5] },
    });
    RunConfig::from_json(&text.to_string())
}

fn curve_of(cfg: &RunConfig) -> Result<(&CurveSpec, ClassicalSymbol, Bicharacteristic), CliError> {
    let c = cfg.curve.as_ref().ok_or_else(|| CliError::schema("missing 'curve' section"))?;
    let p = cfg.symbol(&c.symbol)?;
    let g = Bicharacteristic::normal_form(cfg.n, c.a, c.b, &c.w, 11)?;
    Ok((c, p, g))
}

fn sign_options(flags: &Flags) -> SignOptions {
    let mut s = SignOptions::default();
    if let Some(t) = flags.tol {
        s.tol = t;
    }
    s
}

#[derive(Debug, Serialize)]
struct ScanRow {
    offset: f64,
    label: Vec<f64>,
    sign_change: Option<(f64, f64)>,
    strong: Option<StrongSignChange>,
}

fn psi_scan(cfg: &RunConfig, flags: &Flags, out: &Path) -> Result<Outcome, CliError> {
    let (c, p, g) = curve_of(cfg)?;
    let expr = p.principal().expr.clone();
    let dir = unit_direction(c.direction.as_deref(), cfg.n)?;
    let offsets = if c.offsets.is_empty() { vec![0.0] } else { c.offsets.clone() };
    let opts = sign_options(flags);
    let rows = offsets
        .par_iter()
        .map(|&off| {
            let shift: Vec<f64> = dir.iter().map(|d| d * off).collect();
            let gk = g.shifted(&shift, 11)?;
            Ok(ScanRow {
                offset: off,
                label: gk.label.clone().unwrap_or_default(),
                sign_change: detect_sign_change(&expr, &gk, &opts)?,
                strong: strong_sign_change(&expr, &gk, &opts)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = String::from("offset,sign_change,s,t,strong,a_prime,b_prime,length\n");
    for r in &rows {
        let (s, t) = r.sign_change.map_or((String::new(), String::new()), |(s, t)| (format!("{s:.10}"), format!("{t:.10}")));
        let (a, b, l) = r.strong.as_ref().map_or((String::new(), String::new(), String::new()), |x| {
            (format!("{:.10}", x.a_prime), format!("{:.10}", x.b_prime), format!("{:.10}", x.length()))
        });
        csv.push_str(&format!(
            "{},{},{s},{t},{},{a},{b},{l}\n",
            r.offset,
            r.sign_change.is_some() as u8,
            r.strong.is_some() as u8
        ));
    }
    let found = rows.iter().filter(|r| r.sign_change.is_some()).count();
    Ok(Outcome {
        artifacts: vec![write_json(out, "psi_scan.json", &rows)?, write_text(out, "psi_scan.csv", &csv)?],
        summary: format!("{found} of {} curves show a - to + sign change of Im p", rows.len()),
    })
}

fn unit_direction(d: Option<&[f64]>, n: usize) -> Result<Vec<f64>, CliError> {
    match d {
        Some(v) => {
            if v.len() != 2 * (n - 1) {
                return Err(CliError::schema(format!("curve.direction has length {}, expected {}", v.len(), 2 * (n - 1))));
            }
            let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(len > 0.0) {
                return Err(CliError::schema("curve.direction is zero"));
            }
            Ok(v.iter().map(|a| a / len).collect())
        }
        None => {
            let mut v = vec![0.0; 2 * (n - 1)];
            v[0] = 1.0;
            Ok(v)
        }
    }
}

#[derive(Debug, Serialize)]
struct MinimalOutput {
    report: MinimalityReport,
    rho_certified: Option<bool>,
    approximating: Option<ApproxSequence>,
}

fn minimal(cfg: &RunConfig, flags: &Flags, out: &Path) -> Result<Outcome, CliError> {
    let (c, p, g) = curve_of(cfg)?;
    let spec = cfg.minimal.clone().unwrap_or_default();
    let opts = minimality_options(&spec, c, cfg, flags);
    let expr = &p.principal().expr;
    let mut report = find_minimal_interval(expr, &g, spec.side, &opts)?;
    let mut out_rec = MinimalOutput { report: report.clone(), rho_certified: None, approximating: None };
    if let Some(iv) = report.interval {
        if let Some(r) = rho_minimality(expr, &g, iv, &opts)? {
            report.rho = Some(r.rho);
            out_rec.rho_certified = Some(r.certified);
        }
        out_rec.approximating = Some(approximating_sequence(expr, &g, iv, spec.approx_count, &opts)?);
    }
    out_rec.report = report;
    let path = write_json(out, "minimal.json", &out_rec)?;
    let r = &out_rec.report;
    match (r.interval, r.l_estimate) {
        (Some((a, b)), Some(l)) => Ok(Outcome {
            artifacts: vec![path],
            summary: format!("minimal interval [{a:.6}, {b:.6}], L = {l:.6}, side {:?}, rho {:?}", r.side.unwrap_or(0), r.rho),
        }),
        _ => Err(CliError::Inconclusive(format!(
            "no strong sign change on curves near gamma; report written to {}",
            path.display()
        ))),
    }
}

fn minimality_options(spec: &MinimalSpec, c: &CurveSpec, cfg: &RunConfig, flags: &Flags) -> MinimalityOptions {
    MinimalityOptions {
        eps0: spec.eps0,
        k_max: spec.k_max,
        direction: c.direction.clone(),
        sign: sign_options(flags),
        tol_l: None,
        rho_grid: spec.rho_grid,
        seed: flags.seed.or(cfg.seed).unwrap_or(7),
    }
}

#[derive(Debug, Serialize)]
struct FirstCoefficient {
    index: OrderedIndex,
    value: Complex64,
}

#[derive(Debug, Serialize)]
struct FactorOutput {
    result: FactorizationResult,
    max_residual: f64,
    tol: f64,
    first_nonvanishing: Option<FirstCoefficient>,
}

fn factor(cfg: &RunConfig, flags: &Flags, out: &Path) -> Result<Outcome, CliError> {
    let spec = cfg.factor.as_ref().ok_or_else(|| CliError::schema("missing 'factor' section"))?;
    check_len("factor.x0", &spec.x0, cfg.n)?;
    check_len("factor.xi0", &spec.xi0, cfg.n)?;
    let p = cfg.symbol(&spec.p)?;
    let q = cfg.symbol(&spec.q)?;
    let result = factor_at(&q, &p, &spec.x0, &spec.xi0, spec.depth, spec.order)?;
    let tol = flags.tol.unwrap_or(DEFAULT_TOL);
    let first = result.first_nonvanishing_r(tol)?.map(|(index, value)| FirstCoefficient { index, value });
    let summary = match &first {
        Some(f) => format!(
            "first nonvanishing coefficient of R at (j, k, alpha, beta) = ({}, {}, {:?}, {:?}): {:.6e}",
            f.index.j, f.index.k, f.index.alpha, f.index.beta, f.value
        ),
        None => format!("R vanishes to the computed order (tol {tol:e})"),
    };
    let rec = FactorOutput { max_residual: result.max_residual(), result, tol, first_nonvanishing: first };
    Ok(Outcome { artifacts: vec![write_json(out, "factor.json", &rec)?], summary })
}

fn check_len(what: &str, v: &[f64], n: usize) -> Result<(), CliError> {
    if v.len() != n {
        return Err(CliError::schema(format!("{what} has length {}, expected {n}", v.len())));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct WkbOutput {
    m: usize,
    t: f64,
    eiconal: EiconalFit,
    expected_slope: f64,
    min_pd_margin: f64,
    symmetry_defect: f64,
    transport: Option<AmplitudeSet>,
}

fn wkb(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let spec = cfg.wkb.as_ref().ok_or_else(|| CliError::schema("missing 'wkb' section"))?;
    let n = cfg.n;
    if n < 2 {
        return Err(CliError::schema("wkb needs n >= 2"));
    }
    check_len("wkb.x0", &spec.x0, n - 1)?;
    check_len("wkb.xi0", &spec.xi0, n - 1)?;
    let f = parse_expression(&spec.f, n)?;
    let opts = PhaseOptions { m: spec.m, samples: spec.samples, ..Default::default() };
    let phase = solve_phase_system(&f, n, &spec.x0, &spec.xi0, spec.t_span, &opts)?;
    let t = spec.t.unwrap_or(phase.t_mid);
    let fit = eiconal_slope(&phase, &f, t, &spec.hs)?;
    let transport = match &spec.beta0 {
        Some(b) => {
            let lower = spec.lower.as_deref().map(|s| parse_expression(s, n)).transpose()?;
            let mut o = TransportOptions::new(n - 1);
            o.beta0 = b.clone();
            Some(solve_transport(&f, lower.as_ref(), &phase, &o)?)
        }
        None => None,
    };
    let mut csv = String::from("t");
    for k in 0..n - 1 {
        csv.push_str(&format!(",y{},eta{}", k + 2, k + 2));
    }
    csv.push_str(",re_w0,im_w0,pd_margin\n");
    for (i, tt) in phase.t_grid.iter().enumerate() {
        csv.push_str(&format!("{tt:.10}"));
        for k in 0..n - 1 {
            csv.push_str(&format!(",{:.12e},{:.12e}", phase.y[i][k], phase.eta[i][k]));
        }
        csv.push_str(&format!(",{:.12e},{:.12e},{:.12e}\n", phase.w0[i].re, phase.w0[i].im, phase.pd_margin[i]));
    }
    let rec = WkbOutput {
        m: spec.m,
        t,
        expected_slope: spec.m as f64 + 1.0,
        min_pd_margin: phase.min_pd_margin(),
        symmetry_defect: phase.symmetry_defect(),
        eiconal: fit,
        transport,
    };
    let summary = format!(
        "eiconal residual slope {:.3} (expected {}), min PD margin {:.3e}",
        rec.eiconal.slope, rec.expected_slope, rec.min_pd_margin
    );
    Ok(Outcome { artifacts: vec![write_json(out, "wkb.json", &rec)?, write_text(out, "phase.csv", &csv)?], summary })
}

/// Powers of two from `lo` to `hi`, both rounded to the nearest power.
fn tau_grid(lo: f64, hi: f64) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi > lo) {
        return Err(CliError::schema(format!("need 0 < tau-min < tau-max, got {lo} and {hi}")));
    }
    let a = lo.log2().round() as i32;
    let b = hi.log2().round() as i32;
    Ok((a..=b).map(|k| 2f64.powi(k)).collect())
}

#[derive(Debug, Serialize)]
struct ITauOutput {
    window: ProbeWindow,
    radius: f64,
    big_n: i32,
    beta0: Option<Vec<u8>>,
    report: AsymptoticReport,
}

fn itau(cfg: &RunConfig, flags: &Flags, out: &Path) -> Result<Outcome, CliError> {
    let spec = cfg.itau.as_ref().ok_or_else(|| CliError::schema("missing 'itau' section"))?;
    let n = cfg.n;
    let rstar = match (&spec.rstar, &spec.r) {
        (Some(name), _) => cfg.symbol(name)?.with_tangential(true),
        (None, Some(name)) => adjoint_symbol(&cfg.symbol(name)?.with_tangential(true), spec.options.depth)?,
        (None, None) => return Err(CliError::schema("itau: one of 'r' or 'rstar' is required")),
    };
    let mut taus = spec.taus.clone();
    if flags.tau_min.is_some() || flags.tau_max.is_some() {
        let lo = flags.tau_min.unwrap_or(taus[0]);
        let hi = flags.tau_max.unwrap_or(*taus.last().unwrap_or(&lo));
        taus = tau_grid(lo, hi)?;
    }
    let window = spec.window.clone().unwrap_or_else(|| ProbeWindow::standard(n));
    if window.n() != n {
        return Err(CliError::schema(format!("itau.window has dimension {}, expected {n}", window.n())));
    }
    let big_n = spec.big_n.unwrap_or(-(n as i32));
    let values = taus
        .par_iter()
        .map(|&tau| {
            let (v, _) = model_solution(tau, n, spec.radius, big_n, None, spec.amplitude_order)?;
            Ok(compute_i_tau_adjoint(&rstar, &v, &window, &spec.options)?)
        })
        .collect::<Result<Vec<Complex64>, CliError>>()?;
    let predicted = match &spec.beta0 {
        Some(b) => {
            if b.len() + 1 != n {
                return Err(CliError::schema(format!("itau.beta0 has length {}, expected {}", b.len(), n - 1)));
            }
            // the limit formula assumes the unit prefactor tau^(N+n) = 1
            let lift = (big_n + n as i32) as f64;
            if lift != 0.0 {
                return Err(CliError::schema("itau: the predicted limit needs big_n = -n"));
            }
            Some(predicted_limit(&rstar, b, &window, spec.m, &LimitWeights::model(n), spec.limit_points)?)
        }
        None => None,
    };
    let report = decay_fit(&taus, &values, spec.m, predicted)?;
    let rec = ITauOutput { window, radius: spec.radius, big_n, beta0: spec.beta0.clone(), report };
    let artifacts = vec![write_json(out, "itau.json", &rec)?, write_text(out, "itau.csv", &rec.report.to_csv())?];
    let r = &rec.report;
    let mut summary = format!(
        "verdict {:?}: slope {:.3}, R^2 {:.4}, extrapolated {:.6e}",
        r.verdict, r.fitted_slope, r.r_squared, r.extrapolated_limit
    );
    if let (Some(p), Some(e)) = (r.predicted_limit, r.relative_error) {
        summary.push_str(&format!(", predicted {p:.6e}, relative error {e:.3e}"));
    }
    match r.verdict {
        Verdict::Inconclusive => Err(CliError::Inconclusive(summary)),
        _ => Ok(Outcome { artifacts, summary }),
    }
}

fn fixtures(flags: &Flags, out: &Path) -> Result<Outcome, CliError> {
    let names: Vec<String> = if flags.names.is_empty() { vec!["p1".into(), "p2".into()] } else { flags.names.clone() };
    let mut symbols = Vec::new();
    for name in &names {
        let s = fixture(name, 2).ok_or_else(|| CliError::schema(format!("unknown fixture '{name}'")))?;
        symbols.push((name.clone(), s.principal().expr.clone()));
    }
    let tol = flags.tol.unwrap_or(0.0);
    let grids = symbols
        .par_iter()
        .map(|(name, e)| Ok((name.clone(), sign_grid(e, 2, GRID_X1, GRID_X2, &[], &[1.0], tol)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let axis = |r: (f64, f64, usize)| -> Vec<f64> { (0..r.2).map(|i| r.0 + (r.1 - r.0) * i as f64 / (r.2 - 1) as f64).collect() };
    let (x1, x2) = (axis(GRID_X1), axis(GRID_X2));
    let mut artifacts = Vec::new();
    let mut counts = Vec::new();
    for (name, rows) in &grids {
        artifacts.push(write_text(out, &format!("fixture_{name}.csv"), &sign_grid_csv(&x1, &x2, rows))?);
        let title = format!("sign of Im {name} at xi = (0, 1)");
        let svg = sign_grid_svg(&title, (GRID_X1.0, GRID_X1.1), (GRID_X2.0, GRID_X2.1), rows);
        artifacts.push(write_text(out, &format!("fixture_{name}.svg"), &svg)?);
        let mut c = [0usize; 3];
        for v in rows.iter().flatten() {
            c[(*v + 1) as usize] += 1;
        }
        counts.push(format!("{name}: {} negative, {} zero, {} positive", c[0], c[1], c[2]));
    }
    Ok(Outcome { artifacts, summary: counts.join("; ") })
}

#[derive(Debug, Serialize)]
struct ProportionalityOutput {
    report: ProportionalityReport,
}

fn run_proportionality(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let spec = cfg.proportionality.as_ref().ok_or_else(|| CliError::schema("missing 'proportionality' section"))?;
    check_len("proportionality.x0", &spec.x0, cfg.n)?;
    check_len("proportionality.xi0", &spec.xi0, cfg.n)?;
    let p = cfg.symbol(&spec.p)?;
    let q = cfg.symbol(&spec.q)?;
    let report = proportionality(&p, &q, &spec.x0, &spec.xi0)?;
    let summary = format!(
        "mu = {:.10}, proportional: {} (principal residual {:.2e}, gradient residual {:.2e})",
        report.mu, report.proportional, report.principal_residual, report.gradient_residual
    );
    Ok(Outcome { artifacts: vec![write_json(out, "proportionality.json", &ProportionalityOutput { report })?], summary })
}

#[derive(Debug, Serialize)]
struct CommutatorOutput {
    pass: bool,
    points: Vec<CommutatorPoint>,
}

fn commutator(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let spec = cfg.commutator.as_ref().ok_or_else(|| CliError::schema("missing 'commutator' section"))?;
    let p = cfg.symbol(&spec.p)?;
    let q = cfg.symbol(&spec.q)?;
    let mu = spec.mu.as_deref().map(|s| parse_expression(s, cfg.n)).transpose()?;
    let mut pts = Vec::with_capacity(spec.points.len());
    for (i, pt) in spec.points.iter().enumerate() {
        check_len(&format!("commutator.points[{i}].x"), &pt.x, cfg.n)?;
        check_len(&format!("commutator.points[{i}].xi"), &pt.xi, cfg.n)?;
        pts.push((pt.x.clone(), pt.xi.clone()));
    }
    let points = commutator_test(&p.principal().expr, &q.principal().expr, cfg.n, &pts, spec.m_max, mu.as_ref())?;
    let pass = points.iter().all(|p| p.pass);
    let ok = points.iter().filter(|p| p.pass).count();
    let summary = format!("commutator test: {ok} of {} points pass", points.len());
    Ok(Outcome { artifacts: vec![write_json(out, "commutator.json", &CommutatorOutput { pass, points })?], summary })
}
