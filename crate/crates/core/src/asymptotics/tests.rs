use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::*;
use crate::symbol::{adjoint_symbol, ClassicalSymbol};
use crate::symexpr::{parse_expression, Expr};
use crate::wkb::{assemble_v, model_solution, GridFunction, GridSpec, TPoly};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sym(n: usize, top: i32, terms: &[&str]) -> ClassicalSymbol {
    let exprs = terms.iter().map(|t| parse_expression(t, n).unwrap()).collect();
    ClassicalSymbol::from_exprs(n, top, exprs).unwrap().with_tangential(true)
}

fn model(tau: f64, radius: f64) -> crate::wkb::ApproxSolution {
    model_solution(tau, 2, radius, -2, None, 4).unwrap().0
}

#[test]
fn sobolev_zero_and_parseval() {
    let spec = GridSpec::cube(&[0.0], 10.0, 256).unwrap();
    let zero = GridFunction::from_fn(spec.clone(), |_| c(0.0, 0.0));
    assert_eq!(sobolev_norm(&zero, 1.0).unwrap(), 0.0);
    let g = GridFunction::from_fn(spec.clone(), |x| c((-x[0] * x[0]).exp(), 0.0));
    let direct = (spec.cell_volume() * g.data.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt();
    assert!((sobolev_norm(&g, 0.0).unwrap() - direct).abs() < 1e-12 * direct);
}

#[test]
fn sobolev_gaussian_closed_form() {
    let spec = GridSpec::cube(&[0.0], 12.0, 512).unwrap();
    let g = GridFunction::from_fn(spec, |x| c((-0.5 * x[0] * x[0]).exp(), 0.0));
    let want = (1.5 * PI.sqrt()).sqrt();
    assert!((sobolev_norm(&g, 1.0).unwrap() - want).abs() < 1e-6);
    let mut last = 0.0;
    for s in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
        let v = sobolev_norm(&g, s).unwrap();
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn sobolev_support_violation() {
    let spec = GridSpec::cube(&[0.0], 1.0, 64).unwrap();
    let g = GridFunction::from_fn(spec, |x| c((-x[0] * x[0]).exp(), 0.0));
    assert!(matches!(sobolev_norm(&g, 0.0), Err(AsymptoticsError::SupportViolation { .. })));
}

#[test]
fn window_quadrature_converges() {
    let w = ProbeWindow::standard(2);
    assert_eq!(bump(1.0), 0.0);
    assert!(bump(0.999) < 1e-200);
    let a = w.rule(24, 4).integrate(|y| Ok::<_, ()>(c(w.value(y), 0.0))).unwrap();
    let b = w.rule(48, 4).integrate(|y| Ok::<_, ()>(c(w.value(y), 0.0))).unwrap();
    assert!((a - b).norm() < 1e-12 * b.norm());
    let h = w.h_tau(4.0, &[0.3 / 4.0, 0.2 / 4.0]);
    assert!((h - 4f64.powi(-2) * w.value(&[0.3, 0.2])).abs() < 1e-15);
}

#[test]
fn apply_identity_and_first_term() {
    let v = model(64.0, 1.0);
    let grid = GridSpec::cube(&[0.0, 0.0], 1.05, 64).unwrap();
    let base = assemble_v(&v, &grid).unwrap();
    let one = sym(2, 0, &["1"]);
    let out = apply_symbol_gaussian(&one, &v, 4, &grid).unwrap();
    for (a, b) in out.data.iter().zip(&base.data) {
        assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
    }
    let xi = sym(2, 1, &["xi2"]);
    let lead = apply_symbol_gaussian(&xi, &v, 1, &grid).unwrap();
    for (a, b) in lead.data.iter().zip(&base.data) {
        assert!((a - b * 64.0).norm() <= 1e-10 * (1.0 + b.norm()));
    }
    // two terms are exact for a first order operator: D_x (phi e^{i tau w})
    let full = apply_symbol_gaussian(&xi, &v, 2, &grid).unwrap();
    for i in (0..grid.len()).step_by(97) {
        let x = grid.point(i);
        if v.cutoff_factor(&x).unwrap() < 1.0 {
            continue;
        }
        let g = crate::wkb::model_gradient(&x);
        let want = base.data[i] * g[1] * 64.0;
        assert!((full.data[i] - want).norm() <= 1e-9 * (1.0 + want.norm()));
    }
}

#[test]
fn apply_matches_fft_quantization() {
    let tau = 256.0;
    let v = model(tau, 1.2);
    let points = 512;
    let grid = GridSpec::cube(&[0.0, 0.0], 1.3, points).unwrap();
    let base = assemble_v(&v, &grid).unwrap();
    let q = sym(2, 1, &["x1*xi2"]);
    let out = apply_symbol_gaussian(&q, &v, 3, &grid).unwrap();
    let h = grid.spacing()[1];
    let fft = FftPlanner::new().plan_fft_forward(points);
    let ifft = FftPlanner::new().plan_fft_inverse(points);
    let mut err = 0.0;
    let mut norm = 0.0;
    for row in 0..points {
        let t = grid.point(row * points)[0];
        let mut line: Vec<Complex64> = base.data[row * points..(row + 1) * points].to_vec();
        fft.process(&mut line);
        for (k, z) in line.iter_mut().enumerate() {
            let s = if k < points / 2 { k as f64 } else { k as f64 - points as f64 };
            *z *= 2.0 * PI * s / (points as f64 * h) / points as f64;
        }
        ifft.process(&mut line);
        for (k, z) in line.iter().enumerate() {
            let want = z * t;
            err += (out.data[row * points + k] - want).norm_sqr();
            norm += want.norm_sqr();
        }
    }
    let rel = (err / norm).sqrt();
    assert!(rel < 1.0 / tau.sqrt(), "relative error {rel}");
    assert!(rel < 1e-8, "relative error {rel}");
}

#[test]
fn lambda_profiles() {
    let v = model(1.0, 1.0);
    let zero = sym(2, 1, &["0", "0"]);
    let l = lambda_profile(&zero, &v, 0, 4).unwrap();
    assert_eq!(l.eval(&[0.1, 0.2]).unwrap(), c(0.0, 0.0));
    let xi = sym(2, 1, &["xi2"]);
    let l = lambda_profile(&xi, &v, -1, 4).unwrap();
    for x in [[0.0, 0.0], [0.1, -0.2], [0.3, 0.05]] {
        let phi = v.amplitude(&x).unwrap();
        let want = crate::wkb::model_gradient(&x)[1] * phi;
        assert!((l.eval(&x).unwrap() - want).norm() < 1e-12);
    }
    assert!((l.eval(&[0.0, 0.0]).unwrap() - 1.0).norm() < 1e-14);
    let q0 = sym(2, 1, &["0", "2 - i"]);
    let l = lambda_profile(&q0, &v, 0, 4).unwrap();
    let x = [0.2, 0.1];
    assert!((l.eval(&x).unwrap() - c(2.0, -1.0) * v.amplitude(&x).unwrap()).norm() < 1e-12);
}

fn taus() -> Vec<f64> {
    (4..=10).map(|k| 2f64.powi(k)).collect()
}

fn i_values(r: &ClassicalSymbol, radius: f64) -> Vec<Complex64> {
    let w = ProbeWindow::standard(2);
    let opts = ITauOptions::default();
    taus().iter().map(|&t| compute_i_tau(r, &model(t, radius), &w, &opts).unwrap()).collect()
}

#[test]
fn i_tau_zero_symbol() {
    let r = sym(2, 1, &["0", "0"]);
    let w = ProbeWindow::standard(2);
    let got = compute_i_tau(&r, &model(32.0, 1.0), &w, &ITauOptions::default()).unwrap();
    assert_eq!(got, c(0.0, 0.0));
}

#[test]
fn i_tau_identity_tends_to_window_pairing() {
    let r = sym(2, 0, &["1"]);
    let w = ProbeWindow::standard(2);
    let limit = predicted_limit(&r, &[0], &w, 0, &LimitWeights::model(2), 48).unwrap();
    let direct = w
        .rule(48, 4)
        .integrate(|y| Ok::<_, ()>(w.value(y) * (I * y[1]).exp()))
        .unwrap();
    assert!((limit - direct).norm() < 1e-12 * direct.norm());
    let vals = i_values(&r, 1.0);
    let report = decay_fit(&taus(), &vals, 0, Some(limit)).unwrap();
    assert!(report.fitted_slope.abs() < 0.1);
    assert_eq!(report.verdict, Verdict::Match);
    assert!(report.relative_error.unwrap() < 1e-3, "{report:?}");
}

#[test]
fn scaled_and_unscaled_pairings_agree() {
    let rstar = sym(2, 1, &["x1*xi2", "x2"]);
    let w = ProbeWindow::standard(2);
    let opts = ITauOptions::default();
    let v = model(32.0, 1.0);
    let a = compute_i_tau_adjoint(&rstar, &v, &w, &opts).unwrap();
    let b = compute_i_tau_unscaled(&rstar, &v, &w, &opts).unwrap();
    assert!((a - b).norm() < 1e-10 * a.norm(), "{a} {b}");
}

#[test]
fn adjoint_round_trip_in_pairing() {
    // R = (R*)*, so passing R reproduces the pairing of R*
    let rstar = sym(2, 1, &["(1 + x1) * xi2", "x2"]);
    let r = adjoint_symbol(&rstar, 3).unwrap();
    let w = ProbeWindow::standard(2);
    let opts = ITauOptions::default();
    let v = model(64.0, 1.0);
    let a = compute_i_tau(&r, &v, &w, &opts).unwrap();
    let b = compute_i_tau_adjoint(&rstar.padded(3), &v, &w, &opts).unwrap();
    assert!((a - b).norm() < 1e-10 * b.norm());
}

#[test]
fn window_too_wide() {
    let r = sym(2, 0, &["1"]);
    let w = ProbeWindow::standard(2);
    let err = compute_i_tau(&r, &model(2.0, 0.5), &w, &ITauOptions::default());
    assert!(matches!(err, Err(AsymptoticsError::WindowTooWide { .. })));
}

#[test]
fn predicted_limit_cases() {
    let w = ProbeWindow::standard(2);
    let lw = LimitWeights::model(2);
    let zero = sym(2, 1, &["0", "0", "0"]);
    assert_eq!(predicted_limit(&zero, &[0], &w, 1, &lw, 32).unwrap(), c(0.0, 0.0));
    let pair = |f: &dyn Fn(&[f64]) -> f64| {
        w.rule(48, 4).integrate(|y| Ok::<_, ()>(w.value(y) * f(y) * (I * y[1]).exp())).unwrap()
    };
    let q1 = sym(2, 1, &["(3 + i) * xi2"]);
    let got = predicted_limit(&q1, &[0], &w, -1, &lw, 48).unwrap();
    assert!((got - c(3.0, 1.0) * pair(&|_| 1.0)).norm() < 1e-12);
    let q0t = sym(2, 1, &["0", "-2 * x1"]).padded(2);
    let got = predicted_limit(&q0t, &[0], &w, 1, &lw, 48).unwrap();
    assert!((got + 2.0 * pair(&|y| y[0])).norm() < 1e-12);
    let shallow = sym(2, 1, &["xi2"]);
    assert!(matches!(
        predicted_limit(&shallow, &[0], &w, 1, &lw, 32),
        Err(AsymptoticsError::DepthInsufficient { .. })
    ));
}

#[test]
fn planted_pipeline_matches_prediction() {
    let rstar = sym(2, 1, &["0", "-2 * x1"]);
    let r = adjoint_symbol(&rstar, 3).unwrap();
    let vals = i_values(&r, 1.0);
    let w = ProbeWindow::standard(2);
    let pred = predicted_limit(&rstar.padded(3), &[0], &w, 1, &LimitWeights::model(2), 48).unwrap();
    let report = decay_fit(&taus(), &vals, 1, Some(pred)).unwrap();
    assert_eq!(report.verdict, Verdict::Match, "{report:?}");
    assert!((report.fitted_slope + 1.0).abs() < 0.1);
}

#[test]
fn planted_order_zero_is_flat() {
    let r = sym(2, 1, &["0", "1.5"]);
    let report = decay_fit(&taus(), &i_values(&r, 1.0), 0, None).unwrap();
    assert!(report.fitted_slope.abs() < 0.1, "{}", report.fitted_slope);
}

#[test]
fn decay_fit_synthetic() {
    let ts = taus();
    let cube: Vec<Complex64> = ts.iter().map(|t| c(t.powi(-3), 0.0)).collect();
    let r = decay_fit(&ts, &cube, 0, None).unwrap();
    assert!((r.fitted_slope + 3.0).abs() < 1e-6);
    assert_eq!(r.verdict, Verdict::Decay);
    let seq: Vec<Complex64> = ts.iter().map(|t| c(2.0 / t * (1.0 + 1.0 / t), 0.0)).collect();
    let r = decay_fit(&ts, &seq, 1, Some(c(2.0, 0.0))).unwrap();
    assert!((r.extrapolated_limit - 2.0).norm() < 1e-3);
    assert_eq!(r.verdict, Verdict::Match);
    let noisy: Vec<Complex64> = [1.0, 1.3, 0.8, 1.25, 0.75, 1.2, 0.85].iter().map(|&v| c(v, 0.0)).collect();
    let r = decay_fit(&ts, &noisy, 0, None).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(r.low_r_squared);
    assert!(decay_fit(&ts[..4], &cube[..4], 0, None).is_err());
}

fn quadratic(a: &[f64]) -> (Expr, Expr) {
    let d = a.len();
    let mut phase = Vec::new();
    let mut sq = Vec::new();
    for (k, &ak) in a.iter().enumerate() {
        phase.push(format!("{ak} * x{}^2 / 2", k + 1));
        sq.push(format!("x{}^2", k + 1));
    }
    let phi = parse_expression(&phase.join(" + "), d).unwrap();
    let u = parse_expression(&format!("exp(-({}) / 2)", sq.join(" + ")), d).unwrap();
    (phi, u)
}

#[test]
fn stationary_phase_gaussian() {
    for a in [vec![2.0, -3.0], vec![2.0, -3.0, 1.5, -2.5]] {
        let (phi, u) = quadratic(&a);
        let x0 = vec![0.0; a.len()];
        let mut errs = Vec::new();
        let lams = [32.0, 64.0, 128.0, 256.0, 512.0];
        for &lam in &lams {
            let sp = stationary_phase(&phi, &u, lam, &x0).unwrap();
            let exact = gaussian_quadratic_exact(&a, lam);
            let rel = (sp.value - exact).norm() / exact.norm();
            assert!(rel < 2.0 / lam, "lambda {lam}: {rel}");
            errs.push((sp.value - exact).norm());
        }
        let lx: Vec<f64> = lams.iter().map(|l: &f64| l.ln()).collect();
        let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let (slope, _) = super::fit::line_fit(&lx, &ly);
        let half = a.len() as f64 / 2.0;
        assert!(slope <= -(half + 0.8), "slope {slope}");
    }
}

#[test]
fn stationary_phase_signature_and_errors() {
    let (phi, u) = quadratic(&[1.0, -1.0]);
    let sp = stationary_phase(&phi, &u, 10.0, &[0.0, 0.0]).unwrap();
    assert_eq!(sp.signature, 0);
    assert!((sp.det.abs() - 1.0).abs() < 1e-10);
    assert!((sp.a0 - c(2.0 * PI, 0.0)).norm() < 1e-10);
    let zero = parse_expression("0", 2).unwrap();
    assert_eq!(stationary_phase(&phi, &zero, 10.0, &[0.0, 0.0]).unwrap().value, c(0.0, 0.0));
    assert!(matches!(stationary_phase(&phi, &u, 10.0, &[0.5, 0.0]), Err(AsymptoticsError::NotCritical(_))));
    let flat = parse_expression("x1^2 / 2", 2).unwrap();
    assert!(matches!(stationary_phase(&flat, &u, 10.0, &[0.0, 0.0]), Err(AsymptoticsError::DegenerateHessian(_))));
}

#[test]
fn norm_slope_control() {
    let spec = GridSpec::cube(&[0.0, 0.0], 6.0, 64).unwrap();
    let g = GridFunction::from_fn(spec, |x| c((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0));
    let fam: Vec<(f64, GridFunction)> = taus().into_iter().map(|t| (t, g.clone())).collect();
    let chk = norm_slope(&fam, -1.0, 0.0).unwrap();
    assert!(chk.slope.abs() < 1e-12);
    assert!(chk.pass);
}

#[test]
fn model_norm_estimates_small() {
    let mut init = TPoly::monomial(2, 4, &[0, 1], c(1.0, 0.0));
    init.coeffs_mut()[0] = c(1.0, 0.0);
    let v = model_solution(16.0, 2, 1.35, -2, Some(&init), 6).unwrap().0;
    let ts = [16.0, 32.0, 64.0, 128.0];
    let rep = verify_norm_estimates(&v, &ts, 128, 2, 1.0, &[2]).unwrap();
    assert!(rep.v_checks[0].slope <= -1.8, "{:?}", rep.v_checks[0]);
    assert!(rep.phase_margin > 0.0);
}
