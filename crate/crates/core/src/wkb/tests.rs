use num_complex::Complex64;

use super::*;
use crate::ode::{integrate, OdeOptions};
use crate::symexpr::{differentiate, evaluate, parse_expression, Expr, Var};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn ex(s: &str, n: usize) -> Expr {
    parse_expression(s, n).unwrap()
}

fn opts(m: usize) -> PhaseOptions {
    PhaseOptions { m, samples: 81, ..Default::default() }
}

#[test]
fn zero_field_keeps_everything_fixed() {
    let f = Expr::zero();
    let ph = solve_phase_system(&f, 3, &[0.2, -0.1], &[1.0, 0.5], (-1.0, 1.0), &opts(4)).unwrap();
    for i in 0..ph.t_grid.len() {
        let st = ph.state(i);
        assert_eq!(st.y, vec![0.2, -0.1]);
        assert_eq!(st.eta, vec![1.0, 0.5]);
        assert_eq!(st.w0, Complex64::new(0.0, 0.0));
        for j in 0..2 {
            for k in 0..2 {
                let want = if j == k { I } else { Complex64::new(0.0, 0.0) };
                assert_eq!(st.w_jk(j, k), want);
            }
        }
        for (a, w) in ph.alphas.iter().zip(&ph.w_alpha[i]) {
            if a.iter().map(|&v| v as usize).sum::<usize>() > 2 {
                assert_eq!(*w, Complex64::new(0.0, 0.0));
            }
        }
    }
    assert!((ph.min_pd_margin() - 0.5).abs() < 1e-15);
    assert_eq!(ph.symmetry_defect(), 0.0);
}

#[test]
fn linear_field_matches_reference() {
    // f = x xi in one tangential variable with M = 2:
    // w2' = 2 i w2, y' = -(eta + y Re w2) / Im w2, eta' = Re w2 y' - y Im w2,
    // w0' = y' eta + i y eta.
    let f = ex("x2*xi2", 2);
    let (x0, xi0) = (0.3, 1.0);
    let ph = solve_phase_system(&f, 2, &[x0], &[xi0], (-0.4, 0.4), &opts(2)).unwrap();
    let tight = OdeOptions { abs_tol: 1e-13, rel_tol: 1e-12, ..Default::default() };
    let rhs = |t: f64, s: &[f64], ds: &mut [f64]| {
        let w2 = I * (I * 2.0 * t).exp();
        let (y, eta) = (s[0], s[1]);
        let dy = -(eta + y * w2.re) / w2.im;
        ds[0] = dy;
        ds[1] = w2.re * dy - y * w2.im;
        ds[2] = dy * eta;
        ds[3] = y * eta;
        Ok(())
    };
    for (i, &t) in ph.t_grid.iter().enumerate() {
        let tr = integrate(rhs, 0.0, &[x0, xi0, 0.0, 0.0], t, &tight, |_, _| Ok(())).unwrap();
        let r = tr.last();
        let st = ph.state(i);
        assert!((st.y[0] - r[0]).abs() < 1e-8, "y at {t}");
        assert!((st.eta[0] - r[1]).abs() < 1e-8, "eta at {t}");
        assert!((st.w0 - Complex64::new(r[2], r[3])).norm() < 1e-8, "w0 at {t}");
        assert!((st.w_jk(0, 0) - I * (I * 2.0 * t).exp()).norm() < 1e-8);
    }
}

#[test]
fn positive_definiteness_loss_aborts() {
    // Im w2 = cos 2t drops below 1/2 at |t| = pi/6
    let f = ex("x2*xi2", 2);
    let err = solve_phase_system(&f, 2, &[0.0], &[1.0], (-1.0, 1.0), &opts(2)).unwrap_err();
    match err {
        WkbError::PositiveDefinitenessLost { t, .. } => assert!((t.abs() - std::f64::consts::PI / 6.0).abs() < 0.05),
        e => panic!("unexpected {e}"),
    }
}

fn generic_f() -> Expr {
    ex("0.3*x1*xi2 + x2^2*xi3 + 0.4*x3*xi2^2 + 0.2*xi2*xi3 + 0.5*x2*x3*xi2 + 0.1*xi3^3/normXiPrime^2", 3)
}

#[test]
fn eiconal_residual_order() {
    let f = generic_f();
    for m in [2usize, 3] {
        let ph = solve_phase_system(&f, 3, &[0.1, -0.2], &[0.6, 0.8], (-0.2, 0.2), &opts(m)).unwrap();
        assert!(ph.min_pd_margin() > 0.0);
        let fit = eiconal_slope(&ph, &f, 0.1, &[0.1, 0.05, 0.025]).unwrap();
        let want = (m + 1) as f64;
        assert!((fit.slope - want).abs() <= 0.3, "M = {m}: slope {} residuals {:?}", fit.slope, fit.residuals);
    }
    let ph = solve_phase_system(&Expr::zero(), 3, &[0.0, 0.0], &[0.0, 1.0], (-0.3, 0.3), &opts(3)).unwrap();
    assert_eq!(eiconal_residual(&ph, &Expr::zero(), 0.1, 0.1, 4).unwrap(), 0.0);
}

#[test]
fn normalize_point_mode() {
    let f = ex("x1*xi2", 2);
    let ph = solve_phase_system(&f, 2, &[0.0], &[1.0], (-1.0, 1.0), &opts(3)).unwrap();
    let (out, info) = normalize_w0(&ph, NormalizeMode::Point, 0.0).unwrap();
    assert!(info.c_prime.abs() < 0.03);
    assert!(info.endpoint_im.0 > 0.1 && info.endpoint_im.1 > 0.1);
    assert!(out.w0.iter().all(|w| w.im >= 0.0));
    let i = out.t_grid.iter().position(|&t| t == info.c_prime).unwrap();
    assert_eq!(out.w0[i], Complex64::new(0.0, 0.0));

    let pos = ex("xi2", 2);
    let ph = solve_phase_system(&pos, 2, &[0.0], &[1.0], (-1.0, 1.0), &opts(2)).unwrap();
    assert!(matches!(normalize_w0(&ph, NormalizeMode::Point, 0.0), Err(WkbError::NoInteriorMinimum)));
}

#[test]
fn flat_field_gives_flat_w0() {
    let f = crate::symbol::p2_im();
    let ph = solve_phase_system(&f, 2, &[0.5], &[1.0], (-0.6, 2.6), &opts(3)).unwrap();
    let (out, info) = normalize_w0(&ph, NormalizeMode::Interval, 1e-13).unwrap();
    assert!(info.core.0 < 0.1 && info.core.1 > 1.9, "{:?}", info.core);
    for (t, w) in out.t_grid.iter().zip(&out.w0) {
        if (0.1..=1.9).contains(t) {
            assert!(w.norm() < 1e-12, "w0({t}) = {w}");
        }
        assert!(w.im >= -1e-15);
    }
    assert!(info.endpoint_im.0 > 0.0 && info.endpoint_im.1 > 0.0);
}

#[test]
fn transport_trivial_and_prescribed() {
    let f = Expr::zero();
    let ph = solve_phase_system(&f, 3, &[0.0, 0.0], &[0.0, 1.0], (-1.0, 1.0), &opts(3)).unwrap();
    let mut o = TransportOptions::new(2);
    o.beta0 = vec![1, 1];
    o.t0 = Some(-0.2);
    let amp = solve_transport(&f, None, &ph, &o).unwrap();
    for p in &amp.coeffs {
        // z1 z2 with coefficient i^2 / 1
        assert!((p.coeff(&[1, 1]) + 1.0).norm() < 1e-15);
        assert!(p.max_abs_upto(2) <= 1.0);
    }
    let mut o = TransportOptions::new(2);
    o.beta0 = vec![0, 0];
    let amp = solve_transport(&f, None, &ph, &o).unwrap();
    assert!((amp.value(ph.t_mid, &[0.0, 0.0]).unwrap() - 1.0).norm() < 1e-15);
    o.beta0 = vec![3, 0];
    assert!(matches!(solve_transport(&f, None, &ph, &o), Err(WkbError::Prescription(..))));
}

#[test]
fn transport_planted_diagonal() {
    let f = Expr::zero();
    let ph = solve_phase_system(&f, 2, &[0.0], &[1.0], (-1.0, 1.0), &opts(3)).unwrap();
    // c = i (0.5 + t) gives phi' = (0.5 + t) phi
    let lower = ex("i*(0.5 + x1)", 2);
    let mut o = TransportOptions::new(1);
    o.beta0 = vec![1];
    o.t0 = Some(0.25);
    let amp = solve_transport(&f, Some(&lower), &ph, &o).unwrap();
    for (t, p) in amp.t_grid.iter().zip(&amp.coeffs) {
        let g = 0.5 * (t - 0.25) + 0.5 * (t * t - 0.0625);
        let want = I * g.exp();
        assert!((p.coeff(&[1]) - want).norm() < 1e-9, "t = {t}");
        assert!(p.coeff(&[0]).norm() < 1e-15 && p.coeff(&[2]).norm() < 1e-15);
    }
}

#[test]
fn transport_kills_first_order_term() {
    // P = D1 + i x1 D2: the conjugated operator at order tau^0 applied to
    // e^{i tau w} phi_0 vanishes to the truncation order along the curve.
    let f = ex("x1*xi2", 2);
    let m = 4;
    let ph = solve_phase_system(&f, 2, &[0.1], &[1.0], (-0.3, 0.3), &opts(m)).unwrap();
    let mut o = TransportOptions::new(1);
    o.beta0 = vec![1];
    let amp = solve_transport(&f, None, &ph, &o).unwrap();
    // D_t phi - x1 D_x phi ... evaluated by finite differences at t = 0.1
    let t = 0.1;
    let st = ph.state_at(t).unwrap();
    let phi = |t: f64, x: f64| {
        let s = ph.state_at(t).unwrap();
        amp.value(t, &[x - s.y[0]]).unwrap()
    };
    for h in [0.02, 0.01] {
        let x = st.y[0] + h;
        let e = 1e-5;
        let dt = (phi(t + e, x) - phi(t - e, x)) / (2.0 * e);
        let dx = (phi(t, x + e) - phi(t, x - e)) / (2.0 * e);
        // transport operator for a = xi1 - i t xi2: D_t phi - i t D_x phi
        let r = -I * dt - I * t * (-I * dx);
        assert!(r.norm() < 1e-5, "h = {h}: {r}");
    }
}

#[test]
fn model_phase_properties() {
    assert_eq!(model_phase(&[0.0, 0.0]), Complex64::new(0.0, 0.0));
    let g = model_gradient(&[0.0, 0.0, 0.0]);
    assert_eq!(g.iter().map(|c| c.re).collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
    let w = ex("x2 + i*(x1^2 + (x2 + i*x1^2/2)^2)/2", 2);
    let pw = differentiate(&w, Var::X(0)).scale(-I).sub(&Expr::x(0).mul(&differentiate(&w, Var::X(1))));
    for x in [[0.3, -0.7], [1.1, 0.4], [-0.5, 0.25]] {
        assert!(evaluate(&pw, &x, &[0.0, 0.0]).unwrap().norm() < 1e-14);
        assert!((evaluate(&w, &x, &[0.0, 0.0]).unwrap() - model_phase(&x)).norm() < 1e-14);
    }
    let c = check_model(2, 0.5);
    assert!(c.min_margin_ratio > 0.0 && c.min_grad_re > 0.5);
    assert!(matches!(model_solution(1.0, 2, 1.5, 0, None, 4), Err(WkbError::RadiusTooLarge { .. })));
}

#[test]
fn ck_recursion() {
    let one = TPoly::constant(2, 0, Complex64::new(1.0, 0.0));
    let phi = solve_ck_amplitude(&one, 8);
    assert_eq!(phi.coeff(&[0, 0]), Complex64::new(1.0, 0.0));
    assert_eq!(phi.max_abs_upto(8), 1.0);

    let xn = TPoly::monomial(2, 1, &[0, 1], Complex64::new(1.0, 0.0));
    let phi = solve_ck_amplitude(&xn, 8);
    assert_eq!(phi.coeff(&[0, 1]), Complex64::new(1.0, 0.0));
    assert_eq!(phi.coeff(&[2, 0]), I * 0.5);
    assert_eq!(ck_residual(&phi).max_abs_upto(8), 0.0);

    let init = {
        let mut p = TPoly::monomial(3, 3, &[0, 1, 2], Complex64::new(0.5, 0.0));
        p.add_assign(&TPoly::monomial(3, 3, &[0, 0, 3], Complex64::new(0.0, 2.0)));
        p
    };
    let phi = solve_ck_amplitude(&init, 9);
    assert_eq!(ck_residual(&phi).max_abs_upto(8), 0.0);
    for pos in 0..phi.len() {
        let a = phi.index(pos);
        if a[0] == 0 {
            assert_eq!(phi.coeffs()[pos], init.coeff(a));
        }
    }
}

#[test]
fn assemble_model_samples() {
    let (sol, _) = model_solution(64.0, 2, 0.5, 1, None, 8).unwrap();
    let grid = GridSpec::cube(&[0.0, 0.0], 0.6, 96).unwrap();
    let v = assemble_v(&sol, &grid).unwrap();
    let pref = 64f64.powi(3);
    let origin = (0..grid.len()).find(|&i| grid.point(i).iter().all(|v| v.abs() < 1e-12)).unwrap();
    assert!((v.data[origin].norm() - pref).abs() < 1e-9 * pref);
    for (i, val) in v.data.iter().enumerate() {
        let x = grid.point(i);
        let bound = pref * (-64.0 * model_phase(&x).im).exp() * (1.0 + 1e-12);
        assert!(val.norm() <= bound);
    }
    let bytes = v.to_bytes();
    assert_eq!(GridFunction::from_bytes(&bytes).unwrap(), v);
    assert!(GridFunction::from_bytes(&bytes[..bytes.len() - 3]).is_err());

    let coarse = GridSpec::cube(&[0.0, 0.0], 0.6, 16).unwrap();
    assert!(matches!(assemble_v(&sol.with_tau(512.0), &coarse), Err(WkbError::GridTooCoarse { axis: 1, .. })));
}

#[test]
fn assemble_expansion_samples() {
    let f = ex("x1*xi2", 2);
    let ph = solve_phase_system(&f, 2, &[0.0], &[1.0], (-0.4, 0.4), &opts(3)).unwrap();
    let (ph, _) = normalize_w0(&ph, NormalizeMode::Point, 0.0).unwrap();
    let amp = solve_transport(&f, None, &ph, &TransportOptions::new(1)).unwrap();
    let sol = ApproxSolution {
        n: 2,
        tau: 8.0,
        big_n: -2,
        radius: 0.4,
        kind: SolutionKind::Expansion { phase: ph.clone(), amplitudes: amp, t_range: (-0.4, 0.4) },
    };
    let grid = GridSpec::cube(&[0.0, 0.0], 0.5, 32).unwrap();
    let v = assemble_v(&sol, &grid).unwrap();
    assert!(v.data.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    assert!((sol.value(&[0.0, 0.0]).unwrap() - 1.0).norm() < 1e-9);
    let json = serde_json::to_string(&sol).unwrap();
    let back: ApproxSolution = serde_json::from_str(&json).unwrap();
    assert_eq!(back.value(&[0.1, 0.05]).unwrap(), sol.value(&[0.1, 0.05]).unwrap());
}
