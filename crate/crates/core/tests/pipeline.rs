use num_complex::Complex64;
use proptest::prelude::*;

use psiwork::asymptotics::{
    compute_i_tau, decay_fit, predicted_limit, sobolev_norm, AsymptoticReport, ITauOptions, LimitWeights, ProbeWindow,
    Verdict,
};
use psiwork::bichar::{find_minimal_interval, Bicharacteristic, MinimalityOptions, MinimalityReport};
use psiwork::factor::{factor_at, FactorizationResult};
use psiwork::symbol::{adjoint_symbol, compose_symbols, model2d, p2, ClassicalSymbol};
use psiwork::symexpr::{evaluate, parse_expression};
use psiwork::wkb::{model_solution, GridFunction, GridSpec};

fn sym(n: usize, top: i32, terms: &[&str]) -> ClassicalSymbol {
    let exprs = terms.iter().map(|t| parse_expression(t, n).unwrap()).collect();
    ClassicalSymbol::from_exprs(n, top, exprs).unwrap()
}

fn sum_symbols(a: &ClassicalSymbol, b: &ClassicalSymbol) -> ClassicalSymbol {
    let len = a.terms().len().max(b.terms().len());
    let exprs = (0..len).map(|i| a.term_expr(i).add(&b.term_expr(i))).collect();
    ClassicalSymbol::from_exprs(a.n(), a.top_degree(), exprs).unwrap()
}

/// The remainder found by factoring feeds the pairing: its first
/// nonvanishing coefficient fixes the order at which `tau^m I_tau` has a
/// nonzero limit.
#[test]
fn factor_remainder_drives_the_pairing() {
    let p = model2d();
    let e0 = sym(2, 0, &["2 + x1 + xi1/normXiPrime", "x2/normXiPrime"]);
    let r0 = sym(2, 1, &["(1 + 2*i)*x1*xi2", "0", "0"]);
    let q = sum_symbols(&compose_symbols(&p, &e0, 3).unwrap().truncated(2), &r0);
    let res = factor_at(&q, &p, &[0.0, 0.0], &[0.0, 1.0], 2, 6).unwrap();
    let (idx, val) = res.first_nonvanishing_r(1e-9).unwrap().expect("planted coefficient");
    assert_eq!((idx.j, idx.k), (-1, 1));
    assert!(idx.alpha.iter().chain(&idx.beta).all(|&v| v == 0));
    assert!((val - Complex64::new(1.0, 2.0)).norm() < 1e-10);

    let m = idx.j + idx.k as i32;
    let r = r0.with_tangential(true);
    let rstar = adjoint_symbol(&r, 3).unwrap();
    let window = ProbeWindow::standard(2);
    let taus: Vec<f64> = (4..=9).map(|k| 2f64.powi(k)).collect();
    let vals: Vec<Complex64> = taus
        .iter()
        .map(|&t| {
            let (v, _) = model_solution(t, 2, 1.0, -2, None, 4).unwrap();
            compute_i_tau(&r, &v, &window, &ITauOptions::default()).unwrap()
        })
        .collect();
    let pred = predicted_limit(&rstar, &[0], &window, m, &LimitWeights::model(2), 48).unwrap();
    let rep = decay_fit(&taus, &vals, m, Some(pred)).unwrap();
    assert_eq!(rep.verdict, Verdict::Match, "{rep:?}");
}

#[test]
fn reports_round_trip_through_json() {
    let p = model2d();
    let q = sym(2, 1, &["(2 + x2)*xi1 + x1*xi2", "x2"]);
    let res = factor_at(&q, &p, &[0.0, 0.3], &[0.0, 1.0], 1, 4).unwrap();
    let back: FactorizationResult = serde_json::from_str(&serde_json::to_string(&res).unwrap()).unwrap();
    assert_eq!(back.residual_norms, res.residual_norms);
    assert_eq!(back.r.terms[0].max_diff(&res.r.terms[0]), 0.0);

    let e = p2(2).unwrap().principal().expr.clone();
    let g = Bicharacteristic::normal_form(2, -0.5, 3.5, &[0.0, 1.0], 11).unwrap();
    let rep = find_minimal_interval(&e, &g, Some(1), &MinimalityOptions::default()).unwrap();
    let back: MinimalityReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
    assert_eq!(back.interval, rep.interval);
    assert_eq!(back.l_estimate, rep.l_estimate);

    let taus = [8.0, 16.0, 32.0, 64.0, 128.0];
    let vals: Vec<Complex64> = taus.iter().map(|t| Complex64::new(1.0 + 1.0 / t, 0.5)).collect();
    let rep = decay_fit(&taus, &vals, 0, Some(Complex64::new(1.0, 0.5))).unwrap();
    let back: AsymptoticReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
    assert_eq!(back.verdict, rep.verdict);
    assert_eq!(back.i_values, rep.i_values);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Composition with a scalar `c` is multiplication by `c`, and the
    /// adjoint of a first-order symbol with linear coefficients returns it.
    #[test]
    fn scalar_composition_and_involution(a in -2.0f64..2.0, b in -2.0f64..2.0, cr in -2.0f64..2.0, ci in -2.0f64..2.0) {
        let s = sym(2, 1, &[&format!("({a})*x1*xi1 + ({b})*x2*xi2 + i*xi2"), &format!("({b})*x1")]);
        let cst = ClassicalSymbol::from_exprs(2, 0, vec![psiwork::symexpr::Expr::constant(Complex64::new(cr, ci))]).unwrap();
        let left = compose_symbols(&cst, &s, 2).unwrap();
        let back = adjoint_symbol(&adjoint_symbol(&s, 2).unwrap(), 2).unwrap();
        for (x, xi) in [([0.3, -0.7], [1.1, 0.4]), ([-1.2, 0.5], [-0.3, 2.0])] {
            for d in 0..=2 {
                let deg = 1 - d;
                let want = evaluate(&s.term_of_degree(deg), &x, &xi).unwrap();
                let got = evaluate(&left.term_of_degree(deg), &x, &xi).unwrap();
                prop_assert!((got - Complex64::new(cr, ci) * want).norm() < 1e-12);
                let inv = evaluate(&back.term_of_degree(deg), &x, &xi).unwrap();
                prop_assert!((inv - want).norm() < 1e-12);
            }
        }
    }

    /// `||g||_(0)` is the L2 norm, and the norm grows with `s`.
    #[test]
    fn sobolev_zero_is_l2(w in 0.15f64..0.4, cx in -0.5f64..0.5) {
        let spec = GridSpec::cube(&[0.0, 0.0], 4.0, 64).unwrap();
        let g = GridFunction::from_fn(spec, |x| {
            let r2 = (x[0] - cx).powi(2) + x[1].powi(2);
            Complex64::new((-r2 / (2.0 * w * w)).exp(), 0.0)
        });
        let l2 = g.l2_norm();
        let s0 = sobolev_norm(&g, 0.0).unwrap();
        prop_assert!((s0 - l2).abs() < 1e-10 * l2);
        prop_assert!(sobolev_norm(&g, 1.0).unwrap() > s0);
        prop_assert!(sobolev_norm(&g, -1.0).unwrap() < s0);
    }
}
