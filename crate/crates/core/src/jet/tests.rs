use std::cmp::Ordering;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::symexpr::{parse_expression, Expr, Var};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn jet_of_linear_symbol() {
    let e = parse_expression("xi1", 2).unwrap();
    let j = jet_of(&e, &[0.3, -1.0], &[0.5, 1.0], 2).unwrap();
    assert_eq!(j.value(), c(0.5));
    assert_eq!(j.derivative(&[0, 0], &[1, 0]), c(1.0));
    for pos in 0..j.len() {
        let idx = j.index_at(pos);
        if idx != [0, 0, 1, 0] && pos != 0 {
            assert_eq!(j.derivative_at(pos), c(0.0));
        }
    }
}

#[test]
fn jet_of_mixed_product() {
    let e = parse_expression("x1*xi2", 2).unwrap();
    let j = jet_of(&e, &[0.0, 0.0], &[0.0, 1.0], 2).unwrap();
    assert_eq!(j.value(), c(0.0));
    assert_eq!(j.derivative(&[1, 0], &[0, 0]), c(1.0));
    assert_eq!(j.derivative(&[1, 0], &[0, 1]), c(1.0));
    assert_eq!(j.derivative(&[2, 0], &[0, 0]), c(0.0));
}

#[test]
fn flat_function_has_zero_jet() {
    let e = parse_expression("flatExp(x1)", 1).unwrap();
    let j = jet_of(&e, &[0.0], &[1.0], 6).unwrap();
    assert_eq!(j.max_abs(), 0.0);
}

#[test]
fn jet_matches_symbolic_derivatives() {
    let src = "exp(i*x1*xi2)*normXiPrime + flatExp(x2 + 0.7)/(2 + x1^2) - cutoff(xi1, -1, 2)";
    let e = parse_expression(src, 2).unwrap();
    let x = [0.2, -0.1];
    let xi = [0.4, 0.8];
    let j = jet_of(&e, &x, &xi, 4).unwrap();
    for pos in 0..j.len() {
        let idx: Vec<usize> = j.index_at(pos).iter().map(|&k| k as usize).collect();
        let d = crate::symexpr::differentiate_multi(&e, &idx, 2);
        let want = crate::symexpr::evaluate(&d, &x, &xi).unwrap();
        let got = j.derivative_at(pos);
        assert!((want - got).norm() < 1e-9 * (1.0 + want.norm()), "{idx:?}: {want} vs {got}");
    }
}

#[test]
fn product_identities() {
    let x = parse_expression("x1", 2).unwrap();
    let jx = jet_of(&x, &[0.0, 0.0], &[0.0, 1.0], 2).unwrap();
    let one = jx.constant_like(c(1.0));
    assert_eq!(jx.try_mul(&one).unwrap(), jx);
    let sq = jx.try_mul(&jx).unwrap();
    assert_eq!(sq.derivative(&[2, 0], &[0, 0]), c(2.0));
    assert_eq!(sq.max_abs_upto(1), 0.0);
}

#[test]
fn mismatched_jets_are_rejected() {
    let a = Jet::zeros(&[0.0], &[1.0], 3).unwrap();
    let b = Jet::zeros(&[0.0], &[1.0], 2).unwrap();
    let d = Jet::zeros(&[0.5], &[1.0], 3).unwrap();
    assert_eq!(a.try_mul(&b), Err(JetError::OrderMismatch(3, 2)));
    assert_eq!(a.try_add(&d), Err(JetError::BaseMismatch));
    assert!(Jet::zeros(&[0.0; 2], &[0.0; 2], 11).is_err());
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, deg: usize, terms: usize) -> Expr {
    let mut e = Expr::zero();
    for _ in 0..terms {
        let mut t = Expr::constant(Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let d = rng.gen_range(0..=deg);
        for _ in 0..d {
            let slot = rng.gen_range(0..2 * n);
            t = t.mul(&Expr::var(Var::from_slot(slot, n)));
        }
        e = e.add(&t);
    }
    e
}

#[test]
fn product_matches_symbolic_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let a = random_poly(&mut rng, 2, 3, 5);
        let b = random_poly(&mut rng, 2, 3, 5);
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let xi = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let ja = jet_of(&a, &x, &xi, 4).unwrap();
        let jb = jet_of(&b, &x, &xi, 4).unwrap();
        let jab = jet_of(&a.mul(&b), &x, &xi, 4).unwrap();
        assert!(ja.try_mul(&jb).unwrap().max_diff(&jab) < 1e-12);
        // commutativity and associativity with exact equality up to rounding
        assert!(ja.try_mul(&jb).unwrap().max_diff(&jb.try_mul(&ja).unwrap()) < 1e-13);
        let jc = jet_of(&random_poly(&mut rng, 2, 2, 3), &x, &xi, 4).unwrap();
        let l = ja.try_mul(&jb).unwrap().try_mul(&jc).unwrap();
        let r = ja.try_mul(&jb.try_mul(&jc).unwrap()).unwrap();
        assert!(l.max_diff(&r) < 1e-11);
    }
}

#[test]
fn exact_factor_division() {
    let q = parse_expression("xi1*(2 + x1)", 2).unwrap();
    let p = parse_expression("xi1", 2).unwrap();
    let x = [0.0, 0.0];
    let xi = [0.0, 1.0];
    let jq = jet_of(&q, &x, &xi, 6).unwrap();
    let jp = jet_of(&p, &x, &xi, 6).unwrap();
    let res = divide_by_factor(&jq, &jp, Var::Xi(0)).unwrap();
    let want = jet_of(&parse_expression("2 + x1", 2).unwrap(), &x, &xi, 6).unwrap();
    assert!(res.quotient.truncate(5).max_diff(&want.truncate(5)) < 1e-14);
    assert!(res.max_residual() < 1e-14);
}

#[test]
fn obstruction_case_leaves_unit_residual() {
    let x = [0.0, 0.0];
    let xi = [0.0, 1.0];
    let jq = jet_of(&Expr::xi(1), &x, &xi, 6).unwrap();
    let jp = jet_of(&Expr::xi(0), &x, &xi, 6).unwrap();
    let res = divide_by_factor(&jq, &jp, Var::Xi(0)).unwrap();
    assert_eq!(res.quotient.value(), c(0.0));
    let r = res.residual.derivative(&[0, 0], &[0, 1]);
    assert!((r - c(1.0)).norm() < 1e-12);
}

#[test]
fn division_preconditions() {
    let x = [0.0, 0.0];
    let xi = [0.0, 1.0];
    let jq = jet_of(&Expr::xi(1), &x, &xi, 3).unwrap();
    let jp = jet_of(&Expr::xi(1), &x, &xi, 3).unwrap();
    assert!(matches!(divide_by_factor(&jq, &jp, Var::Xi(0)), Err(JetError::NotCharacteristic(_))));
    let jp = jet_of(&Expr::x(1), &x, &xi, 3).unwrap();
    assert!(matches!(divide_by_factor(&jq, &jp, Var::Xi(0)), Err(JetError::NonTransversal(_))));
}

#[test]
fn division_recovers_random_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..30 {
        let n = 1 + trial % 3;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nu = rng.gen_range(0..2 * n);
        let mut p = jet_of(&random_poly(&mut rng, n, 3, 6), &x, &xi, 6).unwrap();
        p.set_taylor_at(0, c(0.0));
        let unit = p.table().unit(nu);
        p.set_taylor_at(unit, c(1.0));
        let g = jet_of(&random_poly(&mut rng, n, 3, 6), &x, &xi, 6).unwrap();
        let q = p.try_mul(&g).unwrap();
        let res = divide_by_factor(&q, &p, Var::from_slot(nu, n)).unwrap();
        assert!(res.quotient.truncate(5).max_diff(&g.truncate(5)) < 1e-9);
        assert!(res.max_residual() < 1e-9);
    }
}

#[test]
fn ordering_chain() {
    let n = 3;
    let e = |k: usize| {
        let mut v = vec![0; n];
        v[k] = 1;
        v
    };
    let z = vec![0; n];
    let mut chain = vec![OrderedIndex::new(-1, 0, z.clone(), z.clone())];
    for k in (0..n).rev() {
        chain.push(OrderedIndex::new(-1, 0, z.clone(), e(k)));
    }
    for k in (0..n).rev() {
        chain.push(OrderedIndex::new(-1, 0, e(k), z.clone()));
    }
    chain.push(OrderedIndex::new(0, 0, z.clone(), z.clone()));
    for w in chain.windows(2) {
        assert_eq!(compare_indices(&w[0], &w[1]), Ordering::Less, "{:?} < {:?}", w[0], w[1]);
    }
    assert_eq!(compare_indices(&chain[3], &chain[3]), Ordering::Equal);
}

#[test]
fn first_nonvanishing_cases() {
    let x = [0.0, 0.0];
    let xi = [0.0, 1.0];
    let zero = Jet::zeros(&x, &xi, 6).unwrap();
    assert_eq!(first_nonvanishing(&[zero.clone(), zero.clone()], 1e-12).unwrap(), None);

    let mut q1 = zero.clone();
    q1.set_derivative(&[1, 0], &[0, 0], c(3.0));
    let (idx, v) = first_nonvanishing(&[q1], 1e-12).unwrap().unwrap();
    assert_eq!(idx, OrderedIndex::new(-1, 1, vec![0], vec![0]));
    assert_eq!(v, c(3.0));

    // tied total order: the |beta| = 1 slot wins
    let mut q1 = zero.clone();
    q1.set_derivative(&[0, 0], &[0, 1], c(2.0));
    let mut q0 = zero.clone();
    q0.set_derivative(&[0, 0], &[0, 0], c(5.0));
    let (idx, _) = first_nonvanishing(&[q1, q0], 1e-12).unwrap().unwrap();
    assert_eq!(idx, OrderedIndex::new(-1, 0, vec![0], vec![1]));
}

#[test]
fn homogeneous_extension() {
    let x = [0.1, 0.2];
    let xi = [0.0, 1.0];
    let one = Jet::zeros(&x, &xi, 4).unwrap().constant_like(c(1.0));
    let h = homogenize(&one, 0).unwrap();
    assert!((h.eval(&[0.5, -0.3], &[3.0, -2.0]).unwrap() - c(1.0)).norm() < 1e-14);
    assert!(h.eval(&[0.0, 0.0], &[0.0, 0.0]).is_err());

    let g = jet_of(&Expr::xi(1), &x, &xi, 4).unwrap();
    let h = homogenize(&g, 1).unwrap();
    for xi_pt in [[0.3, 2.0], [-1.0, 0.5], [0.0, -3.0]] {
        let v = h.eval(&x, &xi_pt).unwrap();
        assert!((v - c(xi_pt[1])).norm() < 1e-14);
    }
    assert!(homogenize(&jet_of(&Expr::xi(1), &x, &[0.0, 2.0], 3).unwrap(), 1).is_err());
}

#[test]
fn euler_identity_on_random_extension() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = [0.0, 0.3];
    let th: f64 = 0.7;
    let xi = [th.cos(), th.sin()];
    let g = jet_of(&random_poly(&mut rng, 2, 3, 8), &x, &xi, 4).unwrap();
    for m in [-1, 0, 1, 2] {
        let h = homogenize(&g, m).unwrap();
        for _ in 0..50 {
            let px = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let r = rng.gen_range(0.5..2.0);
            let a: f64 = th + rng.gen_range(-0.3..0.3);
            let pxi = [r * a.cos(), r * a.sin()];
            let j = h.jet_at(&px, &pxi, 1).unwrap();
            let euler = j.derivative(&[0, 0], &[1, 0]) * pxi[0] + j.derivative(&[0, 0], &[0, 1]) * pxi[1];
            let v = j.value();
            assert!((euler - v * m as f64).norm() < 1e-8 * (1.0 + v.norm()));
            assert!((v - h.eval(&px, &pxi).unwrap()).norm() < 1e-10 * (1.0 + v.norm()));
        }
    }
}

#[test]
fn json_roundtrip() {
    let e = parse_expression("x1*xi2 + i*x2^2", 2).unwrap();
    let j = jet_of(&e, &[0.5, 0.25], &[0.0, 1.0], 3).unwrap();
    let s = serde_json::to_string(&j).unwrap();
    assert!(s.contains("\"coeffs\""));
    let back: Jet = serde_json::from_str(&s).unwrap();
    assert!(back.max_diff(&j) < 1e-15);
}
