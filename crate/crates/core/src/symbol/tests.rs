use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::symexpr::{evaluate, parse_expression, Expr};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sym(n: usize, top: i32, texts: &[&str]) -> ClassicalSymbol {
    let specs: Vec<TermSpec> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| TermSpec { degree: top - i as i32, expr: t.to_string() })
        .collect();
    ClassicalSymbol::from_specs(n, &specs).unwrap()
}

fn random_poly_x(rng: &mut ChaCha8Rng, n: usize) -> Expr {
    // degree <= 2 in x with complex coefficients
    let mut parts = vec![Expr::constant(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))];
    for k in 0..n {
        parts.push(Expr::x(k).scale(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        for l in k..n {
            let v = c(rng.gen_range(-1.0..1.0), 0.0);
            parts.push(Expr::x(k).mul(&Expr::x(l)).scale(v));
        }
    }
    Expr::sum(parts)
}

/// Random differential-operator symbol in `n = 2` with top degree <= 2.
fn random_symbol(rng: &mut ChaCha8Rng) -> ClassicalSymbol {
    let n = 2;
    let top = rng.gen_range(0..=2);
    let mut exprs = Vec::new();
    for d in (0..=top).rev() {
        let mut parts = Vec::new();
        for a in 0..=d {
            let mono = Expr::xi(0).powi(a).mul(&Expr::xi(1).powi(d - a));
            parts.push(random_poly_x(rng, n).mul(&mono));
        }
        exprs.push(Expr::sum(parts));
    }
    ClassicalSymbol::from_exprs(n, top, exprs).unwrap()
}

fn sample_points(seed: u64, n: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xi = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (x, xi)
        })
        .collect()
}

/// Largest termwise difference over sample points, by degree.
fn termwise_diff(a: &ClassicalSymbol, b: &ClassicalSymbol, depth: usize) -> f64 {
    let pts = sample_points(99, a.n(), 8);
    let mut worst = 0.0f64;
    for d in 0..=depth {
        let deg = a.top_degree() - d as i32;
        let ea = a.term_of_degree(deg);
        let eb = b.term_of_degree(deg);
        for (x, xi) in &pts {
            let va = evaluate(&ea, x, xi).unwrap();
            let vb = evaluate(&eb, x, xi).unwrap();
            worst = worst.max((va - vb).norm());
        }
    }
    worst
}

#[test]
fn compose_with_identity() {
    let a = sym(2, 1, &["xi1 + i*x1*xi2", "x2^2"]);
    let out = compose_symbols(&a, &ClassicalSymbol::identity(2), 3).unwrap();
    assert_eq!(out.top_degree(), 1);
    assert!(termwise_diff(&out, &a.padded(3), 3) < 1e-14);
    let out = compose_symbols(&ClassicalSymbol::identity(2), &a, 3).unwrap();
    assert!(termwise_diff(&out, &a.padded(3), 3) < 1e-14);
}

#[test]
fn compose_xi1_with_x1() {
    let a = sym(1, 1, &["xi1"]);
    let b = sym(1, 0, &["x1"]);
    let out = compose_symbols(&a, &b, 2).unwrap();
    let p = ([0.7], [1.3]);
    assert!((evaluate(&out.term_expr(0), &p.0, &p.1).unwrap() - c(0.7 * 1.3, 0.0)).norm() < 1e-15);
    assert!((evaluate(&out.term_expr(1), &p.0, &p.1).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
    assert!(out.term_expr(2).is_zero());
}

#[test]
fn compose_order_zero_term_structure() {
    // degree-0 term of e # p is e_{-1} p_1 + e_0 p_0 + sum_k d_xi_k e_0 D_k p_1
    let n = 3;
    let e = sym(n, 0, &["x2 + xi1/normXiPrime", "x1/normXiPrime"]);
    let p = sym(n, 1, &["xi1 + i*x1*xi3", "x3 - 2*i*x2"]);
    let out = compose_symbols(&e, &p, 1).unwrap();
    let direct = parse_expression(
        "x1/normXiPrime*(xi1 + i*x1*xi3) + (x2 + xi1/normXiPrime)*(x3 - 2*i*x2) + (1/normXiPrime)*(-i)*(i*xi3)",
        n,
    )
    .unwrap();
    for (x, xi) in sample_points(5, n, 10) {
        let v1 = evaluate(&out.term_expr(1), &x, &xi).unwrap();
        let v2 = evaluate(&direct, &x, &xi).unwrap();
        assert!((v1 - v2).norm() < 1e-12 * (1.0 + v2.norm()), "{v1} vs {v2}");
    }
}

#[test]
fn compose_dimension_and_depth_errors() {
    let a = sym(2, 1, &["xi1"]);
    let b = sym(3, 1, &["xi1"]);
    assert!(matches!(compose_symbols(&a, &b, 1), Err(SymbolError::DimensionMismatch(2, 3))));
    assert!(matches!(compose_symbols(&a, &a, MAX_DEPTH + 1), Err(SymbolError::DepthExceeded(..))));
}

#[test]
fn composition_is_associative() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let a = random_symbol(&mut rng);
        let b = random_symbol(&mut rng);
        let cc = random_symbol(&mut rng);
        let left = compose_symbols(&compose_symbols(&a, &b, 3).unwrap(), &cc, 3).unwrap();
        let right = compose_symbols(&a, &compose_symbols(&b, &cc, 3).unwrap(), 3).unwrap();
        assert_eq!(left.top_degree(), right.top_degree());
        let d = termwise_diff(&left, &right, 3);
        assert!(d < 1e-10, "associativity error {d}");
    }
}

#[test]
fn adjoint_examples() {
    let r = sym(2, 1, &["xi2"]);
    let q = adjoint_symbol(&r, 2).unwrap();
    assert!(termwise_diff(&q, &r.padded(2), 2) < 1e-15);

    let r = sym(2, 1, &["x1*xi2"]);
    let q = adjoint_symbol(&r, 1).unwrap();
    for (x, xi) in sample_points(3, 2, 5) {
        let v = evaluate(&q.term_expr(0), &x, &xi).unwrap();
        assert!((v - c(x[0] * xi[1], 0.0)).norm() < 1e-15);
        assert_eq!(evaluate(&q.term_expr(1), &x, &xi).unwrap(), c(0.0, 0.0));
    }

    // x2*xi2: q0 = d_xi2 D_x2 (x2 xi2) = -i
    let r = sym(2, 1, &["x2*xi2"]);
    let q = adjoint_symbol(&r, 1).unwrap();
    assert!((evaluate(&q.term_expr(1), &[0.3, 0.4], &[0.1, 2.0]).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
}

#[test]
fn tangential_adjoint_skips_x1_direction() {
    // x1 xi2 + i x1 xi1 is not tangential, but with the flag the xi1-part
    // contributes no correction
    let r = sym(2, 1, &["x1*xi2 + i*x1*xi1"]);
    let full = adjoint_symbol(&r, 1).unwrap();
    let tang = adjoint_symbol(&r.clone().with_tangential(true), 1).unwrap();
    let p = ([0.2, 0.5], [0.3, 1.0]);
    let vf = evaluate(&full.term_expr(1), &p.0, &p.1).unwrap();
    let vt = evaluate(&tang.term_expr(1), &p.0, &p.1).unwrap();
    // full: d_xi1 D_x1 conj(i x1 xi1) = (-i)(-i) = -1
    assert!((vf - c(-1.0, 0.0)).norm() < 1e-15);
    assert_eq!(vt, c(0.0, 0.0));
    assert!(tang.is_tangential());
}

#[test]
fn adjoint_is_an_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let r = random_symbol(&mut rng);
        let back = adjoint_symbol(&adjoint_symbol(&r, 3).unwrap(), 3).unwrap();
        let d = termwise_diff(&back, &r.padded(3), 3);
        assert!(d < 1e-10, "involution error {d}");
    }
}

#[test]
fn poisson_examples() {
    let one = poisson(&Expr::xi(0), &Expr::x(0), 1);
    assert_eq!(one.as_const(), Some(c(1.0, 0.0)));
    let re = parse_expression("xi1", 2).unwrap();
    let im = parse_expression("x1*xi2", 2).unwrap();
    let b = poisson(&re, &im, 2);
    assert_eq!(evaluate(&b, &[0.0, 0.0], &[0.0, 1.0]).unwrap(), c(1.0, 0.0));
    assert_eq!(evaluate(&b, &[0.4, -1.0], &[2.0, 3.5]).unwrap(), c(3.5, 0.0));
}

#[test]
fn poisson_antisymmetry_and_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = sample_points(6, 2, 6);
    for _ in 0..10 {
        let a = random_symbol(&mut rng).term_expr(0);
        let b = random_symbol(&mut rng).term_expr(0);
        let cc = random_symbol(&mut rng).term_expr(0);
        let aa = poisson(&a, &a, 2);
        let jac = Expr::sum([
            poisson(&a, &poisson(&b, &cc, 2), 2),
            poisson(&b, &poisson(&cc, &a, 2), 2),
            poisson(&cc, &poisson(&a, &b, 2), 2),
        ]);
        for (x, xi) in &pts {
            assert!(evaluate(&aa, x, xi).unwrap().norm() < 1e-12);
            assert!(evaluate(&jac, x, xi).unwrap().norm() < 1e-9);
        }
    }
}

#[test]
fn iterated_hamilton_examples() {
    let p = Expr::xi(0);
    let q = Expr::x(0).powi(2);
    let at = |e: &Expr| evaluate(e, &[1.5], &[0.3]).unwrap();
    assert_eq!(at(&iterated_hamilton(&p, &q, 1, 1).unwrap()), c(3.0, 0.0));
    assert_eq!(at(&iterated_hamilton(&p, &q, 2, 1).unwrap()), c(2.0, 0.0));
    assert_eq!(at(&iterated_hamilton(&p, &q, 3, 1).unwrap()), c(0.0, 0.0));
    assert!(iterated_hamilton(&p, &Expr::real(4.0), 2, 1).unwrap().is_zero());
    assert!(matches!(iterated_hamilton(&p, &q, 0, 1), Err(SymbolError::ZeroIterations)));
    let h1 = iterated_hamilton(&p, &q, 1, 1).unwrap();
    assert_eq!(h1, poisson(&p, &q, 1));
}

#[test]
fn principal_type_examples() {
    let p = HomogeneousTerm::parse(1, "xi1", 2).unwrap();
    assert!(is_principal_type(&p, &[0.0, 0.0], &[0.0, 1.0]).unwrap());
    let lap = HomogeneousTerm::parse(2, "xi1^2 + xi2^2", 2).unwrap();
    assert!(matches!(is_principal_type(&lap, &[0.0, 0.0], &[0.0, 0.0]), Err(SymbolError::ZeroFiber)));
    assert!(matches!(
        is_principal_type(&lap, &[0.0, 0.0], &[0.0, 1.0]),
        Err(SymbolError::NotCharacteristic(_))
    ));
    let m = model2d();
    assert!(is_principal_type(m.principal(), &[0.0, 0.0], &[0.0, 1.0]).unwrap());
    // xi1^2 is characteristic at xi1 = 0 but its Hamilton field vanishes there
    let sq = HomogeneousTerm::parse(2, "xi1^2", 2).unwrap();
    assert!(!is_principal_type(&sq, &[0.0, 0.0], &[0.0, 1.0]).unwrap());
}

#[test]
fn homogeneity_examples() {
    let t = HomogeneousTerm::parse(1, "xi1", 2).unwrap();
    assert_eq!(check_homogeneity(&t, 50, 1).unwrap(), 0.0);
    let t = HomogeneousTerm::new(1, Expr::norm_xi_prime().mul(&profile_f(&Expr::x(0))), 3).unwrap();
    assert!(check_homogeneity(&t, 100, 2).unwrap() < 1e-10);
    let t = HomogeneousTerm::parse(1, "xi1^2", 2).unwrap();
    let r = check_homogeneity(&t, 100, 3).unwrap();
    assert!(r > 0.3, "detection residual {r}");
    let x = [0.0, 0.0];
    let xi = [1.5, 0.0];
    assert!((euler_residual(&t, &x, &xi).unwrap() - 2.25 / 3.25).abs() < 1e-14);
}

#[test]
fn fixtures_are_homogeneous() {
    for name in fixture_names() {
        for n in [2, 3] {
            let s = fixture(name, n).unwrap();
            for t in s.terms() {
                let r = check_homogeneity(t, 200, 11).unwrap();
                assert!(r < 1e-8, "{name} n={n}: {r}");
            }
        }
    }
    assert!(fixture("nope", 2).is_none());
}

#[test]
fn fixture_values() {
    let p = p1(3).unwrap();
    let v = p.eval(&[1.0, 0.0, 0.0], &[0.0, 0.6, 0.8]).unwrap();
    assert_eq!(v.im, 0.0);
    let v = p.eval(&[-1.0, 0.0, 0.0], &[0.0, 0.0, 2.0]).unwrap();
    assert!((v.im + 2.0 * (-1.0f64).exp()).abs() < 1e-14);

    let q = p2(2).unwrap();
    for x1 in [-3.0, -0.5, 0.5, 1.5, 2.5, 4.0] {
        assert_eq!(q.eval(&[x1, 0.0], &[0.0, 1.0]).unwrap().im, 0.0);
    }
    assert!(q.eval(&[3.0, 0.5], &[0.0, 1.0]).unwrap().im > 0.0);
    assert!(q.eval(&[0.5, -0.5], &[0.0, 1.0]).unwrap().im < 0.0);

    assert_eq!(model2d().eval(&[0.0, 0.0], &[0.0, 1.0]).unwrap(), c(0.0, 0.0));
    assert_eq!(lewy().eval(&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), c(0.0, 0.0));
    assert!(is_principal_type(lewy().principal(), &[0.0; 3], &[0.0, 0.0, 1.0]).unwrap());
}

#[test]
fn symbol_validation() {
    let a = HomogeneousTerm::parse(1, "xi1", 2).unwrap();
    let b = HomogeneousTerm::parse(-1, "x1", 2).unwrap();
    assert!(matches!(ClassicalSymbol::new(2, vec![a.clone(), b]), Err(SymbolError::Degrees(-1, 1))));
    assert!(matches!(ClassicalSymbol::new(2, vec![]), Err(SymbolError::Empty)));
    assert!(matches!(ClassicalSymbol::new(3, vec![a]), Err(SymbolError::DimensionMismatch(2, 3))));
    assert!(matches!(
        HomogeneousTerm::new(1, Expr::xi(3), 2),
        Err(SymbolError::IndexOutOfRange { used: 4, n: 2 })
    ));
    let s = sym(2, 1, &["xi1 + i*x1*xi2", "x2"]);
    let back = ClassicalSymbol::from_specs(2, &s.to_specs()).unwrap();
    assert!(termwise_diff(&s, &back, 1) < 1e-15);
    assert_eq!(s.depth(), 1);
    assert!(s.term_of_degree(5).is_zero());
    assert!(s.term_of_degree(-3).is_zero());
}
