use super::{Expr, FlatKind, Node, Var};

/// Coefficients (ascending in `s = 1/u`) of the polynomial `P_k` with
/// `d^k/du^k e^{-1/u^p} = P_k(1/u) e^{-1/u^p}` for `u > 0`.
pub fn flat_poly(kind: FlatKind, k: u32) -> Vec<f64> {
    let p = kind.power() as usize;
    let mut poly = vec![1.0];
    for _ in 0..k {
        // P_{k+1}(s) = -s^2 P_k'(s) + p s^{p+1} P_k(s)
        let mut next = vec![0.0; poly.len() + p + 1];
        for (j, &c) in poly.iter().enumerate() {
            if j > 0 {
                next[j + 1] -= j as f64 * c;
            }
            next[j + p + 1] += p as f64 * c;
        }
        while next.len() > 1 && next[next.len() - 1] == 0.0 {
            next.pop();
        }
        poly = next;
    }
    poly
}

/// Exact symbolic derivative with respect to `var`.
pub fn differentiate(e: &Expr, var: Var) -> Expr {
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(v) => {
            if *v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::NormXiPrime => match var {
            Var::Xi(k) if k >= 1 => Expr::xi(k).div(e),
            _ => Expr::zero(),
        },
        Node::Neg(a) => differentiate(a, var).neg(),
        Node::Add(a, b) => differentiate(a, var).add(&differentiate(b, var)),
        Node::Sub(a, b) => differentiate(a, var).sub(&differentiate(b, var)),
        Node::Mul(a, b) => {
            let da = differentiate(a, var);
            let db = differentiate(b, var);
            da.mul(b).add(&a.mul(&db))
        }
        Node::Div(a, b) => {
            let da = differentiate(a, var);
            let db = differentiate(b, var);
            if db.is_zero() {
                da.div(b)
            } else {
                da.mul(b).sub(&a.mul(&db)).div(&b.powi(2))
            }
        }
        Node::Pow(a, k) => {
            let da = differentiate(a, var);
            if da.is_zero() {
                return Expr::zero();
            }
            Expr::real(*k as f64).mul(&a.powi(k - 1)).mul(&da)
        }
        Node::Exp(a) => e.mul(&differentiate(a, var)),
        Node::Flat { kind, order, arg } => {
            let da = differentiate(arg, var);
            if da.is_zero() {
                return Expr::zero();
            }
            Expr::flat(*kind, order + 1, arg).mul(&da)
        }
        Node::Bump(t) => {
            let one = Expr::one();
            differentiate(&Expr::cutoff(t, &one.neg(), &one), var)
        }
        Node::Cutoff(t, a, b) => {
            let left = Expr::flat_exp(&t.sub(a));
            let right = Expr::flat_exp(&b.sub(t));
            differentiate(&left.mul(&right), var)
        }
    }
}

/// Mixed partial derivative; `counts[slot]` derivatives in each stacked slot.
pub fn differentiate_multi(e: &Expr, counts: &[usize], n: usize) -> Expr {
    let mut out = e.clone();
    for (slot, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            if out.is_zero() {
                return out;
            }
            out = differentiate(&out, Var::from_slot(slot, n));
        }
    }
    out
}

