use super::{Jet, JetError};
use crate::symexpr::Var;

/// Threshold for `p(base) = 0` and for transversality.
pub const DIVISION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DivisionResult {
    /// `g` with coefficients through order `K - 1`; the order-`K` slice is zero
    /// since it does not enter `q - p g` through order `K`.
    pub quotient: Jet,
    /// `q - p g` through order `K`.
    pub residual: Jet,
}

impl DivisionResult {
    pub fn max_residual(&self) -> f64 {
        self.residual.max_abs()
    }
}

/// Solve `q = p g` formally at the base point, with `p(base) = 0` and
/// `d_nu p(base) != 0`.
///
/// Coefficients of `g` are found order by order. Within one order the
/// unknowns are visited by decreasing number of `nu`-slots, so that each
/// equation `d^{delta + e_nu}(q - p g)(base) = 0` has exactly one new unknown
/// `d^delta g(base)`.
pub fn divide_by_factor(q: &Jet, p: &Jet, nu: Var) -> Result<DivisionResult, JetError> {
    if q.n() != p.n() {
        return Err(JetError::DimensionMismatch(q.n(), p.n()));
    }
    if q.order() != p.order() {
        return Err(JetError::OrderMismatch(q.order(), p.order()));
    }
    if q.base_x() != p.base_x() || q.base_xi() != p.base_xi() {
        return Err(JetError::BaseMismatch);
    }
    let p0 = p.value().norm();
    if p0 > DIVISION_TOL {
        return Err(JetError::NotCharacteristic(p0));
    }
    let order = q.order();
    let slot = nu.slot(q.n());
    if order == 0 {
        return Err(JetError::NonTransversal(0.0));
    }
    let table = q.table();
    let unit = table.unit(slot);
    let dp = p.taylor_at(unit);
    if dp.norm() < DIVISION_TOL {
        return Err(JetError::NonTransversal(dp.norm()));
    }

    let mut g = q.zeros_like();
    for deg in 0..order {
        let mut layer: Vec<usize> = (0..table.len()).filter(|&pos| table.degree(pos) == deg).collect();
        layer.sort_by_key(|&pos| std::cmp::Reverse(table.index(pos)[slot]));
        for delta in layer {
            let mut beta = table.index(delta).to_vec();
            beta[slot] += 1;
            let bpos = table.position(&beta).expect("beta within truncation");
            let mut acc = q.taylor_at(bpos);
            for &(i, j) in &table.products()[bpos] {
                let (i, j) = (i as usize, j as usize);
                if i == 0 || i == unit {
                    continue;
                }
                acc -= p.taylor_at(i) * g.taylor_at(j);
            }
            g.set_taylor_at(delta, acc / dp);
        }
    }
    let residual = q.sub_unchecked(&p.mul_unchecked(&g));
    Ok(DivisionResult { quotient: g, residual })
}
