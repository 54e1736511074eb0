use num_complex::Complex64;

use super::{Jet, JetAlgebra, JetError};
use crate::symexpr::Algebra;

/// Degree-`m` homogeneous extension `|xi|^m g(x, xi/|xi|)` of a jet given at
/// a point of the cosphere bundle, with `g` read as its Taylor polynomial.
#[derive(Debug, Clone)]
pub struct HomogeneousExtension {
    jet: Jet,
    degree: i32,
}

/// Extend `g` (based at `|xi0| = 1`) homogeneously of degree `m`.
pub fn homogenize(g: &Jet, m: i32) -> Result<HomogeneousExtension, JetError> {
    let r = g.base_xi().iter().map(|v| v * v).sum::<f64>().sqrt();
    if (r - 1.0).abs() > 1e-12 {
        return Err(JetError::NotOnSphere(r));
    }
    Ok(HomogeneousExtension { jet: g.clone(), degree: m })
}

impl HomogeneousExtension {
    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<Complex64, JetError> {
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(JetError::ZeroFiber);
        }
        let s: Vec<f64> = xi.iter().map(|v| v / r).collect();
        Ok(self.jet.eval_polynomial(x, &s) * r.powi(self.degree))
    }

    /// Jet of the extension at another point, through `order`.
    pub fn jet_at(&self, x: &[f64], xi: &[f64], order: usize) -> Result<Jet, JetError> {
        let n = self.jet.n();
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(JetError::ZeroFiber);
        }
        let alg = JetAlgebra::new(x, xi, order)?;
        let proto = Jet::zeros(x, xi, order)?;
        let mut sq = proto.zeros_like();
        for k in 0..n {
            let c = proto.coordinate_like(n + k);
            sq = sq.add_unchecked(&c.mul_unchecked(&c));
        }
        // |xi|^{-1} as a jet
        let mut derivs = Vec::with_capacity(order + 1);
        let mut coef = 1.0;
        let mut expo = -0.5;
        for _ in 0..=order {
            derivs.push(Complex64::new(coef * r2.powf(expo), 0.0));
            coef *= expo;
            expo -= 1.0;
        }
        let inv_r = sq.compose_univariate(&derivs);
        // shifted coordinates z - z0 on the sphere chart
        let mut shifted = Vec::with_capacity(2 * n);
        for k in 0..n {
            let c = proto.coordinate_like(k);
            shifted.push(c.sub_unchecked(&proto.constant_like(Complex64::new(self.jet.base_x()[k], 0.0))));
        }
        for k in 0..n {
            let s = proto.coordinate_like(n + k).mul_unchecked(&inv_r);
            shifted.push(s.sub_unchecked(&proto.constant_like(Complex64::new(self.jet.base_xi()[k], 0.0))));
        }
        let kmax = self.jet.order();
        let powers: Vec<Vec<Jet>> = shifted
            .iter()
            .map(|h| {
                let mut v = vec![proto.constant_like(Complex64::new(1.0, 0.0))];
                for e in 1..=kmax {
                    let next = v[e - 1].mul_unchecked(h);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = proto.zeros_like();
        for pos in 0..self.jet.len() {
            let c = self.jet.taylor_at(pos);
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut term = proto.constant_like(c);
            for (slot, &e) in self.jet.index_at(pos).iter().enumerate() {
                if e > 0 {
                    term = term.mul_unchecked(&powers[slot][e as usize]);
                }
            }
            acc = acc.add_unchecked(&term);
        }
        let scale = alg
            .powi(&inv_r, -self.degree)
            .map_err(JetError::Singular)?;
        Ok(acc.mul_unchecked(&scale))
    }
}
