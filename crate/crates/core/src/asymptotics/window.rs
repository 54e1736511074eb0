use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `e^{-1/(1+u)^2} e^{-1/(1-u)^2}` on `(-1, 1)`, zero elsewhere. Same profile
/// as the `bump` builtin of the expression language.
pub fn bump(u: f64) -> f64 {
    if u <= -1.0 || u >= 1.0 {
        return 0.0;
    }
    let a = 1.0 + u;
    let b = 1.0 - u;
    (-1.0 / (a * a) - 1.0 / (b * b)).exp()
}

/// Probe `H(y) = prod_k y_k^{m_k} bump((y_k - c_k) / r_k)` on `R^n`, with
/// `y = (t, x)`. The unscaled test function is `h_tau(x) = tau^-N H(tau (x - anchor))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeWindow {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    pub moments: Vec<u32>,
    /// Anchor `t0` in the first coordinate.
    pub t0: f64,
    pub big_n: i32,
}

impl ProbeWindow {
    /// Default probe: off-center in `t` and `x` so that odd moments do not
    /// cancel.
    pub fn standard(n: usize) -> ProbeWindow {
        let mut center = vec![0.2; n];
        center[0] = 0.3;
        ProbeWindow { center, half_width: vec![1.0; n], moments: vec![0; n], t0: 0.0, big_n: 2 }
    }

    /// Small family of windows tried in turn when a pairing vanishes.
    pub fn dictionary(n: usize) -> Vec<ProbeWindow> {
        let base = ProbeWindow::standard(n);
        let mut out = vec![base.clone()];
        for k in 0..n {
            let mut w = base.clone();
            w.moments[k] = 1;
            out.push(w);
        }
        let mut w = base.clone();
        w.center.iter_mut().for_each(|c| *c = -*c);
        out.push(w);
        out
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let mut v = 1.0;
        for k in 0..self.n() {
            v *= bump((y[k] - self.center[k]) / self.half_width[k]);
            if v == 0.0 {
                return 0.0;
            }
            if self.moments[k] > 0 {
                v *= y[k].powi(self.moments[k] as i32);
            }
        }
        v
    }

    /// Largest `|y|` on the support box.
    pub fn extent(&self) -> f64 {
        self.center
            .iter()
            .zip(&self.half_width)
            .map(|(c, r)| (c.abs() + r).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `tau^-N H(tau (x - (t0, 0, .., 0)))`.
    pub fn h_tau(&self, tau: f64, x: &[f64]) -> f64 {
        let mut y: Vec<f64> = x.iter().map(|v| tau * v).collect();
        y[0] -= tau * self.t0;
        tau.powi(-self.big_n) * self.value(&y)
    }

    pub fn rule(&self, points: usize, panels: usize) -> TensorRule {
        TensorRule::new(
            self.center.iter().zip(&self.half_width).map(|(c, r)| (c - r, c + r)).collect(),
            points,
            panels,
        )
    }
}

/// Tensor product of composite Gauss–Legendre rules on a box.
#[derive(Debug, Clone)]
pub struct TensorRule {
    axes: Vec<Vec<(f64, f64)>>,
}

impl TensorRule {
    pub fn new(bounds: Vec<(f64, f64)>, points: usize, panels: usize) -> TensorRule {
        let gl = GaussLegendre::new(NonZeroUsize::new(points.max(1)).unwrap());
        let panels = panels.max(1);
        let axes = bounds
            .iter()
            .map(|&(a, b)| {
                let w = (b - a) / panels as f64;
                let mut nodes = Vec::with_capacity(points * panels);
                for p in 0..panels {
                    let lo = a + p as f64 * w;
                    for &(x, wt) in gl.as_node_weight_pairs() {
                        nodes.push((lo + 0.5 * w * (x + 1.0), 0.5 * w * wt));
                    }
                }
                nodes
            })
            .collect();
        TensorRule { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node and weight number `i`.
    pub fn node(&self, mut i: usize, y: &mut [f64]) -> f64 {
        let mut w = 1.0;
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let (x, wt) = axis[i % axis.len()];
            i /= axis.len();
            y[k] = x;
            w *= wt;
        }
        w
    }

    pub fn integrate<E, F: FnMut(&[f64]) -> Result<Complex64, E>>(&self, mut f: F) -> Result<Complex64, E> {
        let mut y = vec![0.0; self.axes.len()];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.len() {
            let w = self.node(i, &mut y);
            acc += f(&y)? * w;
        }
        Ok(acc)
    }
}
