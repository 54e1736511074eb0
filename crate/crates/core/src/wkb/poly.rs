use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::jet::IndexTable;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Truncated polynomial `sum c_a z^a` in `d` variables, `|a| <= order`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(from = "PolyRepr", into = "PolyRepr")]
pub struct TPoly {
    table: Arc<IndexTable>,
    coeffs: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    d: usize,
    order: usize,
    coeffs: Vec<Complex64>,
}

impl From<PolyRepr> for TPoly {
    fn from(r: PolyRepr) -> Self {
        let mut p = TPoly::zeros(r.d, r.order);
        for (c, v) in p.coeffs.iter_mut().zip(r.coeffs) {
            *c = v;
        }
        p
    }
}

impl From<TPoly> for PolyRepr {
    fn from(p: TPoly) -> Self {
        PolyRepr { d: p.dim(), order: p.order(), coeffs: p.coeffs }
    }
}

impl std::fmt::Debug for TPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut m = f.debug_map();
        for (pos, c) in self.coeffs.iter().enumerate() {
            if c.norm() > 0.0 {
                m.entry(&self.table.index(pos), c);
            }
        }
        m.finish()
    }
}

impl TPoly {
    pub fn zeros(d: usize, order: usize) -> TPoly {
        let table = IndexTable::get(d, order);
        let len = table.len();
        TPoly { table, coeffs: vec![ZERO; len] }
    }

    pub fn constant(d: usize, order: usize, c: Complex64) -> TPoly {
        let mut p = TPoly::zeros(d, order);
        p.coeffs[0] = c;
        p
    }

    /// `c z^a`, or zero when `|a|` exceeds the order.
    pub fn monomial(d: usize, order: usize, a: &[u8], c: Complex64) -> TPoly {
        let mut p = TPoly::zeros(d, order);
        if let Some(pos) = p.table.position(a) {
            p.coeffs[pos] = c;
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn order(&self) -> usize {
        self.table.order()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn index(&self, pos: usize) -> &[u8] {
        self.table.index(pos)
    }

    pub fn degree(&self, pos: usize) -> usize {
        self.table.degree(pos)
    }

    pub fn position(&self, a: &[u8]) -> Option<usize> {
        self.table.position(a)
    }

    pub fn coeff(&self, a: &[u8]) -> Complex64 {
        self.table.position(a).map_or(ZERO, |p| self.coeffs[p])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn add_assign(&mut self, other: &TPoly) {
        debug_assert_eq!(self.order(), other.order());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, other: &TPoly, c: Complex64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    pub fn scale(&self, c: Complex64) -> TPoly {
        TPoly { table: self.table.clone(), coeffs: self.coeffs.iter().map(|v| v * c).collect() }
    }

    /// Product truncated at the common order.
    pub fn mul(&self, other: &TPoly) -> TPoly {
        debug_assert_eq!(self.order(), other.order());
        let mut out = TPoly::zeros(self.dim(), self.order());
        for (c, pairs) in self.table.products().iter().enumerate() {
            let mut acc = ZERO;
            for &(a, b) in pairs {
                acc += self.coeffs[a as usize] * other.coeffs[b as usize];
            }
            out.coeffs[c] = acc;
        }
        out
    }

    /// `z^a p`, truncated.
    pub fn shift(&self, a: &[u8]) -> TPoly {
        let mut out = TPoly::zeros(self.dim(), self.order());
        let mut idx = vec![0u8; self.dim()];
        for (pos, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            for (k, v) in idx.iter_mut().enumerate() {
                *v = self.table.index(pos)[k] + a[k];
            }
            if let Some(q) = out.table.position(&idx) {
                out.coeffs[q] += c;
            }
        }
        out
    }

    /// `d/dz_k`; the top degree becomes zero.
    pub fn derivative(&self, k: usize) -> TPoly {
        let mut out = TPoly::zeros(self.dim(), self.order());
        let mut idx = vec![0u8; self.dim()];
        for (pos, c) in self.coeffs.iter().enumerate() {
            let a = self.table.index(pos);
            if a[k] == 0 {
                continue;
            }
            idx.copy_from_slice(a);
            idx[k] -= 1;
            let q = out.table.position(&idx).expect("lower index present");
            out.coeffs[q] += c * a[k] as f64;
        }
        out
    }

    /// Same coefficients in a table of another order.
    pub fn with_order(&self, order: usize) -> TPoly {
        let mut out = TPoly::zeros(self.dim(), order);
        for (pos, c) in self.coeffs.iter().enumerate() {
            if let Some(q) = out.table.position(self.table.index(pos)) {
                out.coeffs[q] = *c;
            }
        }
        out
    }

    pub fn eval(&self, z: &[f64]) -> Complex64 {
        let mut acc = ZERO;
        for (pos, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let a = self.table.index(pos);
            let mut m = 1.0;
            for (k, &e) in a.iter().enumerate() {
                m *= z[k].powi(e as i32);
            }
            acc += c * m;
        }
        acc
    }

    /// Largest coefficient modulus among degrees `<= upto`.
    pub fn max_abs_upto(&self, upto: usize) -> f64 {
        (0..self.len()).filter(|&p| self.degree(p) <= upto).map(|p| self.coeffs[p].norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn factorial_u8(a: &[u8]) -> f64 {
    a.iter().map(|&k| (1..=k as usize).map(|v| v as f64).product::<f64>()).product()
}
