use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Jet, JetError};

/// Taylor index `(j, k, alpha, beta)` of `d_t^k d_{x'}^alpha d_{xi'}^beta q_{-j}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderedIndex {
    pub j: i32,
    pub k: usize,
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
}

impl OrderedIndex {
    pub fn new(j: i32, k: usize, alpha: Vec<usize>, beta: Vec<usize>) -> OrderedIndex {
        OrderedIndex { j, k, alpha, beta }
    }

    pub fn total(&self) -> i64 {
        self.j as i64 + self.k as i64 + sum(&self.alpha) as i64 + sum(&self.beta) as i64
    }

    fn k_alpha(&self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.alpha.len() + 1);
        v.push(self.k);
        v.extend_from_slice(&self.alpha);
        v
    }
}

fn sum(v: &[usize]) -> usize {
    v.iter().sum()
}

fn lex(a: &[usize], b: &[usize]) -> Ordering {
    let len = a.len().max(b.len());
    for s in 0..len {
        let x = a.get(s).copied().unwrap_or(0);
        let y = b.get(s).copied().unwrap_or(0);
        match x.cmp(&y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

/// The total order `>_t`: total order ascending, then `|beta|` descending,
/// then `beta` lexicographically, then `|(k, alpha)|` descending, then
/// `(k, alpha)` lexicographically with `k` leftmost.
pub fn compare_indices(a: &OrderedIndex, b: &OrderedIndex) -> Ordering {
    a.total()
        .cmp(&b.total())
        .then_with(|| sum(&b.beta).cmp(&sum(&a.beta)))
        .then_with(|| lex(&a.beta, &b.beta))
        .then_with(|| (b.k + sum(&b.alpha)).cmp(&(a.k + sum(&a.alpha))))
        .then_with(|| lex(&a.k_alpha(), &b.k_alpha()))
        .then_with(|| a.j.cmp(&b.j))
}

/// Depth `kappa` such that every index with `j + k + |alpha| + |beta| < kappa`
/// is covered by the given jets of `q_1, q_0, q_{-1}, ...`.
/// Terms past the end of the list are taken to vanish identically.
pub fn coverage_depth(terms: &[Jet]) -> Result<usize, JetError> {
    let first = match terms.first() {
        Some(t) => t,
        None => return Ok(usize::MAX),
    };
    for t in terms {
        if t.n() != first.n() {
            return Err(JetError::InconsistentDepth(format!(
                "dimension {} vs {}",
                t.n(),
                first.n()
            )));
        }
        if t.base_x() != first.base_x() || t.base_xi() != first.base_xi() {
            return Err(JetError::InconsistentDepth("jets at different base points".into()));
        }
    }
    Ok(terms.iter().enumerate().map(|(i, t)| t.order() + i).min().unwrap())
}

/// Smallest index under `>_t` whose coefficient exceeds `tol` in modulus.
///
/// `terms[i]` is the jet of `q_{1-i}`. Jet slots map as `x1 -> k`,
/// `(x2..xn) -> alpha`, `(xi2..xin) -> beta`; coefficients carrying a
/// `xi1`-derivative are not part of the index set.
pub fn first_nonvanishing(terms: &[Jet], tol: f64) -> Result<Option<(OrderedIndex, Complex64)>, JetError> {
    let kappa = coverage_depth(terms)?;
    let mut best: Option<(OrderedIndex, Complex64)> = None;
    for (i, t) in terms.iter().enumerate() {
        let n = t.n();
        let j = i as i32 - 1;
        for pos in 0..t.len() {
            let idx = t.index_at(pos);
            if idx[n] != 0 {
                continue;
            }
            let deg = t.table().degree(pos) as i64;
            if j as i64 + deg >= kappa as i64 {
                continue;
            }
            let v = t.derivative_at(pos);
            if v.norm() <= tol {
                continue;
            }
            let cand = OrderedIndex {
                j,
                k: idx[0] as usize,
                alpha: idx[1..n].iter().map(|&c| c as usize).collect(),
                beta: idx[n + 1..].iter().map(|&c| c as usize).collect(),
            };
            let better = match &best {
                None => true,
                Some((b, _)) => compare_indices(&cand, b) == Ordering::Less,
            };
            if better {
                best = Some((cand, v));
            }
        }
    }
    Ok(best)
}
