use serde::{Deserialize, Serialize};

use super::{Bicharacteristic, BicharError};
use crate::symexpr::{evaluate_ext, Expr};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignOptions {
    /// `|Im p| <= tol` counts as zero. The default `0` classifies signs
    /// exactly with extended-range arithmetic, so flat functions keep their
    /// sign far below the `f64` range.
    pub tol: f64,
    /// Number of grid cells for the initial scan.
    pub grid: usize,
    /// Bisection width for transition points.
    pub refine: f64,
}

impl Default for SignOptions {
    fn default() -> Self {
        SignOptions { tol: 0.0, grid: 2000, refine: 1e-8 }
    }
}

/// Sign of `Im p` at a point under the given tolerance.
pub fn im_sign(p: &Expr, x: &[f64], xi: &[f64], tol: f64) -> Result<i32, BicharError> {
    let v = evaluate_ext(p, x, xi)?;
    let s = v.sign_im();
    if tol <= 0.0 || s == 0 {
        return Ok(s);
    }
    let mag = v.m.im.abs().log2() + v.e as f64;
    Ok(if mag > tol.log2() { s } else { 0 })
}

fn sign_on(p: &Expr, g: &Bicharacteristic, t: f64, tol: f64) -> Result<i32, BicharError> {
    let (x, xi) = g.point_at(t);
    im_sign(p, &x, &xi, tol)
}

fn grid(g: &Bicharacteristic, cells: usize) -> Vec<f64> {
    let cells = cells.max(1);
    (0..=cells).map(|i| g.a + (g.b - g.a) * i as f64 / cells as f64).collect()
}

/// Bisect `[lo, hi]` where `pred(lo)` holds and `pred(hi)` does not.
fn bisect<F>(mut lo: f64, mut hi: f64, width: f64, mut pred: F) -> Result<(f64, f64), BicharError>
where
    F: FnMut(f64) -> Result<bool, BicharError>,
{
    while (hi - lo).abs() > width {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Earliest `s- < s+` with `Im p(s-) < 0 < Im p(s+)` along the curve.
///
/// `s-` is pushed forward to the end of its negative run and `s+` back to
/// the start of the positive run, both to within `opts.refine`.
pub fn detect_sign_change(p: &Expr, g: &Bicharacteristic, opts: &SignOptions) -> Result<Option<(f64, f64)>, BicharError> {
    let ts = grid(g, opts.grid);
    let mut last_neg: Option<usize> = None;
    for (i, &t) in ts.iter().enumerate() {
        let s = sign_on(p, g, t, opts.tol)?;
        if s < 0 {
            last_neg = Some(i);
        } else if s > 0 {
            if let Some(ln) = last_neg {
                return refine_pair(p, g, &ts, ln, i, opts).map(|(sm, _, _, sp)| Some((sm, sp)));
            }
        }
    }
    Ok(None)
}

/// Returns `(s-, a', b', s+)`: `s-` negative and within `refine` of the end
/// `a'` of the negative run, `s+` positive and within `refine` of the start
/// `b'` of the positive run.
fn refine_pair(
    p: &Expr,
    g: &Bicharacteristic,
    ts: &[f64],
    neg: usize,
    pos: usize,
    opts: &SignOptions,
) -> Result<(f64, f64, f64, f64), BicharError> {
    let tol = opts.tol;
    let (sm, a1) = bisect(ts[neg], ts[neg + 1], opts.refine, |t| Ok(sign_on(p, g, t, tol)? < 0))?;
    let (b1, sp) = bisect(ts[pos], ts[pos - 1], opts.refine, |t| Ok(sign_on(p, g, t, tol)? > 0))
        .map(|(pos_t, zero_t)| (zero_t, pos_t))?;
    Ok((sm, a1, b1, sp))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrongSignChange {
    pub a_prime: f64,
    pub b_prime: f64,
    /// Negative witness just below `a'` and positive witness just above `b'`.
    pub s_minus: f64,
    pub s_plus: f64,
    /// `Im p` classified as zero at every check point in `[a', b']`.
    pub vanishes_inside: bool,
    /// Witnesses found for every `eps` of the decreasing grid.
    pub witnesses_converged: bool,
}

impl StrongSignChange {
    pub fn length(&self) -> f64 {
        self.b_prime - self.a_prime
    }

    /// Raw infimum `s+ - s-` of the gap between strict signs.
    pub fn gap(&self) -> f64 {
        self.s_plus - self.s_minus
    }
}

/// Interval `[a', b']` on which `Im p` vanishes, flanked arbitrarily
/// closely by negative values below and positive values above.
///
/// Built from the infimum of `t - s` over pairs `s < t` with
/// `Im p(s) < 0 < Im p(t)`; `None` if there is no such pair.
pub fn strong_sign_change(p: &Expr, g: &Bicharacteristic, opts: &SignOptions) -> Result<Option<StrongSignChange>, BicharError> {
    let ts = grid(g, opts.grid);
    let mut signs = Vec::with_capacity(ts.len());
    for &t in &ts {
        signs.push(sign_on(p, g, t, opts.tol)?);
    }
    let mut best: Option<(usize, usize)> = None;
    let mut last_neg: Option<usize> = None;
    for i in 0..ts.len() {
        match signs[i] {
            s if s < 0 => last_neg = Some(i),
            s if s > 0 => {
                if let Some(ln) = last_neg {
                    if best.map_or(true, |(bn, bp)| ts[i] - ts[ln] < ts[bp] - ts[bn]) {
                        best = Some((ln, i));
                    }
                    // later positives of the same run only widen the gap
                    last_neg = None;
                }
            }
            _ => {}
        }
    }
    let (neg, pos) = match best {
        Some(b) => b,
        None => return Ok(None),
    };
    let (sm, mut a1, mut b1, sp) = refine_pair(p, g, &ts, neg, pos, opts)?;
    if b1 < a1 {
        let mid = 0.5 * (a1 + b1);
        a1 = mid;
        b1 = mid;
    }

    let mut vanishes = true;
    let checks = 200;
    for k in 0..=checks {
        let t = a1 + (b1 - a1) * k as f64 / checks as f64;
        if sign_on(p, g, t, opts.tol)? != 0 {
            vanishes = false;
            break;
        }
    }

    let mut converged = true;
    let mut eps = 0.25 * g.length();
    while eps > 10.0 * opts.refine {
        let below = sm > a1 - eps || sign_on(p, g, a1 - 0.5 * eps, opts.tol)? < 0;
        let above = sp < b1 + eps || sign_on(p, g, b1 + 0.5 * eps, opts.tol)? > 0;
        if !(below && above) {
            converged = false;
            break;
        }
        eps *= 0.5;
    }
    Ok(Some(StrongSignChange {
        a_prime: a1,
        b_prime: b1,
        s_minus: sm,
        s_plus: sp,
        vanishes_inside: vanishes,
        witnesses_converged: converged,
    }))
}

/// Signs of `Im p` on an `(x1, x2)` grid, other coordinates frozen at
/// `x_rest = (x3..xn)` and `xi = (0, xi')`. Rows run over `x2`.
pub fn sign_grid(
    p: &Expr,
    n: usize,
    x1: (f64, f64, usize),
    x2: (f64, f64, usize),
    x_rest: &[f64],
    xi_prime: &[f64],
    tol: f64,
) -> Result<Vec<Vec<i8>>, BicharError> {
    let mut xi = vec![0.0];
    xi.extend_from_slice(xi_prime);
    let step = |r: (f64, f64, usize), i: usize| {
        if r.2 <= 1 {
            r.0
        } else {
            r.0 + (r.1 - r.0) * i as f64 / (r.2 - 1) as f64
        }
    };
    let mut rows = Vec::with_capacity(x2.2);
    for j in 0..x2.2 {
        let mut row = Vec::with_capacity(x1.2);
        for i in 0..x1.2 {
            let mut x = vec![step(x1, i), step(x2, j)];
            x.extend_from_slice(x_rest);
            x.truncate(n);
            row.push(im_sign(p, &x, &xi, tol)? as i8);
        }
        rows.push(row);
    }
    Ok(rows)
}
