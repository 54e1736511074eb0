use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sign::{im_sign, strong_sign_change, SignOptions, StrongSignChange};
use super::{Bicharacteristic, BicharError};
use crate::jet::jet_of;
use crate::symexpr::Expr;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimalityOptions {
    /// Largest transverse offset; offsets are `2^-k eps0`, `k = 0..=k_max`.
    pub eps0: f64,
    pub k_max: usize,
    /// Unit direction in `w = (x', xi')`; defaults to the `x2` axis.
    pub direction: Option<Vec<f64>>,
    pub sign: SignOptions,
    /// Agreement threshold between the two `L` estimates; defaults to
    /// `0.1 min(1, |gamma|)`.
    pub tol_l: Option<f64>,
    /// Number of `kappa` values for the rho search.
    pub rho_grid: usize,
    pub seed: u64,
}

impl Default for MinimalityOptions {
    fn default() -> Self {
        MinimalityOptions {
            eps0: 0.25,
            k_max: 12,
            direction: None,
            sign: SignOptions::default(),
            tol_l: None,
            rho_grid: 20,
            seed: 7,
        }
    }
}

impl MinimalityOptions {
    fn direction_for(&self, n: usize) -> Vec<f64> {
        match &self.direction {
            Some(d) => {
                let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                d.iter().map(|v| v / len).collect()
            }
            None => {
                let mut d = vec![0.0; 2 * (n - 1)];
                d[0] = 1.0;
                d
            }
        }
    }

    fn tol_for(&self, g: &Bicharacteristic) -> f64 {
        self.tol_l.unwrap_or(0.1 * g.length().min(1.0))
    }
}

/// Results for transverse offsets on one side of `w0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SideReport {
    pub side: i8,
    pub offsets: Vec<f64>,
    /// `b' - a'` of the strong sign change at each offset, if any.
    pub lengths: Vec<Option<f64>>,
    /// In-slice infimum `inf (t - s)` at each offset, if any.
    pub gaps: Vec<Option<f64>>,
    pub l_sequence: Option<f64>,
    pub l_infimum: Option<f64>,
    /// Interval at the smallest offset with a strong sign change.
    pub interval: Option<(f64, f64)>,
    pub witnesses: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub gamma: (f64, f64),
    /// Sequence-based estimate, the smaller over both sides.
    pub l_estimate: Option<f64>,
    pub l_sequence: Option<f64>,
    pub l_infimum: Option<f64>,
    pub converged: bool,
    /// Sampled lim-inf is an upper bound for the infimum over all sequences.
    pub one_sided: bool,
    pub sides: Vec<SideReport>,
    pub side: Option<i8>,
    pub interval: Option<(f64, f64)>,
    pub rho: Option<f64>,
    pub witnesses: Vec<(f64, f64)>,
    /// Transverse derivatives of `Im p` vanish on a non-degenerate interval.
    pub derivative_check: Option<bool>,
}

fn tail_min(values: &[Option<f64>], from: usize) -> Option<f64> {
    values.iter().skip(from).flatten().copied().fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
}

fn side_report(p: &Expr, g: &Bicharacteristic, side: i8, opts: &MinimalityOptions) -> Result<SideReport, BicharError> {
    let dir = opts.direction_for(g.n);
    let mut rep = SideReport {
        side,
        offsets: Vec::new(),
        lengths: Vec::new(),
        gaps: Vec::new(),
        l_sequence: None,
        l_infimum: None,
        interval: None,
        witnesses: Vec::new(),
    };
    let mut found: Vec<Option<StrongSignChange>> = Vec::new();
    for k in 0..=opts.k_max {
        let delta = side as f64 * opts.eps0 * 0.5f64.powi(k as i32);
        let shift: Vec<f64> = dir.iter().map(|d| d * delta).collect();
        let gk = g.shifted(&shift, 2)?;
        let ssc = strong_sign_change(p, &gk, &opts.sign)?.filter(|s| s.vanishes_inside);
        rep.offsets.push(delta);
        rep.lengths.push(ssc.as_ref().map(|s| s.length()));
        rep.gaps.push(ssc.as_ref().map(|s| s.gap()));
        found.push(ssc);
    }
    let from = opts.k_max / 2;
    rep.l_sequence = tail_min(&rep.lengths, from);
    rep.l_infimum = tail_min(&rep.gaps, from);
    if let Some(s) = found.iter().rev().flatten().next() {
        rep.interval = Some((s.a_prime, s.b_prime));
    }
    rep.witnesses = found.iter().skip(from).flatten().map(|s| (s.s_minus, s.s_plus)).collect();
    Ok(rep)
}

fn pick_side(sides: &[SideReport]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in sides.iter().enumerate() {
        if let Some(l) = s.l_sequence {
            if best.map_or(true, |b| l < sides[b].l_sequence.unwrap() - 1e-9) {
                best = Some(i);
            }
        }
    }
    best
}

/// Estimate `L_p(gamma)` for a curve in normal form from strong sign changes
/// on nearby curves `w0 +- 2^-k eps0 * direction`.
pub fn estimate_l(p: &Expr, g: &Bicharacteristic, opts: &MinimalityOptions) -> Result<MinimalityReport, BicharError> {
    if g.label.is_none() {
        return Err(BicharError::BadLabel(0, 2 * (g.n - 1)));
    }
    let sides = vec![side_report(p, g, 1, opts)?, side_report(p, g, -1, opts)?];
    let min_of = |f: &dyn Fn(&SideReport) -> Option<f64>| {
        sides.iter().filter_map(f).fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    };
    let l_sequence = min_of(&|s| s.l_sequence);
    let l_infimum = min_of(&|s| s.l_infimum);
    let converged = match (l_sequence, l_infimum) {
        (Some(a), Some(b)) => (a - b).abs() < opts.tol_for(g),
        _ => false,
    };
    Ok(MinimalityReport {
        gamma: (g.a, g.b),
        l_estimate: l_sequence,
        l_sequence,
        l_infimum,
        converged,
        one_sided: true,
        sides,
        side: None,
        interval: None,
        rho: None,
        witnesses: Vec::new(),
        derivative_check: None,
    })
}

/// Minimal interval inside `gamma` as the limit of the strong-sign-change
/// intervals on the approach side (the side with the smaller `L`, or the
/// one requested).
pub fn find_minimal_interval(
    p: &Expr,
    g: &Bicharacteristic,
    side: Option<i8>,
    opts: &MinimalityOptions,
) -> Result<MinimalityReport, BicharError> {
    let mut rep = estimate_l(p, g, opts)?;
    let idx = match side {
        Some(s) => rep.sides.iter().position(|r| r.side == s.signum()),
        None => pick_side(&rep.sides),
    };
    if let Some(i) = idx {
        let s = &rep.sides[i];
        rep.side = Some(s.side);
        rep.interval = s.interval;
        rep.witnesses = s.witnesses.clone();
        if let Some(l) = s.l_sequence {
            rep.l_estimate = Some(l);
        }
    }
    if let Some((a0, b0)) = rep.interval {
        if b0 - a0 > 1e-6 {
            rep.derivative_check = Some(transverse_derivatives_vanish(p, g, a0, b0, 4, 1e-6)?);
        }
    }
    Ok(rep)
}

/// All derivatives of `Im p` without a `xi1` direction, up to `order`,
/// below `tol` at sample points of `[a0, b0]` on the curve.
fn transverse_derivatives_vanish(
    p: &Expr,
    g: &Bicharacteristic,
    a0: f64,
    b0: f64,
    order: usize,
    tol: f64,
) -> Result<bool, BicharError> {
    let n = g.n;
    let count = 21;
    for k in 0..count {
        let t = a0 + (b0 - a0) * k as f64 / (count - 1) as f64;
        let (x, xi) = g.point_at(t);
        let j = jet_of(p, &x, &xi, order)?;
        for pos in 0..j.len() {
            if j.index_at(pos)[n] != 0 {
                continue;
            }
            if j.derivative_at(pos).im.abs() >= tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoReport {
    pub rho: f64,
    /// False when no `kappa` below the cap `|Gamma|/2` was certified.
    pub certified: bool,
    /// `(kappa, certified radius)` pairs, largest `kappa` first.
    pub checks: Vec<(f64, Option<f64>)>,
}

fn unit_directions(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[i] = s;
            dirs.push(d);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..8 {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = v.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
        dirs.push(v.iter().map(|c| c / len).collect());
    }
    dirs
}

fn tube_vanishes(
    p: &Expr,
    g: &Bicharacteristic,
    lo: f64,
    hi: f64,
    radius: f64,
    dirs: &[Vec<f64>],
    tol: f64,
) -> Result<bool, BicharError> {
    let w0 = g.label.as_ref().unwrap();
    let n = g.n;
    let count = 41;
    for k in 0..count {
        let t = if count == 1 { lo } else { lo + (hi - lo) * k as f64 / (count - 1) as f64 };
        for scale in [1.0, 0.5, 0.25, 0.125] {
            for d in dirs {
                let w: Vec<f64> = w0.iter().zip(d).map(|(a, b)| a + radius * scale * b).collect();
                let mut x = vec![t];
                x.extend_from_slice(&w[..n - 1]);
                let mut xi = vec![0.0];
                xi.extend_from_slice(&w[n - 1..]);
                if im_sign(p, &x, &xi, tol)? != 0 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Smallest `rho` on the grid `kappa_j = j |Gamma| / (2 N)` such that `Im p`
/// vanishes on a tube `[a0 + kappa, b0 - kappa] x ball(w0, r)` for every
/// grid `kappa > rho`. `None` for a degenerate interval.
pub fn rho_minimality(
    p: &Expr,
    g: &Bicharacteristic,
    interval: (f64, f64),
    opts: &MinimalityOptions,
) -> Result<Option<RhoReport>, BicharError> {
    let (a0, b0) = interval;
    let len = b0 - a0;
    if g.label.is_none() {
        return Err(BicharError::BadLabel(0, 2 * (g.n - 1)));
    }
    if len <= 1e-6 {
        return Ok(None);
    }
    let dirs = unit_directions(2 * (g.n - 1), opts.seed);
    let grid = opts.rho_grid.max(1);
    let step = len / (2 * grid) as f64;
    let mut checks = Vec::new();
    for j in (0..grid).rev() {
        let kappa = j as f64 * step;
        let mut certified = None;
        for m in 0..=opts.k_max {
            let r = opts.eps0 * 0.5f64.powi(m as i32);
            if tube_vanishes(p, g, a0 + kappa, b0 - kappa, r, &dirs, opts.sign.tol)? {
                certified = Some(r);
                break;
            }
        }
        checks.push((kappa, certified));
        if certified.is_none() {
            let capped = j + 1 == grid;
            let rho = if capped { len / 2.0 } else { kappa };
            return Ok(Some(RhoReport { rho, certified: !capped, checks }));
        }
    }
    Ok(Some(RhoReport { rho: 0.0, certified: true, checks }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxEntry {
    pub j: usize,
    pub offset: f64,
    pub interval: (f64, f64),
    pub rho: Option<f64>,
    pub hausdorff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxSequence {
    pub entries: Vec<ApproxEntry>,
    /// Some offset had no strong sign change on either side.
    pub exhausted: bool,
}

fn hausdorff(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// Strong-sign-change intervals at offsets `eps0 / j`, on whichever side
/// lands closest to `Gamma`, each with its rho certificate.
pub fn approximating_sequence(
    p: &Expr,
    g: &Bicharacteristic,
    interval: (f64, f64),
    count: usize,
    opts: &MinimalityOptions,
) -> Result<ApproxSequence, BicharError> {
    let dir = opts.direction_for(g.n);
    let mut out = ApproxSequence { entries: Vec::new(), exhausted: false };
    for j in 1..=count {
        let mut best: Option<(f64, Bicharacteristic, (f64, f64))> = None;
        for side in [1.0, -1.0] {
            let delta = side * opts.eps0 / j as f64;
            let shift: Vec<f64> = dir.iter().map(|d| d * delta).collect();
            let gj = g.shifted(&shift, 2)?;
            if let Some(s) = strong_sign_change(p, &gj, &opts.sign)?.filter(|s| s.vanishes_inside) {
                let iv = (s.a_prime, s.b_prime);
                let better = best.as_ref().map_or(true, |(_, _, b)| hausdorff(iv, interval) < hausdorff(*b, interval));
                if better {
                    best = Some((delta, gj, iv));
                }
            }
        }
        match best {
            None => {
                out.exhausted = true;
                break;
            }
            Some((offset, gj, iv)) => {
                let rho = rho_minimality(p, &gj, iv, opts)?.map(|r| r.rho);
                out.entries.push(ApproxEntry { j, offset, interval: iv, rho, hausdorff: hausdorff(iv, interval) });
            }
        }
    }
    Ok(out)
}
