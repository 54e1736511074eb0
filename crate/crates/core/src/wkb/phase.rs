use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::expand::{expand_along, expand_fiber_at, DeltaPowers};
use super::poly::{factorial_u8, TPoly};
use super::{hermite, WkbError};
use crate::jet::multi_indices;
use crate::ode::{integrate_to, OdeError, OdeOptions};
use crate::symexpr::{Expr, Var};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone)]
pub struct PhaseOptions {
    /// Expansion order `M`.
    pub m: usize,
    pub ode: OdeOptions,
    /// Number of output samples over the time span.
    pub samples: usize,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions { m: 3, ode: OdeOptions::default(), samples: 201 }
    }
}

/// Phase data at one time.
#[derive(Debug, Clone)]
pub struct PhaseState {
    pub t: f64,
    pub y: Vec<f64>,
    pub eta: Vec<f64>,
    pub w0: Complex64,
    /// Polynomial part `sum w_alpha z^alpha / alpha!` over `2 <= |alpha| <= M`.
    pub poly: TPoly,
}

impl PhaseState {
    pub fn d(&self) -> usize {
        self.y.len()
    }

    /// `w_jk`, symmetric in `j, k`.
    pub fn w_jk(&self, j: usize, k: usize) -> Complex64 {
        let mut a = vec![0u8; self.d()];
        a[j] += 1;
        a[k] += 1;
        self.poly.coeff(&a) * factorial_u8(&a)
    }

    pub fn w_alpha(&self, a: &[u8]) -> Complex64 {
        self.poly.coeff(a) * factorial_u8(a)
    }

    /// `w(t, y + z)`.
    pub fn value(&self, z: &[f64]) -> Complex64 {
        let lin: f64 = z.iter().zip(&self.eta).map(|(a, b)| a * b).sum();
        self.w0 + lin + self.poly.eval(z)
    }

    /// `d_x w(t, y + z)`.
    pub fn gradient(&self, z: &[f64]) -> Vec<Complex64> {
        (0..self.d()).map(|k| self.eta[k] + self.poly.derivative(k).eval(z)).collect()
    }

    /// Smallest eigenvalue of `Im w_jk - delta_jk / 2`.
    pub fn pd_margin(&self) -> f64 {
        let d = self.d();
        let m = DMatrix::from_fn(d, d, |j, k| self.w_jk(j, k).im - if j == k { 0.5 } else { 0.0 });
        SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Solution of the eiconal system along `x = y(t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseExpansion {
    pub n: usize,
    pub m: usize,
    pub t_mid: f64,
    pub t_grid: Vec<f64>,
    pub w0: Vec<Complex64>,
    pub y: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    /// Multi-indices `2 <= |alpha| <= M` labelling `w_alpha`.
    pub alphas: Vec<Vec<u8>>,
    pub w_alpha: Vec<Vec<Complex64>>,
    /// Smallest eigenvalue of `Im w_jk - delta_jk / 2` at each sample.
    pub pd_margin: Vec<f64>,
    rates: Vec<Vec<f64>>,
}

struct Layout {
    d: usize,
    m: usize,
    alphas: Vec<Vec<u8>>,
}

impl Layout {
    fn new(d: usize, m: usize) -> Layout {
        let alphas = multi_indices(d, m)
            .into_iter()
            .filter(|a| a.iter().map(|&v| v as usize).sum::<usize>() >= 2)
            .collect();
        Layout { d, m, alphas }
    }

    fn len(&self) -> usize {
        2 * self.d + 2 + 2 * self.alphas.len()
    }

    fn unpack(&self, t: f64, s: &[f64]) -> PhaseState {
        let d = self.d;
        let mut poly = TPoly::zeros(d, self.m);
        for (i, a) in self.alphas.iter().enumerate() {
            let w = Complex64::new(s[2 * d + 2 + 2 * i], s[2 * d + 3 + 2 * i]);
            let pos = poly.position(a).unwrap();
            poly.coeffs_mut()[pos] = w / factorial_u8(a);
        }
        PhaseState {
            t,
            y: s[..d].to_vec(),
            eta: s[d..2 * d].to_vec(),
            w0: Complex64::new(s[2 * d], s[2 * d + 1]),
            poly,
        }
    }

    fn pack(&self, st: &PhaseState) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.len());
        s.extend_from_slice(&st.y);
        s.extend_from_slice(&st.eta);
        s.push(st.w0.re);
        s.push(st.w0.im);
        for a in &self.alphas {
            let w = st.w_alpha(a);
            s.push(w.re);
            s.push(w.im);
        }
        s
    }
}

/// Time derivative of every phase quantity, with `dw_alpha/dt` in
/// derivative (not Taylor) normalization, plus the expansion `G` of
/// `f(t, y + z, d_x w)`.
struct Rates {
    dy: Vec<f64>,
    deta: Vec<f64>,
    dw0: Complex64,
    dw: Vec<Complex64>,
}

fn phase_rates(f: &Expr, layout: &Layout, st: &PhaseState) -> Result<Rates, WkbError> {
    let d = layout.d;
    let m = layout.m;
    let delta: Vec<TPoly> = (0..d).map(|k| st.poly.derivative(k)).collect();
    let mut pw = DeltaPowers::new(&delta);
    let g = expand_along(f, st.t, &st.y, &st.eta, &mut pw, m)?;
    let mut unit = vec![0u8; d];
    let g1: Vec<Complex64> = (0..d)
        .map(|j| {
            unit[j] = 1;
            let c = g.coeff(&unit);
            unit[j] = 0;
            c
        })
        .collect();
    let im_w = DMatrix::from_fn(d, d, |j, k| st.w_jk(j, k).im);
    let re_w = DMatrix::from_fn(d, d, |j, k| st.w_jk(j, k).re);
    let rhs = DVector::from_fn(d, |j, _| -g1[j].re);
    let dy = im_w.lu().solve(&rhs).ok_or(WkbError::Singular(st.t))?;
    let deta = &re_w * &dy - DVector::from_fn(d, |j, _| g1[j].im);
    let dy: Vec<f64> = dy.iter().copied().collect();
    let deta: Vec<f64> = deta.iter().copied().collect();
    let dw0 = dy.iter().zip(&st.eta).map(|(a, b)| a * b).sum::<f64>() + I * g.coeff(&vec![0u8; d]);
    let mut dw = Vec::with_capacity(layout.alphas.len());
    let mut shifted = vec![0u8; d];
    for a in &layout.alphas {
        let deg: usize = a.iter().map(|&v| v as usize).sum();
        let mut acc = I * factorial_u8(a) * g.coeff(a);
        if deg < m {
            for k in 0..d {
                shifted.copy_from_slice(a);
                shifted[k] += 1;
                acc += dy[k] * st.w_alpha(&shifted);
            }
        }
        dw.push(acc);
    }
    Ok(Rates { dy, deta, dw0, dw })
}

fn pack_rates(r: &Rates) -> Vec<f64> {
    let mut s = Vec::new();
    s.extend_from_slice(&r.dy);
    s.extend_from_slice(&r.deta);
    s.push(r.dw0.re);
    s.push(r.dw0.im);
    for w in &r.dw {
        s.push(w.re);
        s.push(w.im);
    }
    s
}

fn check_f(f: &Expr, n: usize) -> Result<(), WkbError> {
    if f.depends_on(Var::Xi(0)) {
        return Err(WkbError::DependsOnXi1);
    }
    if f.max_index() > n {
        return Err(WkbError::DimensionMismatch { expected: n, got: f.max_index() });
    }
    Ok(())
}

/// Solve the eiconal system on `t_span` with `y = x0`, `eta = xi0`,
/// `w_jk = i delta_jk` and higher `w_alpha = 0` at the midpoint.
///
/// The system is integrated outward from the midpoint in both directions.
/// Positive definiteness of `Im w_jk - delta_jk / 2` is checked after every
/// accepted step.
pub fn solve_phase_system(
    f: &Expr,
    n: usize,
    x0: &[f64],
    xi0: &[f64],
    t_span: (f64, f64),
    opts: &PhaseOptions,
) -> Result<PhaseExpansion, WkbError> {
    let d = n.checked_sub(1).filter(|&d| d >= 1).ok_or(WkbError::DimensionMismatch { expected: 2, got: n })?;
    if x0.len() != d || xi0.len() != d {
        return Err(WkbError::DimensionMismatch { expected: d, got: x0.len().min(xi0.len()) });
    }
    if !(2..=8).contains(&opts.m) {
        return Err(WkbError::BadOrder(opts.m));
    }
    check_f(f, n)?;
    let layout = Layout::new(d, opts.m);
    let (a, b) = t_span;
    let t_mid = 0.5 * (a + b);
    let mut poly = TPoly::zeros(d, opts.m);
    for j in 0..d {
        let mut e = vec![0u8; d];
        e[j] = 2;
        let pos = poly.position(&e).unwrap();
        poly.coeffs_mut()[pos] = I * 0.5;
    }
    let init = PhaseState { t: t_mid, y: x0.to_vec(), eta: xi0.to_vec(), w0: Complex64::new(0.0, 0.0), poly };
    let s0 = layout.pack(&init);

    let samples = opts.samples.max(3) | 1;
    let half = samples / 2;
    let up: Vec<f64> = (0..=half).map(|i| t_mid + (b - t_mid) * i as f64 / half as f64).collect();
    let down: Vec<f64> = (0..=half).map(|i| t_mid + (a - t_mid) * i as f64 / half as f64).collect();

    let run = |times: &[f64]| -> Result<Vec<Vec<f64>>, WkbError> {
        let mut failure: Option<WkbError> = None;
        let mut pd_fail: Option<(f64, f64)> = None;
        let res = integrate_to(
            |t, s, ds| match phase_rates(f, &layout, &layout.unpack(t, s)) {
                Ok(r) => {
                    ds.copy_from_slice(&pack_rates(&r));
                    Ok(())
                }
                Err(e) => {
                    let msg = e.to_string();
                    failure = Some(e);
                    Err(msg)
                }
            },
            &s0,
            times,
            &opts.ode,
            |t, s| {
                let margin = layout.unpack(t, s).pd_margin();
                if margin > 0.0 {
                    Ok(())
                } else {
                    pd_fail = Some((t, margin));
                    Err("positive definiteness lost".into())
                }
            },
        );
        match res {
            Ok(v) => Ok(v),
            Err(e) => {
                if let Some((t, m)) = pd_fail {
                    return Err(WkbError::PositiveDefinitenessLost { t, min_eigen: m });
                }
                if let (Some(inner), OdeError::Aborted { .. }) = (failure, &e) {
                    return Err(inner);
                }
                Err(e.into())
            }
        }
    };
    let fwd = run(&up)?;
    let bwd = run(&down)?;

    let mut ts: Vec<f64> = down.iter().rev().copied().collect();
    let mut states: Vec<Vec<f64>> = bwd.into_iter().rev().collect();
    ts.extend_from_slice(&up[1..]);
    states.extend(fwd.into_iter().skip(1));

    let mut out = PhaseExpansion {
        n,
        m: opts.m,
        t_mid,
        t_grid: ts.clone(),
        w0: Vec::with_capacity(ts.len()),
        y: Vec::with_capacity(ts.len()),
        eta: Vec::with_capacity(ts.len()),
        alphas: layout.alphas.clone(),
        w_alpha: Vec::with_capacity(ts.len()),
        pd_margin: Vec::with_capacity(ts.len()),
        rates: Vec::with_capacity(ts.len()),
    };
    for (t, s) in ts.iter().zip(&states) {
        let st = layout.unpack(*t, s);
        out.rates.push(pack_rates(&phase_rates(f, &layout, &st)?));
        out.pd_margin.push(st.pd_margin());
        out.w0.push(st.w0);
        out.y.push(st.y.clone());
        out.eta.push(st.eta.clone());
        out.w_alpha.push(layout.alphas.iter().map(|a| st.w_alpha(a)).collect());
    }
    Ok(out)
}

impl PhaseExpansion {
    pub fn d(&self) -> usize {
        self.n - 1
    }

    fn layout(&self) -> Layout {
        Layout::new(self.d(), self.m)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t_grid[0], *self.t_grid.last().unwrap())
    }

    fn packed(&self, i: usize) -> Vec<f64> {
        let mut s = Vec::new();
        s.extend_from_slice(&self.y[i]);
        s.extend_from_slice(&self.eta[i]);
        s.push(self.w0[i].re);
        s.push(self.w0[i].im);
        for w in &self.w_alpha[i] {
            s.push(w.re);
            s.push(w.im);
        }
        s
    }

    pub fn state(&self, i: usize) -> PhaseState {
        self.layout().unpack(self.t_grid[i], &self.packed(i))
    }

    /// Phase data at any `t` of the span (cubic Hermite in time).
    pub fn state_at(&self, t: f64) -> Result<PhaseState, WkbError> {
        let ys: Vec<Vec<f64>> = (0..self.t_grid.len()).map(|i| self.packed(i)).collect();
        let s = hermite(&self.t_grid, &ys, &self.rates, t).ok_or(WkbError::OutOfRange(t))?;
        Ok(self.layout().unpack(t, &s))
    }

    /// `dy/dt` at any `t` of the span, from the eiconal system itself.
    pub(crate) fn dy_at(&self, f: &Expr, t: f64) -> Result<(PhaseState, Vec<f64>), WkbError> {
        let st = self.state_at(t)?;
        let r = phase_rates(f, &self.layout(), &st)?;
        Ok((st, r.dy))
    }

    /// `w(t, x)`.
    pub fn value(&self, t: f64, x: &[f64]) -> Result<Complex64, WkbError> {
        let st = self.state_at(t)?;
        let z: Vec<f64> = x.iter().zip(&st.y).map(|(a, b)| a - b).collect();
        Ok(st.value(&z))
    }

    /// `max_t (Im w_jk - delta_jk/2)` smallest eigenvalue, over the samples.
    pub fn min_pd_margin(&self) -> f64 {
        self.pd_margin.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest asymmetry `|w_jk - w_kj|`; zero by construction of the storage.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.d();
        let mut worst = 0.0f64;
        for i in 0..self.t_grid.len() {
            let st = self.state(i);
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max((st.w_jk(j, k) - st.w_jk(k, j)).norm());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeMode {
    Point,
    Interval,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct W0Normalization {
    pub mode: NormalizeMode,
    /// Time where `w0 = 0` after normalization.
    pub c_prime: f64,
    /// Sample range where `Im w0` is within the core tolerance of its minimum.
    pub core: (f64, f64),
    pub endpoint_im: (f64, f64),
    pub shift: Complex64,
}

/// Subtract a constant from `w0` so that `min Im w0 = 0` and `Re w0 = 0`
/// at the minimizer (point mode) or at the middle of the flat core
/// (interval mode). Both end values of `Im w0` must stay positive.
pub fn normalize_w0(
    phase: &PhaseExpansion,
    mode: NormalizeMode,
    core_tol: f64,
) -> Result<(PhaseExpansion, W0Normalization), WkbError> {
    let im: Vec<f64> = phase.w0.iter().map(|w| w.im).collect();
    let last = im.len() - 1;
    let (imin, vmin) = im.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let mut lo = imin;
    let mut hi = imin;
    while lo > 0 && im[lo - 1] - vmin <= core_tol {
        lo -= 1;
    }
    while hi < last && im[hi + 1] - vmin <= core_tol {
        hi += 1;
    }
    if lo == 0 || hi == last {
        return Err(WkbError::NoInteriorMinimum);
    }
    let centre = match mode {
        NormalizeMode::Point => imin,
        NormalizeMode::Interval => (lo + hi) / 2,
    };
    let shift = phase.w0[centre];
    let mut out = phase.clone();
    for w in &mut out.w0 {
        *w -= shift;
    }
    let ends = (out.w0[0].im, out.w0[last].im);
    if !(ends.0 > 0.0 && ends.1 > 0.0) {
        return Err(WkbError::EndpointNotPositive(ends.0, ends.1));
    }
    let info = W0Normalization {
        mode,
        c_prime: phase.t_grid[centre],
        core: (phase.t_grid[lo], phase.t_grid[hi]),
        endpoint_im: ends,
        shift,
    };
    Ok((out, info))
}

/// `max |d_t w - i f~(t, x, d_x w)|` over `|x - y(t)| = h` at the sample
/// nearest to `t`, where `f~` is the order-`M` fiber expansion about `eta`.
pub fn eiconal_residual(phase: &PhaseExpansion, f: &Expr, t: f64, h: f64, directions: usize) -> Result<f64, WkbError> {
    let d = phase.d();
    let layout = phase.layout();
    let i = phase.t_grid.partition_point(|&s| s < t).min(phase.t_grid.len() - 1);
    let st = phase.state(i);
    let r = phase_rates(f, &layout, &st)?;
    let mut dpoly = TPoly::zeros(d, phase.m);
    for (a, dw) in layout.alphas.iter().zip(&r.dw) {
        let pos = dpoly.position(a).unwrap();
        dpoly.coeffs_mut()[pos] = dw / factorial_u8(a);
    }
    let dirs = unit_directions(d, directions.max(1));
    let mut worst = 0.0f64;
    for u in &dirs {
        let z: Vec<f64> = u.iter().map(|v| v * h).collect();
        let x: Vec<f64> = z.iter().zip(&st.y).map(|(a, b)| a + b).collect();
        let lin_y: f64 = r.dy.iter().zip(&st.eta).map(|(a, b)| a * b).sum();
        let lin_eta: f64 = z.iter().zip(&r.deta).map(|(a, b)| a * b).sum();
        let transport: Complex64 = (0..d).map(|k| r.dy[k] * st.poly.derivative(k).eval(&z)).sum();
        let dt_w = r.dw0 - lin_y + lin_eta + dpoly.eval(&z) - transport;
        let delta: Vec<Complex64> = (0..d).map(|k| st.poly.derivative(k).eval(&z)).collect();
        let fv = expand_fiber_at(f, st.t, &x, &st.eta, &delta, phase.m)?;
        worst = worst.max((dt_w - I * fv).norm());
    }
    Ok(worst)
}

fn unit_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    if d == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    let mut out = Vec::new();
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; d];
            u[k] = s;
            out.push(u);
        }
    }
    // deterministic spread of extra directions
    for j in 0..count {
        let mut u: Vec<f64> = (0..d).map(|k| ((j * (2 * k + 3) + k) as f64 * 0.754_877_666).sin()).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-3 {
            u.iter_mut().for_each(|v| *v /= norm);
            out.push(u);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EiconalFit {
    pub hs: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
}

/// Log-log slope of the eiconal residual against the radius `h`.
pub fn eiconal_slope(phase: &PhaseExpansion, f: &Expr, t: f64, hs: &[f64]) -> Result<EiconalFit, WkbError> {
    let mut res = Vec::with_capacity(hs.len());
    for &h in hs {
        res.push(eiconal_residual(phase, f, t, h, 8)?);
    }
    let pts: Vec<(f64, f64)> = hs.iter().zip(&res).filter(|(_, r)| **r > 0.0).map(|(h, r)| (h.ln(), r.ln())).collect();
    let slope = if pts.len() < 2 {
        f64::INFINITY
    } else {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(EiconalFit { hs: hs.to_vec(), residuals: res, slope })
}
