use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::{model_gradient, model_phase};
use super::phase::PhaseExpansion;
use super::poly::TPoly;
use super::transport::AmplitudeSet;
use super::WkbError;

/// Smooth step: `1` for `u <= 0`, `0` for `u >= 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    if u >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / (1.0 - u)).exp();
    let b = (-1.0 / u).exp();
    a / (a + b)
}

/// Radial cutoff equal to `1` on half the radius.
fn radial_cutoff(r: f64, radius: f64) -> f64 {
    smooth_step(2.0 * r / radius - 1.0)
}

/// Periodic box grid: `dims[k]` points `lo[k] + i h_k`, `h_k = (hi[k] - lo[k]) / dims[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub dims: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, dims: Vec<usize>) -> Result<GridSpec, WkbError> {
        if lo.len() != hi.len() || lo.len() != dims.len() || lo.is_empty() {
            return Err(WkbError::BadGrid("lo, hi and dims must have the same positive length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) || dims.iter().any(|&d| d == 0) {
            return Err(WkbError::BadGrid("empty box or zero points".into()));
        }
        Ok(GridSpec { lo, hi, dims })
    }

    /// Cube `[c - half, c + half)^n` with `points` per axis.
    pub fn cube(center: &[f64], half: f64, points: usize) -> Result<GridSpec, WkbError> {
        GridSpec::new(
            center.iter().map(|c| c - half).collect(),
            center.iter().map(|c| c + half).collect(),
            vec![points; center.len()],
        )
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Vec<f64> {
        (0..self.n()).map(|k| (self.hi[k] - self.lo[k]) / self.dims[k] as f64).collect()
    }

    /// Point of flat (row-major, last axis fastest) index `i`.
    pub fn point(&self, mut i: usize) -> Vec<f64> {
        let h = self.spacing();
        let mut x = vec![0.0; self.n()];
        for k in (0..self.n()).rev() {
            let j = i % self.dims[k];
            i /= self.dims[k];
            x[k] = self.lo[k] + j as f64 * h[k];
        }
        x
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }
}

/// Complex samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub data: Vec<Complex64>,
}

impl GridFunction {
    pub fn from_fn<F: FnMut(&[f64]) -> Complex64>(spec: GridSpec, mut f: F) -> GridFunction {
        let data = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        GridFunction { spec, data }
    }

    /// `sum |u|^2 h^n`.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.spec.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Little-endian layout: `n` (u32), `dims` (u32 each), `lo`, `hi`
    /// (f64 each), then interleaved `re, im` doubles.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.spec.n();
        let mut out = Vec::with_capacity(4 + 4 * n + 16 * n + 16 * self.data.len());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        for &d in &self.spec.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in self.spec.lo.iter().chain(&self.spec.hi) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for c in &self.data {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<GridFunction, WkbError> {
        let bad = || WkbError::BadGrid("truncated grid file".into());
        let mut pos = 0usize;
        let mut take = |k: usize| -> Result<&[u8], WkbError> {
            let s = bytes.get(pos..pos + k).ok_or_else(bad)?;
            pos += k;
            Ok(s)
        };
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap()) as usize;
        let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
        let n = u32_at(take(4)?);
        let mut dims = Vec::with_capacity(n);
        for _ in 0..n {
            dims.push(u32_at(take(4)?));
        }
        let mut lo = Vec::with_capacity(n);
        for _ in 0..n {
            lo.push(f64_at(take(8)?));
        }
        let mut hi = Vec::with_capacity(n);
        for _ in 0..n {
            hi.push(f64_at(take(8)?));
        }
        let spec = GridSpec::new(lo, hi, dims)?;
        let mut data = Vec::with_capacity(spec.len());
        for _ in 0..spec.len() {
            let re = f64_at(take(8)?);
            let im = f64_at(take(8)?);
            data.push(Complex64::new(re, im));
        }
        Ok(GridFunction { spec, data })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SolutionKind {
    /// Closed-form phase of the model operator, amplitude a power series in `x`,
    /// support in the ball of radius `radius` about the origin.
    Model { amplitude: TPoly },
    /// Phase and amplitude along a curve; support `|x - y(t)| <= radius`
    /// and `t` in `t_range`.
    Expansion { phase: PhaseExpansion, amplitudes: AmplitudeSet, t_range: (f64, f64) },
}

/// `v(x) = tau^(N+n) e^{i tau w(x)} chi(x) phi_0(x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxSolution {
    pub n: usize,
    pub tau: f64,
    pub big_n: i32,
    pub radius: f64,
    pub kind: SolutionKind,
}

impl ApproxSolution {
    pub fn with_tau(&self, tau: f64) -> ApproxSolution {
        ApproxSolution { tau, ..self.clone() }
    }

    pub fn prefactor(&self) -> f64 {
        self.tau.powi(self.big_n + self.n as i32)
    }

    fn cutoff(&self, x: &[f64]) -> Result<(f64, Vec<f64>), WkbError> {
        match &self.kind {
            SolutionKind::Model { .. } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                Ok((radial_cutoff(r, self.radius), x.to_vec()))
            }
            SolutionKind::Expansion { phase, t_range, .. } => {
                let (a, b) = *t_range;
                let t = x[0];
                if t <= a || t >= b {
                    return Ok((0.0, Vec::new()));
                }
                let edge = 0.15 * (b - a);
                let ct = smooth_step((a + edge - t) / edge) * smooth_step((t - b + edge) / edge);
                let st = phase.state_at(t)?;
                let z: Vec<f64> = x[1..].iter().zip(&st.y).map(|(u, v)| u - v).collect();
                let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                Ok((ct * radial_cutoff(r, self.radius), z))
            }
        }
    }

    /// Value of the cutoff `chi(x)`.
    pub fn cutoff_factor(&self, x: &[f64]) -> Result<f64, WkbError> {
        Ok(self.cutoff(x)?.0)
    }

    /// `w(x)`.
    pub fn phase(&self, x: &[f64]) -> Result<Complex64, WkbError> {
        match &self.kind {
            SolutionKind::Model { .. } => Ok(model_phase(x)),
            SolutionKind::Expansion { phase, .. } => phase.value(x[0], &x[1..]),
        }
    }

    /// `d Re w(x)`.
    pub fn grad_re_phase(&self, x: &[f64]) -> Result<Vec<f64>, WkbError> {
        match &self.kind {
            SolutionKind::Model { .. } => Ok(model_gradient(x).iter().map(|c| c.re).collect()),
            SolutionKind::Expansion { .. } => {
                let mut g = Vec::with_capacity(self.n);
                let mut xp = x.to_vec();
                for k in 0..self.n {
                    let h = 1e-6;
                    xp[k] = x[k] + h;
                    let a = self.phase(&xp)?.re;
                    xp[k] = x[k] - h;
                    let b = self.phase(&xp)?.re;
                    xp[k] = x[k];
                    g.push((a - b) / (2.0 * h));
                }
                Ok(g)
            }
        }
    }

    /// `chi(x) phi_0(x)`.
    pub fn amplitude(&self, x: &[f64]) -> Result<Complex64, WkbError> {
        let (c, z) = self.cutoff(x)?;
        if c == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let a = match &self.kind {
            SolutionKind::Model { amplitude } => amplitude.eval(x),
            SolutionKind::Expansion { amplitudes, .. } => amplitudes.value(x[0], &z)?,
        };
        Ok(a * c)
    }

    pub fn value(&self, x: &[f64]) -> Result<Complex64, WkbError> {
        let a = self.amplitude(x)?;
        if a == Complex64::new(0.0, 0.0) {
            return Ok(a);
        }
        let w = self.phase(x)?;
        Ok((Complex64::new(0.0, self.tau) * w).exp() * a * self.prefactor())
    }
}

/// Sample `v_tau` on a grid after checking that the grid resolves the
/// oscillation `tau |d Re w|` on the support.
pub fn assemble_v(sol: &ApproxSolution, grid: &GridSpec) -> Result<GridFunction, WkbError> {
    if grid.n() != sol.n {
        return Err(WkbError::DimensionMismatch { expected: sol.n, got: grid.n() });
    }
    let h = grid.spacing();
    let stride = match sol.kind {
        SolutionKind::Model { .. } => 1,
        SolutionKind::Expansion { .. } => 4,
    };
    let mut data = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.point(i);
        let a = sol.amplitude(&x)?;
        if a == Complex64::new(0.0, 0.0) {
            data.push(a);
            continue;
        }
        if i % stride == 0 {
            let g = sol.grad_re_phase(&x)?;
            for k in 0..sol.n {
                let freq = sol.tau * g[k].abs();
                let nyquist = std::f64::consts::PI / h[k];
                if freq >= nyquist {
                    return Err(WkbError::GridTooCoarse { axis: k, freq, nyquist });
                }
            }
        }
        let w = sol.phase(&x)?;
        data.push((Complex64::new(0.0, sol.tau) * w).exp() * a * sol.prefactor());
    }
    Ok(GridFunction { spec: grid.clone(), data })
}
