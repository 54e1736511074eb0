use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::AsymptoticsError;
use crate::wkb::GridFunction;

const EDGE_TOL: f64 = 1e-12;

/// Largest modulus on the boundary faces of the grid box.
pub(crate) fn edge_max(g: &GridFunction) -> f64 {
    let dims = &g.spec.dims;
    let mut edge = 0.0f64;
    for (i, v) in g.data.iter().enumerate() {
        let mut r = i;
        let mut on_edge = false;
        for &d in dims.iter().rev() {
            let k = r % d;
            r /= d;
            if k == 0 || k == d - 1 {
                on_edge = true;
            }
        }
        if on_edge {
            edge = edge.max(v.norm());
        }
    }
    edge
}

/// In-place multidimensional FFT of row-major data (last axis fastest).
pub(crate) fn fft_nd(data: &mut [Complex64], dims: &[usize]) {
    let mut planner = FftPlanner::new();
    let total: usize = dims.iter().product();
    let mut stride = 1;
    for axis in (0..dims.len()).rev() {
        let m = dims[axis];
        let fft = planner.plan_fft_forward(m);
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        let block = stride * m;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                for k in 0..m {
                    line[k] = data[base + off + k * stride];
                }
                fft.process(&mut line);
                for k in 0..m {
                    data[base + off + k * stride] = line[k];
                }
            }
        }
        stride *= m;
    }
}

/// Angular frequency of FFT bin `k` out of `m` with spacing `h`.
pub(crate) fn frequency(k: usize, m: usize, h: f64) -> f64 {
    let s = if k < m.div_ceil(2) { k as f64 } else { k as f64 - m as f64 };
    2.0 * PI * s / (m as f64 * h)
}

/// `||g||_(s)^2 = (2 pi)^-n int (1 + |xi|^2)^s |g^(xi)|^2 dxi`, approximated by
/// the discrete transform of `g` zero-padded to twice the box in every
/// direction. Accurate for smooth `g` vanishing near the box boundary.
pub fn sobolev_norm(g: &GridFunction, s: f64) -> Result<f64, AsymptoticsError> {
    sobolev_norm_against(g, s, g.max_abs())
}

/// As [`sobolev_norm`], with the edge values compared to `reference`
/// instead of the maximum of `g`. Used for small remainders of a larger
/// function whose support is known.
pub fn sobolev_norm_against(g: &GridFunction, s: f64, reference: f64) -> Result<f64, AsymptoticsError> {
    if g.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let edge = edge_max(g);
    if edge > EDGE_TOL * reference {
        return Err(AsymptoticsError::SupportViolation { edge, max: reference });
    }
    let dims = &g.spec.dims;
    let h = g.spec.spacing();
    let padded: Vec<usize> = dims.iter().map(|d| 2 * d).collect();
    let total: usize = padded.iter().product();
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for (i, v) in g.data.iter().enumerate() {
        let mut r = i;
        let mut j = 0;
        let mut stride = 1;
        for (a, &d) in dims.iter().enumerate().rev() {
            j += (r % d) * stride;
            r /= d;
            stride *= padded[a];
        }
        buf[j] = *v;
    }
    fft_nd(&mut buf, &padded);
    let mut acc = 0.0;
    for (i, v) in buf.iter().enumerate() {
        let mut r = i;
        let mut xi2 = 0.0;
        for a in (0..padded.len()).rev() {
            let k = r % padded[a];
            r /= padded[a];
            xi2 += frequency(k, padded[a], h[a]).powi(2);
        }
        acc += (1.0 + xi2).powf(s) * v.norm_sqr();
    }
    let cell: f64 = h.iter().product();
    Ok((acc * cell / total as f64).sqrt())
}
