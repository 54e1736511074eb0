//! Adaptive Dormand–Prince 5(4) integration for real systems.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step budget exhausted at t = {0}")]
    MaxSteps(f64),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("aborted at t = {t}: {reason}")]
    Aborted { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Zero lets the solver pick.
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { abs_tol: 1e-10, rel_tol: 1e-9, h_init: 0.0, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 200_000 }
    }
}

/// Accepted steps and final state of one integration.
#[derive(Debug, Clone)]
pub struct OdeTrace {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub rejected: usize,
}

impl OdeTrace {
    pub fn last(&self) -> &[f64] {
        self.ys.last().unwrap()
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `f` writes the derivative into its last argument and may fail.
/// `on_step` sees every accepted state, may adjust it in place (projection),
/// and aborts the run by returning an error message.
pub fn integrate<F, S>(mut f: F, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions, mut on_step: S) -> Result<OdeTrace, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), String>,
    S: FnMut(f64, &mut [f64]) -> Result<(), String>,
{
    let dim = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut trace = OdeTrace { ts: vec![t0], ys: vec![y0.to_vec()], rejected: 0 };
    if span == 0.0 {
        return Ok(trace);
    }
    let abort = |t: f64, reason: String| OdeError::Aborted { t, reason };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; dim]; 7];
    f(t, &y, &mut k[0]).map_err(|r| abort(t, r))?;
    let mut h = if opts.h_init > 0.0 {
        opts.h_init
    } else {
        let scale: f64 = y
            .iter()
            .zip(&k[0])
            .map(|(yi, di)| (di / (opts.abs_tol + opts.rel_tol * yi.abs())).powi(2))
            .sum::<f64>()
            .sqrt()
            / (dim.max(1) as f64).sqrt();
        (0.01 / scale.max(1e-300)).clamp(1e-6 * span, 0.1 * span)
    };
    h = h.min(opts.h_max);
    let mut tmp = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::MaxSteps(t));
        }
        let last = h >= (t1 - t).abs();
        if last {
            h = (t1 - t).abs();
        }
        let hs = h * dir;
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (r, a) in A[s].iter().enumerate().take(s) {
                    acc += hs * a * k[r][i];
                }
                tmp[i] = acc;
            }
            f(t + C[s] * hs, &tmp, &mut k[s]).map_err(|r| abort(t + C[s] * hs, r))?;
        }
        let mut err = 0.0f64;
        for i in 0..dim {
            let mut v5 = y[i];
            let mut v4 = y[i];
            for s in 0..7 {
                v5 += hs * B5[s] * k[s][i];
                v4 += hs * B4[s] * k[s][i];
            }
            y5[i] = v5;
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(v5.abs());
            err = err.max(((v5 - v4) / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.2;
            trace.rejected += 1;
            if h < opts.h_min {
                return Err(OdeError::NonFinite(t));
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&y5);
            on_step(t, &mut y).map_err(|r| abort(t, r))?;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFinite(t));
            }
            trace.ts.push(t);
            trace.ys.push(y.clone());
            // FSAL: k7 is f at the new point unless the hook moved it
            f(t, &y, &mut k[0]).map_err(|r| abort(t, r))?;
        } else {
            trace.rejected += 1;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).min(opts.h_max);
        if h < opts.h_min && (t1 - t) * dir > opts.h_min {
            return Err(OdeError::StepUnderflow(t));
        }
    }
    Ok(trace)
}

/// Integrate through the increasing or decreasing list `times`, returning
/// the state at each of them.
pub fn integrate_to<F, S>(mut f: F, y0: &[f64], times: &[f64], opts: &OdeOptions, mut on_step: S) -> Result<Vec<Vec<f64>>, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), String>,
    S: FnMut(f64, &mut [f64]) -> Result<(), String>,
{
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return Ok(out);
    }
    let mut y = y0.to_vec();
    out.push(y.clone());
    for w in times.windows(2) {
        let tr = integrate(&mut f, w[0], &y, w[1], opts, &mut on_step)?;
        y = tr.last().to_vec();
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let tr = integrate(
            |_, y, d| {
                d[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            5.0,
            &OdeOptions::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(*tr.ts.last().unwrap(), 5.0);
        assert!((tr.last()[0] - (-5.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let rhs = |_: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
            Ok(())
        };
        let tr = integrate(rhs, 0.0, &[0.0, 1.0], -3.0, &OdeOptions::default(), |_, _| Ok(())).unwrap();
        let y = tr.last();
        assert!((y[0] - (-3.0f64).sin()).abs() < 1e-8);
        assert!((y[1] - (-3.0f64).cos()).abs() < 1e-8);
    }

    #[test]
    fn hook_can_abort() {
        let r = integrate(
            |_, _, d| {
                d[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            10.0,
            &OdeOptions::default(),
            |t, y| if y[0] > 2.0 { Err(format!("too big at {t}")) } else { Ok(()) },
        );
        assert!(matches!(r, Err(OdeError::Aborted { .. })));
    }

    #[test]
    fn outputs_at_requested_times() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let ys = integrate_to(
            |t, _, d| {
                d[0] = 2.0 * t;
                Ok(())
            },
            &[0.0],
            &times,
            &OdeOptions::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - t * t).abs() < 1e-12);
        }
    }

    #[test]
    fn stiff_blowup_is_reported() {
        let r = integrate(
            |_, y, d| {
                d[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            &OdeOptions { max_steps: 5000, ..Default::default() },
            |_, _| Ok(()),
        );
        assert!(r.is_err());
    }
}
