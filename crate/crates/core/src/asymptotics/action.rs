use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::AsymptoticsError;
use crate::jet::multi_indices;
use crate::symbol::ClassicalSymbol;
use crate::symexpr::{differentiate, evaluate, Expr, Var};
use crate::wkb::{model_gradient, ApproxSolution, GridFunction, GridSpec, SolutionKind, TPoly};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub(crate) fn check_tangential(q: &ClassicalSymbol) -> Result<(), AsymptoticsError> {
    if q.terms().iter().any(|t| t.expr.depends_on(Var::Xi(0))) {
        return Err(AsymptoticsError::NotTangential);
    }
    Ok(())
}

/// `xi0 = e_n`, the real point of `w'` at the origin.
pub(crate) fn xi_zero(n: usize) -> Vec<f64> {
    let mut xi = vec![0.0; n];
    xi[n - 1] = 1.0;
    xi
}

fn factorial(a: &[u8]) -> f64 {
    a.iter().map(|&k| (1..=k as u32).map(f64::from).product::<f64>()).product()
}

/// `d_xi^a e` for an index over the `x'` directions.
fn xi_derivative(e: &Expr, a: &[u8]) -> Expr {
    let mut out = e.clone();
    for (k, &c) in a.iter().enumerate() {
        for _ in 0..c {
            if out.is_zero() {
                return out;
            }
            out = differentiate(&out, Var::Xi(k + 1));
        }
    }
    out
}

/// Terms of `e^{-i tau w} q(x, D)(phi e^{i tau w})` for the model phase,
/// expanded about `xi0`:
/// `sum_i tau^{mu_i} sum_{|a| < k} q_i^{(a)}(x, xi0) / a! * tau^{-|a|} L^a phi`
/// with `L_l = D_l + tau (w'_l - xi0_l)`.
///
/// Everything is written in `z = s x`; `s = tau` gives the scaled variables
/// of the pairing integral and `s = 1` the original ones.
pub(crate) struct ActionTerms {
    n: usize,
    tau: f64,
    scale: f64,
    terms: Vec<(i32, Expr, TPoly)>,
}

impl ActionTerms {
    pub(crate) fn new(q: &ClassicalSymbol, amp: &TPoly, tau: f64, k: usize, scale: f64) -> Result<ActionTerms, AsymptoticsError> {
        check_tangential(q)?;
        let n = q.n();
        if amp.dim() != n {
            return Err(AsymptoticsError::DimensionMismatch { expected: n, got: amp.dim() });
        }
        let alphas = if k == 0 { Vec::new() } else { multi_indices(n - 1, k - 1) };
        let mut coefs: Vec<(i32, Vec<u8>, Expr)> = Vec::new();
        for t in q.terms() {
            if t.expr.is_zero() {
                continue;
            }
            for a in &alphas {
                let e = xi_derivative(&t.expr, a);
                if !e.is_zero() {
                    coefs.push((t.degree, a.clone(), e.scale(Complex64::new(1.0 / factorial(a), 0.0))));
                }
            }
        }
        let top = coefs.iter().map(|(_, a, _)| a.iter().map(|&v| v as usize).sum::<usize>()).max().unwrap_or(0);
        let order = amp.order() + 2 * top;
        let mut base = TPoly::zeros(n, order);
        for p in 0..amp.len() {
            let idx = amp.index(p);
            let c = amp.coeffs()[p] * scale.powi(-(amp.degree(p) as i32));
            if let Some(q) = base.position(idx) {
                base.coeffs_mut()[q] = c;
            }
        }
        let mut cache: HashMap<Vec<u8>, TPoly> = HashMap::new();
        cache.insert(vec![0u8; n - 1], base);
        let mut terms = Vec::with_capacity(coefs.len());
        for (deg, a, e) in coefs {
            let p = lift(&mut cache, &a, tau, scale);
            terms.push((deg, e, p));
        }
        Ok(ActionTerms { n, tau, scale, terms })
    }

    /// `e^{-i tau w} q(x, D)(phi e^{i tau w})` at `z = s x`.
    pub(crate) fn eval(&self, z: &[f64]) -> Result<Complex64, AsymptoticsError> {
        let x: Vec<f64> = z.iter().map(|v| v / self.scale).collect();
        let xi = xi_zero(self.n);
        let mut acc = Complex64::new(0.0, 0.0);
        for (deg, e, p) in &self.terms {
            let c = evaluate(e, &x, &xi)?;
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            acc += c * p.eval(z) * self.tau.powi(*deg);
        }
        Ok(acc)
    }
}

/// `tau^-|a| L^a phi` in the variable `z`, built from cached lower indices.
fn lift(cache: &mut HashMap<Vec<u8>, TPoly>, a: &[u8], tau: f64, s: f64) -> TPoly {
    if let Some(p) = cache.get(a) {
        return p.clone();
    }
    let l = a.iter().rposition(|&v| v > 0).expect("nonzero index");
    let mut lower = a.to_vec();
    lower[l] -= 1;
    let g = lift(cache, &lower, tau, s);
    let n = g.dim();
    let slot = l + 1;
    // (s / tau) D_z g + (w'_l - xi0_l)(z / s) g
    let mut out = g.derivative(slot).scale(-I * (s / tau));
    let mut e = vec![0u8; n];
    e[slot] = 1;
    out.add_scaled(&g.shift(&e), I / s);
    if slot == n - 1 {
        let mut e0 = vec![0u8; n];
        e0[0] = 2;
        out.add_scaled(&g.shift(&e0), Complex64::new(-0.5 / (s * s), 0.0));
    }
    cache.insert(a.to_vec(), out.clone());
    out
}

fn model_amplitude(v: &ApproxSolution) -> Result<&TPoly, AsymptoticsError> {
    match &v.kind {
        SolutionKind::Model { amplitude } => Ok(amplitude),
        SolutionKind::Expansion { .. } => Err(AsymptoticsError::Unsupported("the wave packet action")),
    }
}

/// Smallest eigenvalue of the Hessian of `Im w` at the grid minimum of `Im w`.
fn phase_hessian_margin(v: &ApproxSolution, grid: &GridSpec) -> Result<f64, AsymptoticsError> {
    let n = v.n;
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for i in 0..grid.len() {
        let x = grid.point(i);
        if v.cutoff_factor(&x)? == 0.0 {
            continue;
        }
        let im = v.phase(&x)?.im;
        if im < best.0 {
            best = (im, x);
        }
    }
    let x0 = best.1;
    let h = 1e-4;
    let f = |d: &[(usize, f64)]| -> Result<f64, AsymptoticsError> {
        let mut x = x0.clone();
        for &(k, s) in d {
            x[k] += s;
        }
        Ok(v.phase(&x)?.im)
    };
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let val = if j == k {
                (f(&[(j, h)])? - 2.0 * f(&[])? + f(&[(j, -h)])?) / (h * h)
            } else {
                (f(&[(j, h), (k, h)])? - f(&[(j, h), (k, -h)])? - f(&[(j, -h), (k, h)])? + f(&[(j, -h), (k, -h)])?)
                    / (4.0 * h * h)
            };
            m[(j, k)] = val;
            m[(k, j)] = val;
        }
    }
    Ok(m.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// `q(x, D) v` on a grid via the truncated expansion with `|a| < k`, for the
/// model solution. The amplitude is differentiated as a polynomial and the
/// cutoff is applied afterwards, which is exact where the cutoff equals one.
pub fn apply_symbol_gaussian(
    q: &ClassicalSymbol,
    v: &ApproxSolution,
    k: usize,
    grid: &GridSpec,
) -> Result<GridFunction, AsymptoticsError> {
    let amp = model_amplitude(v)?;
    if grid.n() != v.n {
        return Err(AsymptoticsError::DimensionMismatch { expected: v.n, got: grid.n() });
    }
    let margin = phase_hessian_margin(v, grid)?;
    if !(margin > 0.0) {
        return Err(AsymptoticsError::HessianNotPositive(margin));
    }
    let terms = ActionTerms::new(q, amp, v.tau, k, 1.0)?;
    let mut data = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.point(i);
        let c = v.cutoff_factor(&x)?;
        if c == 0.0 {
            data.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let e = (I * v.tau * v.phase(&x)?).exp();
        data.push(e * terms.eval(&x)? * c * v.prefactor());
    }
    Ok(GridFunction { spec: grid.clone(), data })
}

struct LambdaTerm {
    /// `D^a phi / a!`
    dphi: TPoly,
    /// `(b, d_xi^{a+b} q / b!)`
    taylor: Vec<(Vec<u8>, Expr)>,
}

/// `lambda_J(t, x) = sum_{j + |a| = J} q_{-j}^{(a)}(t, x, w_x') D^a phi / a!`,
/// with `q^{(a)}(., w_x')` replaced by its Taylor polynomial at `xi0`.
pub struct LambdaProfile {
    n: usize,
    pub big_j: i32,
    pub taylor_order: usize,
    terms: Vec<LambdaTerm>,
}

impl LambdaProfile {
    pub fn eval(&self, x: &[f64]) -> Result<Complex64, AsymptoticsError> {
        let xi = xi_zero(self.n);
        let g = model_gradient(x);
        let mut dw: Vec<Complex64> = g[1..].to_vec();
        dw[self.n - 2] -= 1.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let phi = t.dphi.eval(x);
            if phi == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut s = Complex64::new(0.0, 0.0);
            for (b, e) in &t.taylor {
                let mut m = Complex64::new(1.0, 0.0);
                for (k, &p) in b.iter().enumerate() {
                    m *= dw[k].powi(p as i32);
                }
                s += evaluate(e, x, &xi)? * m;
            }
            acc += s * phi;
        }
        Ok(acc)
    }
}

pub fn lambda_profile(
    rstar: &ClassicalSymbol,
    v: &ApproxSolution,
    big_j: i32,
    taylor_order: usize,
) -> Result<LambdaProfile, AsymptoticsError> {
    check_tangential(rstar)?;
    let amp = model_amplitude(v)?;
    let n = rstar.n();
    let mut terms = Vec::new();
    for t in rstar.terms() {
        let j = -t.degree;
        if j < -1 || j > big_j || t.expr.is_zero() {
            continue;
        }
        let len = (big_j - j) as usize;
        for a in multi_indices(n - 1, len) {
            if a.iter().map(|&v| v as usize).sum::<usize>() != len {
                continue;
            }
            let mut dphi = amp.clone();
            for (k, &c) in a.iter().enumerate() {
                for _ in 0..c {
                    dphi = dphi.derivative(k + 1);
                }
            }
            let dphi = dphi.scale((-I).powi(len as i32) / factorial(&a));
            let qa = xi_derivative(&t.expr, &a);
            let mut taylor = Vec::new();
            for b in multi_indices(n - 1, taylor_order) {
                let e = xi_derivative(&qa, &b);
                if !e.is_zero() {
                    taylor.push((b.clone(), e.scale(Complex64::new(1.0 / factorial(&b), 0.0))));
                }
            }
            if !taylor.is_empty() {
                terms.push(LambdaTerm { dphi, taylor });
            }
        }
    }
    Ok(LambdaProfile { n, big_j, taylor_order, terms })
}
