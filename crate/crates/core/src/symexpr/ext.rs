use std::f64::consts::LN_2;
use std::ops;

use num_complex::Complex64;

/// Complex number with an extended binary exponent: `m * 2^e`.
///
/// Used to classify signs of flat functions whose values underflow `f64`
/// (`e^{-1/t^2}` is below the smallest subnormal for `|t| < 0.037`).
/// Only the sign and rough magnitude are meaningful when the exponent is huge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtC {
    pub m: Complex64,
    pub e: i64,
}

fn ldexp(x: f64, k: i64) -> f64 {
    if x == 0.0 || k < -2200 {
        return 0.0 * x;
    }
    if k > 2200 {
        return f64::INFINITY * x;
    }
    let mut x = x;
    let mut k = k;
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k as i32)
}

fn exponent_of(x: f64) -> i64 {
    // smallest e with |x| < 2^e
    if x == 0.0 {
        return i64::MIN;
    }
    let mut e = x.abs().log2().floor() as i64 + 1;
    if ldexp(x.abs(), -e) >= 1.0 {
        e += 1;
    }
    if ldexp(x.abs(), -e) < 0.5 {
        e -= 1;
    }
    e
}

impl ExtC {
    pub const ZERO: ExtC = ExtC { m: Complex64 { re: 0.0, im: 0.0 }, e: 0 };

    pub fn from_complex(z: Complex64) -> ExtC {
        ExtC { m: z, e: 0 }.normalized()
    }

    pub fn from_real(v: f64) -> ExtC {
        ExtC::from_complex(Complex64::new(v, 0.0))
    }

    fn normalized(self) -> ExtC {
        let big = self.m.re.abs().max(self.m.im.abs());
        if big == 0.0 || !big.is_finite() {
            return ExtC { m: self.m, e: if big == 0.0 { 0 } else { self.e } };
        }
        let k = exponent_of(big);
        ExtC {
            m: Complex64::new(ldexp(self.m.re, -k), ldexp(self.m.im, -k)),
            e: self.e.saturating_add(k),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.m.re == 0.0 && self.m.im == 0.0
    }

    /// Value as an ordinary complex number (may underflow to 0 or overflow).
    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(ldexp(self.m.re, self.e), ldexp(self.m.im, self.e))
    }

    /// `e^{z}` for a complex exponent given in `f64`.
    pub fn exp_of(z: Complex64) -> ExtC {
        let t = z.re / LN_2;
        if !t.is_finite() {
            if t < 0.0 {
                return ExtC::ZERO;
            }
            return ExtC { m: Complex64::new(f64::INFINITY, 0.0), e: 0 };
        }
        let fl = t.floor();
        let frac = t - fl;
        let mag = 2f64.powf(frac);
        ExtC { m: Complex64::from_polar(mag, z.im), e: fl as i64 }.normalized()
    }

    pub fn sign_re(&self) -> i32 {
        sign(self.m.re)
    }

    pub fn sign_im(&self) -> i32 {
        sign(self.m.im)
    }

    pub fn powi(self, k: i32) -> Option<ExtC> {
        if k < 0 {
            if self.is_zero() {
                return None;
            }
            return ExtC::from_real(1.0).checked_div(self.powi(-k)?);
        }
        let mut out = ExtC::from_real(1.0);
        for _ in 0..k {
            out = out * self;
        }
        Some(out)
    }

    pub fn checked_div(self, other: ExtC) -> Option<ExtC> {
        if other.is_zero() {
            return None;
        }
        Some(ExtC { m: self.m / other.m, e: self.e.saturating_sub(other.e) }.normalized())
    }

    /// `log2 |z|`, `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.m.norm().log2() + self.e as f64
    }
}

fn sign(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

impl ops::Add for ExtC {
    type Output = ExtC;
    fn add(self, other: ExtC) -> ExtC {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (hi, lo) = if self.e >= other.e { (self, other) } else { (other, self) };
        let d = hi.e - lo.e;
        if d > 120 {
            return hi;
        }
        let lo_m = Complex64::new(ldexp(lo.m.re, -d), ldexp(lo.m.im, -d));
        ExtC { m: hi.m + lo_m, e: hi.e }.normalized()
    }
}

impl ops::Neg for ExtC {
    type Output = ExtC;
    fn neg(self) -> ExtC {
        ExtC { m: -self.m, e: self.e }
    }
}

impl ops::Sub for ExtC {
    type Output = ExtC;
    fn sub(self, other: ExtC) -> ExtC {
        self + (-other)
    }
}

impl ops::Mul for ExtC {
    type Output = ExtC;
    fn mul(self, other: ExtC) -> ExtC {
        if self.is_zero() || other.is_zero() {
            return ExtC::ZERO;
        }
        ExtC { m: self.m * other.m, e: self.e.saturating_add(other.e) }.normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_ordinary_values() {
        for v in [1.0, -3.5, 1e-300, 7.25e200, 0.5] {
            let z = Complex64::new(v, -v / 3.0);
            let back = ExtC::from_complex(z).to_complex();
            assert!((back - z).norm() <= 1e-15 * z.norm());
        }
    }

    #[test]
    fn underflowing_exponential_keeps_sign() {
        let t = 1e-4;
        let v = -ExtC::exp_of(Complex64::new(-1.0 / (t * t), 0.0));
        assert_eq!(v.sign_re(), -1);
        assert_eq!(v.to_complex().re, 0.0);
        let l = v.log2_abs();
        assert!((l - (-1e8 / LN_2)).abs() < 1e-6 * 1e8);
    }

    #[test]
    fn arithmetic_matches_f64() {
        let a = ExtC::from_real(3.0);
        let b = ExtC::from_real(-0.25);
        assert_eq!((a * b).to_complex().re, -0.75);
        assert_eq!((a + b).to_complex().re, 2.75);
        assert_eq!(a.checked_div(b).unwrap().to_complex().re, -12.0);
        assert_eq!(b.powi(-2).unwrap().to_complex().re, 16.0);
    }
}
