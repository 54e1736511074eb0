use num_complex::Complex64;

use super::{ClassicalSymbol, SymbolError};
use crate::symexpr::Expr;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `f(t) = -e^{-1/t^2}` for `t < 0`, `0` on `[0, 2]`, `e^{-1/(t-2)^2}` for `t > 2`.
pub fn profile_f(t: &Expr) -> Expr {
    let left = Expr::flat_exp(&t.neg());
    let right = Expr::flat_exp(&t.sub(&Expr::real(2.0)));
    right.sub(&left)
}

/// `xi1 + i f(x, xi')` for a given real `f`.
pub fn template(n: usize, f: Expr) -> Result<ClassicalSymbol, SymbolError> {
    let e = Expr::xi(0).add(&f.scale(I));
    ClassicalSymbol::single(1, e, n)
}

/// `xi1 + i x1 xin`, the symbol of `D_1 + i x_1 D_n`.
pub fn model(n: usize) -> Result<ClassicalSymbol, SymbolError> {
    let n = n.max(2);
    template(n, Expr::x(0).mul(&Expr::xi(n - 1)))
}

/// `xi1 + i x1 xi2`.
pub fn model2d() -> ClassicalSymbol {
    model(2).expect("valid fixture")
}

/// Lewy operator `d1 + i d2 - 2i(x1 + i x2) d3` in `R^3`, divided by `i`:
/// `xi1 + 2 x2 xi3 + i (xi2 - 2 x1 xi3)`.
pub fn lewy() -> ClassicalSymbol {
    let re = Expr::xi(0).add(&Expr::real(2.0).mul(&Expr::x(1)).mul(&Expr::xi(2)));
    let im = Expr::xi(1).sub(&Expr::real(2.0).mul(&Expr::x(0)).mul(&Expr::xi(2)));
    ClassicalSymbol::single(1, re.add(&im.scale(I)), 3).expect("valid fixture")
}

/// `|xi'| (f(x1) + x2 phi(x1))` with `phi = cutoff(., 0, 2)`.
pub fn p1_im() -> Expr {
    let x1 = Expr::x(0);
    let phi = Expr::cutoff(&x1, &Expr::zero(), &Expr::real(2.0));
    let inner = profile_f(&x1).add(&Expr::x(1).mul(&phi));
    Expr::norm_xi_prime().mul(&inner)
}

/// `xi1 + i p1_im`.
pub fn p1(n: usize) -> Result<ClassicalSymbol, SymbolError> {
    template(n.max(2), p1_im())
}

/// `xi1 + i h` with `h = |xi'| f(x1) e^{-1/x2}` for `x2 > 0`,
/// `|xi'| f(x1 - 1) e^{1/x2}` for `x2 < 0` and `0` on `x2 = 0`.
pub fn p2(n: usize) -> Result<ClassicalSymbol, SymbolError> {
    template(n.max(2), p2_im())
}

/// The function `h` of [`p2`].
pub fn p2_im() -> Expr {
    let x1 = Expr::x(0);
    let x2 = Expr::x(1);
    let upper = profile_f(&x1).mul(&Expr::flat_exp1(&x2));
    let lower = profile_f(&x1.sub(&Expr::one())).mul(&Expr::flat_exp1(&x2.neg()));
    Expr::norm_xi_prime().mul(&upper.add(&lower))
}

pub fn fixture_names() -> &'static [&'static str] {
    &["lewy", "model2d", "model", "p1", "p2"]
}

/// Fixture by name; `n` is used by the dimension-generic ones.
pub fn fixture(name: &str, n: usize) -> Option<ClassicalSymbol> {
    match name {
        "lewy" => Some(lewy()),
        "model2d" => Some(model2d()),
        "model" => model(n).ok(),
        "p1" => p1(n).ok(),
        "p2" => p2(n).ok(),
        _ => None,
    }
}
