//! Exact L^2 norms of single Laurent modes `e^{n w} dw^2` over sub-collars.
//!
//! With `|dw^2| = 2 rho^-2` the squared norm of `e^{n w} dw^2` over
//! `(s1, s2) x S^1` is
//!
//! ```text
//! 8 pi (2 pi / ell)^2 \int_{s1}^{s2} e^{2 n s} cos^2(ell s / 2 pi) ds
//! ```
//!
//! which has an elementary antiderivative. Values are returned relative to
//! the collar-end scale `e^{2 |n| X}` so that large modes on long collars
//! stay representable.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::collar::CollarParams;

/// Below this value of `|a| (s2 - s1)` the exponential barely varies over the
/// window and the difference of antiderivatives would cancel.
const SMALL_GROWTH: f64 = 1e-3;

/// `e^z - 1` for complex `z` without cancellation near zero.
fn expm1_complex(z: Complex64) -> Complex64 {
    let (sin_half, cos_y) = ((0.5 * z.im).sin(), z.im.cos());
    let growth = z.re.exp_m1();
    Complex64::new(growth * cos_y - 2.0 * sin_half * sin_half, (growth + 1.0) * z.im.sin())
}

/// `\int_{s1}^{s2} e^{a s - shift} cos^2(b s) ds` for `b > 0`.
pub(crate) fn exp_cos2_integral(a: f64, b: f64, shift: f64, s1: f64, s2: f64) -> f64 {
    let width = s2 - s1;
    if width <= 0.0 {
        return 0.0;
    }
    if a.abs() < 1e-12 {
        // s/2 + sin(2 b s)/(4 b), differenced
        let base = 0.5 * width + (b * (s1 + s2)).cos() * (b * width).sin() / (2.0 * b);
        return (-shift).exp() * base;
    }
    if a.abs() * width > SMALL_GROWTH {
        // d/ds [e^{as} P(s)] = a (a^2 + 4 b^2) e^{as} cos^2(bs) with
        // P = (a cos + b sin)^2 + b^2 (1 + cos^2) > 0
        let p = |s: f64| {
            let (sn, cs) = (b * s).sin_cos();
            let lead = a * cs + b * sn;
            lead * lead + b * b * (1.0 + cs * cs)
        };
        let upper = (a * s2 - shift).exp() * p(s2);
        let lower = (a * s1 - shift).exp() * p(s1);
        return (upper - lower) / (a * (a * a + 4.0 * b * b));
    }
    // cos^2 = (1 + cos 2bs)/2, each part integrated with expm1
    let start = (a * s1 - shift).exp();
    let flat = start * (a * width).exp_m1() / a;
    let k = Complex64::new(a, 2.0 * b);
    let phase = Complex64::from_polar(1.0, 2.0 * b * s1);
    let wave = (phase * expm1_complex(k * width) / k).re * start;
    0.5 * (flat + wave)
}

/// Squared norm of `e^{n w} dw^2` over `(s1, s2) x S^1`, divided by `e^{2|n|X}`.
pub(crate) fn scaled_mode_norm_sq(collar: &CollarParams, n: i32, s1: f64, s2: f64) -> f64 {
    let b = collar.freq();
    let a = 2.0 * f64::from(n);
    let shift = 2.0 * f64::from(n.unsigned_abs()) * collar.half_length();
    8.0 * PI / (b * b) * exp_cos2_integral(a, b, shift, s1, s2)
}
