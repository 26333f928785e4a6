//! Closed-form geometry of hyperbolic collars and standard cusps.
//!
//! A collar around a closed geodesic of length `ell` is the cylinder
//! `(-X, X) x S^1` with metric `rho(s)^2 (ds^2 + dtheta^2)`, where
//!
//! ```text
//! X(ell)  = (2 pi / ell) (pi/2 - arctan(sinh(ell/2)))
//! rho(s)  = ell / (2 pi cos(ell s / 2 pi))
//! ```
//!
//! The injectivity radius satisfies `sinh(inj) cos(ell s / 2 pi) = sinh(ell / 2)`,
//! which yields the half-length `X_delta` of the delta-thin sub-collar.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// `arsinh(1) = ln(1 + sqrt 2)`, the Margulis-type threshold for collars.
pub const ARSINH_ONE: f64 = 0.881_373_587_019_543;

/// Largest admissible core geodesic length, `2 arsinh(1)`.
pub const MAX_COLLAR_LENGTH: f64 = 2.0 * ARSINH_ONE;

/// Default thick/thin threshold used to normalise differentials.
pub const DEFAULT_DELTA0: f64 = 0.4;

/// Relative shrink applied to `|s|` near the collar ends.
const END_CLAMP: f64 = 1e-12;

/// A hyperbolic collar `C(ell)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarParams {
    ell: f64,
    half_length: f64,
    /// `cos` and `sin` of `ell X / 2 pi`: `tanh(ell/2)` and `1/cosh(ell/2)`.
    end_cos: f64,
    end_sin: f64,
}

/// The delta-thin sub-collar `(-x_delta, x_delta) x S^1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinWindow {
    pub x_delta: f64,
    pub delta: f64,
}

impl ThinWindow {
    pub fn is_empty(&self) -> bool {
        self.x_delta == 0.0
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 && delta < ARSINH_ONE {
        Ok(())
    } else {
        Err(Error::domain("delta", delta, "0 < delta < arsinh(1)"))
    }
}

impl CollarParams {
    /// Accepts `0 < ell <= 2 arsinh(1)`.
    pub fn new(ell: f64) -> Result<Self> {
        if !(ell.is_finite() && ell > 0.0 && ell <= MAX_COLLAR_LENGTH) {
            return Err(Error::domain("ell", ell, "0 < ell <= 2 arsinh(1)"));
        }
        // pi/2 - arctan(x) = arctan(1/x) for x > 0
        let half_length = TAU / ell * (1.0 / (ell / 2.0).sinh()).atan();
        Ok(CollarParams {
            ell,
            half_length,
            end_cos: (ell / 2.0).tanh(),
            end_sin: 1.0 / (ell / 2.0).cosh(),
        })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// `X(ell)`.
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Angular frequency `ell / 2 pi` of the conformal factor.
    pub(crate) fn freq(&self) -> f64 {
        self.ell / TAU
    }

    fn clamp_s(&self, s: f64) -> Result<f64> {
        let x = self.half_length;
        if !s.is_finite() || s.abs() > x {
            return Err(Error::domain("s", s, "|s| <= X(ell)"));
        }
        let limit = x * (1.0 - END_CLAMP);
        Ok(s.clamp(-limit, limit))
    }

    /// `cos(ell s / 2 pi)`, strictly positive on the closed collar.
    pub(crate) fn cos_factor(&self, s: f64) -> Result<f64> {
        let a = self.clamp_s(s)?.abs();
        if a <= 0.5 * self.half_length {
            return Ok((self.freq() * a).cos());
        }
        // expand around the end; X - a is exact here and no term cancels
        let (sn, cs) = (self.freq() * (self.half_length - a)).sin_cos();
        Ok(self.end_cos * cs + self.end_sin * sn)
    }

    /// Conformal factor `rho(s)`.
    pub fn conformal_factor(&self, s: f64) -> Result<f64> {
        Ok(self.freq() / self.cos_factor(s)?)
    }

    /// `|dw^2| = 2 rho(s)^-2`, the pointwise norm of `dw^2`.
    pub fn dw2_norm(&self, s: f64) -> Result<f64> {
        let c = self.cos_factor(s)?;
        let f = self.freq();
        Ok(2.0 * c * c / (f * f))
    }

    /// `sinh(ell/2) / sinh(delta)`; the thin part is empty when this is at least one.
    pub fn thin_ratio(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        Ok((self.ell / 2.0).sinh() / delta.sinh())
    }

    /// Half-length `X_delta(ell)` of the delta-thin sub-collar.
    pub fn thin_boundary(&self, delta: f64) -> Result<ThinWindow> {
        let r = self.thin_ratio(delta)?;
        let x_delta = if r >= 1.0 {
            0.0
        } else {
            // pi/2 - arcsin(r) = atan2(sqrt(1 - r^2), r)
            let angle = ((1.0 - r) * (1.0 + r)).sqrt().atan2(r);
            (TAU / self.ell * angle).min(self.half_length)
        };
        Ok(ThinWindow { x_delta, delta })
    }

    /// Injectivity radius at distance `s` from the core geodesic.
    pub fn injectivity_radius(&self, s: f64) -> Result<f64> {
        let c = self.cos_factor(s)?;
        Ok(((self.ell / 2.0).sinh() / c).asinh())
    }

    /// Exact area `2 ell tan(ell X_delta / 2 pi)` of the delta-thin sub-collar.
    pub fn thin_area(&self, delta: f64) -> Result<f64> {
        let r = self.thin_ratio(delta)?;
        if r >= 1.0 {
            return Ok(0.0);
        }
        Ok(2.0 * self.ell * ((1.0 - r) * (1.0 + r)).sqrt() / r)
    }

    /// Upper bound `2 ell sinh(delta) / sinh(ell/2)` for the thin area.
    pub fn thin_area_bound(&self, delta: f64) -> Result<f64> {
        Ok(2.0 * self.ell / self.thin_ratio(delta)?)
    }

    /// Total hyperbolic area `2 ell tan(ell X / 2 pi) = 2 ell / sinh(ell/2)`.
    pub fn area(&self) -> f64 {
        2.0 * self.ell / (self.ell / 2.0).sinh()
    }
}

/// Conformal factor `1/s` of the standard cusp `(pi, inf) x S^1`.
pub fn cusp_conformal_factor(s: f64) -> Result<f64> {
    if !(s.is_finite() && s > PI) {
        return Err(Error::domain("s", s, "s > pi"));
    }
    Ok(1.0 / s)
}

/// Conformal factor of the cusp metric on the punctured disc,
/// `1 / (|z| |log |z||)` for `0 < |z| < 1`.
pub fn cusp_disc_factor(r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0 && r < 1.0) {
        return Err(Error::domain("|z|", r, "0 < |z| < 1"));
    }
    Ok(1.0 / (r * r.ln().abs()))
}

/// Smallest value of `X(ell) - X_delta0(ell)` over `ell` in `(0, 2 delta0]`,
/// sampled on a log grid together with the supplied working lengths.
pub fn delta0_margin(delta0: f64, working_ells: &[f64]) -> Result<f64> {
    check_delta(delta0)?;
    let top = (2.0 * delta0).min(MAX_COLLAR_LENGTH);
    let builtin = (0..=400).map(|i| top * 10f64.powf(-8.0 * f64::from(i) / 400.0));
    let mut margin = f64::INFINITY;
    for ell in builtin.chain(working_ells.iter().copied()) {
        if ell <= 0.0 || ell > top {
            continue;
        }
        let collar = CollarParams::new(ell)?;
        let thin = collar.thin_boundary(delta0)?;
        margin = margin.min(collar.half_length() - thin.x_delta);
    }
    Ok(margin)
}

/// Rejects `delta0` unless `X(ell) - X_delta0(ell) >= 1` across `(0, 2 delta0]`.
pub fn validate_delta0(delta0: f64, working_ells: &[f64]) -> Result<()> {
    let margin = delta0_margin(delta0, working_ells)?;
    if margin >= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "delta0 = {delta0} leaves X - X_delta0 = {margin} < 1 on (0, 2 delta0]"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn half_length_reference_values() {
        let c = CollarParams::new(MAX_COLLAR_LENGTH).unwrap();
        assert_relative_eq!(c.half_length(), 2.799_495_170_505_522_6, max_relative = 1e-14);
        assert_relative_eq!(c.half_length(), PI * PI / (2.0 * c.ell()), max_relative = 1e-14);
        let c = CollarParams::new(0.1).unwrap();
        assert_relative_eq!(c.half_length(), 95.555_759_536_713_35, max_relative = 1e-14);
    }

    #[test]
    fn half_length_limit_and_monotonicity() {
        let c = CollarParams::new(1e-9).unwrap();
        assert_relative_eq!(c.ell() * c.half_length(), PI * PI, max_relative = 1e-8);
        let mut prev = f64::INFINITY;
        for i in 1..=200 {
            let x = CollarParams::new(MAX_COLLAR_LENGTH * f64::from(i) / 200.0)
                .unwrap()
                .half_length();
            assert!(x < prev);
            prev = x;
        }
    }

    #[test]
    fn rejects_out_of_range_lengths() {
        for ell in [0.0, -1.0, 1.8, f64::NAN, f64::INFINITY] {
            assert!(matches!(CollarParams::new(ell), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn conformal_factor_values() {
        let c = CollarParams::new(0.1).unwrap();
        assert_relative_eq!(c.conformal_factor(0.0).unwrap(), 0.1 / TAU, max_relative = 1e-15);
        let x = c.half_length();
        let expected = 0.318_575_100_223_094_24;
        assert_relative_eq!(c.conformal_factor(x).unwrap(), expected, max_relative = 1e-10);
        assert_relative_eq!(c.conformal_factor(-x).unwrap(), expected, max_relative = 1e-10);
        assert_relative_eq!(expected, 0.1 / (TAU * (0.05f64).tanh()), max_relative = 1e-14);
        assert!(c.conformal_factor(x * 1.0001).is_err());
        assert!(c.conformal_factor(f64::NAN).is_err());
    }

    #[test]
    fn conformal_factor_even_and_increasing() {
        let c = CollarParams::new(0.7).unwrap();
        let x = c.half_length();
        let mut prev = 0.0;
        for i in 0..100 {
            let s = x * f64::from(i) / 100.0;
            let r = c.conformal_factor(s).unwrap();
            assert_eq!(r, c.conformal_factor(-s).unwrap());
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn thin_boundary_values() {
        let c = CollarParams::new(1.0).unwrap();
        assert_eq!(c.thin_boundary(0.5).unwrap().x_delta, 0.0);
        assert!(c.thin_boundary(0.5).unwrap().is_empty());
        let c = CollarParams::new(0.1).unwrap();
        let w = c.thin_boundary(0.5).unwrap();
        assert_relative_eq!(w.x_delta, 92.655_405_053_184_31, max_relative = 1e-13);
        assert!(c.thin_boundary(0.0).is_err());
        assert!(c.thin_boundary(0.9).is_err());
    }

    #[test]
    fn thin_boundary_asymptotics() {
        let delta = 0.3;
        for ell in [1e-2, 1e-3, 1e-4, 1e-6] {
            let c = CollarParams::new(ell).unwrap();
            let x = c.thin_boundary(delta).unwrap().x_delta;
            let gap = x - (PI * PI / ell - PI / delta);
            assert!(gap.abs() < 1.0, "ell = {ell}: gap {gap}");
        }
    }

    #[test]
    fn injectivity_radius_values() {
        let c = CollarParams::new(0.1).unwrap();
        assert_relative_eq!(c.injectivity_radius(0.0).unwrap(), 0.05, max_relative = 1e-15);
        assert_relative_eq!(
            c.injectivity_radius(50.0).unwrap(),
            0.071_425_010_448_165_42,
            max_relative = 1e-13
        );
        let w = c.thin_boundary(0.5).unwrap();
        assert_relative_eq!(c.injectivity_radius(w.x_delta).unwrap(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn thin_area_values() {
        let c = CollarParams::new(0.1).unwrap();
        assert_relative_eq!(c.thin_area(0.5).unwrap(), 2.073_891_595_649_876, max_relative = 1e-13);
        assert_relative_eq!(
            c.thin_area_bound(0.5).unwrap(),
            2.083_512_983_042_627_6,
            max_relative = 1e-13
        );
        assert_eq!(CollarParams::new(1.2).unwrap().thin_area(0.5).unwrap(), 0.0);
        let c = CollarParams::new(1e-7).unwrap();
        assert_relative_eq!(c.thin_area(0.5).unwrap(), 4.0 * 0.5f64.sinh(), max_relative = 1e-6);
    }

    #[test]
    fn cusp_factor_matches_disc_model() {
        assert!(cusp_conformal_factor(PI).is_err());
        assert_relative_eq!(cusp_conformal_factor(TAU).unwrap(), 1.0 / TAU);
        for s in [3.2f64, 4.0, 10.0, 55.5] {
            let r = (-s).exp();
            // |dz| = |z| |dw| under z = exp(-s + i theta)
            let pulled_back = cusp_disc_factor(r).unwrap() * r;
            assert_relative_eq!(pulled_back, cusp_conformal_factor(s).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn default_delta0_is_admissible() {
        let margin = delta0_margin(DEFAULT_DELTA0, &[1e-4, 0.5]).unwrap();
        assert!(margin >= 1.0, "margin {margin}");
        validate_delta0(DEFAULT_DELTA0, &[]).unwrap();
        assert!(validate_delta0(0.85, &[]).is_err());
    }
}
