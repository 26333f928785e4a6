//! Meromorphic quadratic differentials `Phi = phi(z) dz^2` near a puncture.
//!
//! The puncture neighbourhood is the disc `0 < |z| < R` (default `R = e^{-pi}`)
//! with the complete hyperbolic metric `|dz|^2 / (|z| log|z|)^2`, equivalently the
//! half-cylinder `(pi, inf) x S^1` with metric `s^-2 (ds^2 + dtheta^2)` via
//! `z = e^{-s + i theta}`. With `|dz^2| = 2 sigma^-2` for the conformal factor
//! `sigma`, the pointwise norm is `|Phi| = 2 |phi| |z|^2 (log |z|)^2` and
//! `||Phi||_{L^1} = 2 \int\int |phi| dx dy`.
//!
//! A germ is integrable, bounded, and has at worst a simple pole, or none of
//! the three. Each property is computed here by a different route.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::collar::{cusp_conformal_factor, cusp_disc_factor};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, periodic_mean_saturating, Tolerance};

pub const DEFAULT_K_MIN: i32 = -8;

/// Far-field heights `u = -log|z|` used for the growth tests.
const FAR_NEAR: f64 = 1e150;
const FAR_FAR: f64 = 1e300;

/// Default neighbourhood radius `e^{-pi}`.
pub fn default_radius() -> f64 {
    (-PI).exp()
}

/// A Laurent germ `phi(z) = sum_k c_k z^k` on the punctured disc.
#[derive(Debug, Clone, PartialEq)]
pub struct PunctureGerm {
    coeffs: BTreeMap<i32, Complex64>,
    k_min: i32,
    radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundedness {
    pub bounded: bool,
    /// Supremum of the hyperbolic norm over the neighbourhood when bounded.
    pub sup: Option<f64>,
    /// `|z|` at which the supremum is attained.
    pub at_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub integrable: bool,
    pub bounded: bool,
    pub simple_pole_or_better: bool,
    pub pole_order: u32,
}

impl Classification {
    pub fn consistent(&self) -> bool {
        self.integrable == self.bounded && self.bounded == self.simple_pole_or_better
    }
}

impl PunctureGerm {
    pub fn new<I>(coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i32, Complex64)>,
    {
        Self::with_options(coeffs, DEFAULT_K_MIN, default_radius())
    }

    /// `k_min` bounds the most negative index; `radius` must lie in `(0, 1)`.
    pub fn with_options<I>(coeffs: I, k_min: i32, radius: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (i32, Complex64)>,
    {
        if !(radius.is_finite() && radius > 0.0 && radius < 1.0) {
            return Err(Error::domain("radius", radius, "0 < R < 1"));
        }
        let mut map = BTreeMap::new();
        for (k, c) in coeffs {
            if k < k_min {
                return Err(Error::Input(format!("index {k} is below k_min = {k_min}")));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Input(format!("non-finite coefficient at index {k}")));
            }
            if map.insert(k, c).is_some() {
                return Err(Error::Input(format!("duplicate index {k}")));
            }
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(PunctureGerm {
            coeffs: map,
            k_min,
            radius,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    /// `-min{k : c_k != 0}` if negative, else 0. No thresholding: any nonzero
    /// coefficient counts.
    pub fn pole_order(&self) -> Result<u32> {
        let lowest = *self.coeffs.keys().next().ok_or(Error::ZeroGerm)?;
        Ok(if lowest < 0 { lowest.unsigned_abs() } else { 0 })
    }

    fn order_or_zero(&self) -> u32 {
        self.pole_order().unwrap_or(0)
    }

    /// `phi(z)` at `z = r e^{i theta}`.
    pub fn phi(&self, r: f64, theta: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&k, &c)| c * Complex64::from_polar(r.powi(k), f64::from(k) * theta))
            .sum()
    }

    /// `r phi(r e^{i theta})`, finite at `r = 0` for at worst simple poles.
    fn r_phi(&self, r: f64, theta: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&k, &c)| c * Complex64::from_polar(r.powi(k + 1), f64::from(k) * theta))
            .sum()
    }

    /// `log |phi|` at `|z| = e^{-u}`, evaluated without overflow for huge `u`.
    fn log_abs_phi(&self, u: f64, theta: f64) -> f64 {
        let logs: Vec<(f64, Complex64, i32)> = self
            .coeffs
            .iter()
            .map(|(&k, &c)| (c.norm().ln() - f64::from(k) * u, c / c.norm(), k))
            .collect();
        let top = logs.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        let sum: Complex64 = logs
            .iter()
            .map(|&(l, phase, k)| {
                // the angle k * theta is reduced before use
                phase * Complex64::from_polar((l - top).exp(), (f64::from(k) * theta).rem_euclid(TAU))
            })
            .sum();
        top + sum.norm().ln()
    }

    fn theta_nodes(&self) -> usize {
        let span = match (self.coeffs.keys().next(), self.coeffs.keys().next_back()) {
            (Some(lo), Some(hi)) => (hi - lo) as usize,
            _ => 0,
        };
        (8 * span).max(256)
    }

    /// Hyperbolic pointwise norm `2 |phi| r^2 (log r)^2` at `z = r e^{i theta}`.
    pub fn density(&self, r: f64, theta: f64) -> Result<f64> {
        let sigma = cusp_disc_factor(r)?;
        Ok(self.phi(r, theta).norm() * 2.0 / (sigma * sigma))
    }

    /// `log` of the density at `|z| = e^{-u}`, maximised over a theta grid.
    fn log_density_max(&self, u: f64) -> f64 {
        let n = self.theta_nodes();
        let best = (0..n)
            .map(|j| self.log_abs_phi(u, TAU * j as f64 / n as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        2f64.ln() + best - 2.0 * u + 2.0 * u.ln()
    }

    /// `log` of the radial L^1 integrand `4 pi mean_theta |phi| e^{-2u}` in `u = -log r`.
    fn log_l1_integrand(&self, u: f64) -> f64 {
        let n = self.theta_nodes();
        let logs: Vec<f64> = (0..n).map(|j| self.log_abs_phi(u, TAU * j as f64 / n as f64)).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = logs.iter().map(|l| (l - top).exp()).sum::<f64>() / n as f64;
        (4.0 * PI).ln() + top + mean.ln() - 2.0 * u
    }

    /// Integrability from the decay of the radial L^1 integrand far into the cusp.
    pub fn integrable_by_growth(&self) -> bool {
        if self.is_zero() {
            return true;
        }
        self.log_l1_integrand(FAR_FAR) < self.log_l1_integrand(FAR_NEAR) - 1.0
    }

    /// `2 \int\int_{D_R} |phi| dx dy`; `+inf` for poles of order two or more.
    pub fn l1_norm(&self, tol: Tolerance) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        if self.order_or_zero() >= 2 {
            return Ok(f64::INFINITY);
        }
        if self.coeffs.len() == 1 {
            let (&k, c) = self.coeffs.iter().next().unwrap();
            let e = f64::from(k + 2);
            return Ok(4.0 * PI * c.norm() * self.radius.powf(e) / e);
        }
        self.l1_norm_polar(tol)
    }

    /// L^1 norm by polar quadrature of `4 pi r mean_theta |phi|` over `(0, R)`.
    pub fn l1_norm_polar(&self, tol: Tolerance) -> Result<f64> {
        if self.order_or_zero() >= 2 {
            return Ok(f64::INFINITY);
        }
        let nodes = self.theta_nodes();
        let inner = tol.tightened(0.1);
        let f = |r: f64| {
            let mean = periodic_mean_saturating(|t| self.r_phi(r, t).norm(), nodes, 1 << 16, inner);
            Ok(4.0 * PI * mean)
        };
        Ok(integrate(f, 0.0, self.radius, tol)?.value)
    }

    /// L^1 norm as `\int |Phi|_h d mu_h`, with the hyperbolic norm and area
    /// element evaluated separately.
    pub fn l1_norm_hyperbolic(&self, tol: Tolerance) -> Result<f64> {
        if self.order_or_zero() >= 2 {
            return Ok(f64::INFINITY);
        }
        let nodes = self.theta_nodes();
        let inner = tol.tightened(0.1);
        let f = |r: f64| {
            if r <= 0.0 {
                return Ok(0.0);
            }
            let sigma = cusp_disc_factor(r)?;
            let norm_dz2 = 2.0 / (sigma * sigma);
            let area = sigma * sigma * r;
            let mean =
                periodic_mean_saturating(|t| self.r_phi(r, t).norm() / r * norm_dz2 * area, nodes, 1 << 16, inner);
            Ok(TAU * mean)
        };
        Ok(integrate(f, 0.0, self.radius, tol)?.value)
    }

    /// L^1 norm computed on the half-cylinder `(s_R, inf) x S^1` with
    /// `z = e^{-s + i theta}` and the cusp metric `s^-2 (ds^2 + dtheta^2)`.
    pub fn l1_norm_cusp(&self, tol: Tolerance) -> Result<f64> {
        if self.order_or_zero() >= 2 {
            return Ok(f64::INFINITY);
        }
        let s0 = -self.radius.ln();
        let nodes = self.theta_nodes();
        let inner = tol.tightened(0.1);
        // s = s0 + t / (1 - t)
        let f = |t: f64| {
            if t >= 1.0 {
                return Ok(0.0);
            }
            let s = s0 + t / (1.0 - t);
            let jac = 1.0 / ((1.0 - t) * (1.0 - t));
            let rho = if s > PI { cusp_conformal_factor(s)? } else { 1.0 / s };
            let r = (-s).exp();
            // psi(w) = phi(z) z^2, |Phi| = |psi| 2 rho^-2, area rho^2
            let mean = periodic_mean_saturating(
                |th| self.r_phi(r, th).norm() * r * 2.0 / (rho * rho) * rho * rho,
                nodes,
                1 << 16,
                inner,
            );
            Ok(TAU * mean * jac)
        };
        Ok(integrate(f, 0.0, 1.0, tol)?.value)
    }

    /// L^1 norm over the annulus `eps <= |z| <= R`; finite for every germ.
    pub fn truncated_l1(&self, eps: f64, tol: Tolerance) -> Result<f64> {
        if !(eps > 0.0 && eps < self.radius) {
            return Err(Error::domain("eps", eps, "0 < eps < R"));
        }
        let nodes = self.theta_nodes();
        let inner = tol.tightened(0.1);
        let (u0, u1) = (-self.radius.ln(), -eps.ln());
        // dx dy = r^2 du dtheta with r = e^{-u}
        let f = |u: f64| {
            let r = (-u).exp();
            let mean = periodic_mean_saturating(|t| self.phi(r, t).norm(), nodes, 1 << 16, inner);
            Ok(4.0 * PI * mean * r * r)
        };
        Ok(integrate(f, u0, u1, tol)?.value)
    }

    /// Growth of the truncated L^1 norm per unit of `log(1/eps)` between
    /// `eps = R e^{-10}` and `R e^{-20}`; `4 pi |c_{-2}|` for a double pole.
    pub fn divergence_slope(&self, tol: Tolerance) -> Result<f64> {
        let near = self.truncated_l1(self.radius * (-10f64).exp(), tol)?;
        let far = self.truncated_l1(self.radius * (-20f64).exp(), tol)?;
        Ok((far - near) / 10.0)
    }

    /// Boundedness from the growth of the hyperbolic norm into the cusp, with
    /// the supremum located by grid search and golden-section refinement.
    pub fn is_bounded(&self) -> Result<Boundedness> {
        if self.is_zero() {
            return Ok(Boundedness {
                bounded: true,
                sup: Some(0.0),
                at_radius: Some(self.radius),
            });
        }
        if self.log_density_max(FAR_FAR) >= self.log_density_max(FAR_NEAR) {
            return Ok(Boundedness {
                bounded: false,
                sup: None,
                at_radius: None,
            });
        }
        let u0 = -self.radius.ln();
        let n = self.theta_nodes();
        let circle_max = |u: f64| -> Result<f64> {
            let r = (-u).exp();
            let mut best: f64 = 0.0;
            for j in 0..n {
                best = best.max(self.density(r, TAU * j as f64 / n as f64)?);
            }
            Ok(best)
        };
        let mut heights = vec![u0];
        let mut t = 1e-4;
        while t < 500.0 {
            heights.push(u0 + t);
            t *= 1.15;
        }
        let values = heights.iter().map(|&u| circle_max(u)).collect::<Result<Vec<_>>>()?;
        let (idx, mut sup) =
            values
                .iter()
                .cloned()
                .enumerate()
                .fold((0, f64::MIN), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let mut at = heights[idx];
        let (mut a, mut b) = (
            heights[idx.saturating_sub(1)],
            heights[(idx + 1).min(heights.len() - 1)],
        );
        const GOLDEN: f64 = 0.618_033_988_749_894_8;
        for _ in 0..40 {
            let c = b - GOLDEN * (b - a);
            let d = a + GOLDEN * (b - a);
            let (vc, vd) = (circle_max(c)?, circle_max(d)?);
            for (u, v) in [(c, vc), (d, vd)] {
                if v > sup {
                    sup = v;
                    at = u;
                }
            }
            if vc >= vd {
                b = d;
            } else {
                a = c;
            }
        }
        Ok(Boundedness {
            bounded: true,
            sup: Some(sup),
            at_radius: Some((-at).exp()),
        })
    }

    /// The three equivalent properties, each computed independently.
    pub fn classify(&self) -> Result<Classification> {
        let pole_order = self.order_or_zero();
        Ok(Classification {
            integrable: self.integrable_by_growth(),
            bounded: self.is_bounded()?.bounded,
            simple_pole_or_better: pole_order <= 1,
            pole_order,
        })
    }
}
