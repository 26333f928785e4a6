//! Holomorphic quadratic differentials on a collar as truncated Laurent series
//!
//! ```text
//! Theta = phi(w) dw^2,   phi(w) = sum_n b_n e^{n w},   w = s + i theta
//! ```
//!
//! Coefficients are stored relative to the collar ends: `b_n = c_n e^{-|n| X}`.
//! Mode `n` then has modulus `|c_n| e^{-|n| (X - |s|)}` at the end it grows
//! towards, so the stored `c_n` stay of order one even when `X` is in the
//! tens of thousands and `b_n` itself would underflow.
//!
//! Pointwise norms use the convention `|dw^2| = 2 rho^-2`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::collar::{check_delta, CollarParams};
use crate::error::{Error, Result};
use crate::modes::scaled_mode_norm_sq;
use crate::quadrature::{integrate_with_breaks, periodic_mean_fixed, periodic_mean_saturating, Tolerance};

pub const DEFAULT_N_MAX: u32 = 32;

/// A window `(s1, s2) x S^1` of a collar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubCollar {
    pub s1: f64,
    pub s2: f64,
}

impl SubCollar {
    pub fn new(collar: &CollarParams, s1: f64, s2: f64) -> Result<Self> {
        let x = collar.half_length();
        if !(s1.is_finite() && s2.is_finite()) || s1 < -x || s2 > x || s1 > s2 {
            return Err(Error::Input(format!(
                "sub-collar ({s1}, {s2}) must satisfy -X <= s1 <= s2 <= X with X = {x}"
            )));
        }
        Ok(SubCollar { s1, s2 })
    }

    pub fn full(collar: &CollarParams) -> Self {
        let x = collar.half_length();
        SubCollar { s1: -x, s2: x }
    }

    /// The delta-thin window; degenerate `(0, 0)` when the thin part is empty.
    pub fn thin(collar: &CollarParams, delta: f64) -> Result<Self> {
        let x = collar.thin_boundary(delta)?.x_delta;
        Ok(SubCollar { s1: -x, s2: x })
    }

    /// The two ends `[-X, -X_delta]` and `[X_delta, X]` forming the delta-thick part.
    pub fn thick(collar: &CollarParams, delta: f64) -> Result<[Self; 2]> {
        let x = collar.half_length();
        let xd = collar.thin_boundary(delta)?.x_delta;
        if xd == 0.0 {
            // the thick part is the whole collar; split at the core
            return Ok([SubCollar { s1: -x, s2: 0.0 }, SubCollar { s1: 0.0, s2: x }]);
        }
        Ok([SubCollar { s1: -x, s2: -xd }, SubCollar { s1: xd, s2: x }])
    }

    pub fn width(&self) -> f64 {
        self.s2 - self.s1
    }
}

/// Squared L^2 norm of `e^{n w} dw^2` over `win`; `+inf` when it exceeds `f64`.
pub fn mode_l2_norm_sq(collar: &CollarParams, n: i32, win: SubCollar) -> f64 {
    let scaled = scaled_mode_norm_sq(collar, n, win.s1, win.s2);
    if scaled == 0.0 {
        return 0.0;
    }
    let shift = 2.0 * f64::from(n.unsigned_abs()) * collar.half_length();
    (scaled.ln() + shift).exp()
}

/// A quadratic differential on a collar given by a finite Laurent window.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentQD {
    collar: CollarParams,
    n_max: u32,
    scaled: BTreeMap<i32, Complex64>,
}

fn end_scale(collar: &CollarParams, n: i32) -> f64 {
    f64::from(n.unsigned_abs()) * collar.half_length()
}

impl LaurentQD {
    pub fn zero(collar: CollarParams, n_max: u32) -> Self {
        LaurentQD {
            collar,
            n_max,
            scaled: BTreeMap::new(),
        }
    }

    fn check_index(n: i32, n_max: u32) -> Result<()> {
        if n.unsigned_abs() > n_max {
            return Err(Error::Input(format!("mode index {n} exceeds n_max = {n_max}")));
        }
        Ok(())
    }

    /// Builds from raw Laurent coefficients `b_n`; duplicate indices are rejected.
    pub fn from_coeffs<I>(collar: CollarParams, n_max: u32, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i32, Complex64)>,
    {
        let mut q = Self::zero(collar, n_max);
        let mut seen = std::collections::BTreeSet::new();
        for (n, b) in coeffs {
            Self::check_index(n, n_max)?;
            if !seen.insert(n) {
                return Err(Error::Input(format!("duplicate mode index {n}")));
            }
            if !(b.re.is_finite() && b.im.is_finite()) {
                return Err(Error::Input(format!("non-finite coefficient at mode {n}")));
            }
            if b == Complex64::new(0.0, 0.0) {
                continue;
            }
            let scale = end_scale(&collar, n);
            let c = b * scale.exp();
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Input(format!(
                    "coefficient at mode {n} is too large for a collar of half-length {}",
                    collar.half_length()
                )));
            }
            q.scaled.insert(n, c);
        }
        Ok(q)
    }

    /// Builds from end-scaled coefficients `c_n = b_n e^{|n| X}`.
    pub fn from_scaled<I>(collar: CollarParams, n_max: u32, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i32, Complex64)>,
    {
        let mut q = Self::zero(collar, n_max);
        for (n, c) in coeffs {
            Self::check_index(n, n_max)?;
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Input(format!("non-finite coefficient at mode {n}")));
            }
            if c != Complex64::new(0.0, 0.0) {
                q.scaled.insert(n, c);
            }
        }
        Ok(q)
    }

    pub fn collar(&self) -> &CollarParams {
        &self.collar
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn is_zero(&self) -> bool {
        self.scaled.is_empty()
    }

    /// Raw coefficient `b_n` (may underflow to zero on long collars).
    pub fn coeff(&self, n: i32) -> Complex64 {
        self.scaled_coeff(n) * (-end_scale(&self.collar, n)).exp()
    }

    pub fn scaled_coeff(&self, n: i32) -> Complex64 {
        self.scaled.get(&n).copied().unwrap_or_default()
    }

    /// Nonzero `(n, c_n)` pairs in increasing `n`.
    pub fn scaled_coeffs(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.scaled.iter().map(|(&n, &c)| (n, c))
    }

    /// Nonzero `(n, b_n)` pairs in increasing `n`.
    pub fn coeffs(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.scaled.keys().map(move |&n| (n, self.coeff(n)))
    }

    /// The principal part `b_0`.
    pub fn principal_part(&self) -> Complex64 {
        self.scaled_coeff(0)
    }

    /// `Theta - b_0 dw^2`.
    pub fn remove_principal(&self) -> Self {
        let mut q = self.clone();
        q.scaled.remove(&0);
        q
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let scaled = self
            .scaled
            .iter()
            .map(|(&n, &c)| (n, c * factor))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        LaurentQD {
            collar: self.collar,
            n_max: self.n_max,
            scaled,
        }
    }

    /// `self + factor * other`; both must live on the same collar.
    pub fn add_scaled(&self, factor: Complex64, other: &LaurentQD) -> Result<Self> {
        if self.collar != other.collar {
            return Err(Error::Input("differentials live on different collars".into()));
        }
        let mut out = self.clone();
        out.n_max = self.n_max.max(other.n_max);
        for (&n, &c) in &other.scaled {
            *out.scaled.entry(n).or_default() += factor * c;
        }
        Ok(out)
    }

    /// Hermitian L^2 pairing `<self, other>` over `win`, conjugate-linear in `self`.
    pub fn inner(&self, other: &LaurentQD, win: SubCollar) -> Result<Complex64> {
        if self.collar != other.collar {
            return Err(Error::Input("differentials live on different collars".into()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (&n, &c) in &self.scaled {
            if let Some(&d) = other.scaled.get(&n) {
                acc += c.conj() * d * scaled_mode_norm_sq(&self.collar, n, win.s1, win.s2);
            }
        }
        Ok(acc)
    }

    /// Squared L^2 norm over `win` from the mode-wise closed form.
    pub fn l2_norm_sq(&self, win: SubCollar) -> f64 {
        self.scaled
            .iter()
            .map(|(&n, c)| c.norm_sqr() * scaled_mode_norm_sq(&self.collar, n, win.s1, win.s2))
            .sum()
    }

    pub fn l2_norm(&self, win: SubCollar) -> f64 {
        self.l2_norm_sq(win).sqrt()
    }

    /// L^2 norm over the delta-thick part of the collar.
    pub fn thick_l2_norm(&self, delta: f64) -> Result<f64> {
        let [left, right] = SubCollar::thick(&self.collar, delta)?;
        Ok((self.l2_norm_sq(left) + self.l2_norm_sq(right)).sqrt())
    }

    /// Mode amplitudes `c_n e^{n s - |n| X}` at height `s`, indexed from `lowest_mode`.
    fn amplitudes(&self, s: f64) -> (i32, Vec<Complex64>) {
        let (lo, hi) = match (self.scaled.keys().next(), self.scaled.keys().next_back()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return (0, Vec::new()),
        };
        let x = self.collar.half_length();
        let mut amps = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (&n, &c) in &self.scaled {
            let nf = f64::from(n);
            amps[(n - lo) as usize] = c * (nf * s - nf.abs() * x).exp();
        }
        (lo, amps)
    }

    /// Hyperbolic pointwise norm `|phi(s, theta)| 2 rho(s)^-2`.
    pub fn eval_density(&self, s: f64, theta: f64) -> Result<f64> {
        let weight = self.collar.dw2_norm(s)?;
        let (lo, amps) = self.amplitudes(s);
        Ok(horner(&amps, lo, theta).norm() * weight)
    }

    /// `(\int\int |Theta|^p rho^2 ds dtheta)^{1/p}` over `win` by quadrature.
    pub fn lp_norm(&self, win: SubCollar, p: f64, tol: Tolerance) -> Result<f64> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::domain("p", p, "1 <= p < inf"));
        }
        if self.is_zero() || win.width() <= 0.0 {
            return Ok(0.0);
        }
        let span = (self.scaled.keys().next_back().unwrap() - self.scaled.keys().next().unwrap()) as usize;
        let exact_nodes = (2 * span + 2).next_power_of_two().max(8);
        let inner_tol = tol.tightened(0.1);
        let freq = self.collar.freq();
        let integrand = |s: f64| -> Result<f64> {
            let (lo, amps) = self.amplitudes(s);
            let circle = |theta: f64| horner(&amps, lo, theta).norm().powf(p);
            let mean = if p == 2.0 {
                periodic_mean_fixed(circle, exact_nodes)
            } else {
                periodic_mean_saturating(circle, exact_nodes.max(64), 1 << 15, inner_tol)
            };
            // |Theta|^p rho^2 = 2^p |phi|^p rho^{2 - 2p}
            let rho = freq / self.collar.cos_factor(s)?;
            Ok(TAU * mean * 2f64.powf(p) * rho.powf(2.0 - 2.0 * p))
        };
        let result = integrate_with_breaks(integrand, &end_breaks(self.collar.half_length(), win), tol)?;
        Ok(result.value.max(0.0).powf(1.0 / p))
    }

    /// Supremum of the pointwise norm over the delta-thin sub-collar.
    pub fn linf_thin(&self, delta: f64) -> Result<LinfThin> {
        check_delta(delta)?;
        let x_delta = self.collar.thin_boundary(delta)?.x_delta;
        let theta_nodes = (8 * self.n_max as usize).max(256);
        if x_delta == 0.0 || self.is_zero() {
            return Ok(LinfThin {
                value: 0.0,
                envelope: 0.0,
                s: 0.0,
                theta: 0.0,
                empty: x_delta == 0.0,
            });
        }
        let envelope = self.thin_envelope(x_delta)?;
        let sup = ThinSup::new(self, x_delta, theta_nodes).search()?;
        Ok(LinfThin {
            value: sup.value,
            // equal up to rounding for a single mode
            envelope: envelope.max(sup.value),
            s: sup.s,
            theta: sup.theta,
            empty: false,
        })
    }

    /// `sum_n |b_n| sup_{|s| <= X_delta} e^{n s} 2 rho^-2(s)`; each mode is
    /// monotone in `s` on the collar, so the sup sits at an end (or the core for `n = 0`).
    fn thin_envelope(&self, x_delta: f64) -> Result<f64> {
        let x = self.collar.half_length();
        let at_end = self.collar.dw2_norm(x_delta)?;
        let at_core = self.collar.dw2_norm(0.0)?;
        Ok(self
            .scaled
            .iter()
            .map(|(&n, c)| {
                if n == 0 {
                    c.norm() * at_core
                } else {
                    c.norm() * (-f64::from(n.unsigned_abs()) * (x - x_delta)).exp() * at_end
                }
            })
            .sum())
    }

    /// Pointwise envelope `sum_n |b_n| e^{n s} 2 rho^-2(s)` at height `s`.
    fn envelope_at(&self, s: f64) -> Result<f64> {
        let x = self.collar.half_length();
        let weight = self.collar.dw2_norm(s)?;
        Ok(self
            .scaled
            .iter()
            .map(|(&n, c)| {
                let nf = f64::from(n);
                c.norm() * (nf * s - nf.abs() * x).exp()
            })
            .sum::<f64>()
            * weight)
    }

    /// Empirical constant `max_{n != 0} |b_n| |n|^{-1/2} e^{|n| X}` after
    /// normalising to unit L^2 norm on the `delta0`-thick part.
    pub fn coefficient_bound_check(&self, delta0: f64) -> Result<CoefficientBound> {
        let b0 = self.principal_part();
        if b0 != Complex64::new(0.0, 0.0) {
            return Err(Error::NonzeroPrincipal(b0));
        }
        let thick_norm = self.thick_l2_norm(delta0)?;
        if self.is_zero() {
            return Ok(CoefficientBound {
                constant: 0.0,
                thick_norm,
                mode: None,
            });
        }
        let (mode, constant) = self
            .scaled
            .iter()
            .map(|(&n, c)| (n, c.norm() / f64::from(n.unsigned_abs()).sqrt() / thick_norm))
            .fold(
                (None, 0.0),
                |(bn, bv), (n, v)| if v > bv { (Some(n), v) } else { (bn, bv) },
            );
        Ok(CoefficientBound {
            constant,
            thick_norm,
            mode,
        })
    }
}

/// Result of [`LaurentQD::linf_thin`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfThin {
    /// Largest sampled pointwise norm on the thin part.
    pub value: f64,
    /// Mode-wise upper bound; always at least `value`.
    pub envelope: f64,
    /// Location of the sampled maximum.
    pub s: f64,
    pub theta: f64,
    /// The thin part is empty.
    pub empty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBound {
    pub constant: f64,
    pub thick_norm: f64,
    pub mode: Option<i32>,
}

/// Break points of `win` at distances `2^k / 8` from either collar end, plus
/// the core; mode mass concentrates within `1 / |n|` of the ends.
fn end_breaks(x: f64, win: SubCollar) -> Vec<f64> {
    let mut pts = vec![win.s1, win.s2, 0.0];
    let mut d = 0.125;
    while d < x {
        pts.push(x - d);
        pts.push(d - x);
        d *= 2.0;
    }
    pts.retain(|&s| s >= win.s1 && s <= win.s2);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `e^{i lo theta} sum_k amps[k] e^{i k theta}`.
fn horner(amps: &[Complex64], lo: i32, theta: f64) -> Complex64 {
    if amps.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let z = Complex64::from_polar(1.0, theta);
    let mut acc = Complex64::new(0.0, 0.0);
    for a in amps.iter().rev() {
        acc = acc * z + a;
    }
    acc * Complex64::from_polar(1.0, f64::from(lo) * theta)
}

#[derive(Debug, Clone, Copy)]
struct SupPoint {
    value: f64,
    s: f64,
    theta: f64,
}

/// Branch-and-bound search for the thin-part supremum: candidate heights are
/// visited in decreasing order of the pointwise envelope and skipped once the
/// envelope falls below the best sampled value.
struct ThinSup<'a> {
    q: &'a LaurentQD,
    x_delta: f64,
    theta_nodes: usize,
    fft: Arc<dyn Fft<f64>>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

impl<'a> ThinSup<'a> {
    fn new(q: &'a LaurentQD, x_delta: f64, theta_nodes: usize) -> Self {
        ThinSup {
            q,
            x_delta,
            theta_nodes,
            fft: FftPlanner::new().plan_fft_inverse(theta_nodes),
        }
    }

    fn heights(&self) -> Vec<f64> {
        let xd = self.x_delta;
        let mut s = vec![0.0, xd, -xd];
        let mut t = 1e-3;
        while t < xd {
            s.push(xd - t);
            s.push(t - xd);
            t *= 1.25;
        }
        for i in 1..64 {
            s.push(-xd + 2.0 * xd * f64::from(i) / 64.0);
        }
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }

    /// Largest sample of the density on the circle at height `s`; the
    /// samples `sum_k amps[k] e^{i k theta_j}` come from one inverse FFT.
    fn circle_max(&self, s: f64) -> Result<SupPoint> {
        let weight = self.q.collar.dw2_norm(s)?;
        let (_, amps) = self.q.amplitudes(s);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.theta_nodes];
        // amps.len() <= 2 n_max + 1 < theta_nodes, so nothing aliases
        buf[..amps.len()].copy_from_slice(&amps);
        self.fft.process(&mut buf);
        let (j, v) = buf
            .iter()
            .map(|z| z.norm())
            .enumerate()
            .fold((0, -1.0), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
        Ok(SupPoint {
            value: v * weight,
            s,
            theta: TAU * j as f64 / self.theta_nodes as f64,
        })
    }

    fn search(&self) -> Result<SupPoint> {
        let heights = self.heights();
        let mut order: Vec<(f64, usize)> = heights
            .iter()
            .enumerate()
            .map(|(i, &s)| self.q.envelope_at(s).map(|e| (e, i)))
            .collect::<Result<_>>()?;
        order.sort_by(|a, b| b.0.total_cmp(&a.0));

        let mut best = SupPoint {
            value: 0.0,
            s: 0.0,
            theta: 0.0,
        };
        let mut best_idx = 0;
        for &(bound, i) in &order {
            if bound <= best.value {
                break;
            }
            let p = self.circle_max(heights[i])?;
            if p.value > best.value {
                best = p;
                best_idx = i;
            }
        }

        // golden-section refinement in s between the neighbouring heights
        let lo = heights[best_idx.saturating_sub(1)];
        let hi = heights[(best_idx + 1).min(heights.len() - 1)];
        let (mut a, mut b) = (lo, hi);
        let mut c = b - GOLDEN * (b - a);
        let mut d = a + GOLDEN * (b - a);
        let mut fc = self.circle_max(c)?;
        let mut fd = self.circle_max(d)?;
        for _ in 0..25 {
            if fc.value > best.value {
                best = fc;
            }
            if fd.value > best.value {
                best = fd;
            }
            if fc.value >= fd.value {
                b = d;
                d = c;
                fd = fc;
                c = b - GOLDEN * (b - a);
                fc = self.circle_max(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + GOLDEN * (b - a);
                fd = self.circle_max(d)?;
            }
        }
        for p in [fc, fd] {
            if p.value > best.value {
                best = p;
            }
        }

        // golden-section refinement in theta around the best grid angle
        let weight = self.q.collar.dw2_norm(best.s)?;
        let (lo_mode, amps) = self.q.amplitudes(best.s);
        let step = TAU / self.theta_nodes as f64;
        let eval = |t: f64| horner(&amps, lo_mode, t).norm() * weight;
        let (mut a, mut b) = (best.theta - step, best.theta + step);
        for _ in 0..40 {
            let c = b - GOLDEN * (b - a);
            let d = a + GOLDEN * (b - a);
            let (vc, vd) = (eval(c), eval(d));
            for (t, v) in [(c, vc), (d, vd)] {
                if v > best.value {
                    best.value = v;
                    best.theta = t.rem_euclid(TAU);
                }
            }
            if vc >= vd {
                b = d;
            } else {
                a = c;
            }
        }
        Ok(best)
    }
}

impl Add for &LaurentQD {
    type Output = LaurentQD;

    /// Panics if the collars differ; use [`LaurentQD::add_scaled`] for a fallible sum.
    fn add(self, rhs: &LaurentQD) -> LaurentQD {
        self.add_scaled(Complex64::new(1.0, 0.0), rhs)
            .expect("differentials on different collars")
    }
}

impl Sub for &LaurentQD {
    type Output = LaurentQD;

    fn sub(self, rhs: &LaurentQD) -> LaurentQD {
        self.add_scaled(Complex64::new(-1.0, 0.0), rhs)
            .expect("differentials on different collars")
    }
}

impl Mul<Complex64> for &LaurentQD {
    type Output = LaurentQD;

    fn mul(self, rhs: Complex64) -> LaurentQD {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn collar(ell: f64) -> CollarParams {
        CollarParams::new(ell).unwrap()
    }

    #[test]
    fn principal_part_and_removal() {
        let k = collar(0.5);
        let q = LaurentQD::from_coeffs(k, 4, [(0, c(1.0, 0.0))]).unwrap();
        assert_eq!(q.principal_part(), c(1.0, 0.0));
        let q = LaurentQD::from_coeffs(k, 4, [(1, c(0.0, 5.0)), (-3, c(2.0, 0.0))]).unwrap();
        assert_eq!(q.principal_part(), c(0.0, 0.0));

        let q = LaurentQD::from_coeffs(k, 4, [(0, c(3.0, 0.0))]).unwrap();
        assert!(q.remove_principal().is_zero());
        let q = LaurentQD::from_coeffs(k, 4, [(0, c(3.0, 0.0)), (2, c(1.0, 0.0))]).unwrap();
        let r = q.remove_principal();
        assert_eq!(r.principal_part(), c(0.0, 0.0));
        assert_relative_eq!(r.coeff(2).re, 1.0, max_relative = 1e-12);
        assert_eq!(r.scaled_coeffs().count(), 1);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let k = collar(0.5);
        assert!(LaurentQD::from_coeffs(k, 2, [(3, c(1.0, 0.0))]).is_err());
        assert!(LaurentQD::from_coeffs(k, 2, [(1, c(1.0, 0.0)), (1, c(2.0, 0.0))]).is_err());
        assert!(LaurentQD::from_coeffs(k, 2, [(1, c(f64::NAN, 0.0))]).is_err());
        // e^{X} with X ~ 1e5 is not representable
        assert!(LaurentQD::from_coeffs(collar(1e-4), 2, [(1, c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn density_of_principal_mode_at_core() {
        let ell = 0.3;
        let q = LaurentQD::from_coeffs(collar(ell), 2, [(0, c(0.6, -0.8))]).unwrap();
        assert_relative_eq!(
            q.eval_density(0.0, 1.234).unwrap(),
            8.0 * PI * PI / (ell * ell),
            max_relative = 1e-14
        );
        let z = LaurentQD::zero(collar(ell), 2);
        assert_eq!(z.eval_density(3.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_density_is_rotation_invariant() {
        let q = LaurentQD::from_coeffs(collar(0.3), 2, [(1, c(1.0, 0.0))]).unwrap();
        let a = q.eval_density(4.0, 0.3).unwrap();
        let b = q.eval_density(4.0, 0.3 + PI).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);
        assert!(q.eval_density(1e6, 0.0).is_err());
    }

    #[test]
    fn lp_quadrature_finds_end_mass_on_long_collars() {
        let k = collar(4e-4);
        let q = LaurentQD::from_scaled(k, 8, [(5, c(1.0, 0.0)), (-2, c(0.0, 1.0))]).unwrap();
        let full = SubCollar::full(&k);
        let quad = q.lp_norm(full, 2.0, Tolerance::new(1e-300, 1e-12).unwrap()).unwrap();
        assert_relative_eq!(quad, q.l2_norm(full), max_relative = 1e-9);
    }

    #[test]
    fn mode_norm_edge_cases() {
        let k = collar(0.2);
        let x = k.half_length();
        let w = SubCollar::new(&k, 1.5, 1.5).unwrap();
        assert_eq!(mode_l2_norm_sq(&k, 3, w), 0.0);
        let sym = SubCollar::new(&k, -0.7 * x, 0.7 * x).unwrap();
        assert_relative_eq!(
            mode_l2_norm_sq(&k, 2, sym),
            mode_l2_norm_sq(&k, -2, sym),
            max_relative = 1e-13
        );
        let full = SubCollar::full(&collar(0.1));
        assert_relative_eq!(
            mode_l2_norm_sq(&collar(0.1), 0, full),
            9_792_111.305_850_527,
            max_relative = 1e-12
        );
        assert!(SubCollar::new(&k, 0.0, 2.0 * x).is_err());
        assert!(SubCollar::new(&k, 1.0, 0.0).is_err());
    }

    #[test]
    fn l2_norm_scales_and_splits() {
        let k = collar(0.4);
        let q = LaurentQD::from_coeffs(k, 4, [(0, c(1.0, 0.5)), (1, c(-0.3, 0.2)), (-2, c(0.1, 0.0))]).unwrap();
        let win = SubCollar::new(&k, -3.0, 10.0).unwrap();
        let lambda = c(-2.0, 1.5);
        assert_relative_eq!(
            q.scale(lambda).l2_norm(win),
            lambda.norm() * q.l2_norm(win),
            max_relative = 1e-14
        );
        let principal = LaurentQD::from_coeffs(k, 4, [(0, q.principal_part())]).unwrap();
        let lhs = q.l2_norm_sq(win);
        let rhs = principal.l2_norm_sq(win) + q.remove_principal().l2_norm_sq(win);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
    }

    #[test]
    fn quadrature_norm_agrees_with_closed_form() {
        let k = collar(0.6);
        let q = LaurentQD::from_coeffs(k, 3, [(0, c(1.0, 0.0)), (1, c(1.0, 0.0))]).unwrap();
        let win = SubCollar::new(&k, -5.0, 8.0).unwrap();
        let quad = q.lp_norm(win, 2.0, Tolerance::default()).unwrap();
        assert_relative_eq!(quad, q.l2_norm(win), max_relative = 1e-10);
        assert_eq!(
            LaurentQD::zero(k, 3).lp_norm(win, 1.0, Tolerance::default()).unwrap(),
            0.0
        );
        assert!(q.lp_norm(win, 0.5, Tolerance::default()).is_err());
    }

    #[test]
    fn l1_norm_of_principal_mode() {
        // \int\int 2 rho^-2 rho^2 = 2 * (2 pi) * width
        let k = collar(0.25);
        let q = LaurentQD::from_coeffs(k, 0, [(0, c(1.0, 0.0))]).unwrap();
        let full = SubCollar::full(&k);
        let v = q.lp_norm(full, 1.0, Tolerance::default()).unwrap();
        assert_relative_eq!(v, 2.0 * TAU * full.width(), max_relative = 1e-10);
    }

    #[test]
    fn linf_thin_principal_and_single_mode() {
        let ell = 0.05;
        let k = collar(ell);
        let q = LaurentQD::from_coeffs(k, 0, [(0, c(0.0, 2.0))]).unwrap();
        let r = q.linf_thin(0.3).unwrap();
        assert_relative_eq!(r.value, 2.0 * 8.0 * PI * PI / (ell * ell), max_relative = 1e-12);
        assert_eq!(r.s, 0.0);

        let delta = 0.3;
        let q = LaurentQD::from_scaled(k, 4, [(2, c(0.5, 0.5))]).unwrap();
        let r = q.linf_thin(delta).unwrap();
        let xd = k.thin_boundary(delta).unwrap().x_delta;
        let ratio = (ell / 2.0).sinh() / delta.sinh();
        let b = q.coeff(2).norm();
        let expected = b * (2.0 * xd).exp() * 8.0 * PI * PI / (ell * ell) * ratio * ratio;
        assert_relative_eq!(r.value, expected, max_relative = 1e-9);
        assert_relative_eq!(r.envelope, expected, max_relative = 1e-9);
        assert_relative_eq!(r.s, xd, max_relative = 1e-12);
    }

    #[test]
    fn linf_thin_empty_part() {
        let q = LaurentQD::from_coeffs(collar(1.0), 2, [(1, c(1.0, 0.0))]).unwrap();
        let r = q.linf_thin(0.2).unwrap();
        assert!(r.empty);
        assert_eq!(r.value, 0.0);
        assert!(q.linf_thin(1.0).is_err());
    }

    #[test]
    fn coefficient_bound_of_single_mode() {
        let k = collar(0.1);
        let delta0 = 0.4;
        let q = LaurentQD::from_coeffs(k, 2, [(1, c(0.0, 3.0))]).unwrap();
        let r = q.coefficient_bound_check(delta0).unwrap();
        let unit = LaurentQD::from_coeffs(k, 2, [(1, c(1.0, 0.0))]).unwrap();
        let mode_norm = unit.thick_l2_norm(delta0).unwrap();
        let expected = k.half_length().exp() / mode_norm;
        assert_relative_eq!(r.constant, expected, max_relative = 1e-12);
        assert_eq!(r.mode, Some(1));

        let z = LaurentQD::zero(k, 2);
        assert_eq!(z.coefficient_bound_check(delta0).unwrap().constant, 0.0);
        let p = LaurentQD::from_coeffs(k, 2, [(0, c(1.0, 0.0))]).unwrap();
        assert!(matches!(
            p.coefficient_bound_check(delta0),
            Err(Error::NonzeroPrincipal(_))
        ));
    }

    #[test]
    fn coefficient_bound_ignores_phases() {
        let k = collar(0.3);
        let q = LaurentQD::from_scaled(k, 3, [(1, c(1.0, 0.0)), (-2, c(0.0, 2.0)), (3, c(0.5, 0.5))]).unwrap();
        let rotated = LaurentQD::from_scaled(
            k,
            3,
            q.scaled_coeffs()
                .map(|(n, c)| (n, c * Complex64::from_polar(1.0, 0.7 * f64::from(n)))),
        )
        .unwrap();
        let a = q.coefficient_bound_check(0.4).unwrap().constant;
        let b = rotated.coefficient_bound_check(0.4).unwrap().constant;
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }
}
