//! Adaptive Gauss-Kronrod quadrature in one variable and the periodic
//! trapezoid rule for angular averages.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Absolute and relative accuracy goals; a result is accepted when the
/// error estimate is at most `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-10 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Result<Self> {
        let ok = |t: f64| t.is_finite() && t >= 0.0;
        if !ok(abs) || !ok(rel) || (abs == 0.0 && rel == 0.0) {
            return Err(Error::Config(format!(
                "tolerances must be non-negative and not both zero (abs {abs}, rel {rel})"
            )));
        }
        Ok(Tolerance { abs, rel })
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }

    pub(crate) fn tightened(&self, factor: f64) -> Self {
        Tolerance {
            abs: self.abs * factor,
            rel: self.rel * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

const MAX_INTERVALS: usize = 4000;

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain("integrand", v, "finite values"))
        }
    };
    let fc = eval(center)?;
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut samples = [(0.0, 0.0); 10];
    for (j, sample) in samples.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
        *sample = (f1, f2);
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for (j, (f1, f2)) in samples.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let scale = half.abs();
    res_abs *= scale;
    res_asc *= scale;
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment {
        a,
        b,
        value: res_k * half,
        error,
    })
}

/// Integrates `f` over `[a, b]`, subdividing the worst interval until the
/// summed error estimate meets `tol`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate_with_breaks(f, &[a, b], tol)
}

/// Like [`integrate`], seeding the subdivision with the given break points.
pub fn integrate_with_breaks<F>(mut f: F, breaks: &[f64], tol: Tolerance) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if breaks.len() < 2 || breaks.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("quadrature needs at least two finite break points".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Segment> = Vec::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[1] < w[0] {
            return Err(Error::Input("quadrature break points must be sorted".into()));
        }
        if w[1] == w[0] {
            continue;
        }
        heap.push(kronrod21(&mut f, w[0], w[1])?);
        evaluations += 21;
    }

    let totals = |heap: &BinaryHeap<Segment>, frozen: &[Segment]| {
        heap.iter()
            .chain(frozen.iter())
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
    };

    loop {
        let (value, error) = totals(&heap, &frozen);
        let intervals = heap.len() + frozen.len();
        if error <= tol.target(value) {
            return Ok(QuadResult {
                value,
                error,
                intervals,
                evaluations,
            });
        }
        let worst = match heap.pop() {
            Some(seg) if intervals < MAX_INTERVALS => seg,
            _ => {
                return Err(Error::NonConverged {
                    estimate: error,
                    tolerance: tol.target(value),
                })
            }
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) <= 1e3 * f64::EPSILON * mid.abs() {
            frozen.push(worst);
            continue;
        }
        heap.push(kronrod21(&mut f, worst.a, mid)?);
        heap.push(kronrod21(&mut f, mid, worst.b)?);
        evaluations += 42;
    }
}

/// Mean of a `2 pi`-periodic function by the `n`-point trapezoid rule,
/// exact for trigonometric polynomials of degree below `n`.
pub fn periodic_mean_fixed<F: FnMut(f64) -> f64>(mut f: F, n: usize) -> f64 {
    let n = n.max(1);
    let step = TAU / n as f64;
    (0..n).map(|j| f(step * j as f64)).sum::<f64>() / n as f64
}

/// Mean of a `2 pi`-periodic function, doubling the trapezoid rule from
/// `n_start` nodes until successive means agree to `tol`.
pub fn periodic_mean<F: FnMut(f64) -> f64>(f: F, n_start: usize, n_limit: usize, tol: Tolerance) -> Result<f64> {
    let (mean, change) = doubling_mean(f, n_start, n_limit, tol);
    if !mean.is_finite() {
        return Err(Error::domain("integrand", mean, "finite values"));
    }
    if change > tol.target(mean) {
        return Err(Error::NonConverged {
            estimate: change,
            tolerance: tol.target(mean),
        });
    }
    Ok(mean)
}

/// Like [`periodic_mean`] but returns the `n_limit`-node estimate instead of
/// failing. Meant for integrands with isolated kinks (`|f|` through a zero),
/// where the trapezoid error decays only like `n^-2` at a few outer nodes.
pub fn periodic_mean_saturating<F: FnMut(f64) -> f64>(f: F, n_start: usize, n_limit: usize, tol: Tolerance) -> f64 {
    doubling_mean(f, n_start, n_limit, tol).0
}

fn doubling_mean<F: FnMut(f64) -> f64>(mut f: F, n_start: usize, n_limit: usize, tol: Tolerance) -> (f64, f64) {
    let mut n = n_start.max(2);
    let mut sum: f64 = (0..n).map(|j| f(TAU * j as f64 / n as f64)).sum();
    let mut mean = sum / n as f64;
    loop {
        let step = TAU / n as f64;
        let extra: f64 = (0..n).map(|j| f(step * (j as f64 + 0.5))).sum();
        sum += extra;
        n *= 2;
        let refined = sum / n as f64;
        let change = (refined - mean).abs();
        mean = refined;
        if !mean.is_finite() || change <= tol.target(mean) || n >= n_limit {
            return (mean, change);
        }
    }
}
