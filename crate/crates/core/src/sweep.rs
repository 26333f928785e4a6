//! Degeneration experiments over `(ell, delta)` grids.
//!
//! Random differentials have scaled coefficients `c_n = b_n e^{|n| X}` drawn
//! independently from the standard complex Gaussian law for `0 < |n| <= n_max`
//! (`b_0 = 0`), then normalised to unit `L^2` norm on the `delta0`-thick part.
//! [`CoefficientLaw::Tapered`] additionally divides `c_n` by `sqrt|n|`, which
//! keeps the thick norm bounded as `n_max` grows; under the Gaussian law it
//! grows like `sqrt(log n_max)`.
//!
//! Draws happen in the order `n = 1, -1, 2, -2, ...` so that doubling `n_max`
//! keeps the low modes of every trial unchanged.
//!
//! Each `(ell index, delta index, trial)` owns a ChaCha8 stream keyed by the
//! sweep seed, so reports do not depend on scheduling or thread count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::collar::{check_delta, validate_delta0, CollarParams, DEFAULT_DELTA0, MAX_COLLAR_LENGTH};
use crate::error::{Error, Result};
use crate::laurent::{mode_l2_norm_sq, LaurentQD, SubCollar, DEFAULT_N_MAX};
use crate::output::{Row, Status, SweepReport};
use crate::quadrature::Tolerance;

pub const LP_EXPONENTS: [f64; 3] = [1.0, 2.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum CoefficientLaw {
    #[default]
    Gaussian,
    Tapered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub ell_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub delta0: f64,
    pub n_max: u32,
    pub trials: usize,
    pub seed: u64,
    pub tol: Tolerance,
    pub law: CoefficientLaw,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            ell_grid: logspace(1e-4, 1.0, 25),
            delta_grid: linspace(0.05, 0.8, 16),
            delta0: DEFAULT_DELTA0,
            n_max: DEFAULT_N_MAX,
            trials: 64,
            seed: 0,
            tol: Tolerance::default(),
            law: CoefficientLaw::Gaussian,
        }
    }
}

/// `n` points from `a` to `b` inclusive, evenly spaced in `log10`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.log10(), b.log10(), n)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                a + (b - a) * t
            })
            .collect(),
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    if grid
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::Config(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_grid("ell", &self.ell_grid)?;
        check_grid("delta", &self.delta_grid)?;
        for &ell in &self.ell_grid {
            if !(ell > 0.0 && ell <= MAX_COLLAR_LENGTH) {
                return Err(Error::Config(format!(
                    "collar length {ell} outside (0, {MAX_COLLAR_LENGTH}]"
                )));
            }
        }
        for &delta in &self.delta_grid {
            check_delta(delta).map_err(|e| Error::Config(format!("delta grid: {e}")))?;
        }
        validate_delta0(self.delta0, &self.ell_grid)?;
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(usize, usize)> {
        (0..self.ell_grid.len())
            .flat_map(|i| (0..self.delta_grid.len()).map(move |j| (i, j)))
            .collect()
    }
}

/// `delta^2 e^{pi / delta}`, the reciprocal of the decay envelope.
pub fn decay_normalization(delta: f64) -> f64 {
    delta * delta * (PI / delta).exp()
}

fn trial_rng(seed: u64, i_ell: usize, i_delta: usize, trial: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key
        .chunks_exact_mut(8)
        .zip([seed, i_ell as u64, i_delta as u64, trial as u64])
    {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Zero-principal differential with random scaled coefficients, not normalised.
pub fn random_zero_principal(
    collar: CollarParams,
    n_max: u32,
    law: CoefficientLaw,
    rng: &mut ChaCha8Rng,
) -> Result<LaurentQD> {
    let mut coeffs = Vec::with_capacity(2 * n_max as usize);
    for m in 1..=n_max as i32 {
        for n in [m, -m] {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            // standard complex Gaussian: E|c|^2 = 1
            let mut c = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            if law == CoefficientLaw::Tapered {
                c /= f64::from(m).sqrt();
            }
            coeffs.push((n, c));
        }
    }
    LaurentQD::from_scaled(collar, n_max, coeffs)
}

/// The normalised differential used by trial `trial` of cell `(i_ell, i_delta)`.
pub fn trial_differential(cfg: &SweepConfig, i_ell: usize, i_delta: usize, trial: usize) -> Result<LaurentQD> {
    let collar = CollarParams::new(cfg.ell_grid[i_ell])?;
    let mut rng = trial_rng(cfg.seed, i_ell, i_delta, trial);
    let q = random_zero_principal(collar, cfg.n_max, cfg.law, &mut rng)?;
    let norm = q.thick_l2_norm(cfg.delta0)?;
    Ok(q.scale(Complex64::new(1.0 / norm, 0.0)))
}

/// Per cell, the largest `linf_thin` over the trials (`ratio`, the thick norm
/// being one) and its product with `delta^2 e^{pi/delta}`, then one summary
/// row with the largest normalised value over all non-empty cells.
pub fn decay_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let mut rows = cfg
        .cells()
        .par_iter()
        .map(|&(i, j)| {
            let (ell, delta) = (cfg.ell_grid[i], cfg.delta_grid[j]);
            let collar = CollarParams::new(ell)?;
            if collar.thin_boundary(delta)?.is_empty() {
                return Ok(Row::empty_thin(ell, delta, "linf_thin"));
            }
            let mut ratio: f64 = 0.0;
            for t in 0..cfg.trials {
                ratio = ratio.max(trial_differential(cfg, i, j, t)?.linf_thin(delta)?.value);
            }
            Ok(Row::ok(
                ell,
                delta,
                "linf_thin",
                ratio,
                Some(ratio * decay_normalization(delta)),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = rows
        .iter()
        .filter(|r| r.status == Status::Ok)
        .filter_map(|r| r.normalized)
        .fold(0.0, f64::max);
    rows.push(Row::summary("max_normalized", summary));
    Ok(SweepReport::new(rows))
}

/// Largest normalised decay value in a report from [`decay_sweep`].
pub fn decay_constant(report: &SweepReport) -> Option<f64> {
    report.statistic("max_normalized").next().and_then(|r| r.value)
}

/// Thin `L^2` mass of the principal mode `dw^2`: per cell the squared thin
/// norm (normalised by `ell^3`) and the thin share of the full-collar mass.
pub fn principal_mass_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let rows = cfg
        .cells()
        .par_iter()
        .map(|&(i, j)| {
            let (ell, delta) = (cfg.ell_grid[i], cfg.delta_grid[j]);
            let collar = CollarParams::new(ell)?;
            if collar.thin_boundary(delta)?.is_empty() {
                return Ok([
                    Row::empty_thin(ell, delta, "principal_thin_norm_sq"),
                    Row::empty_thin(ell, delta, "principal_mass_fraction"),
                ]);
            }
            let thin = mode_l2_norm_sq(&collar, 0, SubCollar::thin(&collar, delta)?);
            let full = mode_l2_norm_sq(&collar, 0, SubCollar::full(&collar));
            Ok([
                Row::ok(ell, delta, "principal_thin_norm_sq", thin, Some(ell.powi(3) * thin)),
                Row::ok(ell, delta, "principal_mass_fraction", thin / full, None),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport::new(rows.into_iter().flatten().collect()))
}

/// Least-squares slope of `log value` against `log ell`.
fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Smallest slope of `||b0 dw^2||_{L^2(thin)}` against `ell` that counts as
/// tending to zero.
pub const BIJ_SLOPE_THRESHOLD: f64 = 0.1;

/// Thin-part norms `|b0(ell)| ||dw^2||_{L^2(delta-thin)}` per `(ell, delta)`,
/// normalised as `|b0| ell^{-3/2}`, followed per `delta` by a `tends_to_zero`
/// row: value 1 when the log-log slope over the smaller half of the `ell`
/// grid is at least [`BIJ_SLOPE_THRESHOLD`] (or every norm there is zero),
/// else 0; the slope goes in the normalised column.
pub fn bij_normalization_check(cfg: &SweepConfig, b0_sequence: &[Complex64]) -> Result<SweepReport> {
    cfg.validate()?;
    if b0_sequence.len() != cfg.ell_grid.len() {
        return Err(Error::Config(format!(
            "b0 sequence has {} entries for {} collar lengths",
            b0_sequence.len(),
            cfg.ell_grid.len()
        )));
    }
    let mut rows = Vec::new();
    let mut tails: Vec<Vec<(f64, f64)>> = vec![Vec::new(); cfg.delta_grid.len()];
    let half = cfg.ell_grid.len().div_ceil(2).max(2);
    for (i, (&ell, b0)) in cfg.ell_grid.iter().zip(b0_sequence).enumerate() {
        let collar = CollarParams::new(ell)?;
        for (j, &delta) in cfg.delta_grid.iter().enumerate() {
            let value = if collar.thin_boundary(delta)?.is_empty() {
                rows.push(Row::empty_thin(ell, delta, "b0_thin_norm"));
                0.0
            } else {
                let v = b0.norm() * mode_l2_norm_sq(&collar, 0, SubCollar::thin(&collar, delta)?).sqrt();
                rows.push(Row::ok(ell, delta, "b0_thin_norm", v, Some(b0.norm() * ell.powf(-1.5))));
                v
            };
            if i < half {
                tails[j].push((ell, value));
            }
        }
    }
    for (&delta, tail) in cfg.delta_grid.iter().zip(&tails) {
        let positive: Vec<(f64, f64)> = tail.iter().copied().filter(|p| p.1 > 0.0).collect();
        let slope = loglog_slope(&positive);
        let pass = positive.is_empty() || slope.is_some_and(|s| s >= BIJ_SLOPE_THRESHOLD);
        rows.push(Row {
            ell: None,
            delta: Some(delta),
            statistic: "tends_to_zero".into(),
            value: Some(if pass { 1.0 } else { 0.0 }),
            normalized: slope,
            status: Status::Ok,
        });
    }
    Ok(SweepReport::new(rows))
}

fn lp_name(p: f64) -> String {
    if p.is_infinite() {
        "lp_thin_pinf".into()
    } else {
        format!("lp_thin_p{p}")
    }
}

/// Per cell and `p` in `{1, 2, 4, inf}`, the largest thin `L^p` norm over the
/// trials of [`decay_sweep`] (same draws), normalised by `delta^2 e^{pi/delta}`;
/// then one summary row per `p` with the largest normalised value.
pub fn lp_vanishing_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let exponents: Vec<f64> = LP_EXPONENTS.iter().copied().chain([f64::INFINITY]).collect();
    let cells = cfg
        .cells()
        .par_iter()
        .map(|&(i, j)| {
            let (ell, delta) = (cfg.ell_grid[i], cfg.delta_grid[j]);
            let collar = CollarParams::new(ell)?;
            if collar.thin_boundary(delta)?.is_empty() {
                return Ok(exponents
                    .iter()
                    .map(|&p| Row::empty_thin(ell, delta, &lp_name(p)))
                    .collect());
            }
            let thin = SubCollar::thin(&collar, delta)?;
            let mut best = vec![Some(0.0f64); exponents.len()];
            for t in 0..cfg.trials {
                let q = trial_differential(cfg, i, j, t)?;
                for (slot, &p) in best.iter_mut().zip(&exponents) {
                    let Some(current) = *slot else { continue };
                    let value = if p.is_infinite() {
                        Ok(q.linf_thin(delta)?.value)
                    } else {
                        q.lp_norm(thin, p, cfg.tol)
                    };
                    *slot = match value {
                        Ok(v) => Some(current.max(v)),
                        Err(e) if e.is_numerical() => None,
                        Err(e) => return Err(e),
                    };
                }
            }
            Ok(exponents
                .iter()
                .zip(best)
                .map(|(&p, v)| match v {
                    Some(v) => Row::ok(ell, delta, &lp_name(p), v, Some(v * decay_normalization(delta))),
                    None => Row::non_converged(ell, delta, &lp_name(p)),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<Vec<Row>>>>()?;
    let mut rows: Vec<Row> = cells.into_iter().flatten().collect();
    for &p in &exponents {
        let name = lp_name(p);
        let top = rows
            .iter()
            .filter(|r| r.statistic == name && r.status == Status::Ok)
            .filter_map(|r| r.normalized)
            .fold(0.0, f64::max);
        rows.push(Row::summary(
            &format!("max_normalized_{}", &name["lp_thin_".len()..]),
            top,
        ));
    }
    Ok(SweepReport::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small() -> SweepConfig {
        SweepConfig {
            ell_grid: vec![1e-3, 0.05, 1.0],
            delta_grid: vec![0.1, 0.3, 0.45],
            trials: 3,
            n_max: 6,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn default_grids() {
        let cfg = SweepConfig::default();
        assert_eq!(cfg.ell_grid.len(), 25);
        assert_relative_eq!(cfg.ell_grid[0], 1e-4, max_relative = 1e-14);
        assert_relative_eq!(cfg.ell_grid[24], 1.0, max_relative = 1e-14);
        assert_eq!(cfg.delta_grid.len(), 16);
        assert_relative_eq!(cfg.delta_grid[15], 0.8, max_relative = 1e-14);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let mut cfg = small();
        cfg.delta_grid = vec![0.3, 0.2];
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.ell_grid.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.delta0 = 0.85;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = small();
        cfg.delta_grid = vec![0.1, 0.9];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn draws_are_keyed_by_cell() {
        let cfg = small();
        let a = trial_differential(&cfg, 1, 2, 0).unwrap();
        assert_eq!(a, trial_differential(&cfg, 1, 2, 0).unwrap());
        assert_ne!(a, trial_differential(&cfg, 1, 2, 1).unwrap());
        assert_relative_eq!(a.thick_l2_norm(cfg.delta0).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(a.principal_part(), Complex64::new(0.0, 0.0));
        let wide = SweepConfig {
            n_max: 12,
            ..cfg.clone()
        };
        let b = trial_differential(&wide, 1, 2, 0).unwrap();
        let ratio = b.scaled_coeff(3) / a.scaled_coeff(3);
        assert_relative_eq!(ratio.im, 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            (b.scaled_coeff(-5) / a.scaled_coeff(-5)).re,
            ratio.re,
            max_relative = 1e-12
        );
    }

    #[test]
    fn decay_report_shape() {
        let cfg = small();
        let r = decay_sweep(&cfg).unwrap();
        assert_eq!(r.rows.len(), 10);
        let last_cell = &r.rows[8];
        assert_eq!(last_cell.status, Status::EmptyThin);
        assert_eq!(last_cell.value, Some(0.0));
        let c = decay_constant(&r).unwrap();
        assert!(c.is_finite() && c > 0.0);
    }

    #[test]
    fn principal_mass_limits() {
        let cfg = SweepConfig {
            ell_grid: vec![1e-3],
            delta_grid: vec![0.4],
            ..small()
        };
        let r = principal_mass_sweep(&cfg).unwrap();
        let scaled = r
            .statistic("principal_thin_norm_sq")
            .next()
            .unwrap()
            .normalized
            .unwrap();
        assert_relative_eq!(scaled, 32.0 * PI.powi(5), max_relative = 1e-2);
        assert_relative_eq!(scaled, 9_792.629_905_6, max_relative = 1e-9);
        let fraction = r.statistic("principal_mass_fraction").next().unwrap().value.unwrap();
        assert!(fraction > 0.99 && fraction < 1.0);
    }

    #[test]
    fn bij_flags() {
        let cfg = SweepConfig {
            ell_grid: logspace(1e-4, 1e-1, 8),
            delta_grid: vec![0.2, 0.4],
            ..small()
        };
        let flags = |b0: &dyn Fn(f64) -> f64| -> Vec<f64> {
            let seq: Vec<Complex64> = cfg.ell_grid.iter().map(|&l| Complex64::new(b0(l), 0.0)).collect();
            bij_normalization_check(&cfg, &seq)
                .unwrap()
                .statistic("tends_to_zero")
                .map(|r| r.value.unwrap())
                .collect()
        };
        assert_eq!(flags(&|l| l * l), vec![1.0, 1.0]);
        assert_eq!(flags(&|l| l), vec![0.0, 0.0]);
        assert_eq!(flags(&|_| 0.0), vec![1.0, 1.0]);
        assert!(bij_normalization_check(&cfg, &[Complex64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn lp_infinity_matches_decay() {
        let cfg = small();
        let decay = decay_sweep(&cfg).unwrap();
        let lp = lp_vanishing_sweep(&cfg).unwrap();
        let a: Vec<_> = decay.statistic("linf_thin").map(|r| r.value).collect();
        let b: Vec<_> = lp.statistic("lp_thin_pinf").map(|r| r.value).collect();
        assert_eq!(a, b);
        assert_eq!(lp.statistic("max_normalized_p1").count(), 1);
    }
}
