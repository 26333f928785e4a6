//! JSON input schemas.
//!
//! * coefficients: `[{"n": 1, "re": 0.5, "im": 0.0}, ...]`
//! * germs: `[{"k": -1, "re": 1.0, "im": 0.0}, ...]`
//! * spaces: `{"collars": [ell, ...], "basis": [element, ...]}` where each
//!   element lists one coefficient array per collar
//! * topologies: `{"components": [{"genus": 2, "punctures": 0}, ...]}`
//! * move scripts: `[{"component": 0, "kind": "nonseparating"},
//!   {"component": 1, "kind": "separating", "g1": 1, "g2": 0, "k1": 0, "k2": 2}]`
//! * principal-part sequences: `[{"re": 1e-6, "im": 0.0}, ...]`
//!
//! Unknown fields are rejected; repeated mode indices are rejected.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::collar::CollarParams;
use crate::cusp::PunctureGerm;
use crate::error::{Error, Result};
use crate::laurent::LaurentQD;
use crate::spaces::{MultiCollarQD, QDSpace};
use crate::topology::{PinchMove, SurfaceTopology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRecord {
    pub n: i32,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermRecord {
    pub k: i32,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexRecord {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub collars: Vec<f64>,
    pub basis: Vec<Vec<Vec<ModeRecord>>>,
}

fn parse<T: DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("malformed {what}: {e}")))
}

fn unique_pairs(what: &str, records: impl Iterator<Item = (i32, f64, f64)>) -> Result<Vec<(i32, Complex64)>> {
    let mut seen = BTreeSet::new();
    records
        .map(|(n, re, im)| {
            if !seen.insert(n) {
                return Err(Error::Input(format!("duplicate {what} index {n}")));
            }
            Ok((n, Complex64::new(re, im)))
        })
        .collect()
}

pub fn parse_coefficients(text: &str) -> Result<Vec<(i32, Complex64)>> {
    let records: Vec<ModeRecord> = parse("coefficient list", text)?;
    unique_pairs("mode", records.into_iter().map(|r| (r.n, r.re, r.im)))
}

pub fn coefficient_records(q: &LaurentQD) -> Vec<ModeRecord> {
    q.coeffs().map(|(n, c)| ModeRecord { n, re: c.re, im: c.im }).collect()
}

pub fn parse_germ(text: &str, k_min: i32, radius: f64) -> Result<PunctureGerm> {
    let records: Vec<GermRecord> = parse("germ", text)?;
    let pairs = unique_pairs("germ", records.into_iter().map(|r| (r.k, r.re, r.im)))?;
    PunctureGerm::with_options(pairs, k_min, radius)
}

pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>> {
    let records: Vec<ComplexRecord> = parse("complex list", text)?;
    Ok(records.into_iter().map(|r| Complex64::new(r.re, r.im)).collect())
}

fn collars_from(ells: &[f64]) -> Result<Vec<CollarParams>> {
    if ells.is_empty() {
        return Err(Error::Input("a space needs at least one collar".into()));
    }
    ells.iter().map(|&l| CollarParams::new(l)).collect()
}

/// One `LaurentQD` per collar from per-collar coefficient arrays.
pub fn multi_collar(collars: &[CollarParams], n_max: u32, parts: &[Vec<ModeRecord>]) -> Result<MultiCollarQD> {
    if parts.len() != collars.len() {
        return Err(Error::Input(format!(
            "element has {} coefficient arrays for {} collars",
            parts.len(),
            collars.len()
        )));
    }
    let laurent = collars
        .iter()
        .zip(parts)
        .map(|(&c, recs)| {
            let pairs = unique_pairs("mode", recs.iter().map(|r| (r.n, r.re, r.im)))?;
            LaurentQD::from_coeffs(c, n_max, pairs)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiCollarQD::new(laurent)
}

pub fn parse_space(text: &str, n_max: u32) -> Result<QDSpace> {
    let file: SpaceFile = parse("space", text)?;
    let collars = collars_from(&file.collars)?;
    let basis = file
        .basis
        .iter()
        .map(|element| multi_collar(&collars, n_max, element))
        .collect::<Result<Vec<_>>>()?;
    QDSpace::new(collars, basis)
}

/// A differential on the collars of `space`, given as per-collar arrays.
pub fn parse_multi_collar(text: &str, collars: &[CollarParams], n_max: u32) -> Result<MultiCollarQD> {
    let parts: Vec<Vec<ModeRecord>> = parse("differential", text)?;
    multi_collar(collars, n_max, &parts)
}

pub fn parse_topology(text: &str) -> Result<SurfaceTopology> {
    parse("topology", text)
}

pub fn parse_moves(text: &str) -> Result<Vec<PinchMove>> {
    parse("move script", text)
}
