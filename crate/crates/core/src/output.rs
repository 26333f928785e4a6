//! Tabular sweep reports and their CSV / JSON encodings.

use serde::Serialize;

use crate::error::{Error, Result};

/// First line of every CSV report; bump the version when columns change.
pub const CSV_SCHEMA_LINE: &str = "# collardiff-sweep v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    EmptyThin,
    NonConverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::EmptyThin => "empty-thin",
            Status::NonConverged => "non-converged",
        }
    }
}

/// One report line. Summary rows leave `ell` and `delta` unset.
/// `value` is `None` exactly when the status is `NonConverged`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub ell: Option<f64>,
    pub delta: Option<f64>,
    pub statistic: String,
    pub value: Option<f64>,
    pub normalized: Option<f64>,
    pub status: Status,
}

impl Row {
    pub fn ok(ell: f64, delta: f64, statistic: &str, value: f64, normalized: Option<f64>) -> Self {
        Row {
            ell: Some(ell),
            delta: Some(delta),
            statistic: statistic.to_owned(),
            value: Some(value),
            normalized,
            status: Status::Ok,
        }
    }

    pub fn empty_thin(ell: f64, delta: f64, statistic: &str) -> Self {
        Row {
            ell: Some(ell),
            delta: Some(delta),
            statistic: statistic.to_owned(),
            value: Some(0.0),
            normalized: None,
            status: Status::EmptyThin,
        }
    }

    pub fn non_converged(ell: f64, delta: f64, statistic: &str) -> Self {
        Row {
            ell: Some(ell),
            delta: Some(delta),
            statistic: statistic.to_owned(),
            value: None,
            normalized: None,
            status: Status::NonConverged,
        }
    }

    pub fn summary(statistic: &str, value: f64) -> Self {
        Row {
            ell: None,
            delta: None,
            statistic: statistic.to_owned(),
            value: Some(value),
            normalized: None,
            status: Status::Ok,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SweepReport {
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// 17 significant digits; empty field for missing values.
fn number(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    }
}

impl SweepReport {
    pub fn new(rows: Vec<Row>) -> Self {
        SweepReport { rows }
    }

    /// Rows with the given statistic name, in report order.
    pub fn statistic<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.statistic == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = format!("{CSV_SCHEMA_LINE}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let fail = |e: csv::Error| Error::Input(format!("csv encoding failed: {e}"));
            w.write_record(["ell", "delta", "statistic", "value", "normalized", "status"])
                .map_err(fail)?;
            for r in &self.rows {
                w.write_record([
                    number(r.ell),
                    number(r.delta),
                    r.statistic.clone(),
                    number(r.value),
                    number(r.normalized),
                    r.status.as_str().to_owned(),
                ])
                .map_err(fail)?;
            }
            w.flush()
                .map_err(|e| Error::Input(format!("csv encoding failed: {e}")))?;
        }
        Ok(String::from_utf8(out).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Input(format!("json encoding failed: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}
