//! Machine-readable scenario reports: one JSON document per scenario and a
//! CSV of raw grid rows.

use crate::asymptotics::{ExponentFit, LineFit};
use crate::error::Result;
use crate::mc::{McEstimate, McMethod};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl Assertion {
    pub fn new(name: impl Into<String>, value: f64, bound: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), value, bound: bound.into(), pass: pass && !value.is_nan() }
    }

    pub fn at_most(name: impl Into<String>, value: f64, max: f64) -> Self {
        Self::new(name, value, format!("<= {max}"), value <= max)
    }

    pub fn at_least(name: impl Into<String>, value: f64, min: f64) -> Self {
        Self::new(name, value, format!(">= {min}"), value >= min)
    }

    pub fn below(name: impl Into<String>, value: f64, max: f64) -> Self {
        Self::new(name, value, format!("< {max}"), value < max)
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, value, format!("[{lo}, {hi}]"), (lo..=hi).contains(&value))
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub schema_version: u32,
    pub kind: String,
    pub t: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub beta: f64,
    pub c: f64,
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub series: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub name: String,
    pub rows: Vec<GridRow>,
}

/// Builder for the rows of one named grid.
pub struct GridBuilder {
    kind: String,
    name: String,
    rows: Vec<GridRow>,
}

impl GridBuilder {
    pub fn new(kind: impl Into<String>, name: impl Into<String>) -> Self {
        Self { kind: kind.into(), name: name.into(), rows: Vec::new() }
    }

    pub fn push(&mut self, t: f64, big_t: f64, beta: f64, c: f64, e: &McEstimate) {
        self.rows.push(GridRow {
            schema_version: SCHEMA_VERSION,
            kind: self.kind.clone(),
            t,
            big_t,
            beta,
            c,
            value: e.value,
            std_error: e.std_error,
            samples: e.samples,
            seed: e.seed,
            series: self.name.clone(),
        });
    }

    pub fn push_value(&mut self, t: f64, big_t: f64, value: f64) {
        self.push(t, big_t, f64::NAN, f64::NAN, &McEstimate::exact(value, 0, 0));
    }

    pub fn build(self) -> Grid {
        Grid { name: self.name, rows: self.rows }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Fit {
    Exponent(ExponentFit),
    Line(LineFit),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario: String,
    pub domain: String,
    pub seed: u64,
    pub samples: u64,
    pub method: McMethod,
    pub assertions: Vec<Assertion>,
    pub grids: Vec<Grid>,
    pub fits: BTreeMap<String, Fit>,
    /// Reported quantities that carry no pass/fail.
    pub values: BTreeMap<String, f64>,
}

impl ScenarioReport {
    pub fn new(scenario: &str, domain: String, seed: u64, samples: u64, method: McMethod) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.to_string(),
            domain,
            seed,
            samples,
            method,
            assertions: Vec::new(),
            grids: Vec::new(),
            fits: BTreeMap::new(),
            values: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn assert(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Write `<stem>.json` and `<stem>.csv` into `dir`; returns both paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let stem = format!("{}_{}", self.scenario, sanitize(&self.domain));
        let json = dir.join(format!("{stem}.json"));
        fs::write(&json, self.to_json()? + "\n")?;
        let csv_path = dir.join(format!("{stem}.csv"));
        write_csv(&csv_path, self.grids.iter().flat_map(|g| g.rows.iter()))?;
        Ok((json, csv_path))
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect::<String>().trim_matches('_').to_string()
}

pub fn write_csv<'a>(path: &Path, rows: impl IntoIterator<Item = &'a GridRow>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut any = false;
    for r in rows {
        w.serialize(r)?;
        any = true;
    }
    if !any {
        w.write_record([
            "schema_version", "kind", "t", "T", "beta", "c", "value", "std_error", "samples", "seed", "series",
        ])?;
    }
    w.flush()?;
    Ok(())
}
