//! Report document and its JSON/CSV export.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            comparison: Comparison::AtMost,
            // NaN fails.
            pass: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            comparison: Comparison::AtLeast,
            pass: value >= tolerance,
        }
    }

    pub fn equal(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: expected,
            comparison: Comparison::Equal,
            pass: value == expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Ascending spectra keyed by name.
    pub spectra: BTreeMap<String, Vec<f64>>,
    pub residuals: BTreeMap<String, f64>,
    /// Quantities reported without a pass/fail verdict.
    pub observations: BTreeMap<String, f64>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl ReportDocument {
    pub fn new(config: &ExperimentConfig) -> Self {
        ReportDocument {
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: config.experiment.name().to_string(),
            config: config.clone(),
            passed: true,
            checks: Vec::new(),
            spectra: BTreeMap::new(),
            residuals: BTreeMap::new(),
            observations: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn check(&mut self, check: Check) {
        self.passed &= check.pass;
        self.checks.push(check);
    }

    pub fn spectrum(&mut self, name: impl Into<String>, mut values: Vec<f64>) {
        values.sort_by(f64::total_cmp);
        self.spectra.insert(name.into(), values);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "value", "tolerance", "comparison", "pass"])?;
        for c in &self.checks {
            let comparison = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
                Comparison::Equal => "==",
            };
            w.write_record([
                c.name.as_str(),
                &format!("{:e}", c.value),
                &format!("{:e}", c.tolerance),
                comparison,
                if c.pass { "true" } else { "false" },
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn export(report: &ReportDocument, format: Format, path: Option<&Path>) -> std::io::Result<()> {
    let mut buffer = Vec::new();
    match format {
        Format::Json => {
            buffer.extend_from_slice(report.to_json().as_bytes());
            buffer.push(b'\n');
        }
        Format::Csv => report.write_csv(&mut buffer).map_err(std::io::Error::other)?,
    }
    match path {
        Some(p) => std::fs::write(p, buffer),
        None => std::io::stdout().write_all(&buffer),
    }
}
