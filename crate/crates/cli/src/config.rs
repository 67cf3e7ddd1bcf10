//! Experiment configuration: one JSON document per run, unknown keys
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use rp_lab::geometry::{build_lattice, LatticeGeometry, LatticeSpec};
use rp_lab::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ScalarRp,
    DnCompare,
    DiracRp,
    CliffordCheck,
    ActionIdentity,
    Quantize,
    ContourCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ScalarRp => "scalar-rp",
            Experiment::DnCompare => "dn-compare",
            Experiment::DiracRp => "dirac-rp",
            Experiment::CliffordCheck => "clifford-check",
            Experiment::ActionIdentity => "action-identity",
            Experiment::Quantize => "quantize",
            Experiment::ContourCheck => "contour-check",
        }
    }

    fn needs_lattice(self) -> bool {
        !matches!(self, Experiment::CliffordCheck | Experiment::ContourCheck)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Sites per axis, time first.
    pub extent: Vec<usize>,
    pub spacing: f64,
    /// Defaults to periodic on every axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<Vec<bool>>,
}

impl LatticeConfig {
    pub fn spec(&self) -> LatticeSpec {
        let mut spec = LatticeSpec::periodic(&self.extent, self.spacing);
        if let Some(p) = &self.periodic {
            spec.periodic = p.clone();
        }
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    #[default]
    Flat,
    CosineLapse,
    Table,
}

/// Either a profile name or a full description with tables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default)]
    pub profile: Profile,
    /// Cosine lapse `F = 1 + a cos(2π x₁/L₁)`; default 0.5.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// `F` per spatial point (table profile).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lapse: Option<Vec<f64>>,
    /// `G_aa` per spatial point for each spatial axis (table profile).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<Vec<Vec<f64>>>,
    /// Scalar curvature `R`, per spatial point or per site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<Vec<f64>>,
    /// Named curvature profile `R = b sin(2π x₁/L₁)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature_amplitude: Option<f64>,
}

fn metric_from_json<'de, D: Deserializer<'de>>(de: D) -> Result<MetricConfig, D::Error> {
    let value = serde_json::Value::deserialize(de)?;
    match value {
        serde_json::Value::String(_) => {
            let profile: Profile = serde_json::from_value(value).map_err(serde::de::Error::custom)?;
            Ok(MetricConfig {
                profile,
                ..Default::default()
            })
        }
        other => serde_json::from_value(other).map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

fn default_tolerance() -> f64 {
    1e-12
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: default_tolerance(),
            max_iter: None,
        }
    }
}

impl SolverSettings {
    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iter,
        }
    }
}

/// Basis support: every site with `t ≥ h` unless restricted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    /// Time labels, each in `1..N₀/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<i64>>,
    /// Row-major spatial indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<Vec<usize>>,
}

/// Smooth Gaussian test function for the convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(default, deserialize_with = "metric_from_json")]
    pub metric: MetricConfig,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Spacings for convergence studies, coarse to fine; the physical box
    /// is that of `lattice`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacings: Option<Vec<f64>>,
    /// Constant lapse `F` for the Dirac operator.
    #[serde(default = "default_lapse")]
    pub lapse: f64,
    /// Clifford dimensions to check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<Vec<usize>>,
    /// Random `(p⃗, m)` samples per dimension for the A-matrix check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
}

fn default_mass() -> f64 {
    1.0
}

fn default_lapse() -> f64 {
    1.0
}

fn default_samples() -> usize {
    100
}

/// A config problem, naming the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

pub fn config_error(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        reason: reason.into(),
    }
}

fn positive(field: &str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(config_error(field, format!("must be positive and finite, got {value}")))
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        // Unknown and missing keys are reported against their parent.
        let named = message
            .strip_prefix("unknown field `")
            .or_else(|| message.strip_prefix("missing field `"))
            .and_then(|rest| rest.split('`').next());
        let field = match (path.as_str(), named) {
            (".", Some(name)) => name.to_string(),
            (".", None) => "config".to_string(),
            (p, Some(name)) if p == name || p.ends_with(&format!(".{name}")) => p.to_string(),
            (p, Some(name)) => format!("{p}.{name}"),
            (p, None) => p.to_string(),
        };
        config_error(field, message)
    })
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
    parse(&text)
}

impl ExperimentConfig {
    pub fn lattice_config(&self) -> Result<&LatticeConfig, ConfigError> {
        self.lattice
            .as_ref()
            .ok_or_else(|| config_error("lattice", format!("required for {}", self.experiment.name())))
    }

    pub fn geometry(&self) -> Result<LatticeGeometry, ConfigError> {
        build_lattice(&self.lattice_config()?.spec()).map_err(|e| config_error("lattice", e.to_string()))
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("mass", self.mass)?;
        positive("lapse", self.lapse)?;
        if !self.xi.is_finite() {
            return Err(config_error("xi", "must be finite"));
        }
        self.solver
            .solver()
            .validate()
            .map_err(|e| config_error("solver", e.to_string()))?;
        if let Some(tol) = self.rank_tol {
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(config_error("rank_tol", format!("must be nonnegative, got {tol}")));
            }
        }
        if let Some(source) = &self.source {
            positive("source.width", source.width)?;
            positive("source.center", source.center)?;
        }
        if self.experiment.needs_lattice() {
            let geom = self.geometry()?;
            crate::experiments::validate_setup(self, &geom)?;
        }
        match self.experiment {
            Experiment::CliffordCheck => {
                for &d in self.dimensions.as_deref().unwrap_or(&[]) {
                    if !(1..=rp_lab::clifford::MAX_DIMENSION).contains(&d) {
                        return Err(config_error("dimensions", format!("{d} is outside 1..=12")));
                    }
                }
                if self.samples == 0 {
                    return Err(config_error("samples", "must be positive"));
                }
            }
            Experiment::ContourCheck => {
                for &t in self.times.as_deref().unwrap_or(&[]) {
                    if !t.is_finite() {
                        return Err(config_error("times", "must be finite"));
                    }
                }
                for &w in self.omegas.as_deref().unwrap_or(&[]) {
                    positive("omegas", w)?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}
