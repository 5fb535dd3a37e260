//! JSON run configuration for the batch commands.
//!
//! Configs are versioned (`"version": 1`) and strict: unknown keys are
//! rejected so typos fail fast, and every expression is parsed at load
//! time. See the README for the full schema.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::dynamics::{IntegratorConfig, SystemSpec};
use crate::expr::ScalarField;
use crate::resonance::SectionSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_version() -> u32 {
    0 // forces an explicit version field
}

fn default_orbit_tolerance() -> f64 {
    1e-9
}

fn default_invariant_tolerance() -> f64 {
    1e-6
}

fn default_grid_resolution() -> usize {
    256
}

/// System block: expressions plus bound parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    pub u: String,
    pub psi: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemSpec, ConfigError> {
        let u = ScalarField::parse(&self.u, self.params.clone())
            .map_err(|e| ConfigError::Invalid(format!("system.u: {e}")))?;
        let psi = ScalarField::parse(&self.psi, self.params.clone())
            .map_err(|e| ConfigError::Invalid(format!("system.psi: {e}")))?;
        Ok(SystemSpec::new(self.name.clone(), u, psi))
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        let base = IntegratorConfig::default();
        IntegratorSettings {
            rtol: base.rtol,
            atol: base.atol,
            initial_step: None,
            max_step: None,
            max_steps: base.max_steps,
        }
    }
}

impl IntegratorSettings {
    pub fn to_config(self) -> IntegratorConfig {
        IntegratorConfig {
            rtol: self.rtol,
            atol: self.atol,
            initial_step: self.initial_step,
            max_step: self.max_step.unwrap_or(f64::INFINITY),
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifySettings {
    /// Largest denominator searched among frequency-ratio convergents.
    pub max_denominator: u32,
    /// Tolerance on the rational approximation of the frequency ratio.
    pub tolerance: f64,
    /// Spectral sample count: a power of two, at least 1024.
    pub samples: usize,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        ClassifySettings { max_denominator: 12, tolerance: 1e-4, samples: 8192 }
    }
}

/// Full configuration of one run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub system: SystemConfig,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub section: SectionSpec,
    #[serde(default)]
    pub classification: ClassifySettings,
    #[serde(default = "default_orbit_tolerance")]
    pub orbit_tolerance: f64,
    #[serde(default = "default_invariant_tolerance")]
    pub invariant_tolerance: f64,
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: usize,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        RunConfig::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != 1 {
            return Err(ConfigError::Invalid(format!(
                "unsupported config version {} (expected 1)",
                self.version
            )));
        }
        self.system.build()?;
        self.integrator
            .to_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (name, v) in [
            ("orbit_tolerance", self.orbit_tolerance),
            ("invariant_tolerance", self.invariant_tolerance),
            ("classification.tolerance", self.classification.tolerance),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        if self.classification.max_denominator < 1 {
            return Err(ConfigError::Invalid(
                "classification.max_denominator must be at least 1".to_string(),
            ));
        }
        if self.grid_resolution < 32 {
            return Err(ConfigError::Invalid(
                "grid_resolution must be at least 32".to_string(),
            ));
        }
        if self.section.direction != 1 && self.section.direction != -1 {
            return Err(ConfigError::Invalid(
                "section.direction must be +1 or -1".to_string(),
            ));
        }
        Ok(())
    }

    pub fn build_system(&self) -> Result<SystemSpec, ConfigError> {
        self.system.build()
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        self.integrator.to_config()
    }
}

/// One scan axis: a parameter (`param:NAME`) or an initial-state component
/// (`state:x|y|p|r`) swept linearly over `count` points.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub target: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub enum AxisTarget {
    Param(String),
    State(usize),
}

impl AxisSpec {
    pub fn parse_target(&self) -> Result<AxisTarget, ConfigError> {
        if let Some(name) = self.target.strip_prefix("param:") {
            if name.is_empty() {
                return Err(ConfigError::Invalid("empty parameter name in axis".to_string()));
            }
            return Ok(AxisTarget::Param(name.to_string()));
        }
        if let Some(comp) = self.target.strip_prefix("state:") {
            let idx = match comp {
                "x" => 0,
                "y" => 1,
                "p" => 2,
                "r" => 3,
                other => {
                    return Err(ConfigError::Invalid(format!(
                        "unknown state component {other:?} (expected x, y, p, or r)"
                    )))
                }
            };
            return Ok(AxisTarget::State(idx));
        }
        Err(ConfigError::Invalid(format!(
            "axis target {:?} must start with 'param:' or 'state:'",
            self.target
        )))
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    /// Initial state `[x, y, p, r]` of every cell (before state axes apply).
    pub state: [f64; 4],
    /// Classification horizon in time units.
    pub horizon: f64,
    /// One or two swept axes; rows come out in row-major axis order.
    pub axes: Vec<AxisSpec>,
}

/// Scan configuration: a full run configuration plus the scan block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub system: SystemConfig,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub section: SectionSpec,
    #[serde(default)]
    pub classification: ClassifySettings,
    #[serde(default = "default_orbit_tolerance")]
    pub orbit_tolerance: f64,
    #[serde(default = "default_invariant_tolerance")]
    pub invariant_tolerance: f64,
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: usize,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub scan: ScanBlock,
}

impl ScanConfig {
    pub fn from_path(path: &Path) -> Result<ScanConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: ScanConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn base(&self) -> RunConfig {
        RunConfig {
            version: self.version,
            system: self.system.clone(),
            integrator: self.integrator,
            section: self.section,
            classification: self.classification,
            orbit_tolerance: self.orbit_tolerance,
            invariant_tolerance: self.invariant_tolerance,
            grid_resolution: self.grid_resolution,
            output_dir: self.output_dir.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base().validate()?;
        if self.scan.axes.is_empty() || self.scan.axes.len() > 2 {
            return Err(ConfigError::Invalid(
                "scan.axes must contain one or two axes".to_string(),
            ));
        }
        for axis in &self.scan.axes {
            axis.parse_target()?;
            if axis.count < 1 {
                return Err(ConfigError::Invalid("axis count must be >= 1".to_string()));
            }
            if !(axis.min.is_finite() && axis.max.is_finite()) {
                return Err(ConfigError::Invalid("axis bounds must be finite".to_string()));
            }
        }
        if !(self.scan.horizon > 0.0) {
            return Err(ConfigError::Invalid("scan.horizon must be positive".to_string()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "system": {"name": "demo", "u": "0.5*(x^2+y^2)", "psi": "0"}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(cfg.orbit_tolerance, 1e-9);
        assert_eq!(cfg.grid_resolution, 256);
        assert_eq!(cfg.integrator.rtol, 1e-10);
        cfg.build_system().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_json_str(
            r#"{"version": 1, "system": {"name": "d", "u": "x", "psi": "0"}, "typo_key": 1}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        let err = RunConfig::from_json_str(
            r#"{"version": 1, "system": {"name": "d", "u": "x", "psi": "0", "extra": 2}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }

    #[test]
    fn version_is_mandatory() {
        let err =
            RunConfig::from_json_str(r#"{"system": {"name": "d", "u": "x", "psi": "0"}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }

    #[test]
    fn bad_expressions_fail_at_load_time() {
        let err = RunConfig::from_json_str(
            r#"{"version": 1, "system": {"name": "d", "u": "x +", "psi": "0"}}"#,
        )
        .unwrap_err();
        match err {
            ConfigError::Invalid(msg) => assert!(msg.contains("byte 3"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parameters_flow_into_the_system() {
        let cfg = RunConfig::from_json_str(
            r#"{"version": 1, "system": {"name": "d", "u": "(a*x^2+b*y^2)/2",
                "psi": "g*x*y", "params": {"a": 2.0, "b": 3.0, "g": 1.0}}}"#,
        )
        .unwrap();
        let spec = cfg.build_system().unwrap();
        assert_eq!(spec.force(1.0, 2.0).unwrap(), (-1.0, -8.0));
    }

    #[test]
    fn scan_axis_parsing() {
        let axis = AxisSpec { target: "param:g".into(), min: 0.0, max: 1.0, count: 3 };
        assert!(matches!(axis.parse_target().unwrap(), AxisTarget::Param(_)));
        assert_eq!(axis.values(), vec![0.0, 0.5, 1.0]);
        let axis = AxisSpec { target: "state:p".into(), min: 0.0, max: 1.0, count: 1 };
        assert!(matches!(axis.parse_target().unwrap(), AxisTarget::State(2)));
        assert_eq!(axis.values(), vec![0.0]);
        let axis = AxisSpec { target: "bogus".into(), min: 0.0, max: 1.0, count: 1 };
        assert!(axis.parse_target().is_err());
    }
}
