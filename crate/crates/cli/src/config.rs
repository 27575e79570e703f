//! The JSON run configuration. Every block rejects unknown keys.

use std::path::Path;

use nonext_bec::analysis::SweepSpec;
use nonext_bec::modes::BoxSpec;
use nonext_bec::oracle::ToySystem;
use nonext_bec::partition::{EngineChoice, TruncationOptions, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub truncation: TruncationConfig,
    /// Worker threads; the `--threads` flag takes precedence.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub pressure: Option<PressureConfig>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub audit: Option<AuditConfig>,
    #[serde(default)]
    pub oracle_check: Option<OracleCheckConfig>,
    #[serde(default)]
    pub limits: Option<LimitsConfig>,
    #[serde(default)]
    pub modes: Option<BoxSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    pub tol: f64,
    pub max_particles: usize,
    pub engine: EngineChoice,
    pub split_gap: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        let d = TruncationOptions::default();
        Self { tol: d.tol, max_particles: d.max_particles, engine: d.engine, split_gap: d.split_gap }
    }
}

impl TruncationConfig {
    pub fn options(&self) -> TruncationOptions {
        TruncationOptions {
            tol: self.tol,
            max_particles: self.max_particles,
            engine: self.engine,
            split_gap: self.split_gap,
            ..TruncationOptions::default()
        }
    }
}

fn one() -> f64 {
    1.0
}
fn three() -> usize {
    3
}
fn thirty() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureConfig {
    pub variant: Variant,
    pub lambda: f64,
    pub beta: f64,
    pub sides: Vec<f64>,
    pub mu: Vec<f64>,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "three")]
    pub dimension: usize,
    #[serde(default = "thirty")]
    pub energy_cut: f64,
}

/// Which `β` values the audit grid visits, as multiples of the critical
/// inverse temperature at `reference_density`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default = "non_extensive")]
    pub variant: Variant,
    pub lambda: f64,
    pub beta_factors: Vec<f64>,
    #[serde(default = "one")]
    pub reference_density: f64,
    pub sides: Vec<f64>,
    pub mu: Vec<f64>,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "thirty")]
    pub energy_cut: f64,
    /// Audits to run; all when empty.
    #[serde(default)]
    pub audits: Vec<nonext_bec::analysis::AuditId>,
    /// Levels (lowest first) visited by the occupation inequalities.
    #[serde(default = "twelve")]
    pub max_levels: usize,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Constant trials `α` for the variational bound, used with `t = 0`.
    #[serde(default = "default_trials")]
    pub og_alphas: Vec<f64>,
    /// Also use the minimizer `α*` of the limiting mean-field problem.
    #[serde(default = "yes")]
    pub og_alpha_star: bool,
    #[serde(default)]
    pub test_hooks: TestHooks,
}

fn non_extensive() -> Variant {
    Variant::NonExtensive
}
fn twelve() -> usize {
    12
}
fn default_deltas() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}
fn default_trials() -> Vec<f64> {
    vec![-0.5, -3.0]
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestHooks {
    /// Reverses the two-mode inequality so that its audit fails.
    pub negate_in2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedToy {
    pub name: String,
    pub system: ToySystem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckConfig {
    /// Include the built-in toy suite.
    #[serde(default = "yes")]
    pub default_suite: bool,
    #[serde(default)]
    pub systems: Vec<NamedToy>,
    #[serde(default = "oracle_tolerance")]
    pub tolerance: f64,
    /// Toys whose top-decile share of the grand sum exceeds this are flagged.
    #[serde(default = "cap_flag")]
    pub cap_flag: f64,
}

fn oracle_tolerance() -> f64 {
    1e-10
}
fn cap_flag() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub lambda: f64,
    pub betas: Vec<f64>,
    pub mu: Vec<f64>,
    pub alphas: Vec<f64>,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "three")]
    pub dimension: usize,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// SHA-256 of the canonical JSON form, so formatting does not matter.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn validate(&self) -> Result<(), CliError> {
        let t = &self.truncation;
        if !(t.tol > 0.0 && t.tol <= 1e-6) {
            return Err(CliError::Config(format!("truncation.tol must lie in (0, 1e-6], got {}", t.tol)));
        }
        if !(t.split_gap > 0.0) || t.max_particles == 0 {
            return Err(CliError::Config("truncation.split_gap and max_particles must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if let Some(p) = &self.pressure {
            positive_list("pressure.sides", &p.sides)?;
            finite_list("pressure.mu", &p.mu)?;
            if !(p.beta > 0.0 && p.lambda >= 0.0 && p.mass > 0.0 && p.energy_cut > 0.0) {
                return Err(CliError::Config("pressure: need beta, mass, energy_cut > 0 and lambda >= 0".into()));
            }
        }
        if let Some(a) = &self.audit {
            positive_list("audit.sides", &a.sides)?;
            positive_list("audit.beta_factors", &a.beta_factors)?;
            positive_list("audit.deltas", &a.deltas)?;
            finite_list("audit.mu", &a.mu)?;
            if !(a.lambda >= 0.0 && a.reference_density > 0.0) {
                return Err(CliError::Config("audit: need lambda >= 0 and reference_density > 0".into()));
            }
            if a.og_alphas.iter().any(|x| !(*x < 0.0)) {
                return Err(CliError::Config("audit.og_alphas must be negative".into()));
            }
        }
        if let Some(l) = &self.limits {
            positive_list("limits.betas", &l.betas)?;
            finite_list("limits.mu", &l.mu)?;
            if l.alphas.iter().any(|x| !(*x <= 0.0)) {
                return Err(CliError::Config("limits.alphas must be <= 0".into()));
            }
            if !(l.lambda > 0.0 && l.rho > 0.0 && l.mass > 0.0) {
                return Err(CliError::Config("limits: need lambda, rho, mass > 0".into()));
            }
        }
        if let Some(o) = &self.oracle_check {
            if !(o.tolerance > 0.0 && o.cap_flag > 0.0) {
                return Err(CliError::Config("oracle_check tolerances must be positive".into()));
            }
        }
        Ok(())
    }
}

fn positive_list(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(CliError::Config(format!("{name} must be a non-empty list of positive numbers")));
    }
    Ok(())
}

fn finite_list(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("{name} must be a non-empty list of finite numbers")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(r#"{"schema_version": 1, "bogus": 3}"#).is_err());
        assert!(RunConfig::parse(r#"{"schema_version": 1, "truncation": {"tol": 1e-12, "x": 1}}"#).is_err());
    }

    #[test]
    fn version_is_mandatory() {
        assert!(RunConfig::parse("{}").is_err());
        assert!(RunConfig::parse(r#"{"schema_version": 2}"#).is_err());
        assert!(RunConfig::parse(r#"{"schema_version": 1}"#).is_ok());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = RunConfig::parse(r#"{"schema_version": 1, "threads": 2}"#).unwrap();
        let b = RunConfig::parse("{\n  \"threads\": 2,\n  \"schema_version\": 1\n}").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
