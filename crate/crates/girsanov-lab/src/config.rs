//! Run configuration: one TOML document that mirrors the model spec,
//! sizes every experiment, and carries the master seed.
//!
//! Partial configs are the norm -- every field has a default, and the
//! defaults of the model section depend on the chosen `kind`, so
//! `[model] kind = "frac-ns"` alone is a complete two-dimensional
//! Navier-Stokes setup.  [`RunConfig::default`] is fully resolved (no
//! optional field left empty) and equals the Kuramoto-Sivashinsky desk
//! preset; printing it documents every knob.  Validation reports the
//! offending field by name, either through TOML's own path diagnostics or
//! through the spec validator.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::girsanov::Observable;
use crate::linsim::step_count;
use crate::presets;
use crate::spectral::{ModelKind, ModelSpec};

/// Complete description of a run, deserialized from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; all per-path streams and sub-seeds derive from it.
    pub seed: u64,
    pub model: ModelSection,
    pub simulation: SimulationSection,
    pub girsanov: GirsanovSection,
    pub ergodics: ErgodicsSection,
    pub twin: TwinSection,
    pub audit: AuditSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            model: ModelSection::default(),
            simulation: SimulationSection::default(),
            girsanov: GirsanovSection::default(),
            ergodics: ErgodicsSection::default(),
            twin: TwinSection::default(),
            audit: AuditSection::default(),
        }
    }
}

/// Mirror of [`ModelSpec`]: same field names, each optional.  Missing
/// fields fall back to the desk preset of the chosen `kind` (and `dim`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection::from_spec(&presets::ks_desk())
    }
}

impl ModelSection {
    /// Fully resolved section (every field set) for a concrete spec.
    pub fn from_spec(spec: &ModelSpec) -> Self {
        ModelSection {
            kind: spec.kind,
            nu: Some(spec.nu),
            damping: Some(spec.damping),
            gamma: Some(spec.gamma),
            theta: Some(spec.theta),
            alpha: Some(spec.alpha),
            dim: Some(spec.dim),
            domain_length: Some(spec.domain_length),
            cutoff: Some(spec.cutoff),
        }
    }

    /// Resolves against the kind's desk preset and validates.
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let dim = self.dim.unwrap_or(match self.kind {
            ModelKind::Ks => 1,
            ModelKind::FracNs => 2,
        });
        let base = match (self.kind, dim) {
            (ModelKind::Ks, _) => presets::ks_desk(),
            (ModelKind::FracNs, 3) => presets::ns_desk_3d(),
            (ModelKind::FracNs, _) => presets::ns_desk_2d(),
        };
        let spec = ModelSpec {
            kind: self.kind,
            nu: self.nu.unwrap_or(base.nu),
            damping: self.damping.unwrap_or(base.damping),
            gamma: self.gamma.unwrap_or(base.gamma),
            theta: self.theta.unwrap_or(base.theta),
            alpha: self.alpha.unwrap_or(base.alpha),
            dim,
            domain_length: self.domain_length.unwrap_or(base.domain_length),
            cutoff: self.cutoff.unwrap_or(base.cutoff),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Horizon, step and ensemble width of the path simulations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub t_final: f64,
    pub dt: f64,
    /// Ensemble width for Monte Carlo commands; path dumps use one path.
    pub paths: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let desk = presets::ks_desk_girsanov();
        SimulationSection { t_final: desk.t_final, dt: desk.dt, paths: desk.paths }
    }
}

impl SimulationSection {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("simulation.t_final", self.t_final), ("simulation.dt", self.dt)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        step_count(self.t_final, self.dt)?;
        if self.paths == 0 {
            return Err(Error::Config("simulation.paths must be at least 1".into()));
        }
        Ok(())
    }
}

/// Truncation level: a number, or a calibration keyword.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelSpec {
    Fixed(f64),
    Named(String),
}

/// A validated truncation-level policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LevelPolicy {
    /// Calibrate as a pilot-ensemble quantile of the quadratic budget.
    Pilot,
    /// No truncation (`N = infinity`).
    Unbounded,
    Fixed(f64),
}

impl LevelSpec {
    pub fn policy(&self) -> Result<LevelPolicy> {
        match self {
            LevelSpec::Fixed(v) if v.is_nan() => {
                Err(Error::Config("girsanov.level must not be NaN".into()))
            }
            LevelSpec::Fixed(v) if *v < 0.0 => Err(Error::Config(format!(
                "girsanov.level must be non-negative, got {v}"
            ))),
            LevelSpec::Fixed(v) => Ok(LevelPolicy::Fixed(*v)),
            LevelSpec::Named(s) if s == "pilot" => Ok(LevelPolicy::Pilot),
            LevelSpec::Named(s) if s == "unbounded" => Ok(LevelPolicy::Unbounded),
            LevelSpec::Named(s) => Err(Error::Config(format!(
                "girsanov.level must be a number, \"pilot\" or \"unbounded\", got \"{s}\""
            ))),
        }
    }
}

/// Reweighting experiment: truncation policy, pilot sizing, observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GirsanovSection {
    pub level: LevelSpec,
    /// Quantile of the pilot budget distribution used as the level.
    pub pilot_quantile: f64,
    pub pilot_paths: usize,
    pub observable: Observable,
    /// Width of the direct nonlinear baseline ensemble in the importance
    /// command; 0 skips the baseline.
    pub direct_paths: usize,
}

impl Default for GirsanovSection {
    fn default() -> Self {
        GirsanovSection {
            level: LevelSpec::Named("pilot".into()),
            pilot_quantile: 0.99,
            pilot_paths: 1000,
            observable: Observable::DofMoment { dof: 0, power: 2 },
            direct_paths: 2000,
        }
    }
}

impl GirsanovSection {
    pub fn validate(&self) -> Result<()> {
        let policy = self.level.policy()?;
        if !(0.0..=1.0).contains(&self.pilot_quantile) {
            return Err(Error::Config(format!(
                "girsanov.pilot_quantile must be in [0, 1], got {}",
                self.pilot_quantile
            )));
        }
        if policy == LevelPolicy::Pilot && self.pilot_paths < 10 {
            return Err(Error::Config(format!(
                "girsanov.pilot_paths must be at least 10 to calibrate a level, got {}",
                self.pilot_paths
            )));
        }
        Ok(())
    }
}

/// Invariant-measure diagnostics sizing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErgodicsSection {
    pub samples: usize,
    pub significance: f64,
    /// Also run the long-path subsampling cross-check.
    pub long_path: bool,
}

impl Default for ErgodicsSection {
    fn default() -> Self {
        ErgodicsSection { samples: 10_000, significance: 0.01, long_path: true }
    }
}

impl ErgodicsSection {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 10 {
            return Err(Error::Config(format!(
                "ergodics.samples must be at least 10, got {}",
                self.samples
            )));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::Config(format!(
                "ergodics.significance must be strictly between 0 and 1, got {}",
                self.significance
            )));
        }
        Ok(())
    }
}

/// Twin-path experiment: which dof to displace and by how much.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwinSection {
    pub delta: f64,
    pub dof: usize,
}

impl Default for TwinSection {
    fn default() -> Self {
        TwinSection { delta: 1e-6, dof: 0 }
    }
}

impl TwinSection {
    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::Config(format!(
                "twin.delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Growth-bound audit sizing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub samples: usize,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection { samples: 1000 }
    }
}

impl AuditSection {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("audit.samples must be at least 1".into()));
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Cross-field validation; every section checks its own knobs and the
    /// model section resolves to a structurally valid spec.
    pub fn validate(&self) -> Result<()> {
        self.model.to_spec()?;
        self.simulation.validate()?;
        self.girsanov.validate()?;
        self.ergodics.validate()?;
        self.twin.validate()?;
        self.audit.validate()?;
        Ok(())
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        self.model.to_spec()
    }
}
