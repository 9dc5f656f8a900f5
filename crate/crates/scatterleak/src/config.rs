//! Experiment configuration and its TOML form.
//!
//! ```toml
//! [acquisition]
//! n_traces_per_class = 500
//!
//! [device]
//! z_probe_ohm = [50.0, 0.0]
//!
//! [shield.Copper]
//! se_high_cap_db = 33.0
//!
//! [analysis]
//! top_k = 64
//! seed = 7
//! ```
//!
//! Every section is optional except at least one `[shield.<name>]`; missing
//! keys take their defaults and unknown keys are rejected. Optional `[probe]`
//! and `[[sources]]` replace the probe and current-source models.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use scatterleak_core::analysis::{SvmParams, DEFAULT_TOP_K};
use scatterleak_core::physics::{
    validate_programs, CurrentSource, CurrentSourceSet, DeviceImpedanceModel, ProbeModel, ProgramProfile, ShieldProfile,
};
use scatterleak_core::synth::AcquisitionConfig;

use crate::error::{Error, Result};

/// Feature-extraction and classifier settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub top_k: usize,
    pub variance_target: f64,
    pub split_train_fraction: f64,
    pub folds: usize,
    pub c_grid: Vec<f64>,
    /// SVM passes over the training data.
    pub epochs: usize,
    /// Root seed; every synthesized set and fitted model derives from it.
    pub seed: u64,
    /// Backscatter band kept ahead of feature extraction.
    pub bs_band_lo_hz: f64,
    pub bs_band_hi_hz: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let svm = SvmParams::default();
        Self {
            top_k: DEFAULT_TOP_K,
            variance_target: 0.95,
            split_train_fraction: 0.7,
            folds: svm.folds,
            c_grid: svm.c_grid,
            epochs: svm.epochs,
            seed: 0x5EED,
            bs_band_lo_hz: 5.25e9,
            bs_band_hi_hz: 5.5e9,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.split_train_fraction > 0.0 && self.split_train_fraction < 1.0) {
            return fail(format!(
                "split_train_fraction must be in (0, 1), got {}",
                self.split_train_fraction
            ));
        }
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return fail(format!(
                "variance_target must be in (0, 1], got {}",
                self.variance_target
            ));
        }
        if self.top_k == 0 {
            return fail("top_k must be at least 1".into());
        }
        if self.folds < 2 {
            return fail(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return fail("c_grid must be a non-empty list of positive numbers".into());
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if !(self.bs_band_lo_hz <= self.bs_band_hi_hz) {
            return fail("bs_band_lo_hz must not exceed bs_band_hi_hz".into());
        }
        Ok(())
    }

    pub fn svm_params(&self, seed: u64) -> SvmParams {
        SvmParams {
            folds: self.folds,
            c_grid: self.c_grid.clone(),
            epochs: self.epochs,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShieldSection {
    se_high_cap_db: f64,
    #[serde(default = "default_band_lo")]
    band_lo_hz: f64,
    #[serde(default = "default_band_hi")]
    band_hi_hz: f64,
    #[serde(default = "default_in_band")]
    se_in_band_db: f64,
    #[serde(default = "default_rolloff")]
    rolloff_db_per_decade: f64,
}

fn default_band_lo() -> f64 {
    ShieldProfile::DEFAULT_BAND_LO_HZ
}
fn default_band_hi() -> f64 {
    ShieldProfile::DEFAULT_BAND_HI_HZ
}
fn default_in_band() -> f64 {
    ShieldProfile::DEFAULT_SE_IN_BAND_DB
}
fn default_rolloff() -> f64 {
    ShieldProfile::DEFAULT_ROLLOFF_DB_PER_DECADE
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    acquisition: AcquisitionConfig,
    #[serde(default)]
    device: DeviceImpedanceModel,
    shield: IndexMap<String, ShieldSection>,
    #[serde(default)]
    probe: ProbeModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sources: Option<Vec<CurrentSource>>,
    #[serde(default)]
    analysis: AnalysisConfig,
}

/// Everything needed to run the shield × modality experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Trace-set shape and noise. Its `seed` is replaced per trace set by a
    /// value derived from `analysis.seed`.
    pub acquisition: AcquisitionConfig,
    /// Shields in report order.
    pub shields: Vec<ShieldProfile>,
    pub device: DeviceImpedanceModel,
    pub sources: CurrentSourceSet,
    pub probe: ProbeModel,
    pub programs: Vec<ProgramProfile>,
    pub analysis: AnalysisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            acquisition: AcquisitionConfig::default(),
            shields: ShieldProfile::defaults(),
            device: DeviceImpedanceModel::default(),
            sources: CurrentSourceSet::default(),
            probe: ProbeModel::default(),
            programs: ProgramProfile::defaults(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: scatterleak_core::Error| Error::Config(e.to_string());
        if self.shields.is_empty() {
            return Err(Error::Config("at least one [shield.<name>] section is required".into()));
        }
        for (i, s) in self.shields.iter().enumerate() {
            if self.shields[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Config(format!("duplicate shield {:?}", s.name)));
            }
            s.validate()
                .map_err(|e| Error::Config(format!("shield {}: {e}", s.name)))?;
        }
        self.acquisition.validate().map_err(cfg_err)?;
        self.device.validate().map_err(cfg_err)?;
        self.probe.validate().map_err(cfg_err)?;
        self.sources.validate(&self.probe).map_err(cfg_err)?;
        validate_programs(&self.programs).map_err(cfg_err)?;
        self.analysis.validate()
    }

    pub fn shield_index(&self, name: &str) -> Result<usize> {
        self.shields.iter().position(|s| s.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.shields.iter().map(|s| s.name.as_str()).collect();
            Error::Config(format!("unknown shield {name:?}; configured: {}", known.join(", ")))
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let shields = file
            .shield
            .into_iter()
            .map(|(name, s)| ShieldProfile {
                name,
                band_lo_hz: s.band_lo_hz,
                band_hi_hz: s.band_hi_hz,
                se_in_band_db: s.se_in_band_db,
                se_high_cap_db: s.se_high_cap_db,
                rolloff_db_per_decade: s.rolloff_db_per_decade,
            })
            .collect();
        let cfg = Self {
            acquisition: file.acquisition,
            shields,
            device: file.device,
            sources: file
                .sources
                .map_or_else(CurrentSourceSet::default, |sources| CurrentSourceSet { sources }),
            probe: file.probe,
            programs: ProgramProfile::defaults(),
            analysis: file.analysis,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// TOML rendering that [`Self::from_toml_str`] reads back unchanged.
    pub fn to_toml_string(&self) -> Result<String> {
        let file = ConfigFile {
            acquisition: self.acquisition.clone(),
            device: self.device.clone(),
            shield: self
                .shields
                .iter()
                .map(|s| {
                    (
                        s.name.clone(),
                        ShieldSection {
                            se_high_cap_db: s.se_high_cap_db,
                            band_lo_hz: s.band_lo_hz,
                            band_hi_hz: s.band_hi_hz,
                            se_in_band_db: s.se_in_band_db,
                            rolloff_db_per_decade: s.rolloff_db_per_decade,
                        },
                    )
                })
                .collect(),
            probe: self.probe.clone(),
            sources: Some(self.sources.sources.clone()),
            analysis: self.analysis.clone(),
        };
        toml::to_string(&file).map_err(|e| Error::Config(e.to_string()))
    }
}
