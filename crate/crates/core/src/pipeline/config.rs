use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::features::FeatureParams;
use crate::rules::{FatigueLevel, FatigueSource, FusionCutoffs, FusionWeights};
use crate::signal::{DriverProfile, Sex};

/// Alert when `consecutive` windows in a row reach `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlertPolicy {
    pub threshold: FatigueLevel,
    pub consecutive: usize,
}

impl Default for AlertPolicy {
    fn default() -> Self {
        Self { threshold: FatigueLevel::High, consecutive: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub weights: BTreeMap<FatigueSource, f64>,
    pub medium_cutoff: f64,
    pub high_cutoff: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        let cutoffs = FusionCutoffs::<f64>::default();
        Self {
            weights: FusionWeights::<f64>::equal().as_map().clone(),
            medium_cutoff: cutoffs.medium,
            high_cutoff: cutoffs.high,
        }
    }
}

impl FusionConfig {
    pub fn weights(&self) -> Result<FusionWeights<f64>, PipelineError> {
        FusionWeights::new(self.weights.clone()).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn cutoffs(&self) -> Result<FusionCutoffs<f64>, PipelineError> {
        FusionCutoffs::new(self.medium_cutoff, self.high_cutoff).map_err(|e| PipelineError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seconds.
    pub window_length: f64,
    pub stride: f64,
    /// Span PERCLOS is measured over, ending at each window's end.
    pub perclos_window: f64,
    /// `None` selects the built-in bands.
    pub scheme_path: Option<PathBuf>,
    /// `None` selects the built-in pack chosen by `verbatim_table1`.
    pub rule_pack_path: Option<PathBuf>,
    pub verbatim_table1: bool,
    pub fusion: FusionConfig,
    pub alert: AlertPolicy,
    pub snapshot_dir: Option<PathBuf>,
    /// Snapshot every this many windows.
    pub snapshot_cadence: usize,
    pub profile: DriverProfile,
    pub features: FeatureParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window_length: 60.0,
            stride: 10.0,
            perclos_window: 180.0,
            scheme_path: None,
            rule_pack_path: None,
            verbatim_table1: false,
            fusion: FusionConfig::default(),
            alert: AlertPolicy::default(),
            snapshot_dir: None,
            snapshot_cadence: 6,
            profile: DriverProfile { id: "driver".into(), sex: Sex::Unspecified },
            features: FeatureParams::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses a JSON config. Relative paths inside it resolve against `base`.
    pub fn from_json(bytes: &[u8], base: Option<&Path>) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig =
            serde_json::from_slice(bytes).map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(base) = base {
            for p in [&mut cfg.scheme_path, &mut cfg.rule_pack_path, &mut cfg.snapshot_dir].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let bytes = std::fs::read(path).map_err(|e| PipelineError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_json(&bytes, path.parent())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(PipelineError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("window_length", self.window_length)?;
        positive("stride", self.stride)?;
        positive("perclos_window", self.perclos_window)?;
        if self.snapshot_cadence == 0 {
            return Err(PipelineError::Config("snapshot_cadence must be at least 1".into()));
        }
        if self.alert.consecutive == 0 {
            return Err(PipelineError::Config("alert.consecutive must be at least 1".into()));
        }
        if self.profile.id.is_empty() {
            return Err(PipelineError::Config("profile.id must be non-empty".into()));
        }
        self.fusion.weights()?;
        self.fusion.cutoffs()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("config serializes");
        s.push('\n');
        s
    }
}
