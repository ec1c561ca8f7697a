//! Mission configuration: versioned TOML schema with defaults, plus a
//! content hash stamped into reports so a report can be traced back to the
//! exact configuration that produced it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::SimError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub whales: usize,
    pub extent: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            whales: 6,
            extent: 4096.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    pub count: usize,
    /// Max |rotation| between any agent view and the world frame, radians.
    pub max_rotation: f64,
    pub min_scale: f64,
    pub max_scale: f64,
    /// Max view translation as a fraction of the frame extent.
    pub max_translation_frac: f64,
}

impl Default for AgentsConfig {
    fn default() -> Self {
        Self {
            count: 2,
            max_rotation: std::f64::consts::FRAC_PI_4,
            min_scale: 0.85,
            max_scale: 1.15,
            max_translation_frac: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Per-box detection probability during scouting.
    pub s_det: f64,
    /// Isotropic Gaussian corner jitter, pixels.
    pub jitter_px: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            s_det: 0.95,
            jitter_px: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScoutConfig {
    /// Radial gap between spiral rings, world units.
    pub spacing: f64,
    pub turns: usize,
    pub points_per_turn: usize,
    /// Sliding window of recent frames feeding the trigger.
    pub buffer_len: usize,
    /// Fraction of the buffer that must be positive to trigger.
    pub threshold: f64,
    /// A frame is positive when a box center lies within this radius.
    pub sensing_radius: f64,
}

impl Default for ScoutConfig {
    fn default() -> Self {
        Self {
            spacing: 150.0,
            turns: 10,
            points_per_turn: 24,
            buffer_len: 10,
            threshold: 0.8,
            sensing_radius: 900.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MissionConfig {
    pub version: u32,
    pub seed: u64,
    pub scene: SceneConfig,
    pub agents: AgentsConfig,
    pub detector: DetectorConfig,
    pub scout: ScoutConfig,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 42,
            scene: SceneConfig::default(),
            agents: AgentsConfig::default(),
            detector: DetectorConfig::default(),
            scout: ScoutConfig::default(),
        }
    }
}

impl MissionConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: MissionConfig =
            toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.version != CONFIG_VERSION {
            return Err(SimError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.scene.whales == 0 || self.scene.extent <= 0.0 {
            return Err(SimError::Config("scene needs whales > 0, extent > 0".into()));
        }
        if self.agents.count < 2 {
            return Err(SimError::Config("need at least two agents".into()));
        }
        if !(self.agents.min_scale > 0.0 && self.agents.min_scale <= self.agents.max_scale) {
            return Err(SimError::Config("bad scale range".into()));
        }
        if !(self.detector.s_det >= 0.0 && self.detector.s_det <= 1.0) {
            return Err(SimError::Config("s_det must be in [0, 1]".into()));
        }
        if self.scout.buffer_len == 0
            || !(self.scout.threshold > 0.0 && self.scout.threshold <= 1.0)
        {
            return Err(SimError::Config("bad scout trigger settings".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
