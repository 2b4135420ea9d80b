//! Global testbed configuration.
//!
//! The embedded `config/default.toml` holds every key. A user file is merged
//! over it table by table, so it only has to name what it changes.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{EngineConfig, ThresholdConfig};
use crate::eval::HumanConfig;
use crate::recognition::RecognizerConfig;
use crate::sim::{ItemCatalog, ItemProfile, SimConfig};
use crate::takeout::TakeoutConfig;

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");
pub const DEFAULT_RULES: &str = include_str!("../config/canonical.rules");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown flavor {0:?}")]
    UnknownFlavor(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSection {
    pub window: usize,
    pub dedup_timeout_ms: u64,
    pub thresholds: ThresholdConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlavorConfig {
    pub items: Vec<String>,
    pub p_hit: f64,
    /// Chance that a non-reflective item is set down skewed over a free
    /// neighbouring sensor.
    pub position_error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub steps: usize,
    pub subsamples: usize,
    pub subsample_size: usize,
    pub barcode_overhead_s: f64,
    pub curve_x_min: u32,
    pub curve_x_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSpec {
    pub name: String,
    pub reflective: bool,
    pub raw_phrase: String,
    #[serde(default)]
    pub barcode: Option<String>,
    #[serde(default)]
    pub steady_level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestbedConfig {
    pub sim: SimConfig,
    pub detection: DetectionSection,
    pub recognizer: RecognizerConfig,
    pub human: HumanConfig,
    pub flavors: BTreeMap<String, FlavorConfig>,
    pub eval: EvalConfig,
    pub takeout: TakeoutConfig,
    pub items: Vec<ItemSpec>,
}

impl Default for TestbedConfig {
    fn default() -> Self {
        Self::from_toml_str("").expect("embedded default config is valid")
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

impl TestbedConfig {
    /// Defaults overridden by the keys in `text`.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let mut base: toml::Table = DEFAULT_CONFIG
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        merge(&mut base, user);
        let config: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.sim.validate().map_err(|e| invalid(&e))?;
        self.engine_config().validate().map_err(|e| invalid(&e))?;
        self.recognizer.validate().map_err(|e| invalid(&e))?;
        self.human.validate().map_err(|e| invalid(&e))?;
        self.takeout.validate().map_err(|e| invalid(&e))?;
        for profile in self.catalog().items() {
            profile
                .validate(self.sim.empty_level)
                .map_err(|e| invalid(&e))?;
        }
        for (name, flavor) in &self.flavors {
            if !(0.0..=1.0).contains(&flavor.p_hit)
                || !(0.0..=1.0).contains(&flavor.position_error_rate)
            {
                return Err(ConfigError::Invalid(format!(
                    "flavor {name}: probabilities must lie in [0, 1]"
                )));
            }
            for item in &flavor.items {
                if !self.items.iter().any(|i| &i.name == item) {
                    return Err(ConfigError::Invalid(format!(
                        "flavor {name} lists unknown item {item:?}"
                    )));
                }
            }
        }
        if self.eval.subsample_size == 0 || self.eval.curve_x_min > self.eval.curve_x_max {
            return Err(ConfigError::Invalid("bad eval section".into()));
        }
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            positions: self.sim.position_count,
            window: self.detection.window,
            thresholds: self.detection.thresholds,
            dedup_timeout_ms: self.detection.dedup_timeout_ms,
        }
    }

    pub fn catalog(&self) -> ItemCatalog {
        ItemCatalog::new(
            self.items
                .iter()
                .map(|spec| {
                    let mut p = ItemProfile::with_default_level(&spec.name, spec.reflective, &self.sim);
                    if let Some(level) = spec.steady_level {
                        p.steady_level = level;
                    }
                    p.barcode = spec.barcode.clone();
                    p
                })
                .collect(),
        )
    }

    /// Item name to the raw phrase the recognizer answers with.
    pub fn raw_phrases(&self) -> HashMap<String, String> {
        self.items
            .iter()
            .map(|i| (i.name.clone(), i.raw_phrase.clone()))
            .collect()
    }

    pub fn flavor(&self, name: &str) -> Result<&FlavorConfig, ConfigError> {
        self.flavors
            .get(name)
            .ok_or_else(|| ConfigError::UnknownFlavor(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_load() {
        let c = TestbedConfig::default();
        assert_eq!(c.sim.position_count, 4);
        assert_eq!(c.recognizer.pool_size, 9);
        assert_eq!(c.flavor("soda").unwrap().items.len(), 4);
        assert_eq!(c.flavor("mix").unwrap().items.len(), 8);
        assert!(c.detection.thresholds.separates(c.sim.reflective_level, c.sim.nonreflective_level));
    }

    #[test]
    fn partial_override_keeps_other_keys() {
        let c = TestbedConfig::from_toml_str("[sim]\nnoise_amplitude = 0.0\n[recognizer]\np_hit = 1.0\n").unwrap();
        assert_eq!(c.sim.noise_amplitude, 0.0);
        assert_eq!(c.sim.empty_level, 400.0);
        assert_eq!(c.recognizer.p_hit, 1.0);
        assert_eq!(c.recognizer.pool_size, 9);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(TestbedConfig::from_toml_str("[recognizer]\np_hit = 1.5\n").is_err());
        assert!(TestbedConfig::from_toml_str("[sim]\nnoise_amplitude = 200.0\n").is_err());
        assert!(TestbedConfig::from_toml_str("[flavors.odd]\nitems = [\"caviar\"]\np_hit = 0.5\nposition_error_rate = 0.0\n").is_err());
        assert!(matches!(
            TestbedConfig::default().flavor("wine"),
            Err(ConfigError::UnknownFlavor(_))
        ));
    }
}
