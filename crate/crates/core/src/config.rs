//! Pipeline configuration.
//!
//! Read from TOML (`.toml`) or JSON (anything else). Every field has a
//! default, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{AugmentSpec, PerturbRate, DEFAULT_PERTURB_RATES};
use crate::roi::{ScaleFactor, SizeBasis, DEFAULT_OUTPUT_SIZE, DEFAULT_SCALES};
use crate::rover::{VoteParams, DEFAULT_NULL_CONFIDENCE};

pub const MIN_OUTPUT_SIZE: u32 = 8;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scales: Vec<ScaleFactor>,
    pub output_size: u32,
    pub size_basis: SizeBasis,
    pub perturb_rates: Vec<PerturbRate>,
    pub augment: AugmentSpec,
    pub rover_alpha: f64,
    pub rover_null_confidence: f64,
    pub paths: Paths,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scales: DEFAULT_SCALES
                .iter()
                .map(|&s| ScaleFactor::new(s).expect("default scales are positive"))
                .collect(),
            output_size: DEFAULT_OUTPUT_SIZE,
            size_basis: SizeBasis::FaceDetected,
            perturb_rates: DEFAULT_PERTURB_RATES
                .iter()
                .map(|&r| PerturbRate::new(r).expect("default rates are positive"))
                .collect(),
            augment: AugmentSpec::default(),
            rover_alpha: 1.0,
            rover_null_confidence: DEFAULT_NULL_CONFIDENCE,
            paths: Paths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.scales.is_empty() {
            return Err(ConfigError::Invalid("`scales` must not be empty".into()));
        }
        if self.output_size < MIN_OUTPUT_SIZE {
            return Err(ConfigError::Invalid(format!(
                "`output_size` must be at least {MIN_OUTPUT_SIZE}, got {}",
                self.output_size
            )));
        }
        if self.perturb_rates.is_empty() {
            return Err(ConfigError::Invalid("`perturb_rates` must not be empty".into()));
        }
        self.augment
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.vote_params()
            .map(|_| ())
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn vote_params(&self) -> Result<VoteParams, crate::rover::RoverError> {
        VoteParams::new(self.rover_alpha, self.rover_null_confidence)
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Loads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let parsed = if is_toml {
            Self::from_toml(&text)
        } else if text.trim().is_empty() {
            Ok(Self::default())
        } else {
            Self::from_json(&text)
        };
        let config = parsed.map_err(|message| ConfigError::Syntax { path: shown, message })?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_pipeline_constants() {
        let c = PipelineConfig::default();
        let scales: Vec<f64> = c.scales.iter().map(|s| s.value()).collect();
        assert_eq!(scales, vec![0.6, 0.8, 1.0, 1.25, 1.5, 1.75]);
        let rates: Vec<f64> = c.perturb_rates.iter().map(|r| r.value()).collect();
        assert_eq!(rates, vec![0.9, 1.0, 1.1]);
        assert_eq!(c.output_size, 112);
        c.validate().unwrap();
    }

    #[test]
    fn toml_and_json_agree() {
        let toml = r#"
            scales = [1.0, 1.5]
            output_size = 64
            rover_alpha = 0.5
            [augment]
            seed = 9
            hflip_prob = 0.0
        "#;
        let json = r#"{"scales":[1.0,1.5],"output_size":64,"rover_alpha":0.5,
            "augment":{"seed":9,"hflip_prob":0.0}}"#;
        let a = PipelineConfig::from_toml(toml).unwrap();
        let b = PipelineConfig::from_json(json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.augment.seed, 9);
        assert_eq!(a.augment.grayscale_prob, 0.2);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(PipelineConfig::from_toml("scales = [0.0]").is_err());
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
        let c = PipelineConfig::from_toml("output_size = 4").unwrap();
        assert!(c.validate().is_err());
        let c = PipelineConfig::from_toml("scales = []").unwrap();
        assert!(c.validate().is_err());
        let c = PipelineConfig::from_toml("rover_alpha = 2.0").unwrap();
        assert!(c.validate().is_err());
    }
}
