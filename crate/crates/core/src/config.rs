//! Project configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{AblationConfig, DEFAULT_COVERAGE_THRESHOLD, DEFAULT_DENSITY_CAP, DEFAULT_MAX_NEW, DEFAULT_N_TOP};
use crate::enumerator::EnumerationBounds;
use crate::labeling::{ClassifierConfig, LlmConfig, SessionConfig};
use crate::training::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("`{0}` must be at least 1")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// JSON list of feature names restricting the built-in catalog.
    pub catalog: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    /// Label store directory.
    pub labels: Option<PathBuf>,
    /// Weight table, CSV or JSON.
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentParams {
    pub coverage_threshold: u64,
    pub max_new: usize,
    pub n_top: usize,
    pub density_cap: u64,
    pub ablation: AblationConfig,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            coverage_threshold: DEFAULT_COVERAGE_THRESHOLD,
            max_new: DEFAULT_MAX_NEW,
            n_top: DEFAULT_N_TOP,
            density_cap: DEFAULT_DENSITY_CAP,
            ablation: AblationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectConfig {
    pub seed: u64,
    pub paths: Paths,
    pub augment: AugmentParams,
    pub enumerate: EnumerationBounds,
    pub session: SessionConfig,
    pub classifier: ClassifierConfig,
    pub train: TrainConfig,
    pub llm: LlmConfig,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            paths: Paths::default(),
            augment: AugmentParams::default(),
            enumerate: EnumerationBounds::default(),
            session: SessionConfig::default(),
            classifier: ClassifierConfig::default(),
            train: TrainConfig::default(),
            llm: LlmConfig::default(),
        }
    }
}

impl ProjectConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let counts: [(&'static str, u64); 11] = [
            ("augment.coverage_threshold", self.augment.coverage_threshold),
            ("augment.max_new", self.augment.max_new as u64),
            ("augment.n_top", self.augment.n_top as u64),
            ("augment.density_cap", self.augment.density_cap),
            ("augment.ablation.pairs_per_feature", self.augment.ablation.pairs_per_feature as u64),
            ("session.batch_size", self.session.batch_size as u64),
            ("session.max_iterations", self.session.max_iterations as u64),
            ("classifier.hidden", self.classifier.hidden as u64),
            ("classifier.epochs", self.classifier.epochs as u64),
            ("train.max_epochs", self.train.max_epochs as u64),
            ("llm.concurrency", self.llm.concurrency as u64),
        ];
        match counts.iter().find(|(_, v)| *v < 1) {
            Some((name, _)) => Err(ConfigError::NonPositive(name)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_counts_are_checked() {
        let cfg = ProjectConfig::default();
        assert_eq!(ProjectConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!((cfg.augment.coverage_threshold, cfg.augment.max_new, cfg.augment.n_top), (7, 7, 8));
        assert_eq!((cfg.session.batch_size, cfg.session.max_iterations), (20, 20));

        let partial = ProjectConfig::from_toml("seed = 3\n[session]\nbatch_size = 5\n").unwrap();
        assert_eq!((partial.seed, partial.session.batch_size, partial.session.max_iterations), (3, 5, 20));
        assert!(matches!(
            ProjectConfig::from_toml("[augment]\nmax_new = 0\n"),
            Err(ConfigError::NonPositive("augment.max_new"))
        ));
    }
}
