//! Run configuration: one JSON document with CLI-flag overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{Instrument, SegmentationConfig};
use crate::encoder::EncoderArch;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Neighbors for the kNN vote.
    pub k: usize,
    /// Tracks returned by similarity queries.
    pub top_n: usize,
    /// Also export per-trial embedding CSVs during eval.
    pub save_embeddings: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k: 5,
            top_n: 5,
            save_embeddings: false,
        }
    }
}

/// Everything a pipeline command needs: paths, per-stage configs and the
/// role selection. All fields have defaults so a config file only states
/// what it overrides.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Roles to process; `None` means every role available in the corpus.
    pub roles: Option<Vec<Instrument>>,
    pub segmentation: SegmentationConfig,
    pub features: FeatureConfig,
    pub arch: EncoderArch,
    pub train: TrainConfig,
    pub eval: EvalOptions,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        // Track the path so the error names the offending field.
        let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            Error::InvalidConfig(format!("{} at `{}`: {}", path.display(), e.path(), e.inner()))
        })?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Validates the stage configs that do not need corpus context.
    pub fn validate(&self) -> Result<()> {
        self.segmentation.validate()?;
        self.arch.validate()?;
        self.train.validate()?;
        if self.eval.k < 1 {
            return Err(Error::InvalidConfig("eval.k must be >= 1".into()));
        }
        Ok(())
    }

    pub fn manifest_path(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("manifest path is required (set `manifest` in the config or pass --manifest)".into()))
    }

    pub fn out_dir_path(&self) -> Result<&Path> {
        self.out_dir
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("output directory is required (set `out_dir` in the config or pass --out)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"manifest": "corpus/manifest.json"}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.train.margin, 0.2);
        assert_eq!(cfg.train.batch_size, 64);
        assert_eq!(cfg.train.epochs, 150);
        assert_eq!(cfg.train.n_trials, 5);
        assert_eq!(cfg.features.n_mels, 128);
        assert_eq!(cfg.eval.k, 5);
        assert!(cfg.roles.is_none());
    }

    #[test]
    fn unknown_or_invalid_fields_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"train": {"margin": "wide"}}"#).unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("margin"), "message was: {message}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn semantic_validation_catches_bad_values() {
        let mut cfg = RunConfig::default();
        cfg.train.margin = -1.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("margin"));
    }

    #[test]
    fn roundtrip_preserves_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        let mut cfg = RunConfig::default();
        cfg.train.epochs = 30;
        cfg.roles = Some(vec![Instrument::Drums, Instrument::Mix]);
        cfg.save(&path).unwrap();
        let back = RunConfig::load(&path).unwrap();
        assert_eq!(back.train.epochs, 30);
        assert_eq!(back.roles, Some(vec![Instrument::Drums, Instrument::Mix]));
    }
}
