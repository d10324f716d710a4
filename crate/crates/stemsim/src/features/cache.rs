//! On-disk feature cache: one binary file per segment.
//!
//! File layout: two little-endian u32 dimensions (rows, columns) followed by
//! row-major 32-bit-float entries. The cache key combines the segment
//! identity with a hash of the feature config, so stale entries from a
//! different config are never served.

use std::fs;
use std::path::PathBuf;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::corpus::Instrument;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, MelSpectrogram};

pub struct FeatureCache {
    dir: PathBuf,
    config_hash: String,
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>, cfg: &FeatureConfig, sample_rate: u32) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(FeatureCache {
            dir,
            config_hash: config_hash(cfg, sample_rate),
        })
    }

    fn path_for(&self, track_id: &str, instrument: Instrument, segment_index: usize) -> PathBuf {
        self.dir.join(format!(
            "{track_id}_{instrument}_{segment_index:05}_{}.mel",
            self.config_hash
        ))
    }

    pub fn contains(&self, track_id: &str, instrument: Instrument, segment_index: usize) -> bool {
        self.path_for(track_id, instrument, segment_index).is_file()
    }

    pub fn store(&self, mel: &MelSpectrogram) -> Result<PathBuf> {
        let path = self.path_for(&mel.track_id, mel.instrument, mel.segment_index);
        let (rows, cols) = mel.values.dim();
        let mut bytes = Vec::with_capacity(8 + rows * cols * 4);
        bytes.extend_from_slice(&(rows as u32).to_le_bytes());
        bytes.extend_from_slice(&(cols as u32).to_le_bytes());
        for v in mel.values.iter() {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(
        &self,
        track_id: &str,
        instrument: Instrument,
        segment_index: usize,
    ) -> Result<MelSpectrogram> {
        let path = self.path_for(track_id, instrument, segment_index);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() < 8 {
            return Err(Error::DimensionMismatch(format!(
                "cache file {} truncated",
                path.display()
            )));
        }
        let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        if bytes.len() != 8 + rows * cols * 4 {
            return Err(Error::DimensionMismatch(format!(
                "cache file {}: expected {rows}x{cols} entries",
                path.display()
            )));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for chunk in bytes[8..].chunks_exact(4) {
            values.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
        }
        Ok(MelSpectrogram {
            track_id: track_id.to_string(),
            instrument,
            segment_index,
            values: Array2::from_shape_vec((rows, cols), values)
                .map_err(|e| Error::DimensionMismatch(e.to_string()))?,
        })
    }
}

fn config_hash(cfg: &FeatureConfig, sample_rate: u32) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(cfg).expect("feature config serializes"));
    hasher.update(sample_rate.to_le_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
