//! Log-mel spectrogram front end: the encoder's input representation.

mod cache;
mod mel;
mod stft;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{Instrument, Segment};
use crate::error::{Error, Result};

pub use cache::FeatureCache;
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz};
pub use stft::{hann_window, stft_power};

/// Spectrogram and filterbank parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Analysis window length in samples.
    pub n_fft: usize,
    /// Stride between frames in samples.
    pub hop: usize,
    /// Number of mel filters.
    pub n_mels: usize,
    /// Lowest filter edge in Hz.
    pub fmin: f64,
    /// Highest filter edge in Hz; `None` means half the sampling rate.
    pub fmax: Option<f64>,
    /// Additive constant inside the log compression.
    pub log_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            fmin: 20.0,
            fmax: None,
            log_floor: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn fmax_hz(&self, sample_rate: u32) -> f64 {
        self.fmax.unwrap_or(sample_rate as f64 / 2.0)
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.n_fft == 0 || self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::InvalidConfig(format!(
                "need 0 < hop <= n_fft, got hop {} and n_fft {}",
                self.hop, self.n_fft
            )));
        }
        if self.n_mels < 1 {
            return Err(Error::InvalidConfig("n_mels must be >= 1".into()));
        }
        let fmax = self.fmax_hz(sample_rate);
        if !(self.fmin >= 0.0 && self.fmin < fmax && fmax <= sample_rate as f64 / 2.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= fmin < fmax <= sample_rate/2, got fmin {} and fmax {fmax}",
                self.fmin
            )));
        }
        if !self.log_floor.is_finite() || self.log_floor <= 0.0 {
            return Err(Error::InvalidConfig("log_floor must be > 0".into()));
        }
        Ok(())
    }

    /// Frames produced for `n_samples` of input: `1 + floor((n - n_fft)/hop)`.
    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.n_fft {
            0
        } else {
            1 + (n_samples - self.n_fft) / self.hop
        }
    }
}

/// Log-mel matrix for one segment, `n_mels` rows by `n_frames` columns,
/// with the segment's identity carried through for indexing.
#[derive(Debug, Clone)]
pub struct MelSpectrogram {
    pub track_id: String,
    pub instrument: Instrument,
    pub segment_index: usize,
    pub values: Array2<f64>,
}

/// Converts a segment into its log-mel spectrogram:
/// `log(filterbank · |STFT|^2 + log_floor)` elementwise.
pub fn log_mel(
    segment: &Segment,
    cfg: &FeatureConfig,
    sample_rate: u32,
) -> Result<MelSpectrogram> {
    let filterbank = mel_filterbank(cfg, sample_rate)?;
    log_mel_with_filterbank(segment, cfg, &filterbank)
}

/// Same as [`log_mel`] but reusing a precomputed filterbank, which is the
/// hot path when featurizing many segments under one config.
pub fn log_mel_with_filterbank(
    segment: &Segment,
    cfg: &FeatureConfig,
    filterbank: &Array2<f64>,
) -> Result<MelSpectrogram> {
    let power = stft_power(&segment.samples, cfg)?;
    let mut values = filterbank.dot(&power);
    values.mapv_inplace(|v| (v + cfg.log_floor).ln());
    Ok(MelSpectrogram {
        track_id: segment.track_id.clone(),
        instrument: segment.instrument,
        segment_index: segment.segment_index,
        values,
    })
}

/// Featurizes a batch of segments under one config.
pub fn log_mel_batch(
    segments: &[Segment],
    cfg: &FeatureConfig,
    sample_rate: u32,
) -> Result<Vec<MelSpectrogram>> {
    let filterbank = mel_filterbank(cfg, sample_rate)?;
    segments
        .iter()
        .map(|s| log_mel_with_filterbank(s, cfg, &filterbank))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(samples: Vec<f64>) -> Segment {
        Segment {
            track_id: "t".into(),
            instrument: Instrument::Piano,
            segment_index: 0,
            samples,
        }
    }

    #[test]
    fn default_config_shape_for_three_second_segment() {
        let cfg = FeatureConfig::default();
        let n = 132_300; // 3 s at 44100 Hz
        assert_eq!(cfg.n_frames(n), 255);
        let seg = segment((0..n).map(|i| (i as f64 * 0.01).sin() * 0.3).collect());
        let mel = log_mel(&seg, &cfg, 44_100).unwrap();
        assert_eq!(mel.values.dim(), (128, 255));
        assert!(mel.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_input_sits_on_the_log_floor() {
        let cfg = FeatureConfig {
            n_fft: 256,
            hop: 128,
            n_mels: 8,
            ..FeatureConfig::default()
        };
        let seg = segment(vec![0.0; 1024]);
        let mel = log_mel(&seg, &cfg, 8_000).unwrap();
        let floor = (1e-10f64).ln();
        assert!(mel.values.iter().all(|&v| (v - floor).abs() < 1e-12));
    }

    #[test]
    fn featurization_is_deterministic() {
        let cfg = FeatureConfig {
            n_fft: 512,
            hop: 256,
            n_mels: 16,
            ..FeatureConfig::default()
        };
        let seg = segment((0..4096).map(|i| ((i * i) % 97) as f64 / 97.0 - 0.5).collect());
        let a = log_mel(&seg, &cfg, 16_000).unwrap();
        let b = log_mel(&seg, &cfg, 16_000).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn amplitude_scaling_raises_every_non_floor_entry() {
        let cfg = FeatureConfig {
            n_fft: 512,
            hop: 256,
            n_mels: 16,
            ..FeatureConfig::default()
        };
        let samples: Vec<f64> = (0..4096).map(|i| (i as f64 * 0.05).sin() * 0.2).collect();
        let base = log_mel(&segment(samples.clone()), &cfg, 16_000).unwrap();
        let scaled =
            log_mel(&segment(samples.iter().map(|s| s * 3.0).collect()), &cfg, 16_000).unwrap();
        let floor = cfg.log_floor.ln();
        for (a, b) in base.values.iter().zip(scaled.values.iter()) {
            if *a > floor + 1e-9 {
                assert!(b > a, "scaling did not increase entry: {a} -> {b}");
            }
        }
    }

    #[test]
    fn frame_count_formula_holds_across_configs() {
        for (n_fft, hop) in [(256, 64), (512, 512), (300, 120), (1024, 1)] {
            let cfg = FeatureConfig {
                n_fft,
                hop,
                n_mels: 4,
                ..FeatureConfig::default()
            };
            for n in [n_fft, n_fft + 1, n_fft + hop, 5 * n_fft + 3] {
                let seg = segment((0..n).map(|i| (i as f64 * 0.11).sin()).collect());
                let mel = log_mel(&seg, &cfg, 44_100).unwrap();
                assert_eq!(mel.values.ncols(), 1 + (n - n_fft) / hop);
            }
        }
    }
}
