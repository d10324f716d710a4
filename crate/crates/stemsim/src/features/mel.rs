//! Triangular mel filterbank on the HTK scale.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::features::FeatureConfig;

/// HTK mel scale: `m(f) = 2595 log10(1 + f/700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Builds the `n_mels x (n_fft/2 + 1)` filterbank: triangles with peak value
/// 1 whose centers are equally spaced on the mel scale between `fmin` and
/// `fmax`. Errors if the frequency resolution leaves any filter without a
/// nonzero weight.
pub fn mel_filterbank(cfg: &FeatureConfig, sample_rate: u32) -> Result<Array2<f64>> {
    cfg.validate(sample_rate)?;
    let n_bins = cfg.n_fft / 2 + 1;
    let fmax = cfg.fmax_hz(sample_rate);

    let mel_lo = hz_to_mel(cfg.fmin);
    let mel_hi = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();

    let bin_hz: Vec<f64> = (0..n_bins)
        .map(|k| k as f64 * sample_rate as f64 / cfg.n_fft as f64)
        .collect();

    let mut fb = Array2::zeros((cfg.n_mels, n_bins));
    for m in 0..cfg.n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let mut any = false;
        for (k, &f) in bin_hz.iter().enumerate() {
            let w = if f >= left && f <= center && center > left {
                (f - left) / (center - left)
            } else if f > center && f <= right && right > center {
                (right - f) / (right - center)
            } else {
                0.0
            };
            if w > 0.0 {
                fb[(m, k)] = w;
                any = true;
            }
        }
        if !any {
            return Err(Error::InvalidConfig(format!(
                "mel filter {m} (center {center:.1} Hz) captures no FFT bin; \
                 reduce n_mels or increase n_fft"
            )));
        }
    }
    Ok(fb)
}
