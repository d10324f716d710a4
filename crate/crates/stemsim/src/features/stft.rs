//! Power spectrogram via Hann-windowed FFT frames.

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::features::FeatureConfig;

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect()
}

/// Power spectrogram: `(n_fft/2 + 1)` rows by `n_frames` columns, entry
/// `|DFT bin|^2` of a Hann-windowed frame. Frames start at multiples of
/// `hop`; a trailing partial frame is dropped.
pub fn stft_power(samples: &[f64], cfg: &FeatureConfig) -> Result<Array2<f64>> {
    if samples.len() < cfg.n_fft {
        return Err(Error::DimensionMismatch(format!(
            "input of {} samples is shorter than n_fft {}",
            samples.len(),
            cfg.n_fft
        )));
    }
    let n_fft = cfg.n_fft;
    let n_bins = n_fft / 2 + 1;
    let n_frames = cfg.n_frames(samples.len());
    let window = hann_window(n_fft);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    let mut power = Array2::zeros((n_bins, n_frames));
    for frame in 0..n_frames {
        let start = frame * cfg.hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(samples[start + i] * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for bin in 0..n_bins {
            power[(bin, frame)] = buf[bin].norm_sqr();
        }
    }
    Ok(power)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_fft: usize, hop: usize) -> FeatureConfig {
        FeatureConfig {
            n_fft,
            hop,
            ..FeatureConfig::default()
        }
    }

    /// Direct O(n^2) DFT of one windowed frame, the independent oracle.
    fn dft_power_frame(frame: &[f64], window: &[f64]) -> Vec<f64> {
        let n = frame.len();
        let n_bins = n / 2 + 1;
        let mut out = Vec::with_capacity(n_bins);
        for k in 0..n_bins {
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for (i, (&x, &w)) in frame.iter().zip(window).enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                re += x * w * angle.cos();
                im += x * w * angle.sin();
            }
            out.push(re * re + im * im);
        }
        out
    }

    #[test]
    fn dc_signal_concentrates_in_bin_zero() {
        let c = cfg(256, 128);
        let samples = vec![1.0; 1024];
        let power = stft_power(&samples, &c).unwrap();
        let window_sum: f64 = hann_window(256).iter().sum();
        for frame in power.columns() {
            assert!((frame[0] - window_sum * window_sum).abs() < 1e-6 * frame[0]);
            // The Hann window itself only has content at bins 0 and 1, so
            // everything from bin 2 on must vanish.
            for &v in frame.iter().skip(2) {
                assert!(v < 1e-12 * frame[0]);
            }
            assert!(frame[1] < frame[0]);
        }
    }

    #[test]
    fn bin_centered_sine_peaks_at_its_bin_and_matches_direct_dft() {
        let n_fft = 512;
        let c = cfg(n_fft, 256);
        let sr = 8_192.0;
        let k = 37;
        let freq = k as f64 * sr / n_fft as f64;
        let samples: Vec<f64> = (0..2048)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sr).sin())
            .collect();
        let power = stft_power(&samples, &c).unwrap();
        let window = hann_window(n_fft);
        for (f, frame) in power.columns().into_iter().enumerate() {
            let argmax = frame
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, k, "frame {f}");

            let oracle = dft_power_frame(&samples[f * 256..f * 256 + n_fft], &window);
            for (bin, (&got, want)) in frame.iter().zip(&oracle).enumerate() {
                let denom = want.abs().max(1.0);
                assert!(
                    (got - want).abs() / denom < 1e-6,
                    "frame {f} bin {bin}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_matrix() {
        let c = cfg(128, 64);
        let power = stft_power(&vec![0.0; 512], &c).unwrap();
        assert!(power.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_input_is_rejected() {
        let c = cfg(512, 128);
        assert!(stft_power(&vec![0.1; 511], &c).is_err());
    }

    #[test]
    fn non_power_of_two_fft_size_works() {
        let c = cfg(300, 100);
        let samples: Vec<f64> = (0..900).map(|i| (i as f64 * 0.3).sin()).collect();
        let power = stft_power(&samples, &c).unwrap();
        assert_eq!(power.dim(), (151, 7));
        let window = hann_window(300);
        let oracle = dft_power_frame(&samples[0..300], &window);
        for (bin, (&got, want)) in power.column(0).iter().zip(&oracle).enumerate() {
            let denom = want.abs().max(1.0);
            assert!((got - want).abs() / denom < 1e-6, "bin {bin}");
        }
    }
}
