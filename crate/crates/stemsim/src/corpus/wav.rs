//! WAV ingestion and export.
//!
//! Reads RIFF PCM 16-bit and IEEE-float 32-bit files, mono or multichannel
//! (channels are averaged into mono). Writes 16-bit PCM mono, which is what
//! the synthetic corpus and snippet exporters emit.

use std::path::Path;

use crate::error::{Error, Result};

fn wav_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Reads a WAV file, averaging channels into a mono signal in [-1, 1].
///
/// Returns the file's sample rate and the downmixed samples.
pub fn read_mono(path: impl AsRef<Path>) -> Result<(u32, Vec<f64>)> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Wav {
            path: path.to_path_buf(),
            message: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (hound::SampleFormat::Int, 32) => reader
            .samples::<i32>()
            .map(|s| s.map(|v| v as f64 / 2147483648.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (format, bits) => {
            return Err(Error::Wav {
                path: path.to_path_buf(),
                message: format!("unsupported format {format:?} at {bits} bits per sample"),
            })
        }
    };

    let n_frames = interleaved.len() / channels;
    let mut mono = Vec::with_capacity(n_frames);
    for frame in interleaved.chunks_exact(channels) {
        mono.push(frame.iter().sum::<f64>() / channels as f64);
    }
    Ok((spec.sample_rate, mono))
}

/// Writes a mono 16-bit PCM WAV file. Samples are clamped to [-1, 1] before
/// quantization, so output bytes depend only on the input values.
pub fn write_mono_16bit(path: impl AsRef<Path>, sample_rate: u32, samples: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for &s in samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(q).map_err(|e| wav_err(path, e))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_signal_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let samples: Vec<f64> = (0..4410)
            .map(|i| (i as f64 * 0.01).sin() * 0.8)
            .collect();
        write_mono_16bit(&path, 44_100, &samples).unwrap();
        let (sr, back) = read_mono(&path).unwrap();
        assert_eq!(sr, 44_100);
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(&back) {
            assert!((a - b).abs() < 2.0 / 32768.0);
        }
    }

    #[test]
    fn stereo_averages_channels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 44_100,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..1000 {
            writer.write_sample((0.5f64 * 32768.0) as i16).unwrap();
            writer.write_sample((-0.5f64 * 32768.0) as i16).unwrap();
        }
        writer.finalize().unwrap();
        let (_, mono) = read_mono(&path).unwrap();
        assert_eq!(mono.len(), 1000);
        assert!(mono.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn float32_wav_is_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 44_100,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for i in 0..100 {
            writer.write_sample(i as f32 / 100.0).unwrap();
        }
        writer.finalize().unwrap();
        let (_, mono) = read_mono(&path).unwrap();
        assert_eq!(mono.len(), 100);
        assert!((mono[50] - 0.5).abs() < 1e-7);
    }
}
