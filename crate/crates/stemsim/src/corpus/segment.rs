//! Track segmentation with silence exclusion.

use serde::{Deserialize, Serialize};

use crate::corpus::{Instrument, TrackAudio};
use crate::error::{Error, Result};

/// How a track is cut into fixed-length windows.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Window length in seconds.
    pub segment_seconds: f64,
    /// Fraction of a window shared with its successor, in [0, 1).
    pub overlap_fraction: f64,
    /// Cap on emitted segments per track; `None` means unlimited.
    pub max_segments_per_track: Option<usize>,
    /// Windows with RMS below this are never materialized.
    pub silence_threshold: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            segment_seconds: 3.0,
            overlap_fraction: 0.5,
            max_segments_per_track: Some(40),
            silence_threshold: 1e-4,
        }
    }
}

impl SegmentationConfig {
    /// Test-split flavor: same windowing, no per-track cap.
    pub fn for_test(&self) -> Self {
        SegmentationConfig {
            max_segments_per_track: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.segment_seconds.is_finite() || self.segment_seconds <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "segment_seconds must be > 0, got {}",
                self.segment_seconds
            )));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidConfig(format!(
                "overlap_fraction must be in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        if !self.silence_threshold.is_finite() || self.silence_threshold < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "silence_threshold must be >= 0, got {}",
                self.silence_threshold
            )));
        }
        Ok(())
    }

    /// Window length in samples at the given rate.
    pub fn segment_len(&self, sample_rate: u32) -> usize {
        (self.segment_seconds * sample_rate as f64).round() as usize
    }

    /// Hop between window starts, in samples. At least 1.
    pub fn hop_len(&self, sample_rate: u32) -> usize {
        let hop = self.segment_len(sample_rate) as f64 * (1.0 - self.overlap_fraction);
        (hop.round() as usize).max(1)
    }
}

/// One fixed-length, non-silent window of a stem.
#[derive(Debug, Clone)]
pub struct Segment {
    pub track_id: String,
    pub instrument: Instrument,
    /// Ordinal of the window position within the track (offset / hop),
    /// stable under silence exclusion.
    pub segment_index: usize,
    pub samples: Vec<f64>,
}

pub(crate) fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Cuts a track into windows of `segment_seconds` at offsets 0, hop, 2·hop, …
///
/// Silent windows are skipped without consuming the cap; trailing partial
/// windows are discarded. Errors when the track is shorter than one window
/// or every window is silent.
pub fn segment_track(audio: &TrackAudio, cfg: &SegmentationConfig) -> Result<Vec<Segment>> {
    cfg.validate()?;
    let seg_len = cfg.segment_len(audio.sample_rate);
    let hop = cfg.hop_len(audio.sample_rate);
    if audio.samples.len() < seg_len {
        return Err(Error::NoSegments {
            track_id: audio.track_id.clone(),
            reason: format!(
                "track has {} samples, shorter than one {seg_len}-sample segment",
                audio.samples.len()
            ),
        });
    }

    let cap = cfg.max_segments_per_track.unwrap_or(usize::MAX);
    let mut segments = Vec::new();
    let mut window_index = 0usize;
    loop {
        let start = window_index * hop;
        if start + seg_len > audio.samples.len() || segments.len() >= cap {
            break;
        }
        let window = &audio.samples[start..start + seg_len];
        if rms(window) >= cfg.silence_threshold {
            segments.push(Segment {
                track_id: audio.track_id.clone(),
                instrument: audio.instrument,
                segment_index: window_index,
                samples: window.to_vec(),
            });
        }
        window_index += 1;
    }

    if segments.is_empty() {
        return Err(Error::NoSegments {
            track_id: audio.track_id.clone(),
            reason: "all full windows are silent".into(),
        });
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(samples: Vec<f64>) -> TrackAudio {
        TrackAudio::new("t0", Instrument::Mix, 44_100, samples).unwrap()
    }

    #[test]
    fn nine_seconds_yields_five_segments() {
        let n = (9.0 * 44_100.0) as usize;
        let audio = track((0..n).map(|i| ((i % 7) as f64 - 3.0) * 0.1).collect());
        let segs = segment_track(&audio, &SegmentationConfig::default()).unwrap();
        assert_eq!(segs.len(), 5);
        let offsets: Vec<usize> = segs.iter().map(|s| s.segment_index * 66_150).collect();
        assert_eq!(offsets, vec![0, 66_150, 132_300, 198_450, 264_600]);
        assert!(segs.iter().all(|s| s.samples.len() == 132_300));
    }

    #[test]
    fn all_zero_audio_is_an_empty_result_error() {
        let audio = track(vec![0.0; 44_100 * 4]);
        // TrackAudio::new accepts zeros; segmentation rejects them as silence.
        let err = segment_track(&audio, &SegmentationConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoSegments { .. }));
    }

    #[test]
    fn too_short_audio_is_an_error() {
        let audio = track(vec![0.5; 44_100]);
        let err = segment_track(&audio, &SegmentationConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoSegments { .. }));
    }

    #[test]
    fn cap_keeps_the_first_forty_windows() {
        // 60 full windows: duration = 3 + 59 * 1.5 s.
        let n = (44_100.0 * (3.0 + 59.0 * 1.5)) as usize;
        let audio = track((0..n).map(|i| ((i % 11) as f64 - 5.0) * 0.05).collect());
        let cfg = SegmentationConfig::default();
        let segs = segment_track(&audio, &cfg).unwrap();
        assert_eq!(segs.len(), 40);
        assert_eq!(segs.last().unwrap().segment_index, 39);

        let uncapped = segment_track(&audio, &cfg.for_test()).unwrap();
        assert_eq!(uncapped.len(), 60);
    }

    #[test]
    fn silent_windows_do_not_consume_the_cap() {
        // Window 0 loud, window 1 silent (given hop = window), window 2 loud.
        let sr = 1000u32;
        let cfg = SegmentationConfig {
            segment_seconds: 1.0,
            overlap_fraction: 0.0,
            max_segments_per_track: Some(2),
            silence_threshold: 1e-4,
        };
        let mut samples = vec![0.3; 1000];
        samples.extend(vec![0.0; 1000]);
        samples.extend(vec![0.3; 1000]);
        let audio = TrackAudio::new("t", Instrument::Drums, sr, samples).unwrap();
        let segs = segment_track(&audio, &cfg).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].segment_index, 0);
        assert_eq!(segs[1].segment_index, 2);
    }
}
