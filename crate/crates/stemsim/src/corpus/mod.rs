//! Multi-stem audio corpora: loading, segmentation, synthesis and
//! separation-quality measurement.
//!
//! A corpus is a set of tracks, each of which provides up to five stems
//! (the full mix plus drums, bass, piano and guitar), described by a JSON
//! manifest. Corpora come from disk (a manifest or a Slakh-style directory
//! layout) or from [`synth_corpus`], which renders a deterministic synthetic
//! corpus for desk-scale experiments.

mod manifest;
mod sdr;
mod segment;
mod synth;
pub mod wav;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use manifest::{CorpusManifest, ManifestTrack, Split};
pub use sdr::compute_sdr;
pub use segment::{segment_track, Segment, SegmentationConfig};
pub use synth::{synth_corpus, SynthSpec};

/// Default corpus-wide sampling rate in Hz.
pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

/// Instrument role of a stem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Instrument {
    Mix,
    Drums,
    Bass,
    Piano,
    Guitar,
}

impl Instrument {
    pub const ALL: [Instrument; 5] = [
        Instrument::Mix,
        Instrument::Drums,
        Instrument::Bass,
        Instrument::Piano,
        Instrument::Guitar,
    ];

    /// The four isolated stems, i.e. everything except the mix.
    pub const STEMS: [Instrument; 4] = [
        Instrument::Drums,
        Instrument::Bass,
        Instrument::Piano,
        Instrument::Guitar,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Instrument::Mix => "mix",
            Instrument::Drums => "drums",
            Instrument::Bass => "bass",
            Instrument::Piano => "piano",
            Instrument::Guitar => "guitar",
        }
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Instrument {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mix" => Ok(Instrument::Mix),
            "drums" => Ok(Instrument::Drums),
            "bass" => Ok(Instrument::Bass),
            "piano" => Ok(Instrument::Piano),
            "guitar" => Ok(Instrument::Guitar),
            other => Err(Error::InvalidConfig(format!(
                "unknown instrument role {other:?} (expected mix, drums, bass, piano or guitar)"
            ))),
        }
    }
}

/// One stem of one musical piece.
#[derive(Debug, Clone)]
pub struct TrackAudio {
    pub track_id: String,
    pub instrument: Instrument,
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

impl TrackAudio {
    /// Builds a track from raw samples, clamping every value into [-1, 1].
    ///
    /// Non-finite samples and empty signals are rejected.
    pub fn new(
        track_id: impl Into<String>,
        instrument: Instrument,
        sample_rate: u32,
        mut samples: Vec<f64>,
    ) -> Result<Self> {
        let track_id = track_id.into();
        if samples.is_empty() {
            return Err(Error::NoSegments {
                track_id,
                reason: "empty signal".into(),
            });
        }
        for s in &mut samples {
            if !s.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "non-finite sample in track {track_id}"
                )));
            }
            *s = s.clamp(-1.0, 1.0);
        }
        Ok(TrackAudio {
            track_id,
            instrument,
            sample_rate,
            samples,
        })
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Reads one stem from a WAV file, downmixing to mono and verifying the
/// sampling rate against `expected_sr`.
pub fn load_track(
    path: impl AsRef<Path>,
    expected_sr: u32,
    track_id: impl Into<String>,
    instrument: Instrument,
) -> Result<TrackAudio> {
    let path = path.as_ref();
    let (sample_rate, samples) = wav::read_mono(path)?;
    if sample_rate != expected_sr {
        return Err(Error::SampleRateMismatch {
            path: path.to_path_buf(),
            expected: expected_sr,
            found: sample_rate,
        });
    }
    TrackAudio::new(track_id, instrument, sample_rate, samples)
}

/// Segments every track of one split that carries the given role.
///
/// Tracks lacking a stem for `role` are skipped. Errors if the split ends up
/// contributing no segments at all.
pub fn collect_split_segments(
    manifest: &CorpusManifest,
    split: Split,
    role: Instrument,
    cfg: &SegmentationConfig,
) -> Result<Vec<Segment>> {
    let mut segments = Vec::new();
    for track in manifest.tracks_in_split(split) {
        let Some(path) = track.stems.get(&role) else {
            continue;
        };
        let audio = load_track(
            manifest.resolve(path),
            manifest.sample_rate,
            &track.id,
            role,
        )?;
        segments.extend(segment_track(&audio, cfg)?);
    }
    if segments.is_empty() {
        return Err(Error::NoSegments {
            track_id: format!("<{split} split, role {role}>"),
            reason: "no track in the split carries this role".into(),
        });
    }
    Ok(segments)
}
