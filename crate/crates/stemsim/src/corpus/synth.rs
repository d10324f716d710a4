//! Deterministic synthetic corpus generator.
//!
//! Renders a desk-scale multi-stem corpus: per track, four procedural stems
//! (drums, bass, piano, guitar) plus the mix, written as 16-bit PCM WAVs
//! with a manifest. Every timbre and pattern parameter is drawn from a
//! generator seeded per (seed, track, instrument), so two stems of the same
//! track share no similarity structure, and identical (spec, seed) inputs
//! reproduce the corpus byte for byte.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::manifest::{CorpusManifest, ManifestTrack, Split};
use crate::corpus::{wav, Instrument};
use crate::error::{Error, Result};

/// Track counts and duration for a synthetic corpus.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_train_tracks: usize,
    pub n_test_tracks: usize,
    pub duration_s: f64,
}

const STEM_PEAK: f64 = 0.35;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed per (base seed, track, instrument).
fn child_seed(base: u64, track: u64, instrument: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ track) ^ (instrument.wrapping_mul(0x9E37_79B9)))
}

/// Generates the corpus under `out_dir` and writes `manifest.json` there.
pub fn synth_corpus(
    spec: &SynthSpec,
    seed: u64,
    out_dir: impl AsRef<Path>,
    sample_rate: u32,
) -> Result<CorpusManifest> {
    if spec.n_train_tracks < 1 || spec.n_test_tracks < 1 {
        return Err(Error::InvalidConfig(
            "synth corpus needs at least one train and one test track".into(),
        ));
    }
    if spec.duration_s < 6.0 {
        return Err(Error::InvalidConfig(format!(
            "synth corpus duration must be at least two segment lengths (6 s), got {} s",
            spec.duration_s
        )));
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let n_samples = (spec.duration_s * sample_rate as f64).round() as usize;
    let total = spec.n_train_tracks + spec.n_test_tracks;
    let mut tracks = Vec::with_capacity(total);

    for track_idx in 0..total {
        let id = format!("track{track_idx:03}");
        let split = if track_idx < spec.n_train_tracks {
            Split::Train
        } else {
            Split::Test
        };
        let track_dir = out_dir.join(&id);
        fs::create_dir_all(&track_dir).map_err(|e| Error::io(&track_dir, e))?;

        let mut stems: BTreeMap<Instrument, PathBuf> = BTreeMap::new();
        let mut mix = vec![0.0f64; n_samples];
        for (instr_idx, instrument) in Instrument::STEMS.iter().enumerate() {
            let mut rng =
                ChaCha8Rng::seed_from_u64(child_seed(seed, track_idx as u64, instr_idx as u64));
            let mut samples = match instrument {
                Instrument::Drums => render_drums(&mut rng, n_samples, sample_rate),
                Instrument::Bass => render_bass(&mut rng, n_samples, sample_rate),
                Instrument::Piano => render_piano(&mut rng, n_samples, sample_rate),
                Instrument::Guitar => render_guitar(&mut rng, n_samples, sample_rate),
                Instrument::Mix => unreachable!(),
            };
            normalize_peak(&mut samples, STEM_PEAK);
            for (m, s) in mix.iter_mut().zip(&samples) {
                *m += s;
            }
            let rel = PathBuf::from(&id).join(format!("{instrument}.wav"));
            wav::write_mono_16bit(out_dir.join(&rel), sample_rate, &samples)?;
            stems.insert(*instrument, rel);
        }
        for m in &mut mix {
            *m = m.clamp(-1.0, 1.0);
        }
        let rel = PathBuf::from(&id).join("mix.wav");
        wav::write_mono_16bit(out_dir.join(&rel), sample_rate, &mix)?;
        stems.insert(Instrument::Mix, rel);

        tracks.push(ManifestTrack { id, split, stems });
    }

    let manifest = CorpusManifest {
        sample_rate,
        tracks,
        root: out_dir.to_path_buf(),
    };
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(manifest)
}

fn normalize_peak(samples: &mut [f64], peak: f64) {
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if max > 0.0 {
        let g = peak / max;
        for s in samples {
            *s *= g;
        }
    }
}

/// RBJ-style bandpass biquad, applied in place of a sample stream.
struct Bandpass {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Bandpass {
    fn new(center_hz: f64, q: f64, sample_rate: u32) -> Self {
        let w = 2.0 * PI * center_hz / sample_rate as f64;
        let alpha = w.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Bandpass {
            b0: alpha / a0,
            b2: -alpha / a0,
            a1: -2.0 * w.cos() / a0,
            a2: (1.0 - alpha) / a0,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.b2 * self.x2 - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Two bandpassed noise-burst voices on a 16-step pattern.
fn render_drums(rng: &mut ChaCha8Rng, n_samples: usize, sample_rate: u32) -> Vec<f64> {
    let bpm = rng.gen_range(70.0..140.0);
    let step_s = 60.0 / bpm / 2.0; // eighth notes
    let step_len = (step_s * sample_rate as f64).round() as usize;

    struct Voice {
        pattern: [bool; 16],
        decay: f64,
        center: f64,
        q: f64,
        gain: f64,
    }
    let mut voices = Vec::with_capacity(2);
    // Keep filter centers safely below Nyquist at low sample rates.
    let hi_cap = (sample_rate as f64 * 0.45).min(9_000.0);
    for (lo, hi) in [(80.0f64, 300.0f64), (1_000.0, hi_cap)] {
        let mut pattern = [false; 16];
        for (i, p) in pattern.iter_mut().enumerate() {
            // Anchor every fourth step so no window of a track is silent.
            *p = i % 4 == 0 || rng.gen_bool(0.45);
        }
        voices.push(Voice {
            pattern,
            decay: rng.gen_range(0.02..0.12),
            center: lo * (hi / lo).powf(rng.gen::<f64>()),
            q: rng.gen_range(0.8..4.0),
            gain: rng.gen_range(0.5..1.0),
        });
    }

    let mut out = vec![0.0; n_samples];
    for v in &mut voices {
        let mut filter = Bandpass::new(v.center, v.q, sample_rate);
        let mut env = 0.0f64;
        let env_mul = (-1.0 / (v.decay * sample_rate as f64)).exp();
        for (i, o) in out.iter_mut().enumerate() {
            if step_len > 0 && i % step_len == 0 {
                let step = (i / step_len) % 16;
                if v.pattern[step] {
                    env = v.gain * rng.gen_range(0.7..1.0);
                }
            }
            let noise = rng.gen_range(-1.0..1.0);
            *o += filter.process(noise * env);
            env *= env_mul;
        }
    }
    out
}

/// Low-frequency tones with a per-track harmonic recipe and pitch loop.
fn render_bass(rng: &mut ChaCha8Rng, n_samples: usize, sample_rate: u32) -> Vec<f64> {
    let base_hz: f64 = 35.0 * (100.0f64 / 35.0).powf(rng.gen::<f64>());
    let scale = [0, 3, 5, 7, 10]; // semitone offsets
    let n_notes = 8;
    let notes: Vec<f64> = (0..n_notes)
        .map(|_| {
            let deg = scale[rng.gen_range(0..scale.len())];
            let octave = if rng.gen_bool(0.25) { 2.0 } else { 1.0 };
            base_hz * octave * 2.0f64.powf(deg as f64 / 12.0)
        })
        .collect();
    let note_s = rng.gen_range(0.3..0.6);
    let note_len = (note_s * sample_rate as f64).round() as usize;
    let weights: Vec<f64> = (0..4)
        .map(|h| rng.gen_range(0.2..1.0) / (h + 1) as f64)
        .collect();
    let decay = rng.gen_range(0.4..1.2);

    let mut out = vec![0.0; n_samples];
    let dt = 1.0 / sample_rate as f64;
    let mut phase = 0.0f64;
    for (i, o) in out.iter_mut().enumerate() {
        let note_idx = (i / note_len.max(1)) % n_notes;
        if i % note_len.max(1) == 0 {
            phase = 0.0;
        }
        let f0 = notes[note_idx];
        let t_in_note = (i % note_len.max(1)) as f64 * dt;
        let env = (-t_in_note / decay).exp();
        phase += 2.0 * PI * f0 * dt;
        let mut s = 0.0;
        for (h, w) in weights.iter().enumerate() {
            s += w * ((h + 1) as f64 * phase).sin();
        }
        *o = s * env;
    }
    out
}

/// Decaying harmonic chords with a per-track brightness rolloff.
fn render_piano(rng: &mut ChaCha8Rng, n_samples: usize, sample_rate: u32) -> Vec<f64> {
    let root_hz: f64 = 180.0 * (520.0f64 / 180.0).powf(rng.gen::<f64>());
    let minor = rng.gen_bool(0.5);
    let chord_offsets: [i32; 3] = if minor { [0, 3, 7] } else { [0, 4, 7] };
    let progression: Vec<i32> = (0..4).map(|_| rng.gen_range(-5..6)).collect();
    let chord_s = rng.gen_range(0.8..1.6);
    let chord_len = (chord_s * sample_rate as f64).round() as usize;
    let brightness = rng.gen_range(0.5..1.8);
    let decay = rng.gen_range(0.5..1.5);
    let n_harm = 6;

    let mut out = vec![0.0; n_samples];
    let dt = 1.0 / sample_rate as f64;
    for (i, o) in out.iter_mut().enumerate() {
        let chord_idx = (i / chord_len.max(1)) % progression.len();
        let t_in = (i % chord_len.max(1)) as f64 * dt;
        let env = (-t_in / decay).exp();
        let t_abs = i as f64 * dt;
        let mut s = 0.0;
        for off in chord_offsets {
            let f0 = root_hz * 2.0f64.powf((progression[chord_idx] + off) as f64 / 12.0);
            for h in 1..=n_harm {
                let amp = (h as f64).powf(-brightness);
                s += amp * (2.0 * PI * f0 * h as f64 * t_abs).sin();
            }
        }
        *o = s * env;
    }
    out
}

/// Karplus-Strong plucks over a per-track pitch set and damping.
fn render_guitar(rng: &mut ChaCha8Rng, n_samples: usize, sample_rate: u32) -> Vec<f64> {
    let base_hz: f64 = 110.0 * (330.0f64 / 110.0).powf(rng.gen::<f64>());
    let pitch_set: Vec<f64> = [0, 5, 7, 12]
        .iter()
        .map(|&st| base_hz * 2.0f64.powf(st as f64 / 12.0))
        .collect();
    let damping = rng.gen_range(0.990..0.9995);
    let pluck_s = rng.gen_range(0.25..0.7);
    let pluck_len = ((pluck_s * sample_rate as f64).round() as usize).max(1);

    let mut out = vec![0.0; n_samples];
    let mut buf: Vec<f64> = Vec::new();
    let mut ptr = 0usize;
    for (i, o) in out.iter_mut().enumerate() {
        if i % pluck_len == 0 {
            let f0 = pitch_set[rng.gen_range(0..pitch_set.len())];
            let len = ((sample_rate as f64 / f0).round() as usize).max(2);
            buf = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ptr = 0;
        }
        if buf.is_empty() {
            continue;
        }
        let next = (ptr + 1) % buf.len();
        let y = damping * 0.5 * (buf[ptr] + buf[next]);
        buf[ptr] = y;
        ptr = next;
        *o = y;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{segment_track, load_track, SegmentationConfig};

    fn read_all_stem_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
        let manifest = CorpusManifest::load(dir.join("manifest.json")).unwrap();
        let mut out = Vec::new();
        for track in &manifest.tracks {
            for rel in track.stems.values() {
                let p = manifest.resolve(rel);
                out.push((rel.clone(), fs::read(p).unwrap()));
            }
        }
        out.sort();
        out
    }

    #[test]
    fn same_spec_and_seed_reproduce_bytes() {
        let spec = SynthSpec {
            n_train_tracks: 2,
            n_test_tracks: 1,
            duration_s: 7.0,
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        synth_corpus(&spec, 7, d1.path(), 22_050).unwrap();
        synth_corpus(&spec, 7, d2.path(), 22_050).unwrap();
        let b1 = read_all_stem_bytes(d1.path());
        let b2 = read_all_stem_bytes(d2.path());
        assert_eq!(b1, b2);
        let m1 = fs::read(d1.path().join("manifest.json")).unwrap();
        let m2 = fs::read(d2.path().join("manifest.json")).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn track_and_file_counts() {
        let spec = SynthSpec {
            n_train_tracks: 3,
            n_test_tracks: 2,
            duration_s: 6.5,
        };
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_corpus(&spec, 1, dir.path(), 22_050).unwrap();
        assert_eq!(manifest.tracks.len(), 5);
        for track in &manifest.tracks {
            assert_eq!(track.stems.len(), 5);
        }
        assert_eq!(manifest.tracks_in_split(Split::Train).count(), 3);
        assert_eq!(manifest.tracks_in_split(Split::Test).count(), 2);
    }

    #[test]
    fn different_seeds_differ_in_every_stem() {
        let spec = SynthSpec {
            n_train_tracks: 2,
            n_test_tracks: 1,
            duration_s: 6.5,
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        synth_corpus(&spec, 1, d1.path(), 22_050).unwrap();
        synth_corpus(&spec, 2, d2.path(), 22_050).unwrap();
        let b1 = read_all_stem_bytes(d1.path());
        let b2 = read_all_stem_bytes(d2.path());
        assert_eq!(b1.len(), b2.len());
        for ((rel1, bytes1), (rel2, bytes2)) in b1.iter().zip(&b2) {
            assert_eq!(rel1, rel2);
            assert_ne!(bytes1, bytes2, "stem {} identical across seeds", rel1.display());
        }
    }

    #[test]
    fn every_stem_segments_without_silence_gaps() {
        let spec = SynthSpec {
            n_train_tracks: 1,
            n_test_tracks: 1,
            duration_s: 9.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_corpus(&spec, 3, dir.path(), 44_100).unwrap();
        let cfg = SegmentationConfig::default();
        for track in &manifest.tracks {
            for (role, rel) in &track.stems {
                let audio =
                    load_track(manifest.resolve(rel), 44_100, &track.id, *role).unwrap();
                let segs = segment_track(&audio, &cfg).unwrap();
                // 9 s with 50% overlap: all 5 windows should be loud.
                assert_eq!(segs.len(), 5, "track {} role {role}", track.id);
            }
        }
    }

    #[test]
    fn rejects_degenerate_spec() {
        let dir = tempfile::tempdir().unwrap();
        let bad = SynthSpec {
            n_train_tracks: 0,
            n_test_tracks: 1,
            duration_s: 10.0,
        };
        assert!(synth_corpus(&bad, 1, dir.path(), 44_100).is_err());
        let short = SynthSpec {
            n_train_tracks: 1,
            n_test_tracks: 1,
            duration_s: 4.0,
        };
        assert!(synth_corpus(&short, 1, dir.path(), 44_100).is_err());
    }
}
