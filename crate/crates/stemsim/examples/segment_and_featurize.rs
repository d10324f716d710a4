//! Cut one stem into overlapping segments and turn them into log-mel
//! spectrograms, the encoder's input representation.
//!
//! ```bash
//! cargo run --release --example segment_and_featurize
//! ```

use stemsim::corpus::{load_track, segment_track, synth_corpus, Instrument, SegmentationConfig, SynthSpec};
use stemsim::features::{log_mel_batch, FeatureConfig};

fn main() -> stemsim::Result<()> {
    let out = std::env::temp_dir().join("stemsim-examples").join("featurize");
    let spec = SynthSpec {
        n_train_tracks: 1,
        n_test_tracks: 1,
        duration_s: 12.0,
    };
    let manifest = synth_corpus(&spec, 3, &out, 22_050)?;

    let track = &manifest.tracks[0];
    let stem_path = manifest.resolve(&track.stems[&Instrument::Drums]);
    let audio = load_track(&stem_path, manifest.sample_rate, &track.id, Instrument::Drums)?;
    println!(
        "loaded {} ({:.1} s, {} samples)",
        stem_path.display(),
        audio.duration_seconds(),
        audio.samples.len()
    );

    let seg_cfg = SegmentationConfig::default(); // 3 s windows, 50% overlap
    let segments = segment_track(&audio, &seg_cfg)?;
    println!(
        "{} non-silent segments at offsets {:?} (hop {} samples)",
        segments.len(),
        segments.iter().map(|s| s.segment_index).collect::<Vec<_>>(),
        seg_cfg.hop_len(manifest.sample_rate)
    );

    let feat_cfg = FeatureConfig {
        n_mels: 64,
        ..FeatureConfig::default()
    };
    let mels = log_mel_batch(&segments, &feat_cfg, manifest.sample_rate)?;
    let first = &mels[0];
    let (lo, hi) = first.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    println!(
        "log-mel matrices: {} x {} per segment, value range [{lo:.2}, {hi:.2}]",
        first.values.nrows(),
        first.values.ncols()
    );
    Ok(())
}
