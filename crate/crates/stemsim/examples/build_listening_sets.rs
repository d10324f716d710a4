//! Build listening sets for a perceptual study: per set, an anchor track, a
//! positive from the anchor's top-2 under the focused metric, and a
//! negative from the anchor's top-2 under the mix metric, redrawn whenever
//! the two candidate pools overlap.
//!
//! ```bash
//! cargo run --release --example build_listening_sets
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stemsim::corpus::{collect_split_segments, synth_corpus, Instrument, SegmentationConfig, Split, SynthSpec};
use stemsim::encoder::EncoderArch;
use stemsim::eval::{
    build_listening_sets, centroid_distance_matrix, embed_corpus, DistanceMatrix, ListeningConfig,
};
use stemsim::features::{log_mel_batch, FeatureConfig};
use stemsim::trainer::{train, TrainConfig};

fn metric(
    manifest: &stemsim::corpus::CorpusManifest,
    role: Instrument,
    seg: &SegmentationConfig,
    feat: &FeatureConfig,
    arch: &EncoderArch,
    cfg: &TrainConfig,
) -> stemsim::Result<DistanceMatrix> {
    let models = train(manifest, role, seg, feat, arch, cfg)?;
    let segments = collect_split_segments(manifest, Split::Test, role, &seg.for_test())?;
    let mels = log_mel_batch(&segments, feat, manifest.sample_rate)?;
    centroid_distance_matrix(&embed_corpus(&models[0], &mels)?)
}

fn main() -> stemsim::Result<()> {
    let out = std::env::temp_dir().join("stemsim-examples").join("listening");
    let spec = SynthSpec {
        n_train_tracks: 8,
        n_test_tracks: 8,
        duration_s: 12.0,
    };
    let manifest = synth_corpus(&spec, 55, &out, 22_050)?;

    let seg = SegmentationConfig::default();
    let feat = FeatureConfig {
        n_fft: 1024,
        hop: 1024,
        n_mels: 32,
        ..FeatureConfig::default()
    };
    let arch = EncoderArch::reduced(&[8, 16, 32], 16);
    let cfg = TrainConfig {
        epochs: 12,
        n_trials: 1,
        learning_rate: 1e-3,
        seed: 31,
        ..TrainConfig::default()
    };

    let drums = metric(&manifest, Instrument::Drums, &seg, &feat, &arch, &cfg)?;
    let mix = metric(&manifest, Instrument::Mix, &seg, &feat, &arch, &cfg)?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sets = build_listening_sets(
        &drums,
        &mix,
        Instrument::Drums,
        8,
        &mut rng,
        &ListeningConfig::default(),
    )?;
    println!("8 listening sets for the drums metric (negatives from the mix metric):");
    for (i, set) in sets.iter().enumerate() {
        println!(
            "  set {i}: anchor {}, positive {}, negative {}",
            set.anchor, set.positive, set.negative
        );
    }
    println!("the `listening-sets` subcommand also extracts 10 s snippet WAVs per member.");
    Ok(())
}
