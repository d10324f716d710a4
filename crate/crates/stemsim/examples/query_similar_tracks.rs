//! Similarity retrieval: given a query track, rank the other test tracks by
//! centroid cosine distance under one instrument's learned metric.
//!
//! ```bash
//! cargo run --release --example query_similar_tracks
//! ```

use stemsim::corpus::{collect_split_segments, synth_corpus, Instrument, SegmentationConfig, Split, SynthSpec};
use stemsim::encoder::EncoderArch;
use stemsim::eval::{centroid_distance_matrix, embed_corpus, query_similar, DistanceMatrix};
use stemsim::features::{log_mel_batch, FeatureConfig};
use stemsim::trainer::{train, TrainConfig};

fn main() -> stemsim::Result<()> {
    let out = std::env::temp_dir().join("stemsim-examples").join("query");
    let spec = SynthSpec {
        n_train_tracks: 8,
        n_test_tracks: 6,
        duration_s: 12.0,
    };
    let manifest = synth_corpus(&spec, 41, &out, 22_050)?;

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
        seed: 23,
        ..TrainConfig::default()
    };

    let role = Instrument::Guitar;
    let models = train(&manifest, role, &seg, &feat, &arch, &cfg)?;
    let segments = collect_split_segments(&manifest, Split::Test, role, &seg.for_test())?;
    let mels = log_mel_batch(&segments, &feat, manifest.sample_rate)?;
    let matrix: DistanceMatrix = centroid_distance_matrix(&embed_corpus(&models[0], &mels)?)?;

    let query = &matrix.ids[0];
    println!("tracks most similar to {query} under the {role} metric:");
    for (rank, (id, distance)) in query_similar(&matrix, query, 5)?.iter().enumerate() {
        println!("  {}. {id}  (cosine distance {distance:.4})", rank + 1);
    }
    Ok(())
}
