//! Leave-one-out kNN track-ID accuracy: embed every test segment and check
//! whether its five nearest neighbors recover its track.
//!
//! ```bash
//! cargo run --release --example evaluate_knn
//! ```

use stemsim::corpus::{collect_split_segments, synth_corpus, Instrument, SegmentationConfig, Split, SynthSpec};
use stemsim::encoder::EncoderArch;
use stemsim::eval::{embed_corpus, knn_accuracy};
use stemsim::features::{log_mel_batch, FeatureConfig};
use stemsim::trainer::{train, TrainConfig};

fn main() -> stemsim::Result<()> {
    let out = std::env::temp_dir().join("stemsim-examples").join("knn");
    let spec = SynthSpec {
        n_train_tracks: 10,
        n_test_tracks: 6,
        duration_s: 15.0,
    };
    let manifest = synth_corpus(&spec, 21, &out, 22_050)?;

    let seg = SegmentationConfig::default();
    let feat = FeatureConfig {
        n_fft: 1024,
        hop: 1024,
        n_mels: 32,
        ..FeatureConfig::default()
    };
    let arch = EncoderArch::reduced(&[8, 16, 32], 16);
    let cfg = TrainConfig {
        epochs: 25,
        n_trials: 2,
        learning_rate: 1e-3,
        seed: 9,
        ..TrainConfig::default()
    };

    let role = Instrument::Drums;
    let models = train(&manifest, role, &seg, &feat, &arch, &cfg)?;

    let segments = collect_split_segments(&manifest, Split::Test, role, &seg.for_test())?;
    let mels = log_mel_batch(&segments, &feat, manifest.sample_rate)?;
    println!("{} test segments from {} tracks", mels.len(), spec.n_test_tracks);

    let mut accuracies = Vec::new();
    for model in &models {
        let index = embed_corpus(model, &mels)?;
        let accuracy = knn_accuracy(&index, 5)?;
        println!("trial {}: kNN(k=5) accuracy {:.4}", model.trial, accuracy);
        accuracies.push(accuracy);
    }
    let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    let variance = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
        / accuracies.len() as f64;
    println!("mean {mean:.4}, variance {variance:.2e} over {} trials", accuracies.len());
    Ok(())
}
