//! Train one per-instrument encoder with the track-identity triplet loss
//! and watch the loss fall.
//!
//! ```bash
//! cargo run --release --example train_role
//! ```

use stemsim::corpus::{synth_corpus, Instrument, SegmentationConfig, SynthSpec};
use stemsim::encoder::EncoderArch;
use stemsim::features::FeatureConfig;
use stemsim::trainer::{train, TrainConfig};

fn main() -> stemsim::Result<()> {
    let out = std::env::temp_dir().join("stemsim-examples").join("train");
    let spec = SynthSpec {
        n_train_tracks: 8,
        n_test_tracks: 2,
        duration_s: 12.0,
    };
    let manifest = synth_corpus(&spec, 11, &out, 22_050)?;

    // A compact setup so the example finishes in seconds. The defaults
    // (4 conv blocks, 128 mels, 128-d embeddings, 150 epochs) are what a
    // real run would use.
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
        n_trials: 2,
        learning_rate: 1e-3,
        seed: 5,
        ..TrainConfig::default()
    };

    let models = train(&manifest, Instrument::Bass, &seg, &feat, &arch, &cfg)?;
    for model in &models {
        println!(
            "trial {}: {} epochs, loss {:.4} -> {:.4}",
            model.trial,
            model.loss_history.len(),
            model.loss_history[0],
            model.loss_history.last().unwrap()
        );
    }
    let run_dir = out.join("run").join("bass");
    stemsim::trainer::save_models(&run_dir, &models)?;
    println!("models and loss CSVs written to {}", run_dir.display());
    Ok(())
}
