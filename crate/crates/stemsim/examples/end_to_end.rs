//! The full pipeline at desk scale: synthesize a corpus, train encoders for
//! two instrument roles plus the mix, evaluate kNN accuracy, compare the
//! learned metrics, and run a similarity query.
//!
//! ```bash
//! cargo run --release --example end_to_end
//! ```

use std::collections::BTreeMap;

use stemsim::corpus::{collect_split_segments, synth_corpus, Instrument, SegmentationConfig, Split, SynthSpec};
use stemsim::encoder::EncoderArch;
use stemsim::eval::{
    centroid_distance_matrix, embed_corpus, knn_accuracy, pearson_upper, query_similar,
    spearman_avg, DistanceMatrix,
};
use stemsim::features::{log_mel_batch, FeatureConfig};
use stemsim::trainer::{train, TrainConfig};

fn main() -> stemsim::Result<()> {
    let out = std::env::temp_dir().join("stemsim-examples").join("end-to-end");
    println!("==> synthesizing corpus under {}", out.display());
    let spec = SynthSpec {
        n_train_tracks: 12,
        n_test_tracks: 6,
        duration_s: 20.0,
    };
    let manifest = synth_corpus(&spec, 4, &out, 22_050)?;
    println!(
        "    {} tracks x 5 stems at {} Hz",
        manifest.tracks.len(),
        manifest.sample_rate
    );

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
        seed: 7,
        ..TrainConfig::default()
    };

    let roles = [Instrument::Drums, Instrument::Bass, Instrument::Mix];
    let mut matrices: BTreeMap<Instrument, DistanceMatrix> = BTreeMap::new();
    for role in roles {
        println!("==> training {role} ({} trials x {} epochs)", cfg.n_trials, cfg.epochs);
        let models = train(&manifest, role, &seg, &feat, &arch, &cfg)?;

        let segments = collect_split_segments(&manifest, Split::Test, role, &seg.for_test())?;
        let mels = log_mel_batch(&segments, &feat, manifest.sample_rate)?;
        let mut accuracies = Vec::new();
        let mut per_trial = Vec::new();
        for model in &models {
            let index = embed_corpus(model, &mels)?;
            accuracies.push(knn_accuracy(&index, 5)?);
            per_trial.push(centroid_distance_matrix(&index)?);
        }
        let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
        let per_trial_str: Vec<String> =
            accuracies.iter().map(|a| format!("{a:.4}")).collect();
        println!(
            "    kNN(k=5) accuracy mean {mean:.4} (per trial [{}])",
            per_trial_str.join(", ")
        );
        matrices.insert(role, DistanceMatrix::average(&per_trial)?);
    }

    println!("==> cross-metric agreement (near zero = unique metrics)");
    let pairs = [
        (Instrument::Drums, Instrument::Bass),
        (Instrument::Drums, Instrument::Mix),
        (Instrument::Bass, Instrument::Mix),
    ];
    for (a, b) in pairs {
        println!(
            "    {a:>6} vs {b:<6} pearson {:+.4}  spearman {:+.4}",
            pearson_upper(&matrices[&a], &matrices[&b])?,
            spearman_avg(&matrices[&a], &matrices[&b])?
        );
    }

    let drums = &matrices[&Instrument::Drums];
    let query = &drums.ids[0];
    println!("==> tracks with the most similar drums to {query}");
    for (rank, (id, d)) in query_similar(drums, query, 3)?.iter().enumerate() {
        println!("    {}. {id} (distance {d:.4})", rank + 1);
    }
    Ok(())
}
