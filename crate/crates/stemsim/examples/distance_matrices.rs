//! Centroid distance matrices: average each test track's embeddings into a
//! centroid, take pairwise cosine distances, and export CSV plus a PGM
//! heatmap (darker = more similar).
//!
//! ```bash
//! cargo run --release --example distance_matrices
//! ```

use stemsim::corpus::{collect_split_segments, synth_corpus, Instrument, SegmentationConfig, Split, SynthSpec};
use stemsim::encoder::EncoderArch;
use stemsim::eval::{centroid_distance_matrix, embed_corpus, store, DistanceMatrix};
use stemsim::features::{log_mel_batch, FeatureConfig};
use stemsim::trainer::{train, TrainConfig};

fn main() -> stemsim::Result<()> {
    let out = std::env::temp_dir().join("stemsim-examples").join("distmat");
    let spec = SynthSpec {
        n_train_tracks: 8,
        n_test_tracks: 6,
        duration_s: 12.0,
    };
    let manifest = synth_corpus(&spec, 33, &out, 22_050)?;

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
        seed: 17,
        ..TrainConfig::default()
    };

    let role = Instrument::Piano;
    let models = train(&manifest, role, &seg, &feat, &arch, &cfg)?;
    let segments = collect_split_segments(&manifest, Split::Test, role, &seg.for_test())?;
    let mels = log_mel_batch(&segments, &feat, manifest.sample_rate)?;

    let per_trial: Vec<DistanceMatrix> = models
        .iter()
        .map(|m| centroid_distance_matrix(&embed_corpus(m, &mels)?))
        .collect::<stemsim::Result<_>>()?;
    let averaged = DistanceMatrix::average(&per_trial)?;

    println!("averaged {} x {} matrix over {} trials:", averaged.n(), averaged.n(), per_trial.len());
    print!("{:>10}", "");
    for id in &averaged.ids {
        print!(" {id:>9}");
    }
    println!();
    for (i, id) in averaged.ids.iter().enumerate() {
        print!("{id:>10}");
        for j in 0..averaged.n() {
            print!(" {:>9.4}", averaged.values[(i, j)]);
        }
        println!();
    }

    let csv = out.join("piano_distmat.csv");
    let pgm = out.join("piano_distmat.pgm");
    store::write_distance_matrix_csv(&csv, &averaged)?;
    store::write_distance_matrix_pgm(&pgm, &averaged)?;
    println!("written: {} and {}", csv.display(), pgm.display());
    Ok(())
}
