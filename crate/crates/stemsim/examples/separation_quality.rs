//! Scale-invariant SDR: measure how well an estimated stem matches its
//! reference, independent of gain.
//!
//! ```bash
//! cargo run --release --example separation_quality
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stemsim::corpus::{compute_sdr, load_track, synth_corpus, Instrument, SynthSpec};

fn main() -> stemsim::Result<()> {
    let out = std::env::temp_dir().join("stemsim-examples").join("sdr");
    let spec = SynthSpec {
        n_train_tracks: 1,
        n_test_tracks: 1,
        duration_s: 8.0,
    };
    let manifest = synth_corpus(&spec, 77, &out, 22_050)?;
    let track = &manifest.tracks[0];

    let drums = load_track(
        manifest.resolve(&track.stems[&Instrument::Drums]),
        manifest.sample_rate,
        &track.id,
        Instrument::Drums,
    )?;
    let mix = load_track(
        manifest.resolve(&track.stems[&Instrument::Mix]),
        manifest.sample_rate,
        &track.id,
        Instrument::Mix,
    )?;

    // A perfect estimate, a rescaled one, the raw mix pretending to be the
    // stem, and increasingly noisy copies.
    println!("reference: the drums stem of {}", track.id);
    println!("  estimate = stem:        {:+8.2} dB", compute_sdr(&drums.samples, &drums.samples)?);
    let doubled: Vec<f64> = drums.samples.iter().map(|s| s * 2.0).collect();
    println!("  estimate = 2 x stem:    {:+8.2} dB (scale-invariant)", compute_sdr(&drums.samples, &doubled)?);
    println!("  estimate = full mix:    {:+8.2} dB", compute_sdr(&drums.samples, &mix.samples)?);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for snr in [20.0, 10.0, 0.0] {
        let ref_energy: f64 = drums.samples.iter().map(|s| s * s).sum();
        let mut noise: Vec<f64> = (0..drums.samples.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let noise_energy: f64 = noise.iter().map(|n| n * n).sum();
        let gain = (ref_energy / (10f64.powf(snr / 10.0) * noise_energy)).sqrt();
        noise.iter_mut().for_each(|n| *n *= gain);
        let noisy: Vec<f64> = drums.samples.iter().zip(&noise).map(|(s, n)| s + n).collect();
        println!(
            "  stem + noise at {snr:>4.0} dB: {:+8.2} dB",
            compute_sdr(&drums.samples, &noisy)?
        );
    }
    Ok(())
}
