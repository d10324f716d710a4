use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

/// Toy feature set: every track has a base pattern, segments are noisy
/// copies, so track identity is learnable.
fn toy_mels(
    tracks: usize,
    per_track: usize,
    dims: (usize, usize),
    seed: u64,
    noise: f64,
) -> Vec<MelSpectrogram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mels = Vec::new();
    for t in 0..tracks {
        let base = Array2::from_shape_fn(dims, |_| rng.gen_range(-1.0..1.0));
        for s in 0..per_track {
            let values = &base + &Array2::from_shape_fn(dims, |_| rng.gen_range(-noise..noise));
            mels.push(MelSpectrogram {
                track_id: format!("tr{t:02}"),
                instrument: Instrument::Drums,
                segment_index: s,
                values,
            });
        }
    }
    mels
}

fn quick_cfg(epochs: usize, trials: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        n_trials: trials,
        batch_size: 8,
        triplets_per_epoch: Some(24),
        learning_rate: 1e-3,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn full_loss_gradient_matches_finite_differences() {
    // Encoder + cosine distance + hinge on one triplet, reduced
    // architecture, h = 1e-3, double precision. Inputs are drawn from a
    // filtered stream so no ReLU gate sits within reach of the
    // finite-difference step, and the hinge must be comfortably active.
    let arch = EncoderArch::reduced(&[4, 8], 8);
    let params = init_params(&arch, 7).unwrap();
    let inputs = crate::test_util::fd_safe_inputs(&params, (12, 14), 3, 2e-2, 51);
    let mels: Vec<MelSpectrogram> = inputs
        .into_iter()
        .enumerate()
        .map(|(i, values)| MelSpectrogram {
            track_id: format!("tr{}", i / 2),
            instrument: Instrument::Drums,
            segment_index: i % 2,
            values,
        })
        .collect();
    let triplet = Triplet {
        anchor: 0,
        positive: 1,
        negative: 2,
    };
    let margin = 0.2;

    let loss_of = |p: &EncoderParams| {
        let e_a = crate::encoder::embed(p, &mels[triplet.anchor].values).unwrap();
        let e_p = crate::encoder::embed(p, &mels[triplet.positive].values).unwrap();
        let e_n = crate::encoder::embed(p, &mels[triplet.negative].values).unwrap();
        triplet_loss(1.0 - e_a.dot(&e_p), 1.0 - e_a.dot(&e_n), margin)
    };

    let (base_loss, grads) = triplet_forward_backward(&params, &mels, &triplet, margin).unwrap();
    assert!(
        base_loss > 0.05,
        "hinge must be comfortably active for the check, loss = {base_loss}"
    );
    let grads = grads.unwrap();

    let h = 1e-3;
    let mut max_rel = 0.0f64;
    let mut worst = (0usize, 0usize, 0.0f64, 0.0f64);
    let n_tensors = grads.flat_tensors().len();
    for t in 0..n_tensors {
        for i in 0..grads.flat_tensors()[t].len() {
            let mut plus = params.clone();
            plus.flat_tensors_mut()[t][i] += h;
            let mut minus = params.clone();
            minus.flat_tensors_mut()[t][i] -= h;
            let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let a = grads.flat_tensors()[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            if rel > max_rel {
                worst = (t, i, a, numeric);
            }
            max_rel = max_rel.max(rel);
        }
    }
    assert!(
        max_rel < 1e-3,
        "max relative error {max_rel} at tensor {} index {}: analytic {} vs numeric {}",
        worst.0,
        worst.1,
        worst.2,
        worst.3
    );
}

#[test]
fn training_is_deterministic() {
    let arch = EncoderArch::reduced(&[4, 8], 8);
    let mels = toy_mels(4, 3, (16, 20), 3, 0.3);
    let cfg = quick_cfg(3, 2, 11);
    let a = train_on_features(Instrument::Drums, &mels, &arch, &cfg).unwrap();
    let b = train_on_features(Instrument::Drums, &mels, &arch, &cfg).unwrap();
    for (ma, mb) in a.iter().zip(&b) {
        assert_eq!(ma.loss_history, mb.loss_history);
        assert_eq!(ma.params, mb.params);
    }
}

#[test]
fn trials_depend_only_on_their_derived_seed() {
    let arch = EncoderArch::reduced(&[4], 8);
    let mels = toy_mels(3, 3, (12, 16), 5, 0.3);
    let one = train_on_features(Instrument::Bass, &mels, &arch, &quick_cfg(2, 1, 31)).unwrap();
    let two = train_on_features(Instrument::Bass, &mels, &arch, &quick_cfg(2, 3, 31)).unwrap();
    assert_eq!(one[0].params, two[0].params);
    assert_eq!(one[0].loss_history, two[0].loss_history);
    assert_ne!(two[1].params, two[0].params);

    // A trial trained standalone at the shifted base seed matches the same
    // trial inside a longer run.
    let shifted = train_on_features(Instrument::Bass, &mels, &arch, &quick_cfg(2, 1, 32)).unwrap();
    assert_eq!(shifted[0].params, two[1].params);
}

#[test]
fn loss_decreases_on_learnable_toy_data() {
    let arch = EncoderArch::reduced(&[4, 8], 8);
    let mels = toy_mels(5, 4, (16, 20), 9, 0.2);
    let cfg = TrainConfig {
        epochs: 12,
        n_trials: 1,
        batch_size: 16,
        triplets_per_epoch: Some(64),
        learning_rate: 3e-3,
        seed: 2,
        ..TrainConfig::default()
    };
    let model = train_on_features(Instrument::Piano, &mels, &arch, &cfg)
        .unwrap()
        .remove(0);
    assert_eq!(model.loss_history.len(), 12);
    assert!(model.loss_history.iter().all(|&l| l >= 0.0));
    let first = model.loss_history[0];
    let last = *model.loss_history.last().unwrap();
    assert!(last < first, "loss did not decrease: {first} -> {last}");
}

#[test]
fn one_batch_run_takes_exactly_one_optimizer_step() {
    // epochs = 1, triplets_per_epoch = batch_size: the run must equal one
    // manual sample + gradient + Adam step, reproduced via the public API.
    let arch = EncoderArch::reduced(&[4], 8);
    let mels = toy_mels(3, 3, (12, 16), 21, 0.3);
    let cfg = TrainConfig {
        epochs: 1,
        n_trials: 1,
        batch_size: 64,
        triplets_per_epoch: Some(64),
        learning_rate: 1e-3,
        seed: 17,
        ..TrainConfig::default()
    };
    let trained = train_on_features(Instrument::Guitar, &mels, &arch, &cfg)
        .unwrap()
        .remove(0);
    assert_eq!(trained.loss_history.len(), 1);

    let ids: Vec<&str> = mels.iter().map(|m| m.track_id.as_str()).collect();
    let index = TripletIndex::new(&ids).unwrap();
    let mut params = init_params(&arch, 17).unwrap();
    let mut state = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(17 ^ 0x9E37_79B9_7F4A_7C15);
    let triplets = index.sample_batch(64, &mut rng);
    let (loss_sum, grads) = batch_forward_backward(&params, &mels, &triplets, cfg.margin).unwrap();
    adam_step(
        &mut params,
        &grads,
        &mut state,
        &AdamConfig {
            learning_rate: 1e-3,
            ..AdamConfig::default()
        },
    )
    .unwrap();

    assert_eq!(state.step_count(), 1);
    assert_eq!(trained.params, params);
    assert!((trained.loss_history[0] - loss_sum / 64.0).abs() < 1e-15);
}

#[test]
fn save_and_load_models_roundtrip() {
    let arch = EncoderArch::reduced(&[4], 8);
    let mels = toy_mels(3, 3, (12, 16), 25, 0.3);
    let models =
        train_on_features(Instrument::Mix, &mels, &arch, &quick_cfg(2, 2, 5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_models(dir.path(), &models).unwrap();
    let back = load_models(dir.path(), Instrument::Mix).unwrap();
    assert_eq!(back.len(), 2);
    for (orig, loaded) in models.iter().zip(&back) {
        assert_eq!(orig.params, loaded.params);
        for (a, b) in orig.loss_history.iter().zip(&loaded.loss_history) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
