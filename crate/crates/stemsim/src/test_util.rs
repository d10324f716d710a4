//! Shared helpers for the crate's unit tests.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::{forward, EncoderParams};

/// Draws inputs from a seeded stream, keeping only those whose forward pass
/// stays away from the ReLU and normalization kinks. Central differences at
/// step h are only valid there: a gate flipping under the perturbation turns
/// the loss piecewise and poisons the estimate.
pub(crate) fn fd_safe_inputs(
    params: &EncoderParams,
    dims: (usize, usize),
    count: usize,
    kink_margin: f64,
    seed: u64,
) -> Vec<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        assert!(
            attempts < 10_000,
            "could not find kink-free inputs; architecture or margin unsuitable"
        );
        let input = Array2::from_shape_fn(dims, |_| rng.gen_range(-4.0..4.0));
        let (_, cache) = forward(params, &input).unwrap();
        if cache.min_abs_pre_activation() > kink_margin && cache.embedding_norm() > 0.3 {
            out.push(input);
        }
    }
    out
}
