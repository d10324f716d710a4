//! Validate the encoder's backpropagation against central finite
//! differences on a reduced architecture.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stemsim::encoder::{backward, embed, forward, init_params, EncoderArch};

fn main() -> stemsim::Result<()> {
    let arch = EncoderArch::reduced(&[4, 8], 8);
    let params = init_params(&arch, 29)?;
    let mut rng = ChaCha8Rng::seed_from_u64(23);

    // An input whose ReLU gates all sit away from zero, so the finite
    // difference stays on one smooth piece of the loss.
    let input = loop {
        let candidate = Array2::from_shape_fn((12, 14), |_| rng.gen_range(-4.0..4.0));
        let (_, cache) = forward(&params, &candidate)?;
        if cache.min_abs_pre_activation() > 2e-2 {
            break candidate;
        }
    };
    let direction = Array1::from_shape_fn(8, |_| rng.gen_range(-1.0..1.0));

    let (_, cache) = forward(&params, &input)?;
    let analytic = backward(&params, &cache, &direction)?;

    let h = 1e-3;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for t in 0..analytic.flat_tensors().len() {
        for i in 0..analytic.flat_tensors()[t].len() {
            let mut plus = params.clone();
            plus.flat_tensors_mut()[t][i] += h;
            let mut minus = params.clone();
            minus.flat_tensors_mut()[t][i] -= h;
            let numeric = (direction.dot(&embed(&plus, &input)?)
                - direction.dot(&embed(&minus, &input)?))
                / (2.0 * h);
            let a = analytic.flat_tensors()[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    println!("checked {checked} parameters with h = {h}");
    println!("max relative error: {worst:.3e} (tolerance 1e-3)");
    assert!(worst < 1e-3);
    println!("analytic backpropagation agrees with finite differences.");
    Ok(())
}
