//! Random masking in expectation: averaging the fixed-pair contrastive
//! target over all 2^d masks reproduces the closed-form masking target
//! exactly (up to floating point), and a Monte-Carlo average over random
//! masks converges to the same matrix.
//!
//! Run: `cargo run --release --example mask_expectation`

use nalgebra::DMatrix;
use spikelab::datagen::{all_masks, random_mask, sample_spiked, sample_uniform_orthobasis, SpikedModel};
use spikelab::spectral::{augmented_pair_matrix, masking_expectation_matrix};

fn main() -> spikelab::Result<()> {
    let (d, r, n) = (6, 2, 30);
    let u = sample_uniform_orthobasis(d, r, 5)?;
    let model = SpikedModel::new(u, 1.0, nalgebra::DVector::from_element(d, 1.0))?;
    let x = sample_spiked(&model, n, 6)?.x;

    let target = masking_expectation_matrix(&x)?;

    // Exhaustive enumeration: exact identity.
    let masks = all_masks(d)?;
    let mut acc = DMatrix::zeros(d, d);
    for mask in &masks {
        acc += augmented_pair_matrix(&mask.apply(&x), &mask.apply_complement(&x))?.matrix();
    }
    acc /= masks.len() as f64;
    let exact_err = (&acc * 2.0 - target.matrix()).norm();
    println!("all {} masks:   |2·mean − target|_F = {exact_err:.2e}", masks.len());

    // Monte-Carlo masks: 1/sqrt(k) convergence to the same target.
    let mut mc = DMatrix::zeros(d, d);
    for k in 1..=4096u64 {
        let mask = random_mask(d, k);
        mc += augmented_pair_matrix(&mask.apply(&x), &mask.apply_complement(&x))?.matrix();
        if k.is_power_of_two() && k >= 16 {
            let err = (&mc * (2.0 / k as f64) - target.matrix()).norm() / target.matrix().norm();
            println!("{k:>5} random masks: relative error {err:.3}");
        }
    }
    Ok(())
}
