//! Feature recovery on the spiked covariance model: the diagonal-cancelling
//! contrastive solver against plain PCA (the linear autoencoder), as the
//! ambient dimension grows.
//!
//! Run: `cargo run --release --example feature_recovery`

use spikelab::datagen::{gapped_noise_profile, sample_spiked, sample_uniform_orthobasis, SpikedModel};
use spikelab::metrics::sin_theta_f;
use spikelab::seed;
use spikelab::spectral::{masking_expectation_matrix, pca_matrix, representation_from};

fn main() -> spikelab::Result<()> {
    let r = 5;
    let n = 20_000;
    let reps = 5;
    println!("spiked model: nu=1, sigma up to 2 (heteroskedastic), r={r}, n={n}, {reps} replicates");
    println!("{:<6} {:>12} {:>12} {:>10}", "d", "contrastive", "pca", "sqrt(r)");
    for d in [20usize, 40, 80] {
        let mut contrastive = 0.0;
        let mut pca = 0.0;
        for rep in 0..reps {
            let s = seed::mix(42, &[d as u64, rep]);
            let u_star = sample_uniform_orthobasis(d, r, seed::mix(s, &[0]))?;
            let model = SpikedModel::new(u_star, 1.0, gapped_noise_profile(d, r, 2.0))?;
            let x = sample_spiked(&model, n, seed::mix(s, &[1]))?.x;

            let u_cl = representation_from(&masking_expectation_matrix(&x)?, r)?.u;
            let u_ae = representation_from(&pca_matrix(&x)?, r)?.u;
            contrastive += sin_theta_f(&u_cl, model.u_star())?;
            pca += sin_theta_f(&u_ae, model.u_star())?;
        }
        println!(
            "{:<6} {:>12.4} {:>12.4} {:>10.3}",
            d,
            contrastive / reps as f64,
            pca / reps as f64,
            (r as f64).sqrt()
        );
    }
    println!("\ncontrastive error shrinks with d; PCA stays pinned to the noise subspace.");
    Ok(())
}
