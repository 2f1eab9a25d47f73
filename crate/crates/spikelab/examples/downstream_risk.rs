//! Downstream evaluation of learned subspaces: closed-form regression excess
//! risk and Monte-Carlo classification risk with common random numbers.
//!
//! Run: `cargo run --release --example downstream_risk`

use spikelab::datagen::{
    gapped_noise_profile, sample_spiked, sample_uniform_orthobasis, Link, SpikedModel, TaskSpec,
};
use spikelab::metrics::{classification_risk, regression_excess_risk, sin_theta_f};
use spikelab::seed;
use spikelab::spectral::{masking_expectation_matrix, pca_matrix, representation_from};

fn main() -> spikelab::Result<()> {
    let (d, r, n) = (40, 5, 20_000);
    let u_star = sample_uniform_orthobasis(d, r, 1)?;
    let model = SpikedModel::new(u_star, 1.0, gapped_noise_profile(d, r, 2.0))?;
    let x = sample_spiked(&model, n, 2)?.x;

    let w_star = sample_uniform_orthobasis(r, 1, 3)?.column(0).into_owned();
    let task = TaskSpec::new(w_star, 0.2, Link::Logistic)?;

    println!("d={d}, r={r}, n={n}; downstream task with sigma_eps=0.2, logistic link\n");
    for (name, target) in [
        ("contrastive", masking_expectation_matrix(&x)?),
        ("pca", pca_matrix(&x)?),
    ] {
        let u = representation_from(&target, r)?.u;
        let dist = sin_theta_f(&u, model.u_star())?;
        let reg = regression_excess_risk(&u, &model, &task)?;
        let cls = classification_risk(&u, &model, &task, 200_000, seed::mix(9, &[1]))?;
        println!("{name:<12} sin-Θ_F = {dist:.4}");
        println!("             regression:     risk {:.4}, excess {:.4} (closed form)", reg.absolute_risk, reg.excess_risk);
        println!(
            "             classification: risk {:.4}, excess {:.4} ± {:.4} ({} MC samples)\n",
            cls.absolute_risk,
            cls.excess_risk,
            cls.stderr,
            cls.n_mc
        );
    }
    println!("the oracle subspace itself has excess 0 by construction:");
    let oracle = regression_excess_risk(model.u_star(), &model, &task)?;
    println!("u = U*        regression excess {:.1e}", oracle.excess_risk);
    Ok(())
}
