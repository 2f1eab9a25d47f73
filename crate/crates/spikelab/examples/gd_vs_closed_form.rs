//! The gradient-descent oracle: plain GD on the contrastive loss lands on
//! the same subspace as the closed-form eigensolver, and starting GD from
//! the closed form is immediately stationary.
//!
//! Run: `cargo run --release --example gd_vs_closed_form`

use spikelab::datagen::{all_masks, sample_spiked, sample_uniform_orthobasis, SpikedModel};
use spikelab::metrics::sin_theta_f;
use spikelab::optim::{
    closed_form_minimizer, default_step_size, loss_gradient, minimize, random_init, DataBundle,
    GdConfig, LossSpec, MaskPolicy,
};
use spikelab::spectral::representation_from_w;

fn main() -> spikelab::Result<()> {
    let (d, r, n) = (8, 2, 60);
    let u_star = sample_uniform_orthobasis(d, r, 11)?;
    let model = SpikedModel::new(u_star, 1.0, nalgebra::DVector::from_element(d, 0.5))?;
    let x = sample_spiked(&model, n, 12)?.x;

    // Fixed exhaustive masks make the empirical loss equal the expected one.
    let spec = LossSpec::selfcon(MaskPolicy::Fixed(all_masks(d)?));
    let data = DataBundle::SelfCon { x };

    let closed = closed_form_minimizer(&spec, &data, r)?;
    let grad_at_optimum = loss_gradient(&spec, &closed.w, &data)?;
    println!("closed form: singular values {:?}", closed.singular_values.as_slice());
    println!("gradient norm at the closed form: {:.2e}\n", grad_at_optimum.norm());

    let cfg = GdConfig {
        step_size: 10.0 * default_step_size(&spec, &data)?,
        max_iters: 20_000,
        grad_tol: 0.0,
        seed: 0,
    };
    let out = minimize(&spec, &data, &random_init(r, d, 13), &cfg)?;
    let trace = &out.loss_trace;
    println!("gradient descent from random init ({} iterations):", trace.len());
    for k in [0, 10, 100, 1000, trace.len() - 1] {
        println!("  iter {k:>5}: loss {:+.6}", trace[k]);
    }
    let gd_u = representation_from_w(&out.w)?.u;
    println!("\nsin-Θ_F(GD subspace, closed-form subspace) = {:.2e}", sin_theta_f(&gd_u, &closed.u)?);
    println!("sin-Θ_F(GD subspace, U*)                  = {:.4}", sin_theta_f(&gd_u, model.u_star())?);
    Ok(())
}
