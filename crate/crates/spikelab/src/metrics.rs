//! Evaluation quantities: sin-Θ subspace distances, incoherence, and
//! downstream excess risk for regression (closed form) and binary
//! classification (Monte Carlo with common random numbers).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::datagen::{check_orthonormal, SpikedModel, TaskSpec};
use crate::seed;
use crate::{Error, Result};

/// Which matrix norm a subspace distance was measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceNorm {
    Frobenius,
    Spectral,
}

/// A sin-Θ distance value; bounded by √r (Frobenius) or 1 (spectral).
#[derive(Debug, Clone, Copy)]
pub struct SubspaceDistance {
    pub value: f64,
    pub norm: SubspaceNorm,
}

/// Rotation-invariant distance between the column spaces of two orthonormal
/// d×r bases.
///
/// Frobenius: √(r − ‖U₁ᵀU₂‖_F²). Spectral: σ_max((I − U₁U₁ᵀ)U₂). Both agree
/// with the projector form ‖U₁U₁ᵀ − U₂U₂ᵀ‖_F/√2 (Frobenius case).
pub fn sin_theta(
    u1: &DMatrix<f64>,
    u2: &DMatrix<f64>,
    norm: SubspaceNorm,
) -> Result<SubspaceDistance> {
    if u1.shape() != u2.shape() {
        return Err(Error::Dimension(format!(
            "bases have different shapes: {:?} vs {:?}",
            u1.shape(),
            u2.shape()
        )));
    }
    check_orthonormal(u1, 1e-8)?;
    check_orthonormal(u2, 1e-8)?;
    let r = u1.ncols();
    let value = match norm {
        SubspaceNorm::Frobenius => {
            let overlap = (u1.transpose() * u2).norm_squared();
            (r as f64 - overlap).max(0.0).sqrt()
        }
        SubspaceNorm::Spectral => {
            let residual = u2 - u1 * (u1.transpose() * u2);
            residual.singular_values().amax().min(1.0)
        }
    };
    Ok(SubspaceDistance { value, norm })
}

/// Frobenius sin-Θ distance as a bare f64; the workhorse form.
pub fn sin_theta_f(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> Result<f64> {
    Ok(sin_theta(u1, u2, SubspaceNorm::Frobenius)?.value)
}

/// Incoherence constant I(U) = max_i ‖eᵢᵀU‖²: alignment of the subspace with
/// the coordinate axes. 1 is attained by canonical bases, r/d is the minimum.
pub fn incoherence(u: &DMatrix<f64>) -> Result<f64> {
    check_orthonormal(u, 1e-8)?;
    let mut best = 0.0f64;
    for i in 0..u.nrows() {
        best = best.max(u.row(i).norm_squared());
    }
    Ok(best)
}

/// Moment matrices of the probe problem: A = uᵀΣ_x u (r×r) and b = ν·uᵀU*w*.
fn probe_system(
    u: &DMatrix<f64>,
    model: &SpikedModel,
    task: &TaskSpec,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if u.nrows() != model.d() || u.ncols() != model.r() {
        return Err(Error::Dimension(format!(
            "basis is {}x{}, expected {}x{}",
            u.nrows(),
            u.ncols(),
            model.d(),
            model.r()
        )));
    }
    if task.w_star().len() != model.r() {
        return Err(Error::Dimension("task vector length must equal r".into()));
    }
    check_orthonormal(u, 1e-8)?;
    let nu = model.nu();
    let overlap = u.transpose() * model.u_star(); // r×r
    let mut a = (nu * nu) * &overlap * overlap.transpose();
    // + uᵀ diag(σ²) u
    let sigma2 = model.sigma().map(|s| s * s);
    let scaled = DMatrix::from_fn(model.d(), model.r(), |i, j| u[(i, j)] * sigma2[i]);
    a += u.transpose() * scaled;
    let b = nu * &overlap * task.w_star();
    Ok((a, b))
}

fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    match a.clone().cholesky() {
        Some(chol) => Ok(chol.solve(b)),
        None => Err(Error::Singular("probe system uᵀΣ_xu is not positive definite".into())),
    }
}

/// Population-optimal linear probe weight A⁻¹b on top of the frozen
/// representation uᵀx; minimizes squared-error risk over all probes.
pub fn optimal_probe_weight(
    u: &DMatrix<f64>,
    model: &SpikedModel,
    task: &TaskSpec,
) -> Result<DVector<f64>> {
    let (a, b) = probe_system(u, model, task)?;
    solve_spd(&a, &b)
}

/// A downstream risk evaluation. `stderr` and `n_mc` are zero for closed
/// forms; `excess_risk` is measured against the ground-truth basis U*.
#[derive(Debug, Clone, Copy)]
pub struct RiskReport {
    pub absolute_risk: f64,
    pub excess_risk: f64,
    pub stderr: f64,
    pub n_mc: usize,
}

/// Closed-form population regression risk of the optimal probe on `u`:
/// ‖w*‖² + σ_ε² − bᵀA⁻¹b, and its excess over the same probe on U*.
pub fn regression_excess_risk(
    u: &DMatrix<f64>,
    model: &SpikedModel,
    task: &TaskSpec,
) -> Result<RiskReport> {
    let absolute_risk = regression_risk_on(u, model, task)?;
    let baseline = regression_risk_on(model.u_star(), model, task)?;
    Ok(RiskReport { absolute_risk, excess_risk: absolute_risk - baseline, stderr: 0.0, n_mc: 0 })
}

fn regression_risk_on(u: &DMatrix<f64>, model: &SpikedModel, task: &TaskSpec) -> Result<f64> {
    let (a, b) = probe_system(u, model, task)?;
    let w = solve_spd(&a, &b)?;
    let se = task.sigma_eps();
    Ok(task.w_star().norm_squared() + se * se - b.dot(&w))
}

/// Monte-Carlo 0-1 risk of the sign classifier on the τ-maximizing probe
/// direction w ∝ (uᵀΣ_xu)⁻¹uᵀU*w*. The U* arm is evaluated on the same
/// sample stream (common random numbers), so `excess_risk` is exactly zero
/// when u = U* and has low variance otherwise.
pub fn classification_risk(
    u: &DMatrix<f64>,
    model: &SpikedModel,
    task: &TaskSpec,
    n_mc: usize,
    seed_value: u64,
) -> Result<RiskReport> {
    if n_mc < 10_000 {
        return Err(Error::Contract(format!(
            "classification risk needs n_mc >= 10000 Monte-Carlo samples, got {n_mc}"
        )));
    }
    if model.nu() == 0.0 {
        return Err(Error::Contract("binary response model requires nu > 0".into()));
    }
    // Only the direction matters: the classifier thresholds F at 1/2, i.e.
    // the sign of wᵀuᵀx.
    let w_u = optimal_probe_weight(u, model, task)?;
    let w_star_arm = optimal_probe_weight(model.u_star(), model, task)?;
    let v_u = u * w_u;
    let v_star = model.u_star() * w_star_arm;

    let (d, r) = (model.d(), model.r());
    let nu = model.nu();
    let sigma = model.sigma();
    let w_star = task.w_star();
    let link = task.link();

    let mut rng = seed::rng(seed_value);
    let mut err_u = 0u64;
    let mut err_star = 0u64;
    let mut disagree = 0u64;
    let mut z = DVector::zeros(r);
    let mut x = DVector::zeros(d);
    for _ in 0..n_mc {
        for i in 0..r {
            z[i] = nu * rng.sample::<f64, _>(StandardNormal);
        }
        for i in 0..d {
            x[i] = sigma[i] * rng.sample::<f64, _>(StandardNormal);
        }
        x += model.u_star() * &z;
        let p = link.eval(z.dot(w_star) / nu);
        let y = rng.random::<f64>() < p;
        let pred_u = v_u.dot(&x) >= 0.0;
        let pred_star = v_star.dot(&x) >= 0.0;
        err_u += (pred_u != y) as u64;
        err_star += (pred_star != y) as u64;
        disagree += (pred_u != pred_star) as u64;
    }
    let n = n_mc as f64;
    let risk_u = err_u as f64 / n;
    let risk_star = err_star as f64 / n;
    // The paired per-sample difference takes values in {-1, 0, 1} and is
    // nonzero exactly when the arms disagree, so E[diff²] = P(disagree).
    let mean_diff = risk_u - risk_star;
    let var = (disagree as f64 / n - mean_diff * mean_diff).max(0.0);
    let stderr = (var / n).sqrt();
    Ok(RiskReport { absolute_risk: risk_u, excess_risk: mean_diff, stderr, n_mc })
}
