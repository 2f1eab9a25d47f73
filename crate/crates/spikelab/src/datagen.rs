//! Seeded generative models: spiked covariance data, Gaussian mixtures,
//! random masking augmentations, and labeled regression tasks.
//!
//! Samplers return latents alongside observations so tests can compare
//! against ground truth. All operations are pure given `(inputs, seed)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::seed;
use crate::{Error, Result};

/// The generative triple (U*, ν, Σ) of the spiked covariance model
/// x = U*z + ξ with Cov(z) = ν²I_r and Cov(ξ) = diag(σ₁², …, σ_d²).
#[derive(Debug, Clone)]
pub struct SpikedModel {
    u_star: DMatrix<f64>,
    nu: f64,
    sigma: DVector<f64>,
}

impl SpikedModel {
    /// Builds a model, checking `u_star` is d×r orthonormal (to 1e-12
    /// entrywise) with r < d, and that ν and every σᵢ are finite and
    /// non-negative.
    ///
    /// Zero scales are accepted so degenerate cases (noiseless, signal-free)
    /// stay constructible; [`SpikedModel::kappa`] and [`SpikedModel::rho`]
    /// are finite and positive only when ν > 0 and every σᵢ > 0.
    pub fn new(u_star: DMatrix<f64>, nu: f64, sigma: DVector<f64>) -> Result<Self> {
        let (d, r) = u_star.shape();
        if r == 0 || r >= d {
            return Err(Error::Dimension(format!(
                "spiked model requires 1 <= r < d, got d={d}, r={r}"
            )));
        }
        if sigma.len() != d {
            return Err(Error::Dimension(format!(
                "sigma has {} entries, expected d={d}",
                sigma.len()
            )));
        }
        check_orthonormal(&u_star, 1e-12)?;
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::Contract(format!("nu must be finite and >= 0, got {nu}")));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Contract("sigma entries must be finite and >= 0".into()));
        }
        Ok(Self { u_star, nu, sigma })
    }

    pub fn u_star(&self) -> &DMatrix<f64> {
        &self.u_star
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Noise standard deviations σ₁, …, σ_d.
    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn d(&self) -> usize {
        self.u_star.nrows()
    }

    pub fn r(&self) -> usize {
        self.u_star.ncols()
    }

    /// Condition number κ = σ₍₁₎²/σ₍d₎² of the noise covariance
    /// (largest over smallest variance). Infinite when some σᵢ = 0.
    pub fn kappa(&self) -> f64 {
        let max = self.sigma.iter().cloned().fold(0.0f64, f64::max);
        let min = self.sigma.iter().cloned().fold(f64::INFINITY, f64::min);
        (max * max) / (min * min)
    }

    /// Signal-to-noise ratio ρ = ν/σ₍₁₎. Infinite when all σᵢ = 0.
    pub fn rho(&self) -> f64 {
        let max = self.sigma.iter().cloned().fold(0.0f64, f64::max);
        self.nu / max
    }

    /// Population covariance Σ_x = ν²U*U*ᵀ + diag(σ²).
    pub fn covariance(&self) -> DMatrix<f64> {
        let mut cov = (self.nu * self.nu) * &self.u_star * self.u_star.transpose();
        for i in 0..self.d() {
            cov[(i, i)] += self.sigma[i] * self.sigma[i];
        }
        cov
    }
}

/// One draw from a spiked model: observations together with the latent
/// coordinates and noise that produced them. `x == u_star * z + xi` holds
/// bit-exactly because `x` is assembled from the other two fields.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub xi: DMatrix<f64>,
    pub seed: u64,
}

/// Diagonal 0/1 masking matrix A; the two augmentation views are
/// g₁(x) = Ax and g₂(x) = (I−A)x.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagMask {
    bits: Vec<bool>,
}

impl DiagMask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn d(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// The complementary mask I−A.
    pub fn complement(&self) -> Self {
        Self { bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Ax: zeroes every coordinate (row) whose bit is 0.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.bits.len(), "mask/data dimension mismatch");
        let mut out = x.clone();
        for (i, &bit) in self.bits.iter().enumerate() {
            if !bit {
                out.row_mut(i).fill(0.0);
            }
        }
        out
    }

    /// (I−A)x.
    pub fn apply_complement(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.complement().apply(x)
    }
}

/// Draws a Haar-distributed d×r orthonormal basis by orthonormalizing a
/// standard Gaussian matrix and fixing the sign of the triangular factor's
/// diagonal, so the result is deterministic per seed.
///
/// r = d is allowed and yields a full orthogonal matrix.
pub fn sample_uniform_orthobasis(d: usize, r: usize, seed: u64) -> Result<DMatrix<f64>> {
    if d == 0 || r == 0 || r > d {
        return Err(Error::Dimension(format!(
            "orthobasis requires 1 <= r <= d, got d={d}, r={r}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut g = DMatrix::zeros(d, r);
    for j in 0..r {
        for i in 0..d {
            g[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let qr = g.qr();
    let rmat = qr.r();
    let mut q = qr.q();
    // Positive diagonal of R makes the factorization (and thus Q) unique.
    for j in 0..r {
        if rmat[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Samples n columns x = U*z + ξ with z ~ N(0, ν²I_r) and ξ ~ N(0, diag(σ²)),
/// deterministic given the seed. Latent draw order: all of `z`
/// (column-major), then all of `xi`.
pub fn sample_spiked(model: &SpikedModel, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::Dimension("sample_spiked requires n >= 1".into()));
    }
    let (d, r) = (model.d(), model.r());
    let mut rng = seed::rng(seed);
    let mut z = DMatrix::zeros(r, n);
    for j in 0..n {
        for i in 0..r {
            z[(i, j)] = model.nu * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let mut xi = DMatrix::zeros(d, n);
    for j in 0..n {
        for i in 0..d {
            xi[(i, j)] = model.sigma[i] * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let x = &model.u_star * &z + &xi;
    Ok(SampleBatch { x, z, xi, seed })
}

/// Gaussian mixture with K classes, class means μ_k, diagonal covariances
/// and sampling probabilities. Means must share a common norm √r·ν (r = K−1),
/// sum to zero under the class probabilities, and span an r-dimensional space.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    means: Vec<DVector<f64>>,
    covs: Vec<DVector<f64>>,
    probs: Vec<f64>,
}

impl MixtureModel {
    /// Validates the identifiability constraints:
    /// Σ_k p_k μ_k = 0 and ‖μ_k‖ = √r·ν to 1e-10, λ_r(Σ_k p_k μ_k μ_kᵀ) > 0.
    ///
    /// `covs` holds per-class diagonal variances (σ²), not standard deviations.
    pub fn new(
        means: Vec<DVector<f64>>,
        covs: Vec<DVector<f64>>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let k = means.len();
        if k < 2 {
            return Err(Error::Dimension("mixture needs at least 2 classes".into()));
        }
        if covs.len() != k || probs.len() != k {
            return Err(Error::Dimension(format!(
                "means/covs/probs length mismatch: {k}/{}/{}",
                covs.len(),
                probs.len()
            )));
        }
        let d = means[0].len();
        if means.iter().any(|m| m.len() != d) || covs.iter().any(|c| c.len() != d) {
            return Err(Error::Dimension("all means/covs must share the dimension d".into()));
        }
        if probs.iter().any(|p| *p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::Contract("probs must be non-negative and sum to 1".into()));
        }
        if covs.iter().any(|c| c.iter().any(|v| *v < 0.0 || !v.is_finite())) {
            return Err(Error::Contract("variances must be finite and >= 0".into()));
        }

        let r = k - 1;
        let nu = means[0].norm() / (r as f64).sqrt();
        for m in &means {
            if (m.norm() - (r as f64).sqrt() * nu).abs() > 1e-10 {
                return Err(Error::Contract(
                    "all class means must share the norm sqrt(r)*nu".into(),
                ));
            }
        }
        let mut centroid = DVector::zeros(d);
        for (m, p) in means.iter().zip(&probs) {
            centroid += m * *p;
        }
        if centroid.amax() > 1e-10 {
            return Err(Error::Contract(format!(
                "weighted mean of class means must vanish (max abs {:.2e})",
                centroid.amax()
            )));
        }
        // rank-r condition via singular values of [√p_1 μ_1, ..., √p_K μ_K]
        let mut weighted = DMatrix::zeros(d, k);
        for (j, (m, p)) in means.iter().zip(&probs).enumerate() {
            weighted.set_column(j, &(m * p.sqrt()));
        }
        let sv = weighted.singular_values();
        if (sv.len() < r) || sv[r - 1] * sv[r - 1] <= 0.0 {
            return Err(Error::Contract("class means must span an r-dimensional space".into()));
        }
        Ok(Self { means, covs, probs })
    }

    /// Balanced mixture whose means are regular-simplex vertices rotated into
    /// a Haar-random r-dimensional subspace of R^d, scaled so ‖μ_k‖ = √r·ν.
    /// All classes share the diagonal noise `sigma` (standard deviations).
    ///
    /// With equal probabilities this construction yields
    /// Σ_k p_k μ_k μ_kᵀ = ν²U*U*ᵀ exactly; the returned basis is that U*.
    pub fn simplex(
        d: usize,
        r: usize,
        nu: f64,
        sigma: &DVector<f64>,
        seed: u64,
    ) -> Result<(Self, DMatrix<f64>)> {
        if r == 0 || r >= d {
            return Err(Error::Dimension(format!(
                "simplex mixture requires 1 <= r < d, got d={d}, r={r}"
            )));
        }
        if sigma.len() != d {
            return Err(Error::Dimension("sigma length must equal d".into()));
        }
        let k = r + 1;
        // Centered canonical vertices e_j − (1/K)1 in R^K span an r-dim space.
        let mut centered = DMatrix::zeros(k, k);
        for j in 0..k {
            for i in 0..k {
                centered[(i, j)] = if i == j { 1.0 } else { 0.0 } - 1.0 / k as f64;
            }
        }
        let basis = centered.columns(0, r).into_owned().qr().q(); // K×r
        let scale = (r as f64).sqrt() * nu / (1.0 - 1.0 / k as f64).sqrt();
        let u_star = sample_uniform_orthobasis(d, r, seed)?;
        let mut means: Vec<DVector<f64>> = (0..k)
            .map(|j| {
                let v = basis.transpose() * centered.column(j); // r-vector, norm √(1−1/K)
                &u_star * (v * scale)
            })
            .collect();
        // Push the empirical centroid to machine zero.
        let mut centroid = DVector::zeros(d);
        for m in &means {
            centroid += m;
        }
        centroid /= k as f64;
        for m in &mut means {
            *m -= &centroid;
        }
        let covs = vec![sigma.map(|s| s * s); k];
        let probs = vec![1.0 / k as f64; k];
        Ok((Self::new(means, covs, probs)?, u_star))
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn d(&self) -> usize {
        self.means[0].len()
    }

    /// Latent rank r = K − 1.
    pub fn r(&self) -> usize {
        self.k() - 1
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covs(&self) -> &[DVector<f64>] {
        &self.covs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Samples drawn class by class: block k holds `counts[k]` columns from
/// N(μ_k, diag(cov_k)), with labels aligned to columns.
#[derive(Debug, Clone)]
pub struct LabeledBatch {
    pub x: DMatrix<f64>,
    pub labels: Vec<usize>,
}

/// Draws `counts[k]` samples from class k, in class order.
pub fn sample_mixture(gmm: &MixtureModel, counts: &[usize], seed: u64) -> Result<LabeledBatch> {
    if counts.len() != gmm.k() {
        return Err(Error::Dimension(format!(
            "counts has {} entries, expected K={}",
            counts.len(),
            gmm.k()
        )));
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Dimension("at least one class count must be positive".into()));
    }
    let d = gmm.d();
    let mut rng = seed::rng(seed);
    let mut x = DMatrix::zeros(d, total);
    let mut labels = Vec::with_capacity(total);
    let mut col = 0;
    for (k, &n_k) in counts.iter().enumerate() {
        let std: DVector<f64> = gmm.covs[k].map(f64::sqrt);
        for _ in 0..n_k {
            for i in 0..d {
                x[(i, col)] = gmm.means[k][i] + std[i] * rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(k);
            col += 1;
        }
    }
    Ok(LabeledBatch { x, labels })
}

/// Monotone link for the binary response model, satisfying F(−u) = 1 − F(u).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Logistic,
    Probit,
}

impl Link {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Link::Logistic => 1.0 / (1.0 + (-u).exp()),
            // Φ(u) = erfc(−u/√2)/2
            Link::Probit => 0.5 * libm::erfc(-u / std::f64::consts::SQRT_2),
        }
    }
}

/// A downstream task: unit coefficient vector w*, regression noise level and
/// classification link.
#[derive(Debug, Clone)]
pub struct TaskSpec {
    w_star: DVector<f64>,
    sigma_eps: f64,
    link: Link,
}

impl TaskSpec {
    /// Rejects non-unit w* (to 1e-12) rather than normalizing silently.
    pub fn new(w_star: DVector<f64>, sigma_eps: f64, link: Link) -> Result<Self> {
        if (w_star.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!(
                "w_star must be a unit vector, got norm {:.12}",
                w_star.norm()
            )));
        }
        if !sigma_eps.is_finite() || sigma_eps < 0.0 {
            return Err(Error::Contract("sigma_eps must be finite and >= 0".into()));
        }
        Ok(Self { w_star, sigma_eps, link })
    }

    pub fn w_star(&self) -> &DVector<f64> {
        &self.w_star
    }

    pub fn sigma_eps(&self) -> f64 {
        self.sigma_eps
    }

    pub fn link(&self) -> Link {
        self.link
    }
}

/// A labeled source task: m observations with noiseless labels
/// y_i = ⟨w_t, z_i⟩/ν and the latents that generated them.
#[derive(Debug, Clone)]
pub struct RegressionTask {
    pub x_hat: DMatrix<f64>,
    pub y: DVector<f64>,
    pub z_hat: DMatrix<f64>,
}

/// Draws a labeled batch for one source task with unit task vector `w_t`.
pub fn sample_regression_task(
    model: &SpikedModel,
    w_t: &DVector<f64>,
    m: usize,
    seed: u64,
) -> Result<RegressionTask> {
    if w_t.len() != model.r() {
        return Err(Error::Dimension(format!(
            "task vector has {} entries, expected r={}",
            w_t.len(),
            model.r()
        )));
    }
    if (w_t.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Contract("task vector w_t must be a unit vector".into()));
    }
    if model.nu() == 0.0 {
        return Err(Error::Contract("labels y = <w, z>/nu require nu > 0".into()));
    }
    let batch = sample_spiked(model, m, seed)?;
    let y = (batch.z.transpose() * w_t) / model.nu();
    Ok(RegressionTask { x_hat: batch.x, y, z_hat: batch.z })
}

/// Draws a Bernoulli(1/2) diagonal mask of size d.
pub fn random_mask(d: usize, seed: u64) -> DiagMask {
    let mut rng = seed::rng(seed);
    DiagMask::new((0..d).map(|_| rng.random_bool(0.5)).collect())
}

/// All 2^d masks in integer order (bit i of the index is coordinate i).
/// Intended for exhaustive-expectation checks at small d.
pub fn all_masks(d: usize) -> Result<Vec<DiagMask>> {
    if d == 0 || d > 20 {
        return Err(Error::Dimension(format!("all_masks supports 1 <= d <= 20, got {d}")));
    }
    Ok((0u32..1 << d)
        .map(|pattern| DiagMask::new((0..d).map(|i| pattern >> i & 1 == 1).collect()))
        .collect())
}

/// Noise standard deviations linearly spaced from `sigma_max` down to
/// `sigma_max / 2`: all distinct, σ₍₁₎ = sigma_max, condition number κ = 4.
pub fn linear_noise_profile(d: usize, sigma_max: f64) -> DVector<f64> {
    if d == 1 {
        return DVector::from_element(1, sigma_max);
    }
    DVector::from_fn(d, |i, _| sigma_max * (1.0 - 0.5 * i as f64 / (d - 1) as f64))
}

/// The harness's default heteroskedastic profile: a head of min(2r, d/2)
/// coordinates with large, well-separated levels (σ_max down to 0.75·σ_max)
/// over a quiet bulk (0.2·σ_max down to 0.15·σ_max). All levels are
/// distinct, and the top-r noise gaps stay comparable to σ_max², which is
/// the regime where plain PCA provably locks onto noise coordinates while
/// diagonal-cancelling contrast does not.
pub fn gapped_noise_profile(d: usize, r: usize, sigma_max: f64) -> DVector<f64> {
    let head = (2 * r).min(d / 2).max(1);
    DVector::from_fn(d, |i, _| {
        if i < head {
            let t = if head > 1 { i as f64 / (head - 1) as f64 } else { 0.0 };
            sigma_max * (1.0 - 0.25 * t)
        } else {
            let bulk = d - head;
            let t = if bulk > 1 { (i - head) as f64 / (bulk - 1) as f64 } else { 0.0 };
            sigma_max * (0.2 - 0.05 * t)
        }
    })
}

pub(crate) fn check_orthonormal(u: &DMatrix<f64>, tol: f64) -> Result<()> {
    let gram = u.transpose() * u;
    let mut dev = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    if dev > tol {
        return Err(Error::Contract(format!(
            "matrix is not orthonormal: max |UᵀU - I| = {dev:.3e} exceeds {tol:.0e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};

    fn hash_matrix(m: &DMatrix<f64>) -> u64 {
        let mut h = DefaultHasher::new();
        for v in m.iter() {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    #[test]
    fn orthobasis_square_case_is_orthogonal() {
        let u = sample_uniform_orthobasis(3, 3, 42).unwrap();
        let gram = u.transpose() * &u;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthobasis_rejects_bad_dims() {
        assert!(sample_uniform_orthobasis(3, 4, 0).is_err());
        assert!(sample_uniform_orthobasis(0, 0, 0).is_err());
        assert!(sample_uniform_orthobasis(3, 0, 0).is_err());
    }

    #[test]
    fn orthobasis_first_coordinate_is_symmetric() {
        // Monte-Carlo symmetry oracle: for d=2, r=1 the mean of the first
        // coordinate over many seeds must be 0 up to 3 sigma_MC (the
        // coordinate of a uniform unit vector has variance 1/2).
        let trials = 100_000u64;
        let mut sum = 0.0;
        for s in 0..trials {
            sum += sample_uniform_orthobasis(2, 1, s).unwrap()[(0, 0)];
        }
        let mean = sum / trials as f64;
        let sigma_mc = (0.5 / trials as f64).sqrt();
        assert!(
            mean.abs() < 3.0 * sigma_mc,
            "mean {mean:.5} exceeds 3 sigma_MC {:.5}",
            3.0 * sigma_mc
        );
    }

    #[test]
    fn spiked_degenerate_scales_give_zero_data() {
        let u = sample_uniform_orthobasis(4, 2, 1).unwrap();
        let model = SpikedModel::new(u, 0.0, DVector::zeros(4)).unwrap();
        let batch = sample_spiked(&model, 10, 3).unwrap();
        assert_eq!(batch.x, DMatrix::zeros(4, 10));
    }

    #[test]
    fn spiked_noiseless_stays_in_signal_subspace() {
        let u = sample_uniform_orthobasis(6, 2, 5).unwrap();
        let model = SpikedModel::new(u.clone(), 1.3, DVector::zeros(6)).unwrap();
        let batch = sample_spiked(&model, 50, 9).unwrap();
        let residual = &batch.x - &u * (u.transpose() * &batch.x);
        assert!(residual.norm() < 1e-12);
    }

    #[test]
    fn spiked_reconstruction_identity_is_exact() {
        let u = sample_uniform_orthobasis(5, 2, 11).unwrap();
        let model =
            SpikedModel::new(u.clone(), 0.7, DVector::from_element(5, 0.9)).unwrap();
        let batch = sample_spiked(&model, 17, 13).unwrap();
        assert_eq!(batch.x, &u * &batch.z + &batch.xi);
    }

    #[test]
    fn spiked_covariance_concentrates() {
        // Empirical-covariance oracle: d=10, r=2, nu=1, sigma=1. The sample
        // covariance approaches U*U*ᵀ + I at the sqrt(d/n) rate; every
        // replicate must stay below 10·σ₍₁₎²·sqrt(d/n).
        for (n, reps) in [(10_000usize, 20u64), (100_000, 2)] {
            let bound = 10.0 * (10.0 / n as f64).sqrt();
            for rep in 0..reps {
                let u = sample_uniform_orthobasis(10, 2, seed::mix(21, &[rep])).unwrap();
                let model =
                    SpikedModel::new(u, 1.0, DVector::from_element(10, 1.0)).unwrap();
                let batch = sample_spiked(&model, n, seed::mix(23, &[rep])).unwrap();
                let emp = &batch.x * batch.x.transpose() / n as f64;
                let diff = emp - model.covariance();
                let err = diff.symmetric_eigenvalues().amax();
                assert!(err < bound, "n={n} rep={rep}: spectral error {err:.4} > {bound:.4}");
            }
        }
    }

    #[test]
    fn identical_seeds_reproduce_batches() {
        let u = sample_uniform_orthobasis(6, 2, 1).unwrap();
        let model = SpikedModel::new(u, 1.0, DVector::from_element(6, 2.0)).unwrap();
        let a = sample_spiked(&model, 40, 77).unwrap();
        let b = sample_spiked(&model, 40, 77).unwrap();
        let c = sample_spiked(&model, 40, 78).unwrap();
        assert_eq!(hash_matrix(&a.x), hash_matrix(&b.x));
        assert_ne!(hash_matrix(&a.x), hash_matrix(&c.x));
    }

    #[test]
    fn mixture_zero_covariance_repeats_means() {
        let sigma = DVector::zeros(5);
        let (gmm, _) = MixtureModel::simplex(5, 2, 1.0, &sigma, 3).unwrap();
        let batch = sample_mixture(&gmm, &[3, 2, 4], 5).unwrap();
        for (col, &label) in batch.labels.iter().enumerate() {
            assert_eq!(batch.x.column(col), gmm.means()[label].column(0));
        }
    }

    #[test]
    fn mixture_per_class_means_concentrate() {
        let sigma = DVector::from_element(6, 1.5);
        let (gmm, _) = MixtureModel::simplex(6, 2, 1.0, &sigma, 7).unwrap();
        let per_class = 33_334; // ~1e5 total over 3 classes
        let batch = sample_mixture(&gmm, &[per_class; 3], 9).unwrap();
        // The identifiability constraint Σ p_k μ_k = 0 forces the pooled
        // empirical mean toward zero as n grows.
        let pooled = batch.x.column_mean();
        assert!(pooled.norm() < 5.0 * 1.5 * (6.0 / (3.0 * per_class as f64)).sqrt());
        let tol = 5.0 * 1.5 / (per_class as f64).sqrt();
        for k in 0..3 {
            let cols: Vec<usize> = batch
                .labels
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == k)
                .map(|(i, _)| i)
                .collect();
            let mut mean = DVector::zeros(6);
            for &c in &cols {
                mean += batch.x.column(c);
            }
            mean /= cols.len() as f64;
            assert!((mean - &gmm.means()[k]).norm() < tol);
        }
    }

    #[test]
    fn mixture_invariants_hold_for_simplex() {
        let sigma = DVector::from_element(8, 2.0);
        let (gmm, u_star) = MixtureModel::simplex(8, 3, 1.4, &sigma, 11).unwrap();
        // Λ = Σ p_k μ_k μ_kᵀ equals ν² U*U*ᵀ for the balanced simplex.
        let mut lambda = DMatrix::zeros(8, 8);
        for (m, p) in gmm.means().iter().zip(gmm.probs()) {
            lambda += m * m.transpose() * *p;
        }
        let target = 1.4f64.powi(2) * &u_star * u_star.transpose();
        assert!((lambda - target).amax() < 1e-10);
    }

    #[test]
    fn mixture_rejects_unbalanced_norms() {
        let means = vec![
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![-0.5, 0.0]),
        ];
        let covs = vec![DVector::zeros(2), DVector::zeros(2)];
        let err = MixtureModel::new(means, covs, vec![1.0 / 3.0, 2.0 / 3.0]);
        assert!(err.is_err());
    }

    #[test]
    fn regression_task_matches_latents() {
        let u = sample_uniform_orthobasis(6, 3, 2).unwrap();
        let model = SpikedModel::new(u, 2.0, DVector::from_element(6, 1.0)).unwrap();
        // w_t = e1 ⇒ y equals the first latent row divided by nu.
        let w = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let task = sample_regression_task(&model, &w, 25, 5).unwrap();
        for i in 0..25 {
            assert_eq!(task.y[i], task.z_hat[(0, i)] / 2.0);
        }
    }

    #[test]
    fn regression_task_variance_is_unit() {
        // Var(y) = 1 regardless of nu, since y = <w, z>/nu with z ~ N(0, ν²I).
        let u = sample_uniform_orthobasis(5, 2, 4).unwrap();
        let model = SpikedModel::new(u, 3.0, DVector::zeros(5)).unwrap();
        let w = DVector::from_vec(vec![0.6, 0.8]);
        let m = 200_000;
        let task = sample_regression_task(&model, &w, m, 6).unwrap();
        let var = task.y.iter().map(|v| v * v).sum::<f64>() / m as f64;
        assert!((var - 1.0).abs() < 0.02, "Var(y) = {var:.4}");
    }

    #[test]
    fn regression_task_orthogonal_latents_give_zero_labels() {
        let u = sample_uniform_orthobasis(5, 2, 4).unwrap();
        let model = SpikedModel::new(u.clone(), 1.0, DVector::zeros(5)).unwrap();
        let w = DVector::from_vec(vec![1.0, 0.0]);
        let mut task = sample_regression_task(&model, &w, 10, 8).unwrap();
        // Construct latents orthogonal to w: zero the first row.
        task.z_hat.row_mut(0).fill(0.0);
        let y = (task.z_hat.transpose() * &w) / model.nu();
        assert_eq!(y, DVector::zeros(10));
    }

    #[test]
    fn regression_task_requires_positive_nu() {
        let u = sample_uniform_orthobasis(4, 2, 4).unwrap();
        let model = SpikedModel::new(u, 0.0, DVector::from_element(4, 1.0)).unwrap();
        let w = DVector::from_vec(vec![1.0, 0.0]);
        assert!(sample_regression_task(&model, &w, 5, 1).is_err());
    }

    #[test]
    fn masks_cover_and_are_disjoint() {
        let x = DMatrix::from_fn(20, 7, |i, j| (i * 7 + j) as f64 - 50.0);
        let mask = random_mask(20, 31);
        let v1 = mask.apply(&x);
        let v2 = mask.apply_complement(&x);
        assert_eq!(&v1 + &v2, x);
        assert!(v1.zip_map(&v2, |a, b| a * b).amax() == 0.0);
    }

    #[test]
    fn mask_bits_are_fair() {
        // Frequency oracle: per-bit mean 0.5 ± 0.005 over 1e5 seeds.
        let d = 20;
        let trials = 100_000u64;
        let mut counts = vec![0u64; d];
        for s in 0..trials {
            for (i, &b) in random_mask(d, s).bits().iter().enumerate() {
                counts[i] += b as u64;
            }
        }
        for &c in &counts {
            let mean = c as f64 / trials as f64;
            assert!((mean - 0.5).abs() < 0.005, "bit mean {mean}");
        }
    }

    #[test]
    fn all_masks_enumerates_every_pattern() {
        let masks = all_masks(4).unwrap();
        assert_eq!(masks.len(), 16);
        let unique: std::collections::HashSet<Vec<bool>> =
            masks.iter().map(|m| m.bits().to_vec()).collect();
        assert_eq!(unique.len(), 16);
        assert!(all_masks(21).is_err());
    }

    #[test]
    fn noise_profile_is_distinct_with_kappa_4() {
        let sigma = linear_noise_profile(40, 2.0);
        assert_eq!(sigma[0], 2.0);
        assert_eq!(sigma[39], 1.0);
        for i in 1..40 {
            assert!(sigma[i] < sigma[i - 1]);
        }
    }

    #[test]
    fn task_spec_rejects_non_unit_vector() {
        let w = DVector::from_vec(vec![1.0, 1.0]);
        assert!(TaskSpec::new(w, 0.0, Link::Logistic).is_err());
    }
}
