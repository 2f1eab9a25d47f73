//! Closed-form symmetric target matrices for each learning objective, and
//! top-r eigenspace extraction.
//!
//! Each linear objective in this crate is minimized exactly by the top-r
//! eigenspace of a data-dependent symmetric matrix. This module constructs
//! those matrices and turns them into representations; the [`crate::optim`]
//! module independently cross-checks them by gradient descent.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Which construction produced a [`SymTarget`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SelfconAugpair,
    SelfconMasking,
    Pca,
    MaskedAe,
    SupconHybrid,
    Hsic,
    TransferHybrid,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            Provenance::SelfconAugpair => "selfcon-augpair",
            Provenance::SelfconMasking => "selfcon-masking",
            Provenance::Pca => "pca",
            Provenance::MaskedAe => "masked-ae",
            Provenance::SupconHybrid => "supcon-hybrid",
            Provenance::Hsic => "hsic",
            Provenance::TransferHybrid => "transfer-hybrid",
        };
        f.write_str(tag)
    }
}

/// A symmetric d×d matrix whose top-r eigenspace is a solver's answer.
/// Symmetrized on construction, so `m == mᵀ` holds exactly.
#[derive(Debug, Clone)]
pub struct SymTarget {
    m: DMatrix<f64>,
    provenance: Provenance,
}

impl SymTarget {
    /// Symmetrizes `m` as (m + mᵀ)/2; `m` must be square.
    pub fn new(m: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "target matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { m: sym, provenance })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn d(&self) -> usize {
        self.m.nrows()
    }
}

/// Splits a square matrix into its diagonal part D(m) and off-diagonal part
/// Δ(m), with D(m) + Δ(m) = m exactly.
pub fn split_diagonal(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !m.is_square() {
        return Err(Error::Dimension("split_diagonal requires a square matrix".into()));
    }
    let mut diag = DMatrix::zeros(m.nrows(), m.ncols());
    let mut off = m.clone();
    for i in 0..m.nrows() {
        diag[(i, i)] = m[(i, i)];
        off[(i, i)] = 0.0;
    }
    Ok((diag, off))
}

fn offdiag(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut off = m.clone();
    for i in 0..m.nrows() {
        off[(i, i)] = 0.0;
    }
    off
}

/// Contrastive target for a fixed pair of augmented views:
///
/// X₁X₂ᵀ + X₂X₁ᵀ − (1/(2(n−1))) (X₁+X₂)(11ᵀ−I)(X₁+X₂)ᵀ.
pub fn augmented_pair_matrix(x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<SymTarget> {
    if x1.shape() != x2.shape() {
        return Err(Error::Dimension(format!(
            "view shapes differ: {:?} vs {:?}",
            x1.shape(),
            x2.shape()
        )));
    }
    let n = x1.ncols();
    if n < 2 {
        return Err(Error::ContrastDegeneracy(
            "augmented pairs need n >= 2 samples; the negative-pair average is undefined".into(),
        ));
    }
    let cross = x1 * x2.transpose();
    let sum = x1 + x2;
    let s = &sum * DVector::from_element(n, 1.0);
    // (X₁+X₂)(11ᵀ−I)(X₁+X₂)ᵀ = ssᵀ − QQᵀ with Q = X₁+X₂, s = Q·1.
    let neg = &s * s.transpose() - &sum * sum.transpose();
    let m = &cross + cross.transpose() - neg / (2.0 * (n as f64 - 1.0));
    SymTarget::new(m, Provenance::SelfconAugpair)
}

/// Expected contrastive target under Bernoulli(1/2) random masking:
///
/// Δ(XXᵀ) − (1/(n−1)) X(11ᵀ−I)Xᵀ.
///
/// Equals twice the average of [`augmented_pair_matrix`] over all 2^d masks.
pub fn masking_expectation_matrix(x: &DMatrix<f64>) -> Result<SymTarget> {
    let n = x.ncols();
    if n < 2 {
        return Err(Error::ContrastDegeneracy(
            "masking contrast needs n >= 2 samples".into(),
        ));
    }
    SymTarget::new(masking_numerator(x), Provenance::SelfconMasking)
}

pub(crate) fn masking_numerator(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let gram = x * x.transpose();
    let s = x * DVector::from_element(n, 1.0);
    let neg = &s * s.transpose() - &gram;
    offdiag(&gram) - neg / (n as f64 - 1.0)
}

/// Centered Gram matrix X(I − 11ᵀ/n)Xᵀ; its top-r eigenspace is the linear
/// autoencoder (equivalently PCA, and the W₂-GAN generator) solution.
pub fn pca_matrix(x: &DMatrix<f64>) -> Result<SymTarget> {
    let n = x.ncols();
    if n < 1 {
        return Err(Error::Dimension("pca_matrix requires n >= 1".into()));
    }
    let gram = x * x.transpose();
    let s = x * DVector::from_element(n, 1.0);
    let m = gram - &s * s.transpose() / n as f64;
    SymTarget::new(m, Provenance::Pca)
}

/// Expected target of the autoencoder trained on both masked views:
/// (1/2)Δ(XXᵀ) + D(XXᵀ).
pub fn masked_ae_matrix(x: &DMatrix<f64>) -> Result<SymTarget> {
    if x.ncols() < 1 {
        return Err(Error::Dimension("masked_ae_matrix requires n >= 1".into()));
    }
    let gram = x * x.transpose();
    let (diag, off) = split_diagonal(&gram)?;
    SymTarget::new(off * 0.5 + diag, Provenance::MaskedAe)
}

/// Supervised contrast part shared by [`supcon_hybrid_matrix`] and the loss
/// gradients:
///
/// (1/K) Σ_k (α_k/n_k) [ (1/(n_k−1)) X_k(11ᵀ−I)X_kᵀ
///     − (1/Σ_{t≠k} n_t) Σ_{s≠k} (1/2)(X_k 11ᵀ X_sᵀ + X_s 11ᵀ X_kᵀ) ].
pub(crate) fn supervised_part(
    class_blocks: &[DMatrix<f64>],
    alpha: &[f64],
) -> Result<DMatrix<f64>> {
    let k = class_blocks.len();
    if k < 2 {
        return Err(Error::ContrastDegeneracy(
            "supervised contrast needs at least two classes (no negatives otherwise)".into(),
        ));
    }
    if alpha.len() != k {
        return Err(Error::Dimension(format!(
            "alpha has {} entries, expected one per class ({k})",
            alpha.len()
        )));
    }
    if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::Contract("alpha entries must be finite and >= 0".into()));
    }
    let d = class_blocks[0].nrows();
    let counts: Vec<usize> = class_blocks.iter().map(|b| b.ncols()).collect();
    if class_blocks.iter().any(|b| b.nrows() != d) {
        return Err(Error::Dimension("all class blocks must share the dimension d".into()));
    }
    if counts.iter().any(|&n_k| n_k < 2) {
        return Err(Error::ContrastDegeneracy(
            "every class needs n_k >= 2 samples for within-class contrast".into(),
        ));
    }
    let total: usize = counts.iter().sum();
    let sums: Vec<DVector<f64>> = class_blocks
        .iter()
        .map(|b| b * DVector::from_element(b.ncols(), 1.0))
        .collect();
    let mut part = DMatrix::zeros(d, d);
    for (kk, block) in class_blocks.iter().enumerate() {
        let n_k = counts[kk] as f64;
        let weight = alpha[kk] / (k as f64 * n_k);
        // within-class positives: X_k(11ᵀ−I)X_kᵀ = s_k s_kᵀ − X_k X_kᵀ
        let within = &sums[kk] * sums[kk].transpose() - block * block.transpose();
        part += within * (weight / (n_k - 1.0));
        // cross-class negatives, symmetrized
        let others = (total - counts[kk]) as f64;
        for (ss, _) in class_blocks.iter().enumerate() {
            if ss == kk {
                continue;
            }
            let cross = &sums[kk] * sums[ss].transpose();
            let cross_sym = (&cross + cross.transpose()) * 0.5;
            part -= cross_sym * (weight / others);
        }
    }
    Ok(part)
}

/// Hybrid supervised/self-supervised contrastive target:
///
/// (1/4n)·[masking numerator] + supervised part (see [`supervised_part`]).
///
/// `x_unlab` may have zero columns, in which case the self-supervised
/// summand is omitted (the pure-supervised limit).
pub fn supcon_hybrid_matrix(
    x_unlab: &DMatrix<f64>,
    class_blocks: &[DMatrix<f64>],
    alpha: &[f64],
) -> Result<SymTarget> {
    let n = x_unlab.ncols();
    if n == 1 {
        return Err(Error::ContrastDegeneracy(
            "unlabeled part needs n >= 2 samples (or none at all)".into(),
        ));
    }
    let sup = supervised_part(class_blocks, alpha)?;
    if n > 0 && x_unlab.nrows() != sup.nrows() {
        return Err(Error::Dimension("unlabeled data dimension differs from class blocks".into()));
    }
    let m = if n == 0 {
        sup
    } else {
        masking_numerator(x_unlab) / (4.0 * n as f64) + sup
    };
    SymTarget::new(m, Provenance::SupconHybrid)
}

/// Linear-kernel HSIC cross matrix (1/(m−1)²) (X̂Hy)(X̂Hy)ᵀ with the
/// centering matrix H = I − 11ᵀ/m. Rank ≤ 1 and positive semidefinite.
pub fn hsic_cross_matrix(x_hat: &DMatrix<f64>, y: &DVector<f64>) -> Result<SymTarget> {
    let m = x_hat.ncols();
    if m < 2 {
        return Err(Error::ContrastDegeneracy(
            "HSIC needs m >= 2 samples; centering degenerates otherwise".into(),
        ));
    }
    if y.len() != m {
        return Err(Error::Dimension(format!(
            "label vector has {} entries, expected {m}",
            y.len()
        )));
    }
    let y_mean = y.sum() / m as f64;
    let centered = y.map(|v| v - y_mean);
    let v = x_hat * centered;
    let scale = 1.0 / ((m as f64 - 1.0) * (m as f64 - 1.0));
    SymTarget::new(&v * v.transpose() * scale, Provenance::Hsic)
}

/// Hybrid self-supervised + multi-task HSIC target:
///
/// (1/4n)·[masking numerator] + Σ_t α_t · (1/(m_t−1)²)(X̂_t H y_t)(X̂_t H y_t)ᵀ.
pub fn transfer_hybrid_matrix(
    x_unlab: &DMatrix<f64>,
    tasks: &[(DMatrix<f64>, DVector<f64>)],
    alpha: &[f64],
) -> Result<SymTarget> {
    let n = x_unlab.ncols();
    if n < 2 {
        return Err(Error::ContrastDegeneracy(
            "transfer hybrid needs n >= 2 unlabeled samples".into(),
        ));
    }
    if alpha.len() != tasks.len() {
        return Err(Error::Dimension(format!(
            "alpha has {} entries, expected one per task ({})",
            alpha.len(),
            tasks.len()
        )));
    }
    if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::Contract("alpha entries must be finite and >= 0".into()));
    }
    let mut m = masking_numerator(x_unlab) / (4.0 * n as f64);
    for ((x_hat, y), &a) in tasks.iter().zip(alpha) {
        if x_hat.nrows() != x_unlab.nrows() {
            return Err(Error::Dimension("task data dimension differs from unlabeled data".into()));
        }
        m += hsic_cross_matrix(x_hat, y)?.matrix() * a;
    }
    SymTarget::new(m, Provenance::TransferHybrid)
}

/// Top-r eigenpairs of a symmetric target.
#[derive(Debug, Clone)]
pub struct TopEigen {
    /// d×r orthonormal basis, one eigenvector per column, deterministic sign
    /// (the entry of largest magnitude in each column is positive).
    pub basis: DMatrix<f64>,
    /// The r algebraically largest eigenvalues, descending.
    pub eigenvalues: DVector<f64>,
    /// λ_r and λ_{r+1} coincide to within 1e-10·max(1, ‖M‖₂): the subspace
    /// is not uniquely determined.
    pub gap_tied: bool,
}

/// Extracts the eigenvectors of the r algebraically largest eigenvalues.
pub fn top_r_eigenbasis(t: &SymTarget, r: usize) -> Result<TopEigen> {
    let d = t.d();
    if r == 0 || r > d {
        return Err(Error::Dimension(format!(
            "top_r_eigenbasis requires 1 <= r <= d, got r={r}, d={d}"
        )));
    }
    let eig = nalgebra::linalg::SymmetricEigen::try_new(t.m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("no convergence on a {d}x{d} target")))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let norm2 = eig.eigenvalues.amax();
    let mut basis = DMatrix::zeros(d, r);
    let mut eigenvalues = DVector::zeros(r);
    for (j, &idx) in order.iter().take(r).enumerate() {
        let mut col = eig.eigenvectors.column(idx).into_owned();
        fix_sign(&mut col);
        let lambda = eig.eigenvalues[idx];
        let residual = (&t.m * &col - &col * lambda).norm();
        if residual > 1e-8 * norm2.max(f64::MIN_POSITIVE) && residual > 1e-300 {
            return Err(Error::Eigen(format!(
                "eigenpair {j} residual {residual:.3e} exceeds 1e-8·|M|₂ = {:.3e}",
                1e-8 * norm2
            )));
        }
        basis.set_column(j, &col);
        eigenvalues[j] = lambda;
    }
    let gap_tied = if r < d {
        let next = eig.eigenvalues[order[r]];
        (eigenvalues[r - 1] - next).abs() <= 1e-10 * norm2.max(1.0)
    } else {
        false
    };
    Ok(TopEigen { basis, eigenvalues, gap_tied })
}

fn fix_sign(col: &mut DVector<f64>) {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, v) in col.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    if col[best] < 0.0 {
        col.neg_mut();
    }
}

/// A learned linear representation W with its right-singular subspace.
#[derive(Debug, Clone)]
pub struct Representation {
    /// r×d representation matrix; row i is σᵢ·uᵢᵀ.
    pub w: DMatrix<f64>,
    /// d×r orthonormal basis of the row space of `w` (padded by the
    /// eigenbasis when singular values were clipped to zero).
    pub u: DMatrix<f64>,
    /// Non-negative singular values, descending.
    pub singular_values: DVector<f64>,
    /// Some retained eigenvalue was ≤ 0 and its singular value was clipped.
    pub clipped: bool,
    /// Propagated from [`TopEigen::gap_tied`].
    pub gap_tied: bool,
}

/// Builds the canonical optimal representation from a target: W = Σᵢ √λᵢ⁺ eᵢuᵢᵀ
/// (scale constant C = 1 and right factor V = I; only the row space is
/// identified by the objectives, and all downstream metrics use only `u`).
pub fn representation_from(t: &SymTarget, r: usize) -> Result<Representation> {
    let top = top_r_eigenbasis(t, r)?;
    let mut w = DMatrix::zeros(r, t.d());
    let mut singular_values = DVector::zeros(r);
    let mut clipped = false;
    for i in 0..r {
        let lambda = top.eigenvalues[i];
        if lambda > 0.0 {
            let s = lambda.sqrt();
            singular_values[i] = s;
            w.row_mut(i).copy_from(&(top.basis.column(i).transpose() * s));
        } else {
            clipped = true;
        }
    }
    Ok(Representation { w, u: top.basis, singular_values, clipped, gap_tied: top.gap_tied })
}

/// Recovers a [`Representation`] from an arbitrary r×d matrix via SVD;
/// `u` is the top-r right-singular subspace. Used to read off the subspace
/// found by gradient descent.
pub fn representation_from_w(w: &DMatrix<f64>) -> Result<Representation> {
    let (r, d) = w.shape();
    if r == 0 || d == 0 || r > d {
        return Err(Error::Dimension(format!("expected non-empty r×d with r <= d, got {r}x{d}")));
    }
    let svd = w.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("svd computed with vectors");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut u = DMatrix::zeros(d, r);
    let mut singular_values = DVector::zeros(r);
    for (j, &idx) in order.iter().enumerate() {
        let mut col = v_t.row(idx).transpose();
        fix_sign(&mut col);
        u.set_column(j, &col);
        singular_values[j] = svd.singular_values[idx];
    }
    Ok(Representation { w: w.clone(), u, singular_values, clipped: false, gap_tied: false })
}

pub(crate) fn spectral_norm_symmetric(m: &DMatrix<f64>) -> f64 {
    m.symmetric_eigenvalues().amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{all_masks, sample_uniform_orthobasis};
    use crate::seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(d: usize, n: usize, seedval: u64) -> DMatrix<f64> {
        let mut rng = seed::rng(seedval);
        DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn split_diagonal_identity_and_ones() {
        let id = DMatrix::<f64>::identity(3, 3);
        let (d, off) = split_diagonal(&id).unwrap();
        assert_eq!(d, id);
        assert_eq!(off, DMatrix::zeros(3, 3));

        let ones = DMatrix::from_element(3, 3, 1.0);
        let (d, off) = split_diagonal(&ones).unwrap();
        assert_eq!(d, DMatrix::identity(3, 3));
        assert_eq!(off, &ones - DMatrix::identity(3, 3));
        assert_eq!(d + off, ones);
    }

    #[test]
    fn split_diagonal_norm_bound() {
        // |Δ(m)|₂ ≤ 2|m|₂ for any square matrix.
        for s in 0..50 {
            let m = random_matrix(5, 5, 1000 + s);
            let (_, off) = split_diagonal(&m).unwrap();
            let norm_m = m.singular_values().amax();
            let norm_off = off.singular_values().amax();
            assert!(norm_off <= 2.0 * norm_m + 1e-12);
        }
    }

    #[test]
    fn augmented_pair_hand_value() {
        // x1 = I₂, x2 = 0 ⇒ −(1/2)(e₁e₂ᵀ + e₂e₁ᵀ).
        let x1 = DMatrix::<f64>::identity(2, 2);
        let x2 = DMatrix::<f64>::zeros(2, 2);
        let t = augmented_pair_matrix(&x1, &x2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, -0.5, 0.0]);
        assert!((t.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn augmented_pair_zero_inputs_and_errors() {
        let z = DMatrix::<f64>::zeros(3, 4);
        let t = augmented_pair_matrix(&z, &z).unwrap();
        assert_eq!(t.matrix(), &DMatrix::zeros(3, 3));
        let one = DMatrix::<f64>::zeros(3, 1);
        assert!(matches!(
            augmented_pair_matrix(&one, &one),
            Err(Error::ContrastDegeneracy(_))
        ));
    }

    #[test]
    fn augmented_pair_output_is_symmetric() {
        let x1 = random_matrix(5, 8, 3);
        let x2 = random_matrix(5, 8, 4);
        let t = augmented_pair_matrix(&x1, &x2).unwrap();
        assert!((t.matrix() - t.matrix().transpose()).amax() < 1e-12);
    }

    #[test]
    fn masking_hand_value() {
        // x = I₂ ⇒ −(e₁e₂ᵀ + e₂e₁ᵀ).
        let x = DMatrix::<f64>::identity(2, 2);
        let t = masking_expectation_matrix(&x).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!((t.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn masking_equals_exhaustive_mask_average() {
        // Exhaustive-mask enumeration oracle: the expectation construction
        // equals twice the average of the fixed-pair matrix over all 2^d masks.
        let d = 5;
        let x = random_matrix(d, 7, 9);
        let masks = all_masks(d).unwrap();
        let mut acc = DMatrix::zeros(d, d);
        for mask in &masks {
            let t = augmented_pair_matrix(&mask.apply(&x), &mask.apply_complement(&x)).unwrap();
            acc += t.matrix();
        }
        acc /= masks.len() as f64;
        let expected = masking_expectation_matrix(&x).unwrap();
        let err = (acc * 2.0 - expected.matrix()).amax();
        assert!(err < 1e-10, "exhaustive identity error {err:.3e}");
    }

    #[test]
    fn masking_single_nonzero_row_reduces_to_negative_term() {
        let mut x = DMatrix::zeros(4, 6);
        for j in 0..6 {
            x[(1, j)] = j as f64 - 2.0;
        }
        let t = masking_expectation_matrix(&x).unwrap();
        let gram = &x * x.transpose();
        let s = &x * DVector::from_element(6, 1.0);
        let expected = -(&s * s.transpose() - gram) / 5.0;
        assert!((t.matrix() - &expected).amax() < 1e-12);
    }

    #[test]
    fn masking_scale_equivariance() {
        let x = random_matrix(6, 9, 17);
        let c = -2.5f64;
        let a = masking_expectation_matrix(&(&x * c)).unwrap();
        let b = masking_expectation_matrix(&x).unwrap();
        let err = (a.matrix() - b.matrix() * (c * c)).amax();
        assert!(err < 1e-10 * b.matrix().amax().max(1.0));
    }

    #[test]
    fn pca_hand_values() {
        // Constant columns are annihilated by centering.
        let x = DMatrix::from_fn(3, 5, |i, _| i as f64 + 1.0);
        let t = pca_matrix(&x).unwrap();
        assert!(t.matrix().amax() < 1e-12);

        // x = [e₁, −e₁] ⇒ 2·e₁e₁ᵀ.
        let x = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 0.0]);
        let t = pca_matrix(&x).unwrap();
        let mut expected = DMatrix::zeros(2, 2);
        expected[(0, 0)] = 2.0;
        assert!((t.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn pca_mean_zero_equals_gram() {
        let mut x = random_matrix(4, 10, 21);
        let mean = x.column_mean();
        for j in 0..10 {
            let col = x.column(j) - &mean;
            x.set_column(j, &col);
        }
        let t = pca_matrix(&x).unwrap();
        let gram = &x * x.transpose();
        assert!((t.matrix() - gram).amax() < 1e-10);
    }

    #[test]
    fn masked_ae_hand_values() {
        let x = DMatrix::<f64>::identity(2, 2);
        let t = masked_ae_matrix(&x).unwrap();
        assert!((t.matrix() - DMatrix::identity(2, 2)).amax() < 1e-15);

        // Diagonal Gram: Δ vanishes, output equals XXᵀ.
        let x = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -2.0]);
        let t = masked_ae_matrix(&x).unwrap();
        assert!((t.matrix() - &x * x.transpose()).amax() < 1e-12);
    }

    #[test]
    fn supcon_alpha_zero_reduces_to_selfsupervised() {
        let x = random_matrix(4, 8, 33);
        let blocks = vec![random_matrix(4, 3, 34), random_matrix(4, 5, 35)];
        let t = supcon_hybrid_matrix(&x, &blocks, &[0.0, 0.0]).unwrap();
        let expected = masking_numerator(&x) / (4.0 * 8.0);
        assert!((t.matrix() - &expected).amax() < 1e-12);
    }

    #[test]
    fn supcon_matches_pairwise_sum_oracle() {
        // O(n²) loop over every labeled pair, straight from the loss terms.
        let blocks = vec![
            random_matrix(4, 3, 41),
            random_matrix(4, 4, 42),
            random_matrix(4, 2, 43),
        ];
        let alpha = [1.0, 0.5, 2.0];
        let k = blocks.len();
        let total: usize = blocks.iter().map(|b| b.ncols()).sum();
        let mut oracle = DMatrix::zeros(4, 4);
        for (kk, block) in blocks.iter().enumerate() {
            let n_k = block.ncols();
            let weight = alpha[kk] / (k as f64 * n_k as f64);
            for i in 0..n_k {
                for j in 0..n_k {
                    if i != j {
                        let outer = block.column(i) * block.column(j).transpose();
                        oracle += outer * (weight / (n_k as f64 - 1.0));
                    }
                }
                for (ss, other) in blocks.iter().enumerate() {
                    if ss == kk {
                        continue;
                    }
                    let denom = (total - n_k) as f64;
                    for j in 0..other.ncols() {
                        let outer = block.column(i) * other.column(j).transpose();
                        let sym = (&outer + outer.transpose()) * 0.5;
                        oracle -= sym * (weight / denom);
                    }
                }
            }
        }
        let pure = supcon_hybrid_matrix(&DMatrix::zeros(4, 0), &blocks, &alpha).unwrap();
        let err = (pure.matrix() - &oracle).amax();
        assert!(err < 1e-10, "pairwise oracle mismatch {err:.3e}");
    }

    #[test]
    fn supcon_repeated_vector_blocks_match_oracle() {
        // Two classes, each block a repeated single vector.
        let v1 = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let v2 = DVector::from_vec(vec![0.0, 2.0, -1.0]);
        let mut b1 = DMatrix::zeros(3, 3);
        let mut b2 = DMatrix::zeros(3, 4);
        for j in 0..3 {
            b1.set_column(j, &v1);
        }
        for j in 0..4 {
            b2.set_column(j, &v2);
        }
        let t = supcon_hybrid_matrix(&DMatrix::zeros(3, 0), &[b1, b2], &[1.0, 1.0]).unwrap();
        // By hand: within-class term gives μ_kμ_kᵀ, cross gives the
        // symmetrized −(μ_kμ_sᵀ+μ_sμ_kᵀ)/2 per class.
        let expected = (&v1 * v1.transpose() + &v2 * v2.transpose()
            - (&v1 * v2.transpose() + &v2 * v1.transpose()))
            / 2.0;
        assert!((t.matrix() - &expected).amax() < 1e-12);
    }

    #[test]
    fn supcon_balanced_case_is_permutation_invariant() {
        let blocks = vec![
            random_matrix(5, 4, 51),
            random_matrix(5, 4, 52),
            random_matrix(5, 4, 53),
        ];
        let x = random_matrix(5, 6, 54);
        let a = supcon_hybrid_matrix(&x, &blocks, &[0.7, 0.7, 0.7]).unwrap();
        let permuted = vec![blocks[2].clone(), blocks[0].clone(), blocks[1].clone()];
        let b = supcon_hybrid_matrix(&x, &permuted, &[0.7, 0.7, 0.7]).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-12);
    }

    #[test]
    fn supcon_error_taxonomy() {
        let good = vec![random_matrix(3, 2, 61), random_matrix(3, 2, 62)];
        let thin = vec![random_matrix(3, 1, 63), random_matrix(3, 2, 64)];
        let lone = vec![random_matrix(3, 4, 65)];
        let x = DMatrix::zeros(3, 0);
        assert!(supcon_hybrid_matrix(&x, &good, &[1.0, 1.0]).is_ok());
        assert!(matches!(
            supcon_hybrid_matrix(&x, &thin, &[1.0, 1.0]),
            Err(Error::ContrastDegeneracy(_))
        ));
        assert!(matches!(
            supcon_hybrid_matrix(&x, &lone, &[1.0]),
            Err(Error::ContrastDegeneracy(_))
        ));
        // n = 1 unlabeled is neither empty nor contrastable.
        assert!(supcon_hybrid_matrix(&random_matrix(3, 1, 66), &good, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn supcon_supervised_share_grows_with_alpha() {
        let x = random_matrix(5, 8, 71);
        let blocks = vec![random_matrix(5, 4, 72), random_matrix(5, 4, 73)];
        let share = |alpha: f64| {
            let with = supcon_hybrid_matrix(&x, &blocks, &[alpha, alpha]).unwrap();
            let base = supcon_hybrid_matrix(&x, &blocks, &[0.0, 0.0]).unwrap();
            let sup = with.matrix() - base.matrix();
            sup.norm() / (sup.norm() + base.matrix().norm())
        };
        assert!(share(2.0) > share(1.0));
        assert!(share(4.0) > share(2.0));
    }

    #[test]
    fn hsic_constant_labels_vanish() {
        let x = random_matrix(4, 9, 81);
        let y = DVector::from_element(9, 3.7);
        let t = hsic_cross_matrix(&x, &y).unwrap();
        assert!(t.matrix().amax() < 1e-20);
    }

    #[test]
    fn hsic_is_positive_semidefinite_rank_one() {
        let mut x = random_matrix(4, 12, 83);
        let mean = x.column_mean();
        for j in 0..12 {
            let col = x.column(j) - &mean;
            x.set_column(j, &col);
        }
        let y = x.row(0).transpose();
        let t = hsic_cross_matrix(&x, &y).unwrap();
        let eigvals = t.matrix().clone().symmetric_eigenvalues();
        assert!(eigvals.min() >= -1e-12);
        let positive = eigvals.iter().filter(|v| **v > 1e-12).count();
        assert!(positive <= 1);
        // Against the definition with explicit centering of y.
        let v = &x * &y;
        let expected = &v * v.transpose() / (11.0 * 11.0);
        assert!((t.matrix() - &expected).amax() < 1e-10 * expected.amax().max(1.0));
    }

    #[test]
    fn hsic_concentrates_on_the_task_direction() {
        // On spiked-model tasks the HSIC cross matrix approaches
        // ν²(U*w*)(U*w*)ᵀ at the sqrt(d/m) rate: Frobenius error below
        // 10·σ₍₁₎·ν·sqrt(d/m) on every one of 20 replicates (d=20, m=10⁴).
        use crate::datagen::{sample_regression_task, SpikedModel};
        let (d, r, m) = (20, 3, 10_000);
        let sigma_max = 1.5;
        let nu = 1.0;
        let bound = 10.0 * sigma_max * nu * (d as f64 / m as f64).sqrt();
        for rep in 0..20u64 {
            let u_star = sample_uniform_orthobasis(d, r, seed::mix(60, &[rep, 0])).unwrap();
            let model = SpikedModel::new(
                u_star.clone(),
                nu,
                crate::datagen::linear_noise_profile(d, sigma_max),
            )
            .unwrap();
            let w_t = sample_uniform_orthobasis(r, 1, seed::mix(60, &[rep, 1]))
                .unwrap()
                .column(0)
                .into_owned();
            let task = sample_regression_task(&model, &w_t, m, seed::mix(60, &[rep, 2])).unwrap();
            let t = hsic_cross_matrix(&task.x_hat, &task.y).unwrap();
            let v = &u_star * &w_t * nu;
            let err = (t.matrix() - &v * v.transpose()).norm();
            assert!(err <= bound, "rep {rep}: Frobenius error {err:.4} > {bound:.4}");
        }
    }

    #[test]
    fn transfer_single_task_dominates_at_huge_alpha() {
        // One task with a huge weight: the top eigenvector aligns with U*w₁.
        use crate::datagen::{sample_regression_task, sample_spiked, SpikedModel};
        let (d, r, m, n) = (20, 3, 10_000, 200);
        let u_star = sample_uniform_orthobasis(d, r, 71).unwrap();
        let model =
            SpikedModel::new(u_star.clone(), 1.0, DVector::from_element(d, 1.0)).unwrap();
        let w_t = sample_uniform_orthobasis(r, 1, 72).unwrap().column(0).into_owned();
        let task = sample_regression_task(&model, &w_t, m, 73).unwrap();
        let x = sample_spiked(&model, n, 74).unwrap().x;
        let t =
            transfer_hybrid_matrix(&x, &[(task.x_hat, task.y)], &[1e6]).unwrap();
        let top = top_r_eigenbasis(&t, 1).unwrap();
        let direction = &u_star * &w_t;
        let overlap = (top.basis.column(0).dot(&direction)).abs();
        let sin = (1.0 - overlap * overlap).max(0.0).sqrt();
        assert!(sin <= 0.05, "rank-1 dominance violated: sin-Θ = {sin:.4}");
    }

    #[test]
    fn masking_beats_pca_on_most_spiked_replicates() {
        // Desk-scale trend at ρ = 0.5 (ν=1, σ₍₁₎=2), d=40, n=2·10⁴: the
        // masking subspace is closer to U* than the PCA subspace on at
        // least 18 of 20 replicates.
        use crate::datagen::{gapped_noise_profile, sample_spiked, SpikedModel};
        let (d, r, n) = (40, 5, 20_000);
        let mut wins = 0;
        for rep in 0..20u64 {
            let u_star = sample_uniform_orthobasis(d, r, seed::mix(80, &[rep, 0])).unwrap();
            let model =
                SpikedModel::new(u_star.clone(), 1.0, gapped_noise_profile(d, r, 2.0)).unwrap();
            let x = sample_spiked(&model, n, seed::mix(80, &[rep, 1])).unwrap().x;
            let u_cl = representation_from(&masking_expectation_matrix(&x).unwrap(), r)
                .unwrap()
                .u;
            let u_ae = representation_from(&pca_matrix(&x).unwrap(), r).unwrap().u;
            let d_cl = crate::metrics::sin_theta_f(&u_cl, &u_star).unwrap();
            let d_ae = crate::metrics::sin_theta_f(&u_ae, &u_star).unwrap();
            if d_cl <= d_ae {
                wins += 1;
            }
        }
        assert!(wins >= 18, "masking beat PCA on only {wins}/20 replicates");
    }

    #[test]
    fn transfer_with_no_tasks_is_selfsupervised_target() {
        let x = random_matrix(4, 8, 91);
        let t = transfer_hybrid_matrix(&x, &[], &[]).unwrap();
        let expected = masking_numerator(&x) / (4.0 * 8.0);
        assert!((t.matrix() - &expected).amax() < 1e-12);
        // All-zero alphas behave the same.
        let tasks = vec![(random_matrix(4, 5, 92), DVector::from_fn(5, |i, _| i as f64))];
        let t0 = transfer_hybrid_matrix(&x, &tasks, &[0.0]).unwrap();
        assert!((t0.matrix() - &expected).amax() < 1e-12);
    }

    #[test]
    fn top_eigenbasis_diagonal_case() {
        let t = SymTarget::new(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0])), Provenance::Pca)
            .unwrap();
        let top = top_r_eigenbasis(&t, 2).unwrap();
        assert!((top.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((top.eigenvalues[1] - 2.0).abs() < 1e-12);
        assert!(!top.gap_tied);
        // Spans {e₁, e₂}: projector check.
        let p = &top.basis * top.basis.transpose();
        let mut expected = DMatrix::zeros(3, 3);
        expected[(0, 0)] = 1.0;
        expected[(1, 1)] = 1.0;
        assert!((p - expected).amax() < 1e-12);
    }

    #[test]
    fn top_eigenbasis_rank_one_with_sign_convention() {
        let v = DVector::from_vec(vec![-3.0, 1.0, 2.0]);
        let t = SymTarget::new(&v * v.transpose(), Provenance::Hsic).unwrap();
        let top = top_r_eigenbasis(&t, 1).unwrap();
        assert!((top.eigenvalues[0] - v.norm_squared()).abs() < 1e-10);
        // Largest-magnitude entry positive ⇒ the basis is −v/‖v‖ here.
        let expected = -&v / v.norm();
        assert!((top.basis.column(0) - expected).amax() < 1e-10);
    }

    #[test]
    fn top_eigenbasis_residuals_and_cubic_oracle() {
        for s in 0..20 {
            let m = random_matrix(6, 6, 100 + s);
            let t = SymTarget::new(m, Provenance::Pca).unwrap();
            let top = top_r_eigenbasis(&t, 6).unwrap();
            let norm2 = top.eigenvalues.amax();
            for j in 0..6 {
                let res =
                    (t.matrix() * top.basis.column(j) - top.basis.column(j) * top.eigenvalues[j])
                        .norm();
                assert!(res <= 1e-8 * norm2);
            }
            for j in 1..6 {
                assert!(top.eigenvalues[j] <= top.eigenvalues[j - 1] + 1e-14);
            }
        }

        // 3×3 sub-case: compare against characteristic-polynomial roots.
        let m = random_matrix(3, 3, 555);
        let t = SymTarget::new(m, Provenance::Pca).unwrap();
        let a = t.matrix();
        let tr = a[(0, 0)] + a[(1, 1)] + a[(2, 2)];
        let m2 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]
            + a[(0, 0)] * a[(2, 2)] - a[(0, 2)] * a[(2, 0)]
            + a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)];
        let det = a.determinant();
        // Roots of λ³ − tr·λ² + m2·λ − det via the trigonometric method:
        // substituting λ = t + tr/3 gives t³ + pt + q.
        let p = m2 - tr * tr / 3.0;
        let q = -2.0 * tr.powi(3) / 27.0 + tr * m2 / 3.0 - det;
        let inner = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let amp = 2.0 * (-p / 3.0).sqrt();
        let mut roots: Vec<f64> = (0..3)
            .map(|k| {
                amp * ((inner.acos() - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos()
                    + tr / 3.0
            })
            .collect();
        roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let top = top_r_eigenbasis(&t, 3).unwrap();
        for (eig, root) in top.eigenvalues.iter().zip(&roots) {
            assert!((eig - root).abs() < 1e-8, "eig {eig} vs root {root}");
        }
    }

    #[test]
    fn tied_gap_is_flagged() {
        let t = SymTarget::new(DMatrix::identity(4, 4), Provenance::Pca).unwrap();
        let top = top_r_eigenbasis(&t, 2).unwrap();
        assert!(top.gap_tied);
    }

    #[test]
    fn representation_hand_value_and_clipping() {
        let t = SymTarget::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 0.0])),
            Provenance::Pca,
        )
        .unwrap();
        let rep = representation_from(&t, 1).unwrap();
        assert!((rep.w.row(0).transpose() - DVector::from_vec(vec![2.0, 0.0, 0.0])).amax() < 1e-12);
        assert!(!rep.clipped);

        // Indefinite target: negative eigenvalue clipped, basis kept.
        let t = SymTarget::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0, -3.0])),
            Provenance::SelfconMasking,
        )
        .unwrap();
        let rep = representation_from(&t, 2).unwrap();
        assert!(rep.clipped);
        assert_eq!(rep.singular_values[1], 0.0);
        assert_eq!(rep.u.ncols(), 2);
    }

    #[test]
    fn representation_row_space_matches_u() {
        let m = random_matrix(7, 7, 777);
        let t = SymTarget::new(&m * m.transpose(), Provenance::Pca).unwrap();
        let rep = representation_from(&t, 3).unwrap();
        let residual = &rep.w - (&rep.w * &rep.u) * rep.u.transpose();
        assert!(residual.norm() <= 1e-10 * rep.w.norm());
    }

    #[test]
    fn representation_from_w_recovers_right_subspace() {
        let u = sample_uniform_orthobasis(6, 2, 31).unwrap();
        let w = u.transpose();
        let scaled = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.5])) * &w;
        let rep = representation_from_w(&scaled).unwrap();
        let p_est = &rep.u * rep.u.transpose();
        let p_true = &u * u.transpose();
        assert!((p_est - p_true).amax() < 1e-10);
        assert!((rep.singular_values[0] - 3.0).abs() < 1e-10);
        assert!((rep.singular_values[1] - 1.5).abs() < 1e-10);
    }
}
