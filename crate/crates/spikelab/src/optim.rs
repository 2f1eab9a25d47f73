//! Raw loss functions and plain gradient descent.
//!
//! [`eval_loss`] spells out every objective as the literal sums over samples
//! and pairs; [`loss_gradient`] uses the equivalent quadratic form
//! −2WS + 2λW(WᵀW) built from the [`crate::spectral`] constructions. The two
//! routes are independent, so finite-difference checks of the gradient
//! against the literal loss validate the closed-form target matrices, and
//! [`minimize`] serves as the end-to-end oracle for the spectral solvers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::datagen::{random_mask, DiagMask};
use crate::seed;
use crate::spectral::{self, spectral_norm_symmetric, Provenance, Representation, SymTarget};
use crate::{Error, Result};

/// Which objective is being evaluated or minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    SelfCon,
    SupConHybrid,
    HsicTransfer,
    Autoencoder,
    MaskedAutoencoder,
}

/// How masking augmentations are supplied to mask-bearing losses.
#[derive(Debug, Clone)]
pub enum MaskPolicy {
    /// Evaluate the average objective over this fixed list of masks.
    /// Listing all 2^d masks reproduces the expected loss exactly.
    Fixed(Vec<DiagMask>),
    /// [`minimize`] redraws one mask per iteration and applies it to all
    /// samples. Direct [`eval_loss`]/[`loss_gradient`] calls reject this
    /// policy since the pointwise objective is undefined without a mask.
    Resample,
}

/// A loss configuration: objective kind, regularization weight λ, per-class
/// or per-task weights α, and the masking policy.
///
/// λ only rescales the optimum's singular values, never its subspace; the
/// autoencoder kinds have no λ term and ignore it.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub kind: LossKind,
    pub lambda: f64,
    pub alpha: Vec<f64>,
    pub mask_policy: MaskPolicy,
}

impl LossSpec {
    pub fn new(kind: LossKind, lambda: f64, alpha: Vec<f64>, mask_policy: MaskPolicy) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::Contract(format!("lambda must be finite and > 0, got {lambda}")));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::Contract("alpha entries must be finite and >= 0".into()));
        }
        Ok(Self { kind, lambda, alpha, mask_policy })
    }

    /// Convenience constructor for the self-supervised loss with λ = 1.
    pub fn selfcon(mask_policy: MaskPolicy) -> Self {
        Self { kind: LossKind::SelfCon, lambda: 1.0, alpha: Vec::new(), mask_policy }
    }
}

/// The data a loss is evaluated on; the variant must match [`LossSpec::kind`].
/// The autoencoder kinds carry the decoder matrix (d×r) alongside the data.
#[derive(Debug, Clone)]
pub enum DataBundle {
    SelfCon { x: DMatrix<f64> },
    SupConHybrid { x_unlab: DMatrix<f64>, class_blocks: Vec<DMatrix<f64>> },
    HsicTransfer { x_unlab: DMatrix<f64>, tasks: Vec<(DMatrix<f64>, DVector<f64>)> },
    Autoencoder { x: DMatrix<f64>, decoder: DMatrix<f64> },
    MaskedAutoencoder { x: DMatrix<f64>, decoder: DMatrix<f64> },
}

impl DataBundle {
    fn kind(&self) -> LossKind {
        match self {
            DataBundle::SelfCon { .. } => LossKind::SelfCon,
            DataBundle::SupConHybrid { .. } => LossKind::SupConHybrid,
            DataBundle::HsicTransfer { .. } => LossKind::HsicTransfer,
            DataBundle::Autoencoder { .. } => LossKind::Autoencoder,
            DataBundle::MaskedAutoencoder { .. } => LossKind::MaskedAutoencoder,
        }
    }

    /// Ambient dimension d of the observations.
    fn d(&self) -> usize {
        match self {
            DataBundle::SelfCon { x } => x.nrows(),
            DataBundle::SupConHybrid { x_unlab, class_blocks } => {
                if x_unlab.ncols() > 0 || class_blocks.is_empty() {
                    x_unlab.nrows()
                } else {
                    class_blocks[0].nrows()
                }
            }
            DataBundle::HsicTransfer { x_unlab, .. } => x_unlab.nrows(),
            DataBundle::Autoencoder { x, .. } => x.nrows(),
            DataBundle::MaskedAutoencoder { x, .. } => x.nrows(),
        }
    }
}

/// Plain gradient-descent configuration. Defaults are deliberately explicit:
/// callers choose the step (see [`default_step_size`]) and budget.
#[derive(Debug, Clone, Copy)]
pub struct GdConfig {
    pub step_size: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

/// Result of a [`minimize`] run: the final representation matrix and the
/// per-iteration loss values (the objective that iteration descended, so
/// under the resampling policy the trace is mask-noisy by construction).
#[derive(Debug, Clone)]
pub struct GdOutcome {
    pub w: DMatrix<f64>,
    pub loss_trace: Vec<f64>,
}

fn check_bundle(spec: &LossSpec, data: &DataBundle) -> Result<()> {
    if spec.kind != data.kind() {
        return Err(Error::Contract(format!(
            "loss kind {:?} does not match data bundle {:?}",
            spec.kind,
            data.kind()
        )));
    }
    match data {
        DataBundle::SupConHybrid { x_unlab, class_blocks } => {
            if x_unlab.ncols() == 1 {
                return Err(Error::ContrastDegeneracy(
                    "unlabeled part needs n >= 2 samples (or none at all)".into(),
                ));
            }
            if spec.alpha.len() != class_blocks.len() {
                return Err(Error::Contract(format!(
                    "alpha has {} entries, expected one per class ({})",
                    spec.alpha.len(),
                    class_blocks.len()
                )));
            }
        }
        DataBundle::HsicTransfer { x_unlab, tasks } => {
            if x_unlab.ncols() < 2 {
                return Err(Error::ContrastDegeneracy(
                    "transfer hybrid needs n >= 2 unlabeled samples".into(),
                ));
            }
            if spec.alpha.len() != tasks.len() {
                return Err(Error::Contract(format!(
                    "alpha has {} entries, expected one per task ({})",
                    spec.alpha.len(),
                    tasks.len()
                )));
            }
        }
        DataBundle::Autoencoder { x, decoder } | DataBundle::MaskedAutoencoder { x, decoder } => {
            if decoder.nrows() != x.nrows() {
                return Err(Error::Contract(format!(
                    "decoder is {}x{}, expected {} rows",
                    decoder.nrows(),
                    decoder.ncols(),
                    x.nrows()
                )));
            }
        }
        DataBundle::SelfCon { .. } => {}
    }
    Ok(())
}

fn needs_masks(data: &DataBundle) -> bool {
    match data {
        DataBundle::SelfCon { .. } | DataBundle::MaskedAutoencoder { .. } => true,
        DataBundle::SupConHybrid { x_unlab, .. } => x_unlab.ncols() > 0,
        DataBundle::HsicTransfer { .. } => true,
        DataBundle::Autoencoder { .. } => false,
    }
}

fn fixed_masks<'a>(spec: &'a LossSpec, data: &DataBundle) -> Result<&'a [DiagMask]> {
    match &spec.mask_policy {
        MaskPolicy::Fixed(masks) => {
            if masks.is_empty() {
                return Err(Error::Contract("fixed mask policy needs at least one mask".into()));
            }
            let d = data.d();
            if masks.iter().any(|m| m.d() != d) {
                return Err(Error::Contract("mask dimension differs from data dimension".into()));
            }
            Ok(masks)
        }
        MaskPolicy::Resample => Err(Error::Contract(
            "resample-per-iteration masks only apply inside minimize; \
             use a fixed mask list for direct evaluation"
                .into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Literal loss evaluation
// ---------------------------------------------------------------------------

/// Evaluates the loss exactly as its defining sums are written, including the
/// (λ/2)‖WWᵀ‖_F² term for the contrastive kinds. Mask-bearing kinds average
/// the objective over the fixed mask list.
pub fn eval_loss(spec: &LossSpec, w: &DMatrix<f64>, data: &DataBundle) -> Result<f64> {
    check_bundle(spec, data)?;
    if w.ncols() != data.d() {
        return Err(Error::Dimension(format!(
            "representation has {} columns, data dimension is {}",
            w.ncols(),
            data.d()
        )));
    }
    let reg = 0.5 * spec.lambda * (w * w.transpose()).norm_squared();
    match data {
        DataBundle::SelfCon { x } => {
            Ok(mask_average(spec, data, |m| selfcon_literal(w, x, m))? + reg)
        }
        DataBundle::SupConHybrid { x_unlab, class_blocks } => {
            let sup = supcon_literal(w, class_blocks, &spec.alpha)?;
            let selfp = if x_unlab.ncols() > 0 {
                mask_average(spec, data, |m| selfcon_literal(w, x_unlab, m))?
            } else {
                0.0
            };
            Ok(selfp + sup + reg)
        }
        DataBundle::HsicTransfer { x_unlab, tasks } => {
            let selfp = mask_average(spec, data, |m| selfcon_literal(w, x_unlab, m))?;
            let mut hsic = 0.0;
            for ((x_hat, y), &a) in tasks.iter().zip(&spec.alpha) {
                hsic -= a * hsic_literal(w, x_hat, y)?;
            }
            Ok(selfp + hsic + reg)
        }
        DataBundle::Autoencoder { x, decoder } => ae_literal(w, x, decoder),
        DataBundle::MaskedAutoencoder { x, decoder } => {
            mask_average(spec, data, |m| masked_ae_literal(w, x, decoder, m))
        }
    }
}

fn mask_average(
    spec: &LossSpec,
    data: &DataBundle,
    f: impl Fn(&DiagMask) -> f64,
) -> Result<f64> {
    let masks = fixed_masks(spec, data)?;
    Ok(masks.iter().map(&f).sum::<f64>() / masks.len() as f64)
}

/// Self-supervised contrastive loss for one mask pair, written as the
/// per-sample, per-view sums (no λ term):
///
/// −(1/2n) Σᵢ Σ_v [ ⟨h_v(i), h_{3−v}(i)⟩ − (1/(2n−2)) Σ_{j≠i} Σ_s ⟨h_v(i), h_s(j)⟩ ].
///
/// With n = 1 the negative-pair sum is empty and contributes 0.
fn selfcon_literal(w: &DMatrix<f64>, x: &DMatrix<f64>, mask: &DiagMask) -> f64 {
    let n = x.ncols();
    let h1 = w * mask.apply(x);
    let h2 = w * mask.apply_complement(x);
    let views = [&h1, &h2];
    let mut total = 0.0;
    for i in 0..n {
        for v in 0..2 {
            let anchor = views[v].column(i);
            let pos = anchor.dot(&views[1 - v].column(i));
            let mut neg = 0.0;
            if n >= 2 {
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    for hs in views {
                        neg += anchor.dot(&hs.column(j));
                    }
                }
                neg /= (2 * n - 2) as f64;
            }
            total += pos - neg;
        }
    }
    -total / (2.0 * n as f64)
}

/// Supervised contrastive loss over class blocks (no λ term):
///
/// −(1/K) Σ_k (α_k/n_k) Σᵢ [ (1/(n_k−1)) Σ_{j≠i} ⟨h_i^k, h_j^k⟩
///     − (1/Σ_{t≠k} n_t) Σ_{s≠k} Σ_j ⟨h_i^k, h_j^s⟩ ].
fn supcon_literal(w: &DMatrix<f64>, blocks: &[DMatrix<f64>], alpha: &[f64]) -> Result<f64> {
    let k = blocks.len();
    if k < 2 {
        return Err(Error::ContrastDegeneracy("supervised contrast needs at least two classes".into()));
    }
    if blocks.iter().any(|b| b.ncols() < 2) {
        return Err(Error::ContrastDegeneracy(
            "every class needs n_k >= 2 samples for within-class contrast".into(),
        ));
    }
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let feats: Vec<DMatrix<f64>> = blocks.iter().map(|b| w * b).collect();
    let mut loss = 0.0;
    for (kk, h_k) in feats.iter().enumerate() {
        let n_k = h_k.ncols();
        let weight = alpha[kk] / (k as f64 * n_k as f64);
        let mut acc = 0.0;
        for i in 0..n_k {
            let anchor = h_k.column(i);
            let mut within = 0.0;
            for j in 0..n_k {
                if j != i {
                    within += anchor.dot(&h_k.column(j));
                }
            }
            acc += within / (n_k as f64 - 1.0);
            let mut cross = 0.0;
            for (ss, h_s) in feats.iter().enumerate() {
                if ss == kk {
                    continue;
                }
                for j in 0..h_s.ncols() {
                    cross += anchor.dot(&h_s.column(j));
                }
            }
            acc -= cross / (total - n_k) as f64;
        }
        loss -= weight * acc;
    }
    Ok(loss)
}

/// Empirical HSIC with linear kernels, straight from the definition
/// tr(KHLH)/(m−1)² with K = (WX̂)ᵀ(WX̂), L = yyᵀ, H = I − 11ᵀ/m.
fn hsic_literal(w: &DMatrix<f64>, x_hat: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let m = x_hat.ncols();
    if m < 2 {
        return Err(Error::ContrastDegeneracy("HSIC needs m >= 2 samples".into()));
    }
    if y.len() != m {
        return Err(Error::Dimension("label vector length must equal m".into()));
    }
    let feats = w * x_hat;
    let kernel = feats.transpose() * &feats;
    let h = DMatrix::identity(m, m) - DMatrix::from_element(m, m, 1.0 / m as f64);
    let l = y * y.transpose();
    let trace = (kernel * &h * l * &h).trace();
    Ok(trace / ((m as f64 - 1.0) * (m as f64 - 1.0)))
}

/// Mean squared reconstruction error (1/n)‖X₀ − D·W·X₀‖_F² on mean-centered
/// data X₀ (the bias-equipped autoencoder reduces to exactly this).
fn ae_literal(w: &DMatrix<f64>, x: &DMatrix<f64>, decoder: &DMatrix<f64>) -> Result<f64> {
    let n = x.ncols();
    if n == 0 {
        return Err(Error::Dimension("autoencoder loss requires n >= 1".into()));
    }
    let xc = center_columns(x);
    let resid = &xc - decoder * (w * &xc);
    Ok(resid.norm_squared() / n as f64)
}

/// Reconstruction error of both masked views for one mask:
/// (1/2n)(‖AX − DWAX‖² + ‖(I−A)X − DW(I−A)X‖²). No centering: the masked
/// objective is defined on the raw views.
fn masked_ae_literal(
    w: &DMatrix<f64>,
    x: &DMatrix<f64>,
    decoder: &DMatrix<f64>,
    mask: &DiagMask,
) -> f64 {
    let n = x.ncols() as f64;
    let x1 = mask.apply(x);
    let x2 = mask.apply_complement(x);
    let r1 = &x1 - decoder * (w * &x1);
    let r2 = &x2 - decoder * (w * &x2);
    (r1.norm_squared() + r2.norm_squared()) / (2.0 * n)
}

fn center_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = x.column_mean();
    let mut out = x.clone();
    for j in 0..x.ncols() {
        let col = x.column(j) - &mean;
        out.set_column(j, &col);
    }
    out
}

// ---------------------------------------------------------------------------
// Quadratic-form route: S matrices and analytic gradients
// ---------------------------------------------------------------------------

/// The symmetric matrix S such that the contrastive kinds satisfy
/// L(W) = (λ/2)‖WWᵀ‖_F² − tr(S WᵀW), built from the spectral constructions.
/// Mask-bearing parts use the mean over the fixed mask list.
fn quad_matrix(spec: &LossSpec, data: &DataBundle) -> Result<DMatrix<f64>> {
    match data {
        DataBundle::SelfCon { x } => selfcon_quad(spec, data, x),
        DataBundle::SupConHybrid { x_unlab, class_blocks } => {
            let mut s = spectral::supervised_part(class_blocks, &spec.alpha)?;
            if x_unlab.ncols() > 0 {
                s += selfcon_quad(spec, data, x_unlab)?;
            }
            Ok(s)
        }
        DataBundle::HsicTransfer { x_unlab, tasks } => {
            let mut s = selfcon_quad(spec, data, x_unlab)?;
            for ((x_hat, y), &a) in tasks.iter().zip(&spec.alpha) {
                s += spectral::hsic_cross_matrix(x_hat, y)?.matrix() * a;
            }
            Ok(s)
        }
        _ => Err(Error::Contract("autoencoder kinds have no contrastive quadratic form".into())),
    }
}

fn selfcon_quad(spec: &LossSpec, data: &DataBundle, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.ncols();
    if n < 2 {
        return Err(Error::ContrastDegeneracy("self-supervised contrast needs n >= 2".into()));
    }
    let masks = fixed_masks(spec, data)?;
    let d = x.nrows();
    let mut acc = DMatrix::zeros(d, d);
    for mask in masks {
        let pair =
            spectral::augmented_pair_matrix(&mask.apply(x), &mask.apply_complement(x))?;
        acc += pair.matrix();
    }
    Ok(acc / (masks.len() as f64 * 2.0 * n as f64))
}

/// Analytic gradient with respect to W. For the contrastive kinds this is
/// −2WS + 2λW(WᵀW); the autoencoder kinds differentiate the reconstruction
/// residual at the bundled decoder.
pub fn loss_gradient(spec: &LossSpec, w: &DMatrix<f64>, data: &DataBundle) -> Result<DMatrix<f64>> {
    check_bundle(spec, data)?;
    if w.ncols() != data.d() {
        return Err(Error::Dimension("representation width must equal the data dimension".into()));
    }
    match data {
        DataBundle::Autoencoder { x, decoder } => {
            let xc = center_columns(x);
            let gram = &xc * xc.transpose();
            Ok(ae_grad_w(w, decoder, &gram, 1.0 / x.ncols() as f64))
        }
        DataBundle::MaskedAutoencoder { x, decoder } => {
            let gram = x * x.transpose();
            let masks = fixed_masks(spec, data)?;
            let gbar = masked_gram_mean(&gram, masks);
            Ok(ae_grad_w(w, decoder, &gbar, 0.5 / x.ncols() as f64))
        }
        _ => {
            let s = quad_matrix(spec, data)?;
            Ok(quad_grad(w, &s, spec.lambda))
        }
    }
}

fn quad_grad(w: &DMatrix<f64>, s: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let wwt = w * w.transpose(); // r×r
    (wwt * w) * (2.0 * lambda) - (w * s) * 2.0
}

/// ∇_W of c·tr((I−DW)G(I−DW)ᵀ) = −2c·Dᵀ(I−DW)G.
fn ae_grad_w(w: &DMatrix<f64>, decoder: &DMatrix<f64>, gram: &DMatrix<f64>, c: f64) -> DMatrix<f64> {
    let residual_op = gram - decoder * (w * gram);
    (decoder.transpose() * residual_op) * (-2.0 * c)
}

/// Entry-wise mean of A·G·A + (I−A)·G·(I−A) over the mask list:
/// entry (i, j) keeps G_ij weighted by the frequency of aᵢ = aⱼ.
fn masked_gram_mean(gram: &DMatrix<f64>, masks: &[DiagMask]) -> DMatrix<f64> {
    let d = gram.nrows();
    let mut weights = DMatrix::zeros(d, d);
    for mask in masks {
        let bits = mask.bits();
        for i in 0..d {
            for j in 0..d {
                if bits[i] == bits[j] {
                    weights[(i, j)] += 1.0;
                }
            }
        }
    }
    weights /= masks.len() as f64;
    gram.zip_map(&weights, |g, w| g * w)
}

/// Entry-wise A·G·(I−A) + (I−A)·G·A: keeps G_ij exactly when aᵢ ≠ aⱼ.
fn mask_offdiag(gram: &DMatrix<f64>, mask: &DiagMask) -> DMatrix<f64> {
    let bits = mask.bits();
    let d = gram.nrows();
    DMatrix::from_fn(d, d, |i, j| if bits[i] != bits[j] { gram[(i, j)] } else { 0.0 })
}

/// Central finite differences of [`eval_loss`] entry by entry; the test-side
/// oracle for [`loss_gradient`].
pub fn finite_diff_gradient(
    spec: &LossSpec,
    w: &DMatrix<f64>,
    data: &DataBundle,
    h: f64,
) -> Result<DMatrix<f64>> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Contract("finite-difference step h must be > 0".into()));
    }
    let mut grad = DMatrix::zeros(w.nrows(), w.ncols());
    let mut probe = w.clone();
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            probe[(i, j)] = w[(i, j)] + h;
            let up = eval_loss(spec, &probe, data)?;
            probe[(i, j)] = w[(i, j)] - h;
            let down = eval_loss(spec, &probe, data)?;
            probe[(i, j)] = w[(i, j)];
            grad[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// i.i.d. N(0, 1/ncols) entries; the documented default initialization for
/// both representations (r×d) and decoders (d×r).
pub fn random_init(nrows: usize, ncols: usize, seed_value: u64) -> DMatrix<f64> {
    let mut rng = seed::rng(seed_value);
    let scale = 1.0 / (ncols as f64).sqrt();
    DMatrix::from_fn(nrows, ncols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// The default step 0.01/max(‖S‖₂, λ), with S the kind's quadratic matrix
/// (for the autoencoder kinds, the normalized Gram). Conservative; the
/// iteration budget is what buys accuracy.
pub fn default_step_size(spec: &LossSpec, data: &DataBundle) -> Result<f64> {
    check_bundle(spec, data)?;
    let scale = match data {
        DataBundle::Autoencoder { x, .. } => {
            let xc = center_columns(x);
            spectral_norm_symmetric(&(&xc * xc.transpose() / x.ncols() as f64))
        }
        DataBundle::MaskedAutoencoder { x, .. } => {
            spectral_norm_symmetric(&(x * x.transpose() / x.ncols() as f64))
        }
        _ => {
            let s = match &spec.mask_policy {
                MaskPolicy::Fixed(_) => quad_matrix(spec, data)?,
                // Expectation form for sizing under resampling.
                MaskPolicy::Resample => expected_quad_matrix(spec, data)?,
            };
            spectral_norm_symmetric(&s).max(spec.lambda)
        }
    };
    Ok(0.01 / scale.max(1e-12))
}

/// Expected S under Bernoulli(1/2) masks: (1/4n)·masking numerator plus the
/// mask-free parts.
fn expected_quad_matrix(spec: &LossSpec, data: &DataBundle) -> Result<DMatrix<f64>> {
    let expected_self = |x: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        if x.ncols() < 2 {
            return Err(Error::ContrastDegeneracy("self-supervised contrast needs n >= 2".into()));
        }
        Ok(spectral::masking_expectation_matrix(x)?.matrix() / (4.0 * x.ncols() as f64))
    };
    match data {
        DataBundle::SelfCon { x } => expected_self(x),
        DataBundle::SupConHybrid { x_unlab, class_blocks } => {
            let mut s = spectral::supervised_part(class_blocks, &spec.alpha)?;
            if x_unlab.ncols() > 0 {
                s += expected_self(x_unlab)?;
            }
            Ok(s)
        }
        DataBundle::HsicTransfer { x_unlab, tasks } => {
            let mut s = expected_self(x_unlab)?;
            for ((x_hat, y), &a) in tasks.iter().zip(&spec.alpha) {
                s += spectral::hsic_cross_matrix(x_hat, y)?.matrix() * a;
            }
            Ok(s)
        }
        _ => Err(Error::Contract("autoencoder kinds have no contrastive quadratic form".into())),
    }
}

/// The closed-form minimizer of the loss, scale-matched so it is an exact
/// stationary point: singular values √(λᵢ⁺/λ) on the top-r eigenbasis of S.
/// Under the resampling policy the minimizer of the expected loss is
/// returned. For the autoencoder kinds the scale between encoder and decoder
/// is not identified; the returned W is the orthonormal factor Uᵀ (pair it
/// with the decoder U).
pub fn closed_form_minimizer(spec: &LossSpec, data: &DataBundle, r: usize) -> Result<Representation> {
    check_bundle(spec, data)?;
    match data {
        DataBundle::Autoencoder { x, .. } => {
            let top = spectral::top_r_eigenbasis(&spectral::pca_matrix(x)?, r)?;
            Ok(orthonormal_representation(top))
        }
        DataBundle::MaskedAutoencoder { x, .. } => {
            let target = match &spec.mask_policy {
                MaskPolicy::Fixed(_) => {
                    let gram = x * x.transpose();
                    let masks = fixed_masks(spec, data)?;
                    SymTarget::new(masked_gram_mean(&gram, masks), Provenance::MaskedAe)?
                }
                MaskPolicy::Resample => spectral::masked_ae_matrix(x)?,
            };
            let top = spectral::top_r_eigenbasis(&target, r)?;
            Ok(orthonormal_representation(top))
        }
        _ => {
            let s = match &spec.mask_policy {
                MaskPolicy::Fixed(_) => quad_matrix(spec, data)?,
                MaskPolicy::Resample => expected_quad_matrix(spec, data)?,
            };
            let target = SymTarget::new(s, provenance_of(spec.kind))?;
            let top = spectral::top_r_eigenbasis(&target, r)?;
            let mut w = DMatrix::zeros(r, target.d());
            let mut singular_values = DVector::zeros(r);
            let mut clipped = false;
            for i in 0..r {
                let lambda_i = top.eigenvalues[i];
                if lambda_i > 0.0 {
                    let s_i = (lambda_i / spec.lambda).sqrt();
                    singular_values[i] = s_i;
                    w.row_mut(i).copy_from(&(top.basis.column(i).transpose() * s_i));
                } else {
                    clipped = true;
                }
            }
            Ok(Representation {
                w,
                u: top.basis,
                singular_values,
                clipped,
                gap_tied: top.gap_tied,
            })
        }
    }
}

fn orthonormal_representation(top: spectral::TopEigen) -> Representation {
    let r = top.basis.ncols();
    Representation {
        w: top.basis.transpose(),
        u: top.basis,
        singular_values: DVector::from_element(r, 1.0),
        clipped: false,
        gap_tied: top.gap_tied,
    }
}

fn provenance_of(kind: LossKind) -> Provenance {
    match kind {
        LossKind::SelfCon => Provenance::SelfconAugpair,
        LossKind::SupConHybrid => Provenance::SupconHybrid,
        LossKind::HsicTransfer => Provenance::TransferHybrid,
        LossKind::Autoencoder => Provenance::Pca,
        LossKind::MaskedAutoencoder => Provenance::MaskedAe,
    }
}

// ---------------------------------------------------------------------------
// Gradient descent
// ---------------------------------------------------------------------------

enum Engine {
    /// L(W) = (λ/2)‖WWᵀ‖² − tr(S WᵀW); `fixed` is Some(S) under a fixed mask
    /// list and None under resampling, in which case S is reassembled per
    /// iteration from the cached Gram pieces.
    Quad {
        fixed: Option<DMatrix<f64>>,
        gram: Option<DMatrix<f64>>,
        neg_const: Option<DMatrix<f64>>,
        base: DMatrix<f64>,
        inv_2n: f64,
        lambda: f64,
    },
    /// L(W, D) = c·tr((I−DW)G(I−DW)ᵀ), jointly descended in W and D.
    Recon {
        fixed: Option<DMatrix<f64>>,
        gram: DMatrix<f64>,
        decoder: DMatrix<f64>,
        c: f64,
    },
}

/// Plain gradient descent from `init`, stopping at `max_iters` or when
/// ‖∇‖_F ≤ `grad_tol`. Under the resampling policy one fresh mask is drawn
/// per iteration and applied to all samples. The autoencoder kinds descend
/// the encoder and decoder jointly, starting from the bundled decoder, and
/// return only the encoder.
pub fn minimize(
    spec: &LossSpec,
    data: &DataBundle,
    init: &DMatrix<f64>,
    cfg: &GdConfig,
) -> Result<GdOutcome> {
    check_bundle(spec, data)?;
    let d = data.d();
    if init.ncols() != d {
        return Err(Error::Dimension(format!(
            "init has {} columns, data dimension is {d}",
            init.ncols()
        )));
    }
    if init.amax() == 0.0 {
        return Err(Error::Contract(
            "init must be nonzero; W = 0 is a stationary point of every kind".into(),
        ));
    }
    if !cfg.step_size.is_finite() || cfg.step_size <= 0.0 || cfg.max_iters == 0 {
        return Err(Error::Contract("step_size must be > 0 and max_iters >= 1".into()));
    }

    let resample = matches!(spec.mask_policy, MaskPolicy::Resample);
    let mut engine = build_engine(spec, data)?;
    let mut w = init.clone();
    let mut trace = Vec::with_capacity(cfg.max_iters);
    for iter in 0..cfg.max_iters {
        let mask = if resample && needs_masks(data) {
            Some(random_mask(d, seed::mix(cfg.seed, &[iter as u64])))
        } else {
            None
        };
        let (loss, grad) = match &mut engine {
            Engine::Quad { fixed, gram, neg_const, base, inv_2n, lambda } => {
                let s_owned;
                let s: &DMatrix<f64> = match (fixed.as_ref(), mask.as_ref()) {
                    (Some(s), _) => s,
                    (None, Some(m)) => {
                        let g = gram.as_ref().expect("resampling requires a cached Gram");
                        let neg = neg_const.as_ref().expect("cached negative term");
                        s_owned = (mask_offdiag(g, m) - neg) * *inv_2n + &*base;
                        &s_owned
                    }
                    (None, None) => base,
                };
                let wwt = &w * w.transpose();
                let ws = &w * s;
                let loss = 0.5 * *lambda * wwt.norm_squared() - ws.zip_fold(&w, 0.0, |acc, a, b| acc + a * b);
                let grad = (wwt * &w) * (2.0 * *lambda) - ws * 2.0;
                (loss, grad)
            }
            Engine::Recon { fixed, gram, decoder, c } => {
                let g_owned;
                let g: &DMatrix<f64> = match (fixed.as_ref(), mask.as_ref()) {
                    (Some(g), _) => g,
                    (None, Some(m)) => {
                        g_owned = masked_gram_single(gram, m);
                        &g_owned
                    }
                    (None, None) => gram,
                };
                let wg = &w * g;
                let dwg = &*decoder * &wg;
                // tr((I−DW)G(I−DW)ᵀ) = tr(G) − 2tr(DWG) + tr(DWGWᵀDᵀ)
                let loss = *c
                    * (g.trace() - 2.0 * dwg.trace()
                        + (&wg * w.transpose())
                            .zip_fold(&(decoder.transpose() * &*decoder), 0.0, |acc, a, b| {
                                acc + a * b
                            }));
                let residual_op = g - &dwg;
                let grad_w = (decoder.transpose() * &residual_op) * (-2.0 * *c);
                let grad_d = (&residual_op * w.transpose()) * (-2.0 * *c);
                *decoder -= grad_d * cfg.step_size;
                (loss, grad_w)
            }
        };
        if !loss.is_finite() || loss > 1e12 {
            return Err(Error::Diverged { iter, loss });
        }
        trace.push(loss);
        let grad_norm = grad.norm();
        w -= grad * cfg.step_size;
        if grad_norm <= cfg.grad_tol {
            break;
        }
    }
    Ok(GdOutcome { w, loss_trace: trace })
}

fn build_engine(spec: &LossSpec, data: &DataBundle) -> Result<Engine> {
    match data {
        DataBundle::Autoencoder { x, decoder } => {
            let xc = center_columns(x);
            Ok(Engine::Recon {
                fixed: Some(&xc * xc.transpose()),
                gram: DMatrix::zeros(0, 0),
                decoder: decoder.clone(),
                c: 1.0 / x.ncols() as f64,
            })
        }
        DataBundle::MaskedAutoencoder { x, decoder } => {
            let gram = x * x.transpose();
            let fixed = match &spec.mask_policy {
                MaskPolicy::Fixed(_) => {
                    let masks = fixed_masks(spec, data)?;
                    Some(masked_gram_mean(&gram, masks))
                }
                MaskPolicy::Resample => None,
            };
            Ok(Engine::Recon { fixed, gram, decoder: decoder.clone(), c: 0.5 / x.ncols() as f64 })
        }
        _ => {
            let (x_self, base) = match data {
                DataBundle::SelfCon { x } => (Some(x), DMatrix::zeros(x.nrows(), x.nrows())),
                DataBundle::SupConHybrid { x_unlab, class_blocks } => {
                    let sup = spectral::supervised_part(class_blocks, &spec.alpha)?;
                    (if x_unlab.ncols() > 0 { Some(x_unlab) } else { None }, sup)
                }
                DataBundle::HsicTransfer { x_unlab, tasks } => {
                    let d = x_unlab.nrows();
                    let mut sum = DMatrix::zeros(d, d);
                    for ((x_hat, y), &a) in tasks.iter().zip(&spec.alpha) {
                        sum += spectral::hsic_cross_matrix(x_hat, y)?.matrix() * a;
                    }
                    (Some(x_unlab), sum)
                }
                _ => unreachable!(),
            };
            match x_self {
                None => Ok(Engine::Quad {
                    fixed: Some(base.clone()),
                    gram: None,
                    neg_const: None,
                    base,
                    inv_2n: 0.0,
                    lambda: spec.lambda,
                }),
                Some(x) => {
                    let n = x.ncols();
                    if n < 2 {
                        return Err(Error::ContrastDegeneracy(
                            "self-supervised contrast needs n >= 2".into(),
                        ));
                    }
                    let gram = x * x.transpose();
                    let s_vec = x * DVector::from_element(n, 1.0);
                    let neg_const =
                        (&s_vec * s_vec.transpose() - &gram) / (2.0 * (n as f64 - 1.0));
                    let inv_2n = 1.0 / (2.0 * n as f64);
                    let fixed = match &spec.mask_policy {
                        MaskPolicy::Fixed(_) => {
                            let masks = fixed_masks(spec, data)?;
                            let mut acc = DMatrix::zeros(x.nrows(), x.nrows());
                            for m in masks {
                                acc += mask_offdiag(&gram, m);
                            }
                            acc /= masks.len() as f64;
                            Some((acc - &neg_const) * inv_2n + &base)
                        }
                        MaskPolicy::Resample => None,
                    };
                    Ok(Engine::Quad {
                        fixed,
                        gram: Some(gram),
                        neg_const: Some(neg_const),
                        base,
                        inv_2n,
                        lambda: spec.lambda,
                    })
                }
            }
        }
    }
}

/// A·G·A + (I−A)·G·(I−A) for a single mask: keeps G_ij when aᵢ = aⱼ.
fn masked_gram_single(gram: &DMatrix<f64>, mask: &DiagMask) -> DMatrix<f64> {
    let bits = mask.bits();
    let d = gram.nrows();
    DMatrix::from_fn(d, d, |i, j| if bits[i] == bits[j] { gram[(i, j)] } else { 0.0 })
}
