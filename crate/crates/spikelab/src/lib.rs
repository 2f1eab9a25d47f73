//! spikelab is a numerical laboratory for linear representation learning on
//! spiked covariance models. It provides seeded generative models, closed-form
//! spectral solvers for contrastive and reconstruction objectives, a plain
//! gradient-descent oracle that cross-checks every solver, subspace-recovery
//! and downstream-risk metrics, and a config-driven experiment harness.
//!
//! The five modules mirror the pipeline:
//!
//! * [`datagen`] — spiked models, Gaussian mixtures, masks, labeled tasks.
//! * [`spectral`] — symmetric target matrices and their top-r eigenspaces.
//! * [`optim`] — raw loss functions and gradient descent, used as an oracle.
//! * [`metrics`] — sin-Θ distances, incoherence, regression/classification risk.
//! * [`harness`] — experiment sweeps, CSV/markdown output, validation suite.
//!
//! Every stochastic operation takes an explicit 64-bit seed; there is no
//! global RNG state, so sweeps are replayable bit for bit.

pub mod datagen;
mod error;
pub mod harness;
pub mod metrics;
pub mod optim;
pub mod seed;
pub mod spectral;

pub use error::{Error, Result};
