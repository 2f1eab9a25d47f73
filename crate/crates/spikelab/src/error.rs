use thiserror::Error;

/// Errors surfaced by the library.
///
/// The CLI maps `Config` to exit code 2, `Io` to exit code 3 and everything
/// else to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible or non-positive dimensions.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A contrastive construction is undefined, e.g. no negative pairs
    /// (n < 2), a class block with fewer than two samples, or fewer than two
    /// classes.
    #[error("contrast degeneracy: {0}")]
    ContrastDegeneracy(String),

    /// An input violates a documented precondition (non-orthonormal basis,
    /// mismatched data bundle, non-unit task vector, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A linear system that the theory guarantees invertible turned out
    /// singular for the given inputs.
    #[error("singular system: {0}")]
    Singular(String),

    /// The symmetric eigensolver did not converge or produced residuals
    /// above tolerance.
    #[error("eigensolver failure: {0}")]
    Eigen(String),

    /// Gradient descent blew past the divergence guard.
    #[error("gradient descent diverged at iteration {iter} (loss {loss:.3e}); reduce the step size")]
    Diverged { iter: usize, loss: f64 },

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
