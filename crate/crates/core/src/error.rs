//! Error types shared by all certifier modules.

use thiserror::Error;

/// Library-wide error type.
///
/// `Input` and `Dimension` are caller mistakes; `Capability` marks requests the
/// library deliberately refuses (wrong exponent, missing oracle, unsupported
/// dimension) rather than silently approximating; `NonSmooth` carries the
/// minimizer cluster that broke a single-valuedness precondition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("capability not available: {0}")]
    Capability(String),

    #[error("operation requires a single-valued proximal point; cluster diameter {diameter:.3e} exceeds tolerance")]
    NonSmooth {
        diameter: f64,
        cluster: Vec<Vec<f64>>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }
}

/// Checks that a slice has the expected length.
pub fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            got: x.len(),
        })
    }
}
