use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {samples} samples for {classes} classes (need more samples than classes)")]
    InsufficientData { samples: usize, classes: usize },

    /// Cholesky pivot fell below the relative tolerance.
    #[error(
        "singular sub-matrix: pivot {pivot:.3e} at position {position} (feature {feature}) \
         is below tolerance {tolerance:.3e}"
    )]
    SingularSubmatrix {
        position: usize,
        feature: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    /// `p <= (alpha / 2) * exp((N - L) / 4)` does not hold.
    #[error("variance-estimation admissibility violated: p = {p} exceeds (alpha/2)*exp((N-L)/4) = {bound:.6e}")]
    KappaAdmissibility { p: f64, bound: f64 },

    #[error("variance-inflation factor kappa = {kappa:.6} is not below 1")]
    KappaTooLarge { kappa: f64 },

    #[error("cannot construct instance: {0}")]
    Infeasible(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Numerical failures (singular sub-matrix, kappa admissibility) as opposed
    /// to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSubmatrix { .. }
                | Error::KappaAdmissibility { .. }
                | Error::KappaTooLarge { .. }
        )
    }
}
