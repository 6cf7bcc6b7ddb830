use thiserror::Error;

/// Errors raised by the numerical core, the simulators and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("reward {reward} outside the support of the {family} family")]
    RewardOutOfSupport { reward: f64, family: &'static str },

    #[error("mean reward undefined for gamma belief with shape {alpha} <= 1")]
    UndefinedMean { alpha: f64 },

    #[error("family mismatch: {0} vs {1}")]
    FamilyMismatch(&'static str, &'static str),

    #[error("expectation parameters ({0}, {1}) are not realizable by the family")]
    NoSolution(f64, f64),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("focal normalizer diverges: belief mass {mass:.4} at or below the tilt threshold {threshold:e}")]
    DivergentNormalizer { mass: f64, threshold: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("horizon mismatch: {0} vs {1}")]
    HorizonMismatch(usize, usize),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl BanditError {
    /// True for failures of an iterative numerical method.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            BanditError::Convergence { .. }
                | BanditError::DivergentNormalizer { .. }
                | BanditError::NoSolution(..)
        )
    }
}

impl From<std::io::Error> for BanditError {
    fn from(e: std::io::Error) -> Self {
        BanditError::Io(e.to_string())
    }
}

pub type Result<T, E = BanditError> = std::result::Result<T, E>;
