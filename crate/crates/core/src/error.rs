use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precision must be at least 15 decimal digits, got {0}")]
    InvalidPrecision(u32),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("eigenvalue iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("high-precision path needs the Harper parameters to rebuild the real-symmetric form")]
    UnsupportedHighPrecisionInput,

    #[error("eigenvectors are only available at machine precision")]
    VectorsUnavailable,

    #[error("operation requires a = 1 (rescale first), got a = {0}")]
    RequiresUnitAmplitude(f64),

    #[error("operation requires b = 0, got b = {0}")]
    RequiresZeroOffset(f64),

    #[error("empty bracket [{0}, {1}]")]
    EmptyBracket(f64, f64),

    #[error("no split detected between {0} and {1} at this precision")]
    NoSplitDetected(f64, f64),

    #[error("check requires even dimension, got {0}")]
    OddDimension(usize),

    #[error("check requires odd dimension, got {0}")]
    EvenDimension(usize),

    #[error("propagator lost unitarity (deviation {0:e})")]
    UnitarityLoss(f64),

    #[error("|eps| = {eps} is not below |a| = {a}: no separated librating regions")]
    RegionOverlap { a: f64, eps: f64 },

    #[error("step refinement did not reach tolerance {tol:e} (last change {last_delta:e} at {steps} steps)")]
    RefinementNotConverged { tol: f64, last_delta: f64, steps: usize },

    #[error("Mathieu truncation did not converge (last change {0:e})")]
    MathieuNotConverged(f64),

    #[error("precision budget not met: need {required} digits, have {available}")]
    PrecisionBudget { required: u32, available: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
