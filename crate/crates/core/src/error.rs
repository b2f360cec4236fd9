use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MhdError {
    #[error("field mean {mean:e} is not zero (field norm {norm:e})")]
    MeanNotZero { mean: f64, norm: f64 },

    #[error("Sobolev order must be nonnegative, got {0}")]
    NegativeOrder(f64),

    #[error("Diophantine exponent r must exceed 2, got {0}")]
    InvalidExponent(f64),

    #[error("background vector must be nonzero")]
    ZeroVector,

    #[error("lattice radius must be at least 1, got {0}")]
    InvalidLatticeRadius(i64),

    #[error("background vector is resonant on the scanned lattice (c = 0 at k = {resonant_k:?})")]
    NotDiophantine { resonant_k: [i64; 3] },

    #[error("density approaches vacuum at t = {t}: min(1 + a) = {min_density} < {threshold}")]
    VacuumApproach {
        t: f64,
        min_density: f64,
        threshold: f64,
    },

    #[error("density must be positive, got {0}")]
    NonpositiveDensity(f64),

    #[error("time step {dt:e} violates the {kind} stability limit {limit:e}")]
    StabilityViolation {
        dt: f64,
        limit: f64,
        kind: &'static str,
    },

    #[error("decay fit needs strictly positive values (sample {index} is {value:e})")]
    NonpositiveValues { index: usize, value: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("step {step} from t = {t}: {source}")]
    StepFailed {
        step: u64,
        t: f64,
        #[source]
        source: Box<MhdError>,
    },
}

impl MhdError {
    /// The underlying error, looking through [`MhdError::StepFailed`].
    pub fn root(&self) -> &MhdError {
        match self {
            MhdError::StepFailed { source, .. } => source.root(),
            other => other,
        }
    }

    /// Stability and vacuum failures, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            MhdError::StabilityViolation { .. } | MhdError::VacuumApproach { .. } | MhdError::NonpositiveDensity(_)
        )
    }
}

pub type Result<T, E = MhdError> = std::result::Result<T, E>;
