use thiserror::Error;

/// Errors shared across the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max entrywise deviation {dev:.3e}, tolerance {tol:.3e})")]
    NonHermitian { dev: f64, tol: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("defective spectrum: eigenvalue cluster [{cluster}] cannot be biorthogonalized")]
    DefectiveSpectrum { cluster: String },
    #[error("negative decay rate {0}")]
    NegativeRate(f64),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(
        "unstable finite-difference derivative: extrapolation error {err:.3e} \
         exceeds {limit:.3e}"
    )]
    UnstableDerivative { err: f64, limit: f64 },
    #[error("dissipative part does not commute with the coherent part (commutator norm {0:.3e})")]
    NotPhaseCovariant(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("LAPACK routine {routine} failed (info = {info})")]
    Lapack { routine: &'static str, info: i32 },
    #[error("adaptive step size underflow at t = {0:.6e}")]
    StepUnderflow(f64),
    #[error("pure Bloch vector with nonzero radial derivative (r·dr = {0:.3e})")]
    InconsistentPureState(f64),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
