//! Numerical toolkit for qubit parameter estimation under Markovian noise:
//! Liouvillian construction and spectra, exact and approximate propagation,
//! quantum Fisher information estimators, and small spin-chain models.

pub mod dynamics;
pub mod error;
mod lapack;
pub mod linalg;
pub mod liouville;
pub mod models;
pub mod qfi;
pub mod runner;
pub mod state;

pub use error::{Error, Result};
pub use state::DensityMatrix;
