//! Dense non-Hermitian spectral tools and exceptional-point diagnostics.

mod coalescence;
mod eig;
mod expm;

pub use coalescence::{
    analyze, coalescence_scan, eigenvector_angle, locate_ep, Cluster, CoalescenceReport, EpEstimate, PointError,
    ScanPoint, ScanTolerances,
};
pub use eig::{eig, schur, Schur, Spectrum, DEFAULT_RESIDUAL_TOL};
pub use expm::{expm_action, mat_exp, mat_exp_action, DEFAULT_EXPM_TOL};

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::MatrixError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("empty matrix")]
    Empty,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("QR iteration did not converge after {iterations} sweeps; {unconverged} eigenvalues left")]
    NoConvergence {
        iterations: usize,
        unconverged: usize,
        /// Eigenvalues that had already deflated, in Schur order from the bottom.
        converged: Vec<Complex64>,
    },
    #[error("eigenpair {index} has residual {residual:e} above bound {bound:e}")]
    ResidualBound { index: usize, residual: f64, bound: f64 },
    #[error("matrix exponential overflows (1-norm {norm:e})")]
    Overflow { norm: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("grid must be non-empty and strictly increasing")]
    InvalidGrid,
}
