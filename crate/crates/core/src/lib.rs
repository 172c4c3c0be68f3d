//! Two-mode bosonic model with gain/loss: Fock-space operators, non-Hermitian
//! spectra, Liouvillian checks and quantum-jump trajectories.

pub mod fockspace;
pub mod liouvillian;
pub mod matrix;
pub mod model;
pub mod spectral;
pub mod trajectory;

pub use matrix::ComplexMatrix;
pub use model::SystemParams;
