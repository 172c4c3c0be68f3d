//! Lindblad generator as a superoperator, first-moment dynamics and the
//! Liouvillian exceptional point.
//!
//! Density matrices are vectorized by stacking columns, so
//! `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use num_complex::Complex64;
use thiserror::Error;

use crate::fockspace::{FockCutoff, FockError, Ladder};
use crate::matrix::{ComplexMatrix, MatrixError, I, ZERO};
use crate::model::{self, DerivedParams, ModelError, SystemParams};
use crate::spectral::{self, Cluster, ScanTolerances, SpectralError};

/// Largest cutoff accepted by [`liouvillian_spectrum_check`] (`D² = 4096`).
pub const MAX_SPECTRUM_CUTOFF: usize = 8;
/// Tolerance used when validating density matrices.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiouvillianError {
    #[error("cutoff {0} too large for a dense Liouvillian spectrum (max {MAX_SPECTRUM_CUTOFF})")]
    CutoffTooLarge(usize),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Column-stacking `vec(ρ)`.
pub fn vectorize(rho: &ComplexMatrix) -> Vec<Complex64> {
    rho.transpose().as_slice().to_vec()
}

/// Inverse of [`vectorize`] for a `dim × dim` matrix.
pub fn unvectorize(v: &[Complex64], dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| v[j * dim + i])
}

/// `−i[H, ρ] + ½ Σ (2CρC† − C†Cρ − ρC†C)` evaluated on matrices.
pub fn lindblad_rhs(h: &ComplexMatrix, collapse: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = h.commutator(rho).scale(-I);
    for c in collapse {
        let cd = c.dagger();
        let cdc = cd.matmul(c);
        out += &c.matmul(rho).matmul(&cd);
        out -= &(&cdc.matmul(rho) + &rho.matmul(&cdc)).scale_real(0.5);
    }
    out
}

fn collapse_matrices(params: &SystemParams, cutoff: FockCutoff) -> Vec<ComplexMatrix> {
    model::build_collapse_ops(params, cutoff).into_iter().map(|c| c.matrix).collect()
}

/// Dense generator acting on `vec(ρ)`.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub matrix: ComplexMatrix,
    hilbert_dim: usize,
}

impl Superoperator {
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        unvectorize(&self.matrix.matvec(&vectorize(rho)), self.hilbert_dim)
    }

    /// Largest entry of the row functional `vec(I)ᵀ L`; zero for a
    /// trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hilbert_dim;
        (0..d * d)
            .map(|col| (0..d).map(|i| self.matrix[(i * d + i, col)]).sum::<Complex64>().norm())
            .fold(0.0, f64::max)
    }
}

/// Generator assembled term by term from `H` and the collapse operators:
/// `−i(I⊗H − Hᵀ⊗I) + Σ [C̄⊗C − ½ I⊗C†C − ½ (C†C)ᵀ⊗I]`.
pub fn build_liouvillian(params: &SystemParams, cutoff: FockCutoff) -> Superoperator {
    let dim = cutoff.hilbert_dim();
    let id = ComplexMatrix::identity(dim);
    let h = model::build_hamiltonian(params, cutoff);
    let mut l = (&id.kron(&h) - &h.transpose().kron(&id)).scale(-I);
    for c in collapse_matrices(params, cutoff) {
        let cdc = c.dagger().matmul(&c);
        l += &c.conj().kron(&c);
        l -= &(&id.kron(&cdc) + &cdc.transpose().kron(&id)).scale_real(0.5);
    }
    Superoperator {
        matrix: l,
        hilbert_dim: dim,
    }
}

/// Same generator from the non-Hermitian Hamiltonian plus jumps:
/// `−i I⊗H_nH + i conj(H_nH)⊗I + Σ C̄⊗C`.
pub fn build_liouvillian_from_h_nh(params: &SystemParams, cutoff: FockCutoff) -> Superoperator {
    let dim = cutoff.hilbert_dim();
    let id = ComplexMatrix::identity(dim);
    let h_nh = model::build_h_nh(params, cutoff);
    let mut l = &id.kron(&h_nh).scale(-I) + &h_nh.conj().kron(&id).scale(I);
    for c in collapse_matrices(params, cutoff) {
        l += &c.conj().kron(&c);
    }
    Superoperator {
        matrix: l,
        hilbert_dim: dim,
    }
}

/// Matrix-free generator `ρ ↦ −i(H_nH ρ − ρ H_nH†) + Σ CρC†`.
#[derive(Debug, Clone)]
pub struct Generator {
    h_nh: ComplexMatrix,
    h_nh_dag: ComplexMatrix,
    collapse: Vec<(ComplexMatrix, ComplexMatrix)>,
    norm_bound: f64,
}

impl Generator {
    pub fn new(params: &SystemParams, cutoff: FockCutoff) -> Self {
        let h_nh = model::build_h_nh(params, cutoff);
        let collapse: Vec<(ComplexMatrix, ComplexMatrix)> = collapse_matrices(params, cutoff)
            .into_iter()
            .map(|c| {
                let cd = c.dagger();
                (c, cd)
            })
            .collect();
        let norm_bound = 2.0 * h_nh.norm_one() + collapse.iter().map(|(c, _)| c.norm_one().powi(2)).sum::<f64>();
        Self {
            h_nh_dag: h_nh.dagger(),
            h_nh,
            collapse,
            norm_bound,
        }
    }

    pub fn dim(&self) -> usize {
        self.h_nh.rows()
    }

    /// Upper bound on the 1-norm of the vectorized generator.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = (&self.h_nh.matmul(rho) - &rho.matmul(&self.h_nh_dag)).scale(-I);
        for (c, cd) in &self.collapse {
            out += &c.matmul(rho).matmul(cd);
        }
        out
    }

    /// `exp(tL) ρ`.
    pub fn evolve(&self, rho: &ComplexMatrix, t: f64, tol: f64) -> Result<ComplexMatrix, SpectralError> {
        let dim = self.dim();
        let v = spectral::expm_action(
            |x| vectorize(&self.apply(&unvectorize(x, dim))),
            self.norm_bound,
            &vectorize(rho),
            t,
            tol,
        )?;
        Ok(unvectorize(&v, dim))
    }
}

/// Checks that `rho` is Hermitian, has unit trace and no eigenvalue below `−tol`.
pub fn validate_density_matrix(rho: &ComplexMatrix, dim: usize, tol: f64) -> Result<(), LiouvillianError> {
    let bad = |m: String| Err(LiouvillianError::InvalidDensity(m));
    if rho.rows() != dim || rho.cols() != dim {
        return bad(format!("expected {dim}x{dim}, got {}x{}", rho.rows(), rho.cols()));
    }
    let herm = rho.max_abs_diff(&rho.dagger());
    if herm > tol {
        return bad(format!("not Hermitian (deviation {herm:e})"));
    }
    let tr = rho.trace();
    if (tr - 1.0).norm() > tol {
        return bad(format!("trace {tr} differs from 1"));
    }
    let spec = spectral::eig(rho, false, spectral::DEFAULT_RESIDUAL_TOL)?;
    let min = spec.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if min < -tol {
        return bad(format!("negative eigenvalue {min:e}"));
    }
    Ok(())
}

/// First-moment derivatives computed from the generator and from the
/// closed moment equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    /// `(d⟨a⟩/dt, d⟨b⟩/dt)` as `tr(a L[ρ])`, `tr(b L[ρ])`.
    pub from_liouvillian: [Complex64; 2],
    /// `−iM[⟨a⟩, ⟨b⟩]ᵀ − [ε, ε]ᵀ`.
    pub from_moments: [Complex64; 2],
    pub discrepancy: f64,
}

/// Compares `tr(a L[ρ])` with `−γₐ⟨a⟩ − ig⟨b⟩ − ε` (and likewise for `b`).
///
/// On a truncated space the two agree only when `ρ` has no weight on the
/// top Fock level of either mode.
pub fn moment_rhs_check(params: &SystemParams, cutoff: FockCutoff, rho: &ComplexMatrix) -> Result<MomentCheck, LiouvillianError> {
    validate_density_matrix(rho, cutoff.hilbert_dim(), DENSITY_TOL)?;
    let h = model::build_hamiltonian(params, cutoff);
    let drho = lindblad_rhs(&h, &collapse_matrices(params, cutoff), rho);
    let l = Ladder::new(cutoff);
    let expect = |op: &ComplexMatrix, m: &ComplexMatrix| op.matmul(m).trace();
    let from_liouvillian = [expect(&l.a, &drho), expect(&l.b, &drho)];
    let moments = [expect(&l.a, rho), expect(&l.b, rho)];
    let dm = dynamical_matrix(params);
    let mv = dm.m.matvec(&moments);
    let from_moments = [-I * mv[0] - dm.v0[0], -I * mv[1] - dm.v0[1]];
    let discrepancy = (from_liouvillian[0] - from_moments[0])
        .norm()
        .max((from_liouvillian[1] - from_moments[1]).norm());
    Ok(MomentCheck {
        from_liouvillian,
        from_moments,
        discrepancy,
    })
}

/// `v̇ = −iM v − v0` with `v = [⟨a⟩, ⟨b⟩]ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalMatrix {
    pub m: ComplexMatrix,
    pub v0: [Complex64; 2],
}

/// `M = [[−iγₐ, g], [g, −iγ_b]]`; the thermal occupation does not enter.
pub fn dynamical_matrix(params: &SystemParams) -> DynamicalMatrix {
    let g = Complex64::new(params.g, 0.0);
    let m = ComplexMatrix::from_row_major(2, 2, vec![-I * params.gamma_a, g, g, -I * params.gamma_b])
        .expect("2x2 layout");
    let e = Complex64::new(params.eps, 0.0);
    DynamicalMatrix { m, v0: [e, e] }
}

/// `λ± = ±Ω − iγ`.
pub fn lambda_pm(derived: &DerivedParams) -> (Complex64, Complex64) {
    let shift = -I * derived.gamma;
    (derived.omega + shift, -derived.omega + shift)
}

/// Unit vectors along `[±Ω − iκ, g]ᵀ`.
pub fn v_pm(derived: &DerivedParams) -> ([Complex64; 2], [Complex64; 2]) {
    let g = Complex64::new(derived.g, 0.0);
    let make = |w: Complex64| {
        let mut v = [w - I * derived.kappa, g];
        crate::matrix::normalize(&mut v);
        v
    };
    (make(derived.omega), make(-derived.omega))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianSpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    /// `−γ + iΩ` and `−γ − iΩ`.
    pub targets: [Complex64; 2],
    /// Distance from each target to the nearest eigenvalue.
    pub distances: [f64; 2],
    /// Distance from zero to the nearest eigenvalue.
    pub zero_distance: f64,
    /// Cluster holding the eigenvalue nearest `−γ + iΩ`, if it is degenerate.
    pub target_cluster: Option<Cluster>,
    pub coalescence: bool,
    pub tol: f64,
}

impl LiouvillianSpectrumReport {
    pub fn passed(&self) -> bool {
        self.distances.iter().all(|&d| d <= self.tol) && self.zero_distance <= self.tol
    }
}

/// Full-Liouvillian spectrum at `ε = 0` compared with the first-moment
/// eigenvalues `−γ ± iΩ`. The drive only adds an affine term, so it is
/// dropped here.
pub fn liouvillian_spectrum_check(params: &SystemParams, cutoff: FockCutoff, tol: f64) -> Result<LiouvillianSpectrumReport, LiouvillianError> {
    if cutoff.levels() > MAX_SPECTRUM_CUTOFF {
        return Err(LiouvillianError::CutoffTooLarge(cutoff.levels()));
    }
    let undriven = params.with_eps(0.0)?;
    let l = build_liouvillian(&undriven, cutoff);
    let report = spectral::analyze(0.0, &l.matrix, &ScanTolerances::default())?;
    let omega = model::omega(params.g, params.kappa());
    let gamma = params.gamma();
    let targets = [-gamma + I * omega, -gamma - I * omega];
    let nearest = |z: Complex64| {
        report
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (w - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty spectrum")
    };
    let (idx, d0) = nearest(targets[0]);
    let (_, d1) = nearest(targets[1]);
    let (_, zero_distance) = nearest(ZERO);
    let target_cluster = report.clusters.iter().find(|c| c.members.contains(&idx)).cloned();
    let coalescence = target_cluster.as_ref().is_some_and(|c| c.min_angle < ScanTolerances::default().angle);
    Ok(LiouvillianSpectrumReport {
        eigenvalues: report.eigenvalues,
        targets,
        distances: [d0, d1],
        zero_distance,
        target_cluster,
        coalescence,
        tol,
    })
}
