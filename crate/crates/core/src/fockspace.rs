//! Truncated two-mode Fock space.
//!
//! Each mode keeps levels `0..d`. The two-mode basis index is
//! `n_a * d + n_b` (mode A major), so `embed(X, A) = X ⊗ I` and
//! `embed(Y, B) = I ⊗ Y`.
//!
//! Truncation breaks `[a, a†] = 1` on the top level of each mode. Identities
//! that rely on the bosonic algebra are therefore checked on the interior
//! subspace, where every mode occupation is at most `d - 2`.
//!
//! The displaced operators `c+`, `d+` and the supermode operators `e+`, `f+`
//! are not adjoints of `c`, `d`, `e`, `f`; they are assembled from their
//! defining linear combinations and never via [`ComplexMatrix::dagger`].

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::{ComplexMatrix, MatrixError, ONE, ZERO};
use crate::model::SystemParams;

pub const DEFAULT_CUTOFF: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("Fock cutoff must keep at least two levels, got {0}")]
    CutoffTooSmall(usize),
    #[error("operator is {rows}x{cols} but the cutoff expects {expected}x{expected}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("displacement is singular: g^2 + gamma_a*gamma_b = 0")]
    SingularTransformation,
    #[error("supermode rotation undefined at the exceptional point (kappa = g = {g})")]
    ExceptionalPoint { g: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Number of Fock levels kept per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub fn new(d: usize) -> Result<Self, FockError> {
        if d < 2 {
            return Err(FockError::CutoffTooSmall(d));
        }
        Ok(Self(d))
    }

    #[inline]
    pub fn levels(self) -> usize {
        self.0
    }

    /// Two-mode Hilbert-space dimension `d^2`.
    #[inline]
    pub fn hilbert_dim(self) -> usize {
        self.0 * self.0
    }

    #[inline]
    pub fn index(self, n_a: usize, n_b: usize) -> usize {
        debug_assert!(n_a < self.0 && n_b < self.0);
        n_a * self.0 + n_b
    }

    #[inline]
    pub fn occupations(self, index: usize) -> (usize, usize) {
        (index / self.0, index % self.0)
    }

    /// Basis indices whose occupations are all at most `d - 2`.
    pub fn interior_indices(self) -> Vec<usize> {
        (0..self.hilbert_dim())
            .filter(|&k| {
                let (na, nb) = self.occupations(k);
                na + 2 <= self.0 && nb + 2 <= self.0
            })
            .collect()
    }

    /// Basis indices of the `n`-excitation manifold, `n_a + n_b = n`.
    pub fn excitation_block(self, n: usize) -> Vec<usize> {
        (0..self.hilbert_dim())
            .filter(|&k| {
                let (na, nb) = self.occupations(k);
                na + nb == n
            })
            .collect()
    }

    /// `|n_a⟩|n_b⟩` as a state vector.
    pub fn basis_state(self, n_a: usize, n_b: usize) -> Vec<Complex64> {
        let mut v = vec![ZERO; self.hilbert_dim()];
        v[self.index(n_a, n_b)] = ONE;
        v
    }

    pub fn vacuum(self) -> Vec<Complex64> {
        self.basis_state(0, 0)
    }
}

impl Default for FockCutoff {
    fn default() -> Self {
        Self(DEFAULT_CUTOFF)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    A,
    B,
}

/// Single-mode ladder operator with `(k, k+1) = sqrt(k+1)`.
pub fn annihilation(cutoff: FockCutoff) -> ComplexMatrix {
    let d = cutoff.levels();
    let mut a = ComplexMatrix::zeros(d, d);
    for k in 0..d - 1 {
        a[(k, k + 1)] = Complex64::new(((k + 1) as f64).sqrt(), 0.0);
    }
    a
}

pub fn creation(cutoff: FockCutoff) -> ComplexMatrix {
    annihilation(cutoff).dagger()
}

pub fn number(cutoff: FockCutoff) -> ComplexMatrix {
    let diag: Vec<Complex64> = (0..cutoff.levels()).map(|k| Complex64::new(k as f64, 0.0)).collect();
    ComplexMatrix::from_diagonal(&diag)
}

/// Lifts a single-mode operator to the two-mode space.
pub fn embed(op: &ComplexMatrix, mode: ModeLabel, cutoff: FockCutoff) -> Result<ComplexMatrix, FockError> {
    let d = cutoff.levels();
    if op.rows() != d || op.cols() != d {
        return Err(FockError::DimensionMismatch {
            rows: op.rows(),
            cols: op.cols(),
            expected: d,
        });
    }
    let id = ComplexMatrix::identity(d);
    Ok(match mode {
        ModeLabel::A => op.kron(&id),
        ModeLabel::B => id.kron(op),
    })
}

/// Two-mode ladder operators `a`, `a†`, `b`, `b†`.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub a: ComplexMatrix,
    pub a_dag: ComplexMatrix,
    pub b: ComplexMatrix,
    pub b_dag: ComplexMatrix,
}

impl Ladder {
    pub fn new(cutoff: FockCutoff) -> Self {
        let single = annihilation(cutoff);
        let a = embed(&single, ModeLabel::A, cutoff).expect("cutoff-sized operator");
        let b = embed(&single, ModeLabel::B, cutoff).expect("cutoff-sized operator");
        Self {
            a_dag: a.dagger(),
            b_dag: b.dagger(),
            a,
            b,
        }
    }

    pub fn number_a(&self) -> ComplexMatrix {
        self.a_dag.matmul(&self.a)
    }

    pub fn number_b(&self) -> ComplexMatrix {
        self.b_dag.matmul(&self.b)
    }
}

/// The displaced pair `c = a + εα`, `c+ = a† + εβ`, `d = b + εδ`, `d+ = b† + εθ`.
#[derive(Debug, Clone)]
pub struct DisplacedOps {
    pub c: ComplexMatrix,
    pub c_plus: ComplexMatrix,
    pub d: ComplexMatrix,
    pub d_plus: ComplexMatrix,
}

/// The displacement constants `(α, β, δ, θ)`.
pub fn displacement_constants(params: &SystemParams) -> Result<[Complex64; 4], FockError> {
    let xi = params.g * params.g + params.gamma_a * params.gamma_b;
    if xi == 0.0 {
        return Err(FockError::SingularTransformation);
    }
    let alpha = Complex64::new(params.gamma_b, -params.g) / xi;
    let delta = Complex64::new(params.gamma_a, -params.g) / xi;
    Ok([alpha, -alpha, delta, -delta])
}

/// Displaced operators built from the damping rates in `params` as given.
///
/// For a thermal model pass [`SystemParams::effective_rates`] to obtain the
/// operators that diagonalize the thermal non-Hermitian Hamiltonian.
pub fn displaced_ops(params: &SystemParams, cutoff: FockCutoff) -> Result<DisplacedOps, FockError> {
    let [alpha, beta, delta, theta] = displacement_constants(params)?;
    let ladder = Ladder::new(cutoff);
    let eps = params.eps;
    let id = ComplexMatrix::identity(cutoff.hilbert_dim());
    let shifted = |op: &ComplexMatrix, k: Complex64| op + &id.scale(k * eps);
    Ok(DisplacedOps {
        c: shifted(&ladder.a, alpha),
        c_plus: shifted(&ladder.a_dag, beta),
        d: shifted(&ladder.b, delta),
        d_plus: shifted(&ladder.b_dag, theta),
    })
}

/// Sine and cosine of the half mixing angle for a given coupling and
/// gain/loss contrast. Returns `(cos, sin)`.
pub fn half_angle(g: f64, kappa: f64) -> Result<(Complex64, Complex64), FockError> {
    let omega = crate::model::omega(g, kappa);
    if omega == ZERO {
        return Err(FockError::ExceptionalPoint { g });
    }
    let ik = Complex64::new(0.0, kappa);
    let sin = ((omega + ik) / (omega * 2.0)).sqrt();
    let cos = ((omega - ik) / (omega * 2.0)).sqrt();
    Ok((cos, sin))
}

/// The 2x2 supermode rotation `R = [[cos, sin], [-sin, cos]]`.
pub fn supermode_rotation(params: &SystemParams) -> Result<ComplexMatrix, FockError> {
    let kappa = 0.5 * (params.gamma_a - params.gamma_b);
    let (cos, sin) = half_angle(params.g, kappa)?;
    Ok(ComplexMatrix::from_rows(&[vec![cos, sin], vec![-sin, cos]])?)
}

/// Supermode operators `[e, f] = R [c, d]` and `[e+, f+] = R [c+, d+]`.
#[derive(Debug, Clone)]
pub struct SupermodeOps {
    pub e: ComplexMatrix,
    pub e_plus: ComplexMatrix,
    pub f: ComplexMatrix,
    pub f_plus: ComplexMatrix,
}

pub fn supermode_ops(params: &SystemParams, cutoff: FockCutoff) -> Result<SupermodeOps, FockError> {
    let r = supermode_rotation(params)?;
    let ops = displaced_ops(params, cutoff)?;
    let mix = |x: &ComplexMatrix, y: &ComplexMatrix, row: usize| &x.scale(r[(row, 0)]) + &y.scale(r[(row, 1)]);
    Ok(SupermodeOps {
        e: mix(&ops.c, &ops.d, 0),
        f: mix(&ops.c, &ops.d, 1),
        e_plus: mix(&ops.c_plus, &ops.d_plus, 0),
        f_plus: mix(&ops.c_plus, &ops.d_plus, 1),
    })
}

/// Perfect shuffle exchanging the two tensor factors, `|m⟩|n⟩ -> |n⟩|m⟩`.
pub fn shuffle(cutoff: FockCutoff) -> ComplexMatrix {
    let dim = cutoff.hilbert_dim();
    let mut s = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        let (na, nb) = cutoff.occupations(k);
        s[(cutoff.index(nb, na), k)] = ONE;
    }
    s
}

/// Spatial reflection `P = P_S exp(iπ(n_a + n_b))` at zero drive, where the
/// displaced operators reduce to the bare ladder operators.
pub fn parity_pt_operator(cutoff: FockCutoff) -> ComplexMatrix {
    let dim = cutoff.hilbert_dim();
    let phases: Vec<Complex64> = (0..dim)
        .map(|k| {
            let (na, nb) = cutoff.occupations(k);
            if (na + nb) % 2 == 0 {
                ONE
            } else {
                -ONE
            }
        })
        .collect();
    shuffle(cutoff).matmul(&ComplexMatrix::from_diagonal(&phases))
}

/// Restriction of an operator to the interior subspace.
pub fn interior(op: &ComplexMatrix, cutoff: FockCutoff) -> ComplexMatrix {
    op.restrict(&cutoff.interior_indices())
}

/// Truncated single-mode coherent state `|z⟩`, renormalized after truncation.
pub fn coherent_state(z: Complex64, cutoff: FockCutoff) -> Vec<Complex64> {
    let mut amp = Vec::with_capacity(cutoff.levels());
    let mut current = ONE;
    for k in 0..cutoff.levels() {
        if k > 0 {
            current = current * z / (k as f64).sqrt();
        }
        amp.push(current);
    }
    crate::matrix::normalize(&mut amp);
    amp
}

/// Product state of two single-mode vectors in the mode-A-major basis.
pub fn product_state(psi_a: &[Complex64], psi_b: &[Complex64]) -> Vec<Complex64> {
    psi_a.iter().flat_map(|&x| psi_b.iter().map(move |&y| x * y)).collect()
}
