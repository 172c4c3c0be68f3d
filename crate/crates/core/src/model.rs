//! Two coupled, coherently driven, lossy resonators.
//!
//! Hermitian part `H = g(a†b + b†a) + iε(a − a†) + iε(b − b†)`. The bath is
//! either at zero temperature (two lowering collapse operators) or holds `n`
//! thermal photons (lowering and raising channels for each mode).
//!
//! Rates are in arbitrary inverse-time units; only ratios matter.

use num_complex::Complex64;
use thiserror::Error;

use crate::fockspace::{self, FockCutoff, FockError, Ladder, ModeLabel};
use crate::matrix::{ComplexMatrix, I};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("drive shift has a pole: g^2 + (gamma^2 - kappa^2)(2n+1)^2 = 0")]
    ChiPole,
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// One model instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub g: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub eps: f64,
    pub n_th: f64,
}

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), ModelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value, reason })
    }
}

impl SystemParams {
    pub fn new(g: f64, gamma_a: f64, gamma_b: f64, eps: f64, n_th: f64) -> Result<Self, ModelError> {
        check("g", g, g > 0.0, "coupling must be positive")?;
        check("gamma_a", gamma_a, gamma_a >= 0.0, "damping must be non-negative")?;
        check("gamma_b", gamma_b, gamma_b >= 0.0, "damping must be non-negative")?;
        check("eps", eps, eps >= 0.0, "drive must be non-negative")?;
        check("n_th", n_th, n_th >= 0.0, "thermal occupation must be non-negative")?;
        Ok(Self {
            g,
            gamma_a,
            gamma_b,
            eps,
            n_th,
        })
    }

    /// Parameters from the mean damping `γ` and the contrast `κ`, so that
    /// `γa = γ + κ` and `γb = γ − κ`.
    pub fn from_mean_contrast(g: f64, gamma: f64, kappa: f64, eps: f64, n_th: f64) -> Result<Self, ModelError> {
        Self::new(g, gamma + kappa, gamma - kappa, eps, n_th)
    }

    pub fn gamma(&self) -> f64 {
        0.5 * (self.gamma_a + self.gamma_b)
    }

    pub fn kappa(&self) -> f64 {
        0.5 * (self.gamma_a - self.gamma_b)
    }

    pub fn is_thermal(&self) -> bool {
        self.n_th > 0.0
    }

    pub fn with_eps(self, eps: f64) -> Result<Self, ModelError> {
        Self::new(self.g, self.gamma_a, self.gamma_b, eps, self.n_th)
    }

    pub fn with_n_th(self, n_th: f64) -> Result<Self, ModelError> {
        Self::new(self.g, self.gamma_a, self.gamma_b, self.eps, n_th)
    }

    pub fn with_g(self, g: f64) -> Result<Self, ModelError> {
        Self::new(g, self.gamma_a, self.gamma_b, self.eps, self.n_th)
    }

    /// Zero-temperature parameters with the thermally enhanced damping
    /// `γ'ₐ = (2n+1)γₐ`, `γ'_b = (2n+1)γ_b`. The thermal non-Hermitian
    /// Hamiltonian equals the optical one for these rates up to `−χₜ I`.
    pub fn effective_rates(&self) -> Self {
        let s = 2.0 * self.n_th + 1.0;
        Self {
            gamma_a: s * self.gamma_a,
            gamma_b: s * self.gamma_b,
            n_th: 0.0,
            ..*self
        }
    }
}

/// `Ω = sqrt(g² − κ²)`, continued as `i·sqrt(κ² − g²)` past the exceptional point.
pub fn omega(g: f64, kappa: f64) -> Complex64 {
    let disc = g * g - kappa * kappa;
    if disc >= 0.0 {
        Complex64::new(disc.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-disc).sqrt())
    }
}

/// Closed-form derived quantities.
///
/// `chi` and `chi_p` follow the closed-form convention (imaginary part only);
/// `chi_full` and `chi_p_full` keep the real part `2ε²g/ξ` produced by
/// completing the square, which is what the truncated matrices contain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub g: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub xi: f64,
    pub omega: Complex64,
    pub chi: Complex64,
    pub chi_full: Complex64,
    pub gamma_p: f64,
    pub kappa_p: f64,
    pub xi_p: f64,
    pub omega_p: Complex64,
    pub chi_t: Complex64,
    pub chi_p: Complex64,
    pub chi_p_full: Complex64,
}

pub fn derive(params: &SystemParams) -> Result<DerivedParams, ModelError> {
    let SystemParams {
        g,
        gamma_a,
        gamma_b,
        eps,
        n_th: n,
    } = *params;
    let gamma = 0.5 * (gamma_a + gamma_b);
    let kappa = 0.5 * (gamma_a - gamma_b);
    let s = 2.0 * n + 1.0;
    let pole = g * g + gamma * gamma - kappa * kappa;
    let pole_p = g * g + (gamma * gamma - kappa * kappa) * s * s;
    if pole == 0.0 || pole_p == 0.0 {
        return Err(ModelError::ChiPole);
    }
    let e2 = eps * eps;
    let gamma_p = s * gamma;
    let kappa_p = s * kappa;
    let chi_t = Complex64::new(0.0, n * (gamma_a + gamma_b));
    Ok(DerivedParams {
        g,
        gamma,
        kappa,
        xi: g * g + gamma_a * gamma_b,
        omega: omega(g, kappa),
        chi: Complex64::new(0.0, 2.0 * e2 * gamma / pole),
        chi_full: Complex64::new(2.0 * e2 * g, 2.0 * e2 * gamma) / pole,
        gamma_p,
        kappa_p,
        xi_p: pole_p,
        omega_p: omega(g, kappa_p),
        chi_t,
        chi_p: Complex64::new(0.0, 2.0 * gamma * (n + e2 * s / pole_p)),
        chi_p_full: chi_t + Complex64::new(2.0 * e2 * g, 2.0 * e2 * gamma_p) / pole_p,
    })
}

/// Hermitian Hamiltonian `g(a†b + b†a) + iε(a − a†) + iε(b − b†)`.
pub fn build_hamiltonian(params: &SystemParams, cutoff: FockCutoff) -> ComplexMatrix {
    let l = Ladder::new(cutoff);
    let coupling = &l.a_dag.matmul(&l.b) + &l.b_dag.matmul(&l.a);
    let drive = &(&l.a - &l.a_dag) + &(&l.b - &l.b_dag);
    &coupling.scale_real(params.g) + &drive.scale(I * params.eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpKind {
    /// Photon leaves the mode (`a` or `b`).
    Lowering,
    /// Photon absorbed from the thermal bath (`a†` or `b†`).
    Raising,
}

#[derive(Debug, Clone)]
pub struct CollapseOp {
    pub mode: ModeLabel,
    pub kind: JumpKind,
    pub rate: f64,
    pub matrix: ComplexMatrix,
}

impl CollapseOp {
    fn new(mode: ModeLabel, kind: JumpKind, rate: f64, ladder: &ComplexMatrix) -> Self {
        Self {
            mode,
            kind,
            rate,
            matrix: ladder.scale_real(rate.sqrt()),
        }
    }

    /// `C†C`
    pub fn jump_rate_operator(&self) -> ComplexMatrix {
        self.matrix.dagger().matmul(&self.matrix)
    }
}

/// Collapse operators: `√(2γₐ) a`, `√(2γ_b) b` at zero temperature, or the
/// four thermal channels `√(2γₐ(n+1)) a`, `√(2γₐn) a†`, `√(2γ_b(n+1)) b`,
/// `√(2γ_b n) b†` when `n > 0`.
pub fn build_collapse_ops(params: &SystemParams, cutoff: FockCutoff) -> Vec<CollapseOp> {
    let l = Ladder::new(cutoff);
    let n = params.n_th;
    if params.is_thermal() {
        vec![
            CollapseOp::new(ModeLabel::A, JumpKind::Lowering, 2.0 * params.gamma_a * (n + 1.0), &l.a),
            CollapseOp::new(ModeLabel::A, JumpKind::Raising, 2.0 * params.gamma_a * n, &l.a_dag),
            CollapseOp::new(ModeLabel::B, JumpKind::Lowering, 2.0 * params.gamma_b * (n + 1.0), &l.b),
            CollapseOp::new(ModeLabel::B, JumpKind::Raising, 2.0 * params.gamma_b * n, &l.b_dag),
        ]
    } else {
        vec![
            CollapseOp::new(ModeLabel::A, JumpKind::Lowering, 2.0 * params.gamma_a, &l.a),
            CollapseOp::new(ModeLabel::B, JumpKind::Lowering, 2.0 * params.gamma_b, &l.b),
        ]
    }
}

/// `H_nH = H − (i/2) Σ C†C` for the collapse set matching `params.n_th`.
pub fn build_h_nh(params: &SystemParams, cutoff: FockCutoff) -> ComplexMatrix {
    let mut h = build_hamiltonian(params, cutoff);
    for op in build_collapse_ops(params, cutoff) {
        h -= &op.jump_rate_operator().scale(I * 0.5);
    }
    h
}

/// `H − iγ'ₐ a†a − iγ'_b b†b − χₜ I`, the commuted form of the thermal
/// non-Hermitian Hamiltonian (reduces to the zero-temperature form at `n = 0`).
///
/// Agrees with [`build_h_nh`] everywhere at `n = 0` and on the interior
/// subspace for `n > 0`.
pub fn build_h_nh_rate_form(params: &SystemParams, cutoff: FockCutoff) -> ComplexMatrix {
    let eff = params.effective_rates();
    let l = Ladder::new(cutoff);
    let chi_t = Complex64::new(0.0, params.n_th * (params.gamma_a + params.gamma_b));
    let mut h = build_hamiltonian(params, cutoff);
    h -= &l.number_a().scale(I * eff.gamma_a);
    h -= &l.number_b().scale(I * eff.gamma_b);
    h -= &ComplexMatrix::identity(cutoff.hilbert_dim()).scale(chi_t);
    h
}

/// Drift-only Hamiltonian `H − iγₐ a†a − iγ_b b†b`, independent of `n`.
pub fn build_drift_h(params: &SystemParams, cutoff: FockCutoff) -> ComplexMatrix {
    let l = Ladder::new(cutoff);
    let mut h = build_hamiltonian(params, cutoff);
    h -= &l.number_a().scale(I * params.gamma_a);
    h -= &l.number_b().scale(I * params.gamma_b);
    h
}

/// `g(c+d + d+c) − iγ'ₐ c+c − iγ'_b d+d − χ'_full I` in the displaced
/// operators of the effective rates.
pub fn build_h_nh_displaced_form(params: &SystemParams, cutoff: FockCutoff) -> Result<ComplexMatrix, ModelError> {
    let eff = params.effective_rates();
    let ops = fockspace::displaced_ops(&eff, cutoff)?;
    let chi = derive(params)?.chi_p_full;
    let mut h = (&ops.c_plus.matmul(&ops.d) + &ops.d_plus.matmul(&ops.c)).scale_real(params.g);
    h -= &ops.c_plus.matmul(&ops.c).scale(I * eff.gamma_a);
    h -= &ops.d_plus.matmul(&ops.d).scale(I * eff.gamma_b);
    h -= &ComplexMatrix::identity(cutoff.hilbert_dim()).scale(chi);
    Ok(h)
}

/// Splits `H_nH` into the PT-symmetric part
/// `H_PT = g(c+d + d+c) − iκ' c+c + iκ' d+d` and
/// `H_0 = −iγ'(c+c + d+d) − χ'_full I`.
pub fn build_h_pt_split(params: &SystemParams, cutoff: FockCutoff) -> Result<(ComplexMatrix, ComplexMatrix), ModelError> {
    let eff = params.effective_rates();
    let ops = fockspace::displaced_ops(&eff, cutoff)?;
    let derived = derive(params)?;
    let n_c = ops.c_plus.matmul(&ops.c);
    let n_d = ops.d_plus.matmul(&ops.d);
    let mut h_pt = (&ops.c_plus.matmul(&ops.d) + &ops.d_plus.matmul(&ops.c)).scale_real(params.g);
    h_pt -= &n_c.scale(I * derived.kappa_p);
    h_pt += &n_d.scale(I * derived.kappa_p);
    let mut h_0 = (&n_c + &n_d).scale(-I * derived.gamma_p);
    h_0 -= &ComplexMatrix::identity(cutoff.hilbert_dim()).scale(derived.chi_p_full);
    Ok((h_pt, h_0))
}

/// A closed-form eigenvalue labelled by its supermode occupations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticEigenvalue {
    pub n_e: usize,
    pub n_f: usize,
    pub value: Complex64,
}

/// `λ^PT = Ω(N_e − N_f)`
pub fn analytic_lambda_pt(n_e: usize, n_f: usize, derived: &DerivedParams) -> Complex64 {
    derived.omega * (n_e as f64 - n_f as f64)
}

/// `Ω'(N_e − N_f)`, the equilibrium-frame eigenvalue with thermal rates.
pub fn analytic_lambda_pt_thermal(n_e: usize, n_f: usize, derived: &DerivedParams) -> Complex64 {
    derived.omega_p * (n_e as f64 - n_f as f64)
}

/// `Ω(N_e − N_f) − iγ(N_e + N_f) − χ`, or the primed thermal form.
/// Uses the closed-form, purely imaginary `χ`.
pub fn analytic_lambda_nh(n_e: usize, n_f: usize, derived: &DerivedParams, thermal: bool) -> Complex64 {
    let chi = if thermal { derived.chi_p } else { derived.chi };
    lambda_with_shift(n_e, n_f, derived, thermal, chi)
}

/// Same as [`analytic_lambda_nh`] but with the complete drive shift, for
/// comparison against matrix spectra.
pub fn analytic_lambda_nh_full(n_e: usize, n_f: usize, derived: &DerivedParams, thermal: bool) -> Complex64 {
    let chi = if thermal {
        derived.chi_p_full
    } else {
        derived.chi_full
    };
    lambda_with_shift(n_e, n_f, derived, thermal, chi)
}

fn lambda_with_shift(n_e: usize, n_f: usize, derived: &DerivedParams, thermal: bool, chi: Complex64) -> Complex64 {
    let (omega, gamma) = if thermal {
        (derived.omega_p, derived.gamma_p)
    } else {
        (derived.omega, derived.gamma)
    };
    let diff = n_e as f64 - n_f as f64;
    let total = (n_e + n_f) as f64;
    omega * diff - I * gamma * total - chi
}

/// All analytic eigenvalues of the `n`-excitation manifold.
pub fn analytic_block(n: usize, derived: &DerivedParams, thermal: bool) -> Vec<AnalyticEigenvalue> {
    (0..=n)
        .map(|n_e| AnalyticEigenvalue {
            n_e,
            n_f: n - n_e,
            value: analytic_lambda_nh_full(n_e, n - n_e, derived, thermal),
        })
        .collect()
}

/// The four tracked supermode states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrackedState {
    Psi1,
    Psi2,
    Psi3,
    Psi4,
}

impl TrackedState {
    pub const ALL: [TrackedState; 4] = [Self::Psi1, Self::Psi2, Self::Psi3, Self::Psi4];

    /// `(N_e, N_f)`
    pub fn occupations(self) -> (usize, usize) {
        match self {
            Self::Psi1 => (1, 0),
            Self::Psi2 => (0, 1),
            Self::Psi3 => (2, 0),
            Self::Psi4 => (0, 2),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Psi1 => "psi1",
            Self::Psi2 => "psi2",
            Self::Psi3 => "psi3",
            Self::Psi4 => "psi4",
        }
    }
}

/// `e+^{N_e} f+^{N_f} |vac_{e,f}⟩`, normalized, for the effective rates of
/// `params`. The supermode vacuum is annihilated by `c` and `d`, i.e. the
/// product of coherent states with amplitudes `−εα` and `−εδ`.
pub fn supermode_state(params: &SystemParams, cutoff: FockCutoff, n_e: usize, n_f: usize) -> Result<Vec<Complex64>, ModelError> {
    let eff = params.effective_rates();
    let [alpha, _, delta, _] = fockspace::displacement_constants(&eff)?;
    let ops = fockspace::supermode_ops(&eff, cutoff)?;
    let vac = fockspace::product_state(
        &fockspace::coherent_state(-alpha * eff.eps, cutoff),
        &fockspace::coherent_state(-delta * eff.eps, cutoff),
    );
    let mut psi = vac;
    for _ in 0..n_e {
        psi = ops.e_plus.matvec(&psi);
    }
    for _ in 0..n_f {
        psi = ops.f_plus.matvec(&psi);
    }
    crate::matrix::normalize(&mut psi);
    Ok(psi)
}

/// Coupling at which the non-Hermitian Hamiltonian has its exceptional point.
pub fn hep_coupling(kappa: f64, n_th: f64) -> f64 {
    (2.0 * n_th + 1.0) * kappa
}

/// Coupling at which the first-moment dynamics (and the Liouvillian) has its
/// exceptional point; independent of the bath temperature.
pub fn lep_coupling(kappa: f64) -> f64 {
    kappa
}
