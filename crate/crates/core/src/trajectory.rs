//! Quantum-jump unraveling of the master equation.
//!
//! Fixed-step first-order scheme: in every step of length `dt` the jump
//! probabilities are `pᵢ = dt⟨ψ|Cᵢ†Cᵢ|ψ⟩`. One uniform draw picks either a
//! jump (apply `Cᵢ`) or the no-jump branch (apply `exp(−iH_nH dt)`), and the
//! state is renormalized. Each trajectory draws from its own ChaCha stream
//! selected by the trajectory index, so ensembles do not depend on thread
//! scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fockspace::{FockCutoff, ModeLabel};
use crate::liouvillian::{Generator, LiouvillianError};
use crate::matrix::{normalize, outer, vec_norm, ComplexMatrix, I};
use crate::model::{self, CollapseOp, JumpKind, ModelError, SystemParams};
use crate::spectral::{self, SpectralError, DEFAULT_EXPM_TOL};

/// Upper bound on `dt · Σᵢ max ⟨Cᵢ†Cᵢ⟩`.
pub const MAX_STEP_PROBABILITY: f64 = 0.05;
/// Default truncation guard on the top-level population seen by a raising jump.
pub const DEFAULT_TRUNCATION_GUARD: f64 = 1e-6;
/// Smallest ensemble accepted by [`ensemble_vs_master`].
pub const MIN_ENSEMBLE_FOR_COMPARISON: usize = 1000;
const CHUNK: usize = 64;
const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("invalid trajectory config: {0}")]
    InvalidConfig(String),
    #[error("dt = {dt} too large: dt * max jump rate = {product} exceeds {MAX_STEP_PROBABILITY}")]
    StepTooLarge { dt: f64, product: f64 },
    #[error("initial state has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("initial state has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("raising jump on mode {mode:?} at t = {time} meets top-level population {population:e}")]
    TruncationGuard { mode: ModeLabel, time: f64, population: f64 },
    #[error("ensemble comparison needs at least {MIN_ENSEMBLE_FOR_COMPARISON} trajectories, got {0}")]
    EnsembleTooSmall(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Liouvillian(#[from] LiouvillianError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    /// Requested step; the effective step divides the sampling interval evenly
    /// and never exceeds this value.
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub cutoff: FockCutoff,
    /// Observation times are `k · t_final / n_samples`, `k = 1..=n_samples`.
    pub n_samples: usize,
    /// `None` disables the guard.
    pub truncation_guard: Option<f64>,
    pub record_step_probabilities: bool,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, t_final: f64, n_traj: usize, seed: u64, cutoff: FockCutoff) -> Result<Self, TrajectoryError> {
        let config = Self {
            dt,
            t_final,
            n_traj,
            seed,
            cutoff,
            n_samples: 10,
            truncation_guard: Some(DEFAULT_TRUNCATION_GUARD),
            record_step_probabilities: false,
        };
        config.check_shape()?;
        Ok(config)
    }

    /// Config with the largest `dt` allowed for `params`.
    pub fn with_auto_dt(params: &SystemParams, t_final: f64, n_traj: usize, seed: u64, cutoff: FockCutoff) -> Result<Self, TrajectoryError> {
        let rate = max_jump_rate(params, cutoff);
        let dt = if rate > 0.0 { MAX_STEP_PROBABILITY / rate } else { t_final.abs() / 1000.0 };
        Self::new(dt, t_final, n_traj, seed, cutoff)
    }

    fn check_shape(&self) -> Result<(), TrajectoryError> {
        let bad = |m: &str| Err(TrajectoryError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("t_final must be positive");
        }
        if self.n_traj == 0 {
            return bad("n_traj must be at least 1");
        }
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1");
        }
        if let Some(g) = self.truncation_guard {
            if g.is_nan() || g < 0.0 {
                return bad("truncation guard must be non-negative");
            }
        }
        Ok(())
    }

    /// Steps per sampling interval.
    pub fn steps_per_sample(&self) -> usize {
        ((self.t_final / self.n_samples as f64) / self.dt).ceil().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.t_final / (self.n_samples * self.steps_per_sample()) as f64
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (1..=self.n_samples)
            .map(|k| self.t_final * k as f64 / self.n_samples as f64)
            .collect()
    }

    /// Shape checks plus the step-probability bound for `params`.
    pub fn validate(&self, params: &SystemParams) -> Result<(), TrajectoryError> {
        self.check_shape()?;
        let product = self.effective_dt() * max_jump_rate(params, self.cutoff);
        if product > MAX_STEP_PROBABILITY {
            return Err(TrajectoryError::StepTooLarge { dt: self.dt, product });
        }
        Ok(())
    }
}

/// `Σᵢ max_k (Cᵢ†Cᵢ)_kk`, a bound on the total jump rate of any state.
/// Every `Cᵢ†Cᵢ` is diagonal in the Fock basis.
pub fn max_jump_rate(params: &SystemParams, cutoff: FockCutoff) -> f64 {
    model::build_collapse_ops(params, cutoff)
        .iter()
        .map(|c| c.jump_rate_operator().diagonal().iter().map(|z| z.re).fold(0.0, f64::max))
        .sum()
}

/// `exp(−i H_nH dt)`.
pub fn no_jump_propagator(params: &SystemParams, cutoff: FockCutoff, dt: f64) -> Result<ComplexMatrix, TrajectoryError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(TrajectoryError::InvalidConfig("dt must be positive".into()));
    }
    let product = dt * max_jump_rate(params, cutoff);
    if product > MAX_STEP_PROBABILITY {
        return Err(TrajectoryError::StepTooLarge { dt, product });
    }
    let h = model::build_h_nh(params, cutoff);
    Ok(spectral::mat_exp(&h.scale(-I * dt), DEFAULT_EXPM_TOL)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    /// Index into the collapse set of [`model::build_collapse_ops`].
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub jumps: Vec<JumpRecord>,
    /// Product over all steps of the no-jump probability `1 − Σpᵢ`.
    pub survival: f64,
    /// Normalized state at each sample time.
    pub samples: Vec<Vec<Complex64>>,
    /// Running jump count at each sample time.
    pub jump_counts: Vec<usize>,
    /// Running survival at each sample time.
    pub survival_samples: Vec<f64>,
    /// Total jump probability `Σpᵢ` of every step, when requested.
    pub step_probabilities: Option<Vec<f64>>,
}

/// Precomputed operators shared by all trajectories of one ensemble.
#[derive(Debug, Clone)]
pub struct Unraveling {
    config: TrajectoryConfig,
    propagator: ComplexMatrix,
    collapse: Vec<CollapseOp>,
    rate_diagonals: Vec<Vec<f64>>,
    /// For each raising channel, the basis indices on the top level of its mode.
    top_levels: Vec<Option<Vec<usize>>>,
    dt: f64,
}

impl Unraveling {
    pub fn new(params: &SystemParams, config: &TrajectoryConfig) -> Result<Self, TrajectoryError> {
        config.validate(params)?;
        let dt = config.effective_dt();
        let cutoff = config.cutoff;
        let propagator = no_jump_propagator(params, cutoff, dt)?;
        let collapse = model::build_collapse_ops(params, cutoff);
        let rate_diagonals = collapse
            .iter()
            .map(|c| c.jump_rate_operator().diagonal().iter().map(|z| z.re).collect())
            .collect();
        let top = cutoff.levels() - 1;
        let top_levels = collapse
            .iter()
            .map(|c| {
                (c.kind == JumpKind::Raising).then(|| {
                    (0..cutoff.hilbert_dim())
                        .filter(|&k| {
                            let (na, nb) = cutoff.occupations(k);
                            match c.mode {
                                ModeLabel::A => na == top,
                                ModeLabel::B => nb == top,
                            }
                        })
                        .collect()
                })
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            propagator,
            collapse,
            rate_diagonals,
            top_levels,
            dt,
        })
    }

    pub fn config(&self) -> &TrajectoryConfig {
        &self.config
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn collapse_ops(&self) -> &[CollapseOp] {
        &self.collapse
    }

    fn check_initial(&self, initial: &[Complex64]) -> Result<(), TrajectoryError> {
        let dim = self.config.cutoff.hilbert_dim();
        if initial.len() != dim {
            return Err(TrajectoryError::Dimension {
                expected: dim,
                got: initial.len(),
            });
        }
        let norm = vec_norm(initial);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(TrajectoryError::NotNormalized(norm));
        }
        Ok(())
    }

    /// Runs trajectory `index` of the ensemble.
    pub fn run(&self, initial: &[Complex64], index: u64) -> Result<TrajectoryRecord, TrajectoryError> {
        self.check_initial(initial)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(index);

        let steps_per_sample = self.config.steps_per_sample();
        let n_samples = self.config.n_samples;
        let mut psi = initial.to_vec();
        let mut probs = vec![0.0; self.collapse.len()];
        let mut record = TrajectoryRecord {
            jumps: Vec::new(),
            survival: 1.0,
            samples: Vec::with_capacity(n_samples),
            jump_counts: Vec::with_capacity(n_samples),
            survival_samples: Vec::with_capacity(n_samples),
            step_probabilities: self
                .config
                .record_step_probabilities
                .then(|| Vec::with_capacity(n_samples * steps_per_sample)),
        };

        for step in 1..=n_samples * steps_per_sample {
            let populations: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
            for (p, diag) in probs.iter_mut().zip(&self.rate_diagonals) {
                *p = self.dt * diag.iter().zip(&populations).map(|(r, q)| r * q).sum::<f64>();
            }
            let total: f64 = probs.iter().sum();
            if let Some(rec) = record.step_probabilities.as_mut() {
                rec.push(total);
            }
            record.survival *= 1.0 - total;
            let time = step as f64 * self.dt;

            let u: f64 = rng.gen();
            if u < total {
                let mut acc = 0.0;
                let mut channel = probs.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        channel = i;
                        break;
                    }
                }
                if let (Some(limit), Some(top)) = (self.config.truncation_guard, &self.top_levels[channel]) {
                    let population: f64 = top.iter().map(|&k| populations[k]).sum();
                    if population > limit {
                        return Err(TrajectoryError::TruncationGuard {
                            mode: self.collapse[channel].mode,
                            time,
                            population,
                        });
                    }
                }
                psi = self.collapse[channel].matrix.matvec(&psi);
                record.jumps.push(JumpRecord { time, channel });
            } else {
                psi = self.propagator.matvec(&psi);
            }
            normalize(&mut psi);

            if step % steps_per_sample == 0 {
                record.samples.push(psi.clone());
                record.jump_counts.push(record.jumps.len());
                record.survival_samples.push(record.survival);
            }
        }
        Ok(record)
    }
}

/// Single trajectory with index 0 of the configured seed.
pub fn run_trajectory(params: &SystemParams, config: &TrajectoryConfig, initial: &[Complex64]) -> Result<TrajectoryRecord, TrajectoryError> {
    Unraveling::new(params, config)?.run(initial, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    /// Trajectory-averaged density matrix at each sample time.
    pub averaged: Vec<ComplexMatrix>,
    pub mean_jumps: Vec<f64>,
    pub mean_survival: Vec<f64>,
    pub jumps: Vec<Vec<JumpRecord>>,
    pub survival: Vec<f64>,
    /// Number of trajectories without any jump.
    pub no_jump_count: usize,
    /// Average final state of the jump-free trajectories.
    pub no_jump_final: Option<ComplexMatrix>,
}

struct Partial {
    rho: Vec<ComplexMatrix>,
    jumps: Vec<f64>,
    survival: Vec<f64>,
    records: Vec<(Vec<JumpRecord>, f64)>,
    no_jump: usize,
    no_jump_rho: ComplexMatrix,
}

impl Partial {
    fn new(n_samples: usize, dim: usize) -> Self {
        Self {
            rho: vec![ComplexMatrix::zeros(dim, dim); n_samples],
            jumps: vec![0.0; n_samples],
            survival: vec![0.0; n_samples],
            records: Vec::new(),
            no_jump: 0,
            no_jump_rho: ComplexMatrix::zeros(dim, dim),
        }
    }

    fn add(&mut self, r: TrajectoryRecord) {
        for (k, psi) in r.samples.iter().enumerate() {
            self.rho[k] += &outer(psi);
            self.jumps[k] += r.jump_counts[k] as f64;
            self.survival[k] += r.survival_samples[k];
        }
        if r.jumps.is_empty() {
            self.no_jump += 1;
            if let Some(last) = r.samples.last() {
                self.no_jump_rho += &outer(last);
            }
        }
        self.records.push((r.jumps, r.survival));
    }

    fn merge(&mut self, other: Partial) {
        for (a, b) in self.rho.iter_mut().zip(&other.rho) {
            *a += b;
        }
        for (a, b) in self.jumps.iter_mut().zip(&other.jumps) {
            *a += b;
        }
        for (a, b) in self.survival.iter_mut().zip(&other.survival) {
            *a += b;
        }
        self.records.extend(other.records);
        self.no_jump += other.no_jump;
        self.no_jump_rho += &other.no_jump_rho;
    }
}

/// Runs `config.n_traj` trajectories in parallel. Trajectories are summed in
/// fixed-size chunks and the chunks are combined in index order, so the
/// result is independent of the number of worker threads.
pub fn run_ensemble(params: &SystemParams, config: &TrajectoryConfig, initial: &[Complex64]) -> Result<TrajectoryEnsemble, TrajectoryError> {
    let unraveling = Unraveling::new(params, config)?;
    unraveling.check_initial(initial)?;
    let n = config.n_traj;
    let n_samples = config.n_samples;
    let dim = config.cutoff.hilbert_dim();
    let n_chunks = n.div_ceil(CHUNK);

    let partials: Vec<Result<Partial, TrajectoryError>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut part = Partial::new(n_samples, dim);
            for index in c * CHUNK..((c + 1) * CHUNK).min(n) {
                part.add(unraveling.run(initial, index as u64)?);
            }
            Ok(part)
        })
        .collect();

    let mut total = Partial::new(n_samples, dim);
    for part in partials {
        total.merge(part?);
    }
    let scale = 1.0 / n as f64;
    let (jumps, survival) = total.records.into_iter().unzip();
    Ok(TrajectoryEnsemble {
        times: config.sample_times(),
        averaged: total.rho.iter().map(|r| r.scale_real(scale)).collect(),
        mean_jumps: total.jumps.iter().map(|x| x * scale).collect(),
        mean_survival: total.survival.iter().map(|x| x * scale).collect(),
        jumps,
        survival,
        no_jump_count: total.no_jump,
        no_jump_final: (total.no_jump > 0).then(|| total.no_jump_rho.scale_real(1.0 / total.no_jump as f64)),
    })
}

/// `½ Σ |λᵢ(ρ₁ − ρ₂)|` for Hermitian arguments.
pub fn trace_distance(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<f64, SpectralError> {
    let diff = rho1 - rho2;
    let spec = spectral::eig(&diff, false, spectral::DEFAULT_RESIDUAL_TOL)?;
    Ok(0.5 * spec.eigenvalues.iter().map(|z| z.re.abs()).sum::<f64>())
}

/// Master-equation solution `exp(tL)ρ₀` at the sample times of `config`.
pub fn master_equation_samples(params: &SystemParams, config: &TrajectoryConfig, rho0: &ComplexMatrix) -> Result<Vec<ComplexMatrix>, TrajectoryError> {
    let generator = Generator::new(params, config.cutoff);
    let step = config.t_final / config.n_samples as f64;
    let mut rho = rho0.clone();
    let mut out = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        rho = generator.evolve(&rho, step, 1e-14)?;
        out.push(rho.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleComparison {
    pub times: Vec<f64>,
    pub trace_distance: Vec<f64>,
    pub master: Vec<ComplexMatrix>,
    pub ensemble: TrajectoryEnsemble,
}

impl EnsembleComparison {
    pub fn max_trace_distance(&self) -> f64 {
        self.trace_distance.iter().copied().fold(0.0, f64::max)
    }
}

/// Trajectory average versus direct integration of the master equation.
pub fn ensemble_vs_master(params: &SystemParams, config: &TrajectoryConfig, initial: &[Complex64]) -> Result<EnsembleComparison, TrajectoryError> {
    if config.n_traj < MIN_ENSEMBLE_FOR_COMPARISON {
        return Err(TrajectoryError::EnsembleTooSmall(config.n_traj));
    }
    let ensemble = run_ensemble(params, config, initial)?;
    let master = master_equation_samples(params, config, &outer(initial))?;
    let trace_distance = ensemble
        .averaged
        .iter()
        .zip(&master)
        .map(|(a, b)| trace_distance(a, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EnsembleComparison {
        times: ensemble.times.clone(),
        trace_distance,
        master,
        ensemble,
    })
}
