//! Sweep configuration: JSON document merged over per-command defaults.

use std::fmt;
use std::path::Path;

use hiddenpt::fockspace::FockCutoff;
use hiddenpt::model::SystemParams;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("environment variable {name}: {reason}")]
    Env { name: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    HamiltonianSpectrum,
    EpScan,
    LepScan,
    LiouvillianCheck,
    Trajectories,
}

impl Mode {
    pub fn command(self) -> &'static str {
        match self {
            Mode::HamiltonianSpectrum => "spectrum",
            Mode::EpScan => "ep-scan",
            Mode::LepScan => "lep-scan",
            Mode::LiouvillianCheck => "liouvillian-check",
            Mode::Trajectories => "trajectories",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    G,
    Kappa,
    Eps,
    NTh,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::G => "g",
            Axis::Kappa => "kappa",
            Axis::Eps => "eps",
            Axis::NTh => "n_th",
        })
    }
}

/// Physical parameters in the mean/contrast form `γ = (γₐ+γ_b)/2`,
/// `κ = (γₐ−γ_b)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub g: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub eps: f64,
    pub n_th: f64,
}

impl ParamsConfig {
    pub fn with(self, axis: Axis, value: f64) -> Self {
        let mut p = self;
        match axis {
            Axis::G => p.g = value,
            Axis::Kappa => p.kappa = value,
            Axis::Eps => p.eps = value,
            Axis::NTh => p.n_th = value,
        }
        p
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::G => self.g,
            Axis::Kappa => self.kappa,
            Axis::Eps => self.eps,
            Axis::NTh => self.n_th,
        }
    }

    pub fn system(&self) -> Result<SystemParams, hiddenpt::model::ModelError> {
        SystemParams::from_mean_contrast(self.g, self.gamma, self.kappa, self.eps, self.n_th)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridConfig {
    /// `min + k·step` up to `max`, tolerant to rounding of the last point.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.min + self.step * k as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub cluster_rel: f64,
    pub angle: f64,
    pub residual: f64,
    pub liouvillian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let scan = hiddenpt::spectral::ScanTolerances::default();
        Self {
            cluster_rel: scan.cluster_rel,
            angle: scan.angle,
            residual: scan.residual,
            liouvillian: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// `None` picks the largest admissible step.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub n_traj: usize,
    pub n_samples: usize,
    pub seed: u64,
    /// `None` disables the truncation guard.
    pub truncation_guard: Option<f64>,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            dt: None,
            t_final: 1.0,
            n_traj: 1000,
            n_samples: 10,
            seed: 1,
            truncation_guard: Some(hiddenpt::trajectory::DEFAULT_TRUNCATION_GUARD),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub mode: Mode,
    pub params: ParamsConfig,
    pub axis: Axis,
    /// Absent for single-point trajectory runs.
    pub grid: Option<GridConfig>,
    pub cutoff: usize,
    /// Thermal occupations for the spectrum command.
    pub n_values: Vec<f64>,
    pub tolerances: Tolerances,
    pub trajectory: TrajectorySection,
}

impl SweepConfig {
    pub fn defaults(mode: Mode) -> Self {
        let params = ParamsConfig {
            g: 1.0,
            gamma: 2.0,
            kappa: 0.5,
            eps: 1.0,
            n_th: 0.0,
        };
        let base = Self {
            mode,
            params,
            axis: Axis::Kappa,
            grid: Some(GridConfig {
                min: 0.0,
                max: 2.0,
                step: 0.02,
            }),
            cutoff: hiddenpt::fockspace::DEFAULT_CUTOFF,
            n_values: vec![0.0, 0.1, 0.2],
            tolerances: Tolerances::default(),
            trajectory: TrajectorySection::default(),
        };
        match mode {
            Mode::HamiltonianSpectrum => base,
            Mode::EpScan | Mode::LepScan => Self {
                params: ParamsConfig {
                    kappa: 1.0,
                    n_th: 0.1,
                    ..params
                },
                axis: Axis::G,
                grid: Some(GridConfig {
                    min: 0.8,
                    max: 1.6,
                    step: 0.01,
                }),
                ..base
            },
            Mode::LiouvillianCheck => Self {
                params: ParamsConfig { eps: 0.0, ..params },
                grid: Some(GridConfig {
                    min: 0.0,
                    max: 2.0,
                    step: 0.25,
                }),
                cutoff: 4,
                ..base
            },
            Mode::Trajectories => Self {
                grid: None,
                axis: Axis::Eps,
                cutoff: 6,
                ..base
            },
        }
    }

    /// Grid points, or the base value of the axis when no grid is set.
    pub fn points(&self) -> Vec<f64> {
        match &self.grid {
            Some(g) => g.points(),
            None => vec![self.params.get(self.axis)],
        }
    }

    pub fn fock_cutoff(&self) -> FockCutoff {
        FockCutoff::new(self.cutoff).expect("validated cutoff")
    }

    /// Unit convention recorded in output headers.
    pub fn units(&self) -> &'static str {
        if self.axis == Axis::G && self.grid.is_some() {
            "absolute rate units (g is swept)"
        } else {
            "rates in units of g"
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cutoff < 2 {
            return Err(invalid("cutoff", "need at least 2 Fock levels per mode"));
        }
        if self.mode == Mode::LiouvillianCheck && self.cutoff > hiddenpt::liouvillian::MAX_SPECTRUM_CUTOFF {
            return Err(invalid(
                "cutoff",
                format!("liouvillian-check supports at most {}", hiddenpt::liouvillian::MAX_SPECTRUM_CUTOFF),
            ));
        }
        if let Some(g) = &self.grid {
            if !(g.min.is_finite() && g.max.is_finite() && g.min < g.max) {
                return Err(invalid("grid", "need finite min < max"));
            }
            if !(g.step > 0.0 && g.step.is_finite()) {
                return Err(invalid("grid.step", "must be positive"));
            }
            if g.points().len() > 1_000_000 {
                return Err(invalid("grid.step", "more than a million grid points"));
            }
        } else if self.mode != Mode::Trajectories {
            return Err(invalid("grid", "required for this command"));
        }
        let ns: &[f64] = if self.mode == Mode::HamiltonianSpectrum { &self.n_values } else { &[] };
        if self.mode == Mode::HamiltonianSpectrum && ns.is_empty() {
            return Err(invalid("n_values", "must not be empty"));
        }
        for x in self.points() {
            let p = self.params.with(self.axis, x);
            p.system().map_err(|e| invalid("params", format!("{} = {x}: {e}", self.axis)))?;
            for &n in ns {
                ParamsConfig { n_th: n, ..p }
                    .system()
                    .map_err(|e| invalid("n_values", format!("n = {n}: {e}")))?;
            }
        }
        let t = &self.tolerances;
        for (field, v) in [
            ("tolerances.cluster_rel", t.cluster_rel),
            ("tolerances.angle", t.angle),
            ("tolerances.residual", t.residual),
            ("tolerances.liouvillian", t.liouvillian),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be positive"));
            }
        }
        let tr = &self.trajectory;
        if let Some(dt) = tr.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("trajectory.dt", "must be positive"));
            }
        }
        if !(tr.t_final > 0.0 && tr.t_final.is_finite()) {
            return Err(invalid("trajectory.t_final", "must be positive"));
        }
        if self.mode == Mode::Trajectories && tr.n_traj < hiddenpt::trajectory::MIN_ENSEMBLE_FOR_COMPARISON {
            return Err(invalid(
                "trajectory.n_traj",
                format!("at least {} trajectories", hiddenpt::trajectory::MIN_ENSEMBLE_FOR_COMPARISON),
            ));
        }
        if tr.n_samples == 0 {
            return Err(invalid("trajectory.n_samples", "must be at least 1"));
        }
        if let Some(g) = tr.truncation_guard {
            if g.is_nan() || g < 0.0 {
                return Err(invalid("trajectory.truncation_guard", "must be non-negative or null"));
            }
        }
        Ok(())
    }
}

// Partial documents: every field optional, unknown fields rejected.

fn explicit<'de, D, T>(d: D) -> Result<Option<Option<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Some(Option::deserialize(d)?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialParams {
    g: Option<f64>,
    gamma: Option<f64>,
    kappa: Option<f64>,
    eps: Option<f64>,
    n_th: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialGrid {
    min: Option<f64>,
    max: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialTolerances {
    cluster_rel: Option<f64>,
    angle: Option<f64>,
    residual: Option<f64>,
    liouvillian: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialTrajectory {
    #[serde(default, deserialize_with = "explicit")]
    dt: Option<Option<f64>>,
    t_final: Option<f64>,
    n_traj: Option<usize>,
    n_samples: Option<usize>,
    seed: Option<u64>,
    #[serde(default, deserialize_with = "explicit")]
    truncation_guard: Option<Option<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    mode: Option<Mode>,
    params: Option<PartialParams>,
    axis: Option<Axis>,
    #[serde(default, deserialize_with = "explicit")]
    grid: Option<Option<PartialGrid>>,
    cutoff: Option<usize>,
    n_values: Option<Vec<f64>>,
    tolerances: Option<PartialTolerances>,
    trajectory: Option<PartialTrajectory>,
}

fn pick<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl PartialConfig {
    fn merge_into(self, cfg: &mut SweepConfig) -> Result<(), ConfigError> {
        if let Some(mode) = self.mode {
            if mode != cfg.mode {
                return Err(invalid(
                    "mode",
                    format!("config is for `{}` but the command is `{}`", mode.command(), cfg.mode.command()),
                ));
            }
        }
        if let Some(p) = self.params {
            pick(&mut cfg.params.g, p.g);
            pick(&mut cfg.params.gamma, p.gamma);
            pick(&mut cfg.params.kappa, p.kappa);
            pick(&mut cfg.params.eps, p.eps);
            pick(&mut cfg.params.n_th, p.n_th);
        }
        pick(&mut cfg.axis, self.axis);
        match self.grid {
            None => {}
            Some(None) => cfg.grid = None,
            Some(Some(g)) => {
                let mut grid = cfg.grid.unwrap_or(GridConfig {
                    min: f64::NAN,
                    max: f64::NAN,
                    step: f64::NAN,
                });
                pick(&mut grid.min, g.min);
                pick(&mut grid.max, g.max);
                pick(&mut grid.step, g.step);
                cfg.grid = Some(grid);
            }
        }
        pick(&mut cfg.cutoff, self.cutoff);
        pick(&mut cfg.n_values, self.n_values);
        if let Some(t) = self.tolerances {
            pick(&mut cfg.tolerances.cluster_rel, t.cluster_rel);
            pick(&mut cfg.tolerances.angle, t.angle);
            pick(&mut cfg.tolerances.residual, t.residual);
            pick(&mut cfg.tolerances.liouvillian, t.liouvillian);
        }
        if let Some(t) = self.trajectory {
            pick(&mut cfg.trajectory.dt, t.dt);
            pick(&mut cfg.trajectory.t_final, t.t_final);
            pick(&mut cfg.trajectory.n_traj, t.n_traj);
            pick(&mut cfg.trajectory.n_samples, t.n_samples);
            pick(&mut cfg.trajectory.seed, t.seed);
            pick(&mut cfg.trajectory.truncation_guard, t.truncation_guard);
        }
        Ok(())
    }
}

/// Command-line overrides applied after the config document.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub cutoff: Option<usize>,
    pub seed: Option<u64>,
}

/// Parses a JSON document (possibly partial) on top of the defaults of `mode`.
pub fn parse_config(text: &str, origin: &str, mode: Mode, overrides: Overrides) -> Result<SweepConfig, ConfigError> {
    let partial: PartialConfig = serde_json::from_str(text).map_err(|source| ConfigError::Parse {
        path: origin.to_string(),
        source,
    })?;
    let mut cfg = SweepConfig::defaults(mode);
    partial.merge_into(&mut cfg)?;
    apply_overrides(&mut cfg, overrides);
    cfg.validate()?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut SweepConfig, o: Overrides) {
    pick(&mut cfg.cutoff, o.cutoff);
    pick(&mut cfg.trajectory.seed, o.seed);
}

/// Loads `path` if given, otherwise uses the defaults of `mode`.
pub fn load_config(path: Option<&Path>, mode: Mode, overrides: Overrides) -> Result<SweepConfig, ConfigError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.display().to_string(),
                source,
            })?;
            parse_config(&text, &p.display().to_string(), mode, overrides)
        }
        None => {
            let mut cfg = SweepConfig::defaults(mode);
            apply_overrides(&mut cfg, overrides);
            cfg.validate()?;
            Ok(cfg)
        }
    }
}
