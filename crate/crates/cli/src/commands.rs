//! One function per subcommand, each producing a table.

use hiddenpt::fockspace::FockCutoff;
use hiddenpt::liouvillian::{dynamical_matrix, liouvillian_spectrum_check};
use hiddenpt::matrix::{inner, vec_norm, ComplexMatrix};
use hiddenpt::model::{
    analytic_lambda_nh, analytic_lambda_nh_full, analytic_lambda_pt, analytic_lambda_pt_thermal, build_h_nh,
    build_h_pt_split, derive, hep_coupling, lep_coupling, supermode_state, SystemParams, TrackedState,
};
use hiddenpt::spectral::{coalescence_scan, eig, locate_ep, ScanTolerances, Spectrum};
use hiddenpt::trajectory::{ensemble_vs_master, TrajectoryConfig};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Axis, Mode, ParamsConfig, SweepConfig};
use crate::output::Table;

/// Command output plus the first numerical failure, if any. Rows computed
/// before a failure are still emitted.
#[derive(Debug)]
pub struct Run {
    pub table: Table,
    pub failure: Option<String>,
}

pub fn run(cfg: &SweepConfig) -> Run {
    match cfg.mode {
        Mode::HamiltonianSpectrum => spectrum(cfg),
        Mode::EpScan | Mode::LepScan => ep_scan(cfg),
        Mode::LiouvillianCheck => liouvillian_check(cfg),
        Mode::Trajectories => trajectories(cfg),
    }
}

fn system(p: &ParamsConfig) -> Result<SystemParams, String> {
    p.system().map_err(|e| e.to_string())
}

fn scan_tolerances(cfg: &SweepConfig) -> ScanTolerances {
    ScanTolerances {
        cluster_rel: cfg.tolerances.cluster_rel,
        angle: cfg.tolerances.angle,
        residual: cfg.tolerances.residual,
    }
}

struct StateRow {
    frame: &'static str,
    state: &'static str,
    analytic: Complex64,
    numeric: Complex64,
}

/// Eigenvalue whose eigenvector overlaps most with `psi`.
fn by_overlap(s: &Spectrum, psi: &[Complex64]) -> Option<Complex64> {
    let vectors = s.eigenvectors.as_ref()?;
    vectors
        .iter()
        .map(|v| inner(v, psi).norm() / vec_norm(v))
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| s.eigenvalues[k])
}

fn by_distance(s: &Spectrum, target: Complex64) -> Complex64 {
    s.nearest(target).map_or(Complex64::new(f64::NAN, f64::NAN), |(k, _)| s.eigenvalues[k])
}

fn spectrum_point(p: &SystemParams, cut: FockCutoff, residual: f64) -> Result<Vec<StateRow>, String> {
    let d = derive(p).map_err(|e| e.to_string())?;
    let thermal = p.is_thermal();
    let (h_pt, _) = build_h_pt_split(p, cut).map_err(|e| e.to_string())?;
    let s_ef = eig(&h_pt, true, residual).map_err(|e| e.to_string())?;
    let s_if = eig(&build_h_nh(p, cut), true, residual).map_err(|e| e.to_string())?;
    // the matrices carry the real part of the drive shift, the closed
    // form drops it
    let chi_full = if thermal { d.chi_p_full } else { d.chi_full };
    let unbroken = d.kappa_p.abs() < d.g;
    let mut rows = Vec::with_capacity(8);
    for state in TrackedState::ALL {
        let (ne, nf) = state.occupations();
        let psi = unbroken.then(|| supermode_state(p, cut, ne, nf).ok()).flatten();
        let ef = if thermal {
            analytic_lambda_pt_thermal(ne, nf, &d)
        } else {
            analytic_lambda_pt(ne, nf, &d)
        };
        let ef_num = psi
            .as_ref()
            .and_then(|v| by_overlap(&s_ef, v))
            .unwrap_or_else(|| by_distance(&s_ef, ef));
        let if_full = analytic_lambda_nh_full(ne, nf, &d, thermal);
        let if_num = psi
            .as_ref()
            .and_then(|v| by_overlap(&s_if, v))
            .unwrap_or_else(|| by_distance(&s_if, if_full));
        rows.push(StateRow {
            frame: "EF",
            state: state.label(),
            analytic: ef,
            numeric: ef_num,
        });
        rows.push(StateRow {
            frame: "IF",
            state: state.label(),
            analytic: analytic_lambda_nh(ne, nf, &d, thermal),
            numeric: if_num + chi_full.re,
        });
    }
    Ok(rows)
}

fn spectrum(cfg: &SweepConfig) -> Run {
    let axis = cfg.axis.to_string();
    let mut table = Table::new([
        axis.as_str(),
        "n_th",
        "frame",
        "state",
        "re_analytic",
        "im_analytic",
        "re_numeric",
        "im_numeric",
        "abs_error",
    ]);
    let cut = cfg.fock_cutoff();
    let jobs: Vec<(f64, f64)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| cfg.points().into_iter().map(move |x| (n, x)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(n, x)| {
            let p = system(&ParamsConfig {
                n_th: n,
                ..cfg.params.with(cfg.axis, x)
            })?;
            spectrum_point(&p, cut, cfg.tolerances.residual)
        })
        .collect();
    let mut failed = Vec::new();
    let (mut worst_ef, mut worst_if): (f64, f64) = (0.0, 0.0);
    for (&(n, x), result) in jobs.iter().zip(results) {
        match result {
            Ok(rows) => {
                for r in rows {
                    let err = (r.analytic - r.numeric).norm();
                    if r.frame == "EF" {
                        worst_ef = worst_ef.max(err);
                    } else {
                        worst_if = worst_if.max(err);
                    }
                    table.push(vec![
                        x.into(),
                        n.into(),
                        r.frame.into(),
                        r.state.into(),
                        r.analytic.re.into(),
                        r.analytic.im.into(),
                        r.numeric.re.into(),
                        r.numeric.im.into(),
                        err.into(),
                    ]);
                }
            }
            Err(e) => failed.push(json!({ "n_th": n, axis.as_str(): x, "error": e })),
        }
    }
    table.summary = Some(json!({
        "points": jobs.len(),
        "max_abs_error": { "EF": worst_ef, "IF": worst_if },
        "failed": failed,
    }));
    let failure = (!failed.is_empty()).then(|| format!("{} spectrum points failed", failed.len()));
    Run { table, failure }
}

/// Closed-form location of the exceptional point along the swept axis.
fn expected_ep(cfg: &SweepConfig) -> Option<f64> {
    let p = &cfg.params;
    let factor = match cfg.mode {
        Mode::EpScan => 2.0 * p.n_th + 1.0,
        _ => 1.0,
    };
    match cfg.axis {
        Axis::G if cfg.mode == Mode::EpScan => Some(hep_coupling(p.kappa, p.n_th)),
        Axis::G => Some(lep_coupling(p.kappa)),
        Axis::Kappa => Some(p.g / factor),
        Axis::NTh if cfg.mode == Mode::EpScan && p.kappa != 0.0 => Some(0.5 * (p.g / p.kappa - 1.0)),
        _ => None,
    }
}

fn ep_scan(cfg: &SweepConfig) -> Run {
    let axis = cfg.axis.to_string();
    let mut table = Table::new([
        axis.as_str(),
        "status",
        "min_pair_angle",
        "clusters",
        "cluster_min_angle",
        "coalescence",
    ]);
    let cut = cfg.fock_cutoff();
    let hamiltonian = cfg.mode == Mode::EpScan;
    let builder = |x: f64| -> Result<ComplexMatrix, String> {
        let p = system(&cfg.params.with(cfg.axis, x))?;
        Ok(if hamiltonian { build_h_nh(&p, cut) } else { dynamical_matrix(&p).m })
    };
    let points = match coalescence_scan(builder, &cfg.points(), &scan_tolerances(cfg)) {
        Ok(p) => p,
        Err(e) => {
            return Run {
                table,
                failure: Some(e.to_string()),
            }
        }
    };
    let mut excluded = Vec::new();
    for pt in &points {
        match &pt.result {
            Ok(r) => {
                let cluster_angle = r.clusters.iter().map(|c| c.min_angle).fold(f64::NAN, f64::min);
                table.push(vec![
                    pt.parameter.into(),
                    "ok".into(),
                    r.min_pair_angle.into(),
                    r.clusters.len().into(),
                    cluster_angle.into(),
                    r.coalescence.into(),
                ]);
            }
            Err(e) => {
                table.push(vec![
                    pt.parameter.into(),
                    e.to_string().into(),
                    f64::NAN.into(),
                    0usize.into(),
                    f64::NAN.into(),
                    false.into(),
                ]);
                excluded.push(json!({ axis.as_str(): pt.parameter, "error": e.to_string() }));
            }
        }
    }
    let estimate = locate_ep(&points);
    table.summary = Some(json!({
        "located": estimate.map(|e| e.parameter),
        "uncertainty": estimate.map(|e| e.uncertainty),
        "angle": estimate.map(|e| e.angle),
        "flagged": estimate.and_then(|e| points[e.index].result.as_ref().ok().map(|r| r.coalescence)),
        "expected": expected_ep(cfg),
        "excluded": excluded,
    }));
    let failure = estimate.is_none().then(|| "no grid point could be analysed".to_string());
    Run { table, failure }
}

fn liouvillian_check(cfg: &SweepConfig) -> Run {
    let axis = cfg.axis.to_string();
    let mut table = Table::new([
        axis.as_str(),
        "re_target",
        "im_target",
        "dist_plus",
        "dist_minus",
        "zero_distance",
        "coalescence",
        "passed",
    ]);
    let cut = cfg.fock_cutoff();
    let tol = cfg.tolerances.liouvillian;
    let points = cfg.points();
    let results: Vec<_> = points
        .par_iter()
        .map(|&x| {
            let p = system(&cfg.params.with(cfg.axis, x))?;
            liouvillian_spectrum_check(&p, cut, tol).map_err(|e| e.to_string())
        })
        .collect();
    let mut failure = None;
    let (mut passed, mut worst) = (0usize, 0.0f64);
    for (&x, result) in points.iter().zip(results) {
        match result {
            Ok(r) => {
                passed += usize::from(r.passed());
                worst = worst.max(r.distances[0]).max(r.distances[1]).max(r.zero_distance);
                table.push(vec![
                    x.into(),
                    r.targets[0].re.into(),
                    r.targets[0].im.into(),
                    r.distances[0].into(),
                    r.distances[1].into(),
                    r.zero_distance.into(),
                    r.coalescence.into(),
                    r.passed().into(),
                ]);
            }
            Err(e) => {
                failure = Some(format!("{axis} = {x}: {e}"));
                break;
            }
        }
    }
    table.summary = Some(json!({
        "points": points.len(),
        "passed": passed,
        "max_distance": worst,
        "tolerance": tol,
    }));
    Run { table, failure }
}

fn trajectories(cfg: &SweepConfig) -> Run {
    let axis = cfg.axis.to_string();
    let mut table = Table::new([axis.as_str(), "t", "trace_distance", "mean_jumps", "mean_survival"]);
    let tr = &cfg.trajectory;
    table.notes.push(("seed".into(), tr.seed.to_string()));
    let cut = cfg.fock_cutoff();
    let mut runs = Vec::new();
    let mut failure = None;
    for x in cfg.points() {
        let result = (|| -> Result<_, String> {
            let p = system(&cfg.params.with(cfg.axis, x))?;
            let mut tc = match tr.dt {
                Some(dt) => TrajectoryConfig::new(dt, tr.t_final, tr.n_traj, tr.seed, cut),
                None => TrajectoryConfig::with_auto_dt(&p, tr.t_final, tr.n_traj, tr.seed, cut),
            }
            .map_err(|e| e.to_string())?;
            tc.n_samples = tr.n_samples;
            tc.truncation_guard = tr.truncation_guard;
            let cmp = ensemble_vs_master(&p, &tc, &cut.vacuum()).map_err(|e| e.to_string())?;
            Ok((tc.effective_dt(), cmp))
        })();
        match result {
            Ok((dt, cmp)) => {
                let e = &cmp.ensemble;
                for k in 0..cmp.times.len() {
                    table.push(vec![
                        x.into(),
                        cmp.times[k].into(),
                        cmp.trace_distance[k].into(),
                        e.mean_jumps[k].into(),
                        e.mean_survival[k].into(),
                    ]);
                }
                runs.push(json!({
                    axis.as_str(): x,
                    "dt": dt,
                    "max_trace_distance": cmp.max_trace_distance(),
                    "final_mean_jumps": e.mean_jumps.last(),
                    "no_jump_fraction": e.no_jump_count as f64 / tr.n_traj as f64,
                }));
            }
            Err(e) => {
                failure = Some(format!("{axis} = {x}: {e}"));
                break;
            }
        }
    }
    table.summary = Some(json!({ "seed": tr.seed, "runs": runs }));
    Run { table, failure }
}
