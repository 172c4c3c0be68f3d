//! Eigenvalue and eigenvector coalescence along a parameter grid.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use super::{eig, SpectralError, DEFAULT_RESIDUAL_TOL};
use crate::matrix::{inner, vec_norm, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanTolerances {
    /// Eigenvalues closer than this times `‖A‖_F` are grouped.
    pub cluster_rel: f64,
    /// A cluster whose vectors are closer than this angle (radians) coalesces.
    pub angle: f64,
    pub residual: f64,
}

impl Default for ScanTolerances {
    fn default() -> Self {
        Self {
            cluster_rel: 1e-6,
            angle: 1e-3,
            residual: DEFAULT_RESIDUAL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub center: Complex64,
    /// Smallest principal angle between any two member eigenvectors.
    pub min_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoalescenceReport {
    pub parameter: f64,
    pub eigenvalues: Vec<Complex64>,
    /// Clusters of two or more eigenvalues.
    pub clusters: Vec<Cluster>,
    /// Smallest angle between any two eigenvectors at this point.
    pub min_pair_angle: f64,
    pub min_pair: Option<(usize, usize)>,
    pub coalescence: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PointError {
    #[error("matrix builder failed: {0}")]
    Builder(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub parameter: f64,
    pub result: Result<CoalescenceReport, PointError>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpEstimate {
    pub parameter: f64,
    /// Grid spacing around the estimate.
    pub uncertainty: f64,
    pub angle: f64,
    pub index: usize,
}

/// Angle in `[0, π/2]` between the complex lines spanned by `u` and `v`.
pub fn eigenvector_angle(u: &[Complex64], v: &[Complex64]) -> f64 {
    let nu = vec_norm(u);
    let nv = vec_norm(v);
    if nu == 0.0 || nv == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let overlap = inner(u, v) / (nu * nv);
    let perp: f64 = u
        .iter()
        .zip(v)
        .map(|(x, y)| (y / nv - overlap * x / nu).norm_sqr())
        .sum::<f64>()
        .sqrt();
    perp.atan2(overlap.norm())
}

fn single_linkage(values: &[Complex64], eps: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= eps {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Coalescence diagnostics for a single matrix.
pub fn analyze(parameter: f64, a: &ComplexMatrix, tol: &ScanTolerances) -> Result<CoalescenceReport, SpectralError> {
    let spectrum = eig(a, true, tol.residual)?;
    let vectors = spectrum.eigenvectors.as_ref().expect("vectors requested");
    let eps = tol.cluster_rel * a.frobenius_norm();

    let mut min_pair_angle = std::f64::consts::FRAC_PI_2;
    let mut min_pair = None;
    let n = vectors.len();
    for i in 0..n {
        for j in i + 1..n {
            let angle = eigenvector_angle(&vectors[i], &vectors[j]);
            if angle < min_pair_angle {
                min_pair_angle = angle;
                min_pair = Some((i, j));
            }
        }
    }

    let clusters: Vec<Cluster> = single_linkage(&spectrum.eigenvalues, eps)
        .into_iter()
        .filter(|m| m.len() >= 2)
        .map(|members| {
            let mut min_angle = std::f64::consts::FRAC_PI_2;
            for (k, &i) in members.iter().enumerate() {
                for &j in &members[k + 1..] {
                    min_angle = min_angle.min(eigenvector_angle(&vectors[i], &vectors[j]));
                }
            }
            let center = members.iter().map(|&i| spectrum.eigenvalues[i]).sum::<Complex64>() / members.len() as f64;
            Cluster {
                members,
                center,
                min_angle,
            }
        })
        .collect();
    let coalescence = clusters.iter().any(|c| c.min_angle < tol.angle);
    Ok(CoalescenceReport {
        parameter,
        eigenvalues: spectrum.eigenvalues,
        clusters,
        min_pair_angle,
        min_pair,
        coalescence,
    })
}

/// Runs [`analyze`] at every grid point in parallel. Output order follows
/// the grid; a failure at one point is recorded and does not stop the scan.
pub fn coalescence_scan<F, E>(builder: F, grid: &[f64], tol: &ScanTolerances) -> Result<Vec<ScanPoint>, SpectralError>
where
    F: Fn(f64) -> Result<ComplexMatrix, E> + Sync,
    E: std::fmt::Display,
{
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectralError::InvalidGrid);
    }
    Ok(grid
        .par_iter()
        .map(|&p| {
            let result = builder(p)
                .map_err(|e| PointError::Builder(e.to_string()))
                .and_then(|m| analyze(p, &m, tol).map_err(PointError::from));
            ScanPoint { parameter: p, result }
        })
        .collect())
}

/// Grid point with the smallest eigenvector angle.
pub fn locate_ep(points: &[ScanPoint]) -> Option<EpEstimate> {
    let (index, report) = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.result.as_ref().ok().map(|r| (i, r)))
        .min_by(|a, b| a.1.min_pair_angle.total_cmp(&b.1.min_pair_angle))?;
    let left = index.checked_sub(1).map(|j| points[index].parameter - points[j].parameter);
    let right = points.get(index + 1).map(|q| q.parameter - points[index].parameter);
    let uncertainty = match (left, right) {
        (Some(l), Some(r)) => l.max(r),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => 0.0,
    };
    Some(EpEstimate {
        parameter: report.parameter,
        uncertainty,
        angle: report.min_pair_angle,
        index,
    })
}
