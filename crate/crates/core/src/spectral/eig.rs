//! Complex Schur decomposition and eigenvectors.
//!
//! Householder reduction to upper Hessenberg form, then single-shift implicit
//! QR sweeps with Wilkinson shifts (exceptional shifts after 10 and 20
//! stagnant sweeps), then back-substitution on the triangular factor. The
//! shift sequence and sweep order are fixed, so results are reproducible.

use num_complex::Complex64;

use super::SpectralError;
use crate::matrix::{vec_norm, ComplexMatrix, ONE, ZERO};

/// Residual bound relative to the Frobenius norm of the input.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-9;

const ULP: f64 = f64::EPSILON;
const MAX_SWEEPS_PER_DIM: usize = 30;

#[inline]
fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// `A = Z T Z^H` with `T` upper triangular and `Z` unitary.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: ComplexMatrix,
    pub z: ComplexMatrix,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.t.diagonal()
    }
}

/// Eigenvalues, optional unit right eigenvectors, and per-pair residuals
/// `‖A v − λ v‖` (empty when vectors were not requested).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn sum(&self) -> Complex64 {
        self.eigenvalues.iter().sum()
    }

    pub fn product(&self) -> Complex64 {
        self.eigenvalues.iter().product()
    }

    /// Index of and distance to the eigenvalue closest to `target`.
    pub fn nearest(&self, target: Complex64) -> Option<(usize, f64)> {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn hessenberg(h: &mut ComplexMatrix, z: &mut ComplexMatrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let x_norm = vec_norm(&v);
        if x_norm == 0.0 {
            continue;
        }
        let phase = if v[0] == ZERO { ONE } else { v[0] / v[0].norm() };
        let alpha = -phase * x_norm;
        v[0] -= alpha;
        let v_norm = vec_norm(&v);
        if v_norm == 0.0 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= v_norm;
        }
        // H <- (I - 2vv*) H
        for j in k..n {
            let s: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * h[(k + 1 + i, j)]).sum();
            let s2 = s * 2.0;
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= vi * s2;
            }
        }
        // H <- H (I - 2vv*), Z <- Z (I - 2vv*)
        for m in [&mut *h, &mut *z] {
            for i in 0..n {
                let s: Complex64 = v.iter().enumerate().map(|(j, vj)| m[(i, k + 1 + j)] * vj).sum();
                let s2 = s * 2.0;
                for (j, vj) in v.iter().enumerate() {
                    m[(i, k + 1 + j)] -= s2 * vj.conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [x, y]^T = [r, 0]^T`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64, Complex64) {
    if y == ZERO {
        return (1.0, ZERO, x);
    }
    if x == ZERO {
        let ay = y.norm();
        return (0.0, y.conj() / ay, Complex64::new(ay, 0.0));
    }
    let ax = x.norm();
    let r = ax.hypot(y.norm());
    let phase = x / ax;
    (ax / r, phase * y.conj() / r, phase * r)
}

fn wilkinson_shift(h: &ComplexMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let (m1, m2) = (mean + disc, mean - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Complex Schur decomposition of a square matrix.
pub fn schur(a: &ComplexMatrix) -> Result<Schur, SpectralError> {
    let n = a.ensure_square()?;
    if n == 0 {
        return Err(SpectralError::Empty);
    }
    let mut h = a.clone();
    let mut z = ComplexMatrix::identity(n);
    hessenberg(&mut h, &mut z);

    let h_norm = h.frobenius_norm();
    let small = f64::MIN_POSITIVE * (n as f64 / ULP);
    let max_sweeps = MAX_SWEEPS_PER_DIM * n.max(10);
    let mut total_sweeps = 0usize;

    let mut hi = n - 1;
    loop {
        let mut sweeps = 0usize;
        // deflate the trailing block [lo, hi]
        let lo = loop {
            let mut l = hi;
            while l > 0 {
                let sub = cabs1(h[(l, l - 1)]);
                let mut scale = cabs1(h[(l - 1, l - 1)]) + cabs1(h[(l, l)]);
                if scale == 0.0 {
                    scale = h_norm;
                }
                if sub <= ULP * scale || sub <= small {
                    h[(l, l - 1)] = ZERO;
                    break;
                }
                l -= 1;
            }
            if l == hi {
                break l;
            }
            if sweeps >= max_sweeps {
                let converged = (hi + 1..n).rev().map(|i| h[(i, i)]).collect();
                return Err(SpectralError::NoConvergence {
                    iterations: total_sweeps,
                    unconverged: hi + 1,
                    converged,
                });
            }
            let shift = match sweeps {
                10 => h[(l, l)] + 0.75 * h[(l + 1, l)].re.abs(),
                20 => h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].re.abs(),
                _ => wilkinson_shift(&h, hi),
            };
            qr_sweep(&mut h, &mut z, l, hi, shift);
            sweeps += 1;
            total_sweeps += 1;
        };
        debug_assert_eq!(lo, hi);
        if hi == 0 {
            break;
        }
        hi -= 1;
    }

    // clean the strictly lower part
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { t: h, z })
}

fn qr_sweep(h: &mut ComplexMatrix, z: &mut ComplexMatrix, lo: usize, hi: usize, shift: Complex64) {
    let n = h.rows();
    let mut x = h[(lo, lo)] - shift;
    let mut y = h[(lo + 1, lo)];
    for k in lo..hi {
        if k > lo {
            x = h[(k, k - 1)];
            y = h[(k + 1, k - 1)];
        }
        let (c, s, r) = givens(x, y);
        if k > lo {
            h[(k, k - 1)] = r;
            h[(k + 1, k - 1)] = ZERO;
        }
        let sc = s.conj();
        for j in k..n {
            let t1 = h[(k, j)];
            let t2 = h[(k + 1, j)];
            h[(k, j)] = t1 * c + s * t2;
            h[(k + 1, j)] = t2 * c - sc * t1;
        }
        let last = (k + 2).min(hi);
        for i in 0..=last {
            let t1 = h[(i, k)];
            let t2 = h[(i, k + 1)];
            h[(i, k)] = t1 * c + sc * t2;
            h[(i, k + 1)] = t2 * c - s * t1;
        }
        for i in 0..n {
            let t1 = z[(i, k)];
            let t2 = z[(i, k + 1)];
            z[(i, k)] = t1 * c + sc * t2;
            z[(i, k + 1)] = t2 * c - s * t1;
        }
    }
}

/// Right eigenvectors of the upper triangular factor, mapped back by `Z`.
fn schur_vectors(schur: &Schur) -> Vec<Vec<Complex64>> {
    let t = &schur.t;
    let n = t.rows();
    let s_min = (ULP * t.frobenius_norm()).max(f64::MIN_POSITIVE / ULP);
    const BIG: f64 = 1e150;
    (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            let mut x = vec![ZERO; k + 1];
            x[k] = ONE;
            for i in (0..k).rev() {
                let s: Complex64 = (i + 1..=k).map(|j| t[(i, j)] * x[j]).sum();
                let mut denom = t[(i, i)] - lambda;
                if denom.norm() < s_min {
                    denom = Complex64::new(s_min, 0.0);
                }
                x[i] = -s / denom;
                if x[i].norm() > BIG {
                    let scale = 1.0 / x[i].norm();
                    for xj in x[i..].iter_mut() {
                        *xj *= scale;
                    }
                }
            }
            let mut v: Vec<Complex64> = (0..n)
                .map(|r| (0..=k).map(|j| schur.z[(r, j)] * x[j]).sum())
                .collect();
            crate::matrix::normalize(&mut v);
            v
        })
        .collect()
}

/// Eigen-decomposition of a square matrix.
///
/// When `want_vectors` is set every returned pair satisfies
/// `‖A v − λ v‖ ≤ tol · ‖A‖_F`, otherwise an error is returned.
pub fn eig(a: &ComplexMatrix, want_vectors: bool, tol: f64) -> Result<Spectrum, SpectralError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(SpectralError::BadTolerance(tol));
    }
    let decomposition = schur(a)?;
    let eigenvalues = decomposition.eigenvalues();
    if !want_vectors {
        return Ok(Spectrum {
            eigenvalues,
            eigenvectors: None,
            residuals: Vec::new(),
        });
    }
    let vectors = schur_vectors(&decomposition);
    let bound = tol * a.frobenius_norm();
    let mut residuals = Vec::with_capacity(vectors.len());
    for (index, (v, &lambda)) in vectors.iter().zip(&eigenvalues).enumerate() {
        let av = a.matvec(v);
        let residual = av
            .iter()
            .zip(v)
            .map(|(x, y)| (x - lambda * y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > bound {
            return Err(SpectralError::ResidualBound { index, residual, bound });
        }
        residuals.push(residual);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(vectors),
        residuals,
    })
}
