//! Matrix exponential by Padé scaling and squaring, and its action on vectors.

use num_complex::Complex64;

use super::SpectralError;
use crate::matrix::{vec_norm, ComplexMatrix};

/// Relative accuracy requested by callers that do not care.
pub const DEFAULT_EXPM_TOL: f64 = 1e-12;

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA_13: f64 = 5.371920351148152;
const MAX_SQUARINGS: i32 = 1023;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn check_tol(tol: f64) -> Result<(), SpectralError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(SpectralError::BadTolerance(tol))
    }
}

/// `c·I + Σ wᵢ Mᵢ`.
fn combine(n: usize, c: f64, terms: &[(f64, &ComplexMatrix)]) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(n).scale_real(c);
    for (w, m) in terms {
        for (o, x) in out.as_mut_slice().iter_mut().zip(m.as_slice()) {
            *o += x * *w;
        }
    }
    out
}

/// Padé approximant of degree `m ∈ {3,5,7,9}` from the even powers `A², A⁴, …`.
fn pade_low(a: &ComplexMatrix, b: &[f64], powers: &[ComplexMatrix]) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let odd: Vec<(f64, &ComplexMatrix)> = powers.iter().enumerate().map(|(k, p)| (b[2 * k + 3], p)).collect();
    let even: Vec<(f64, &ComplexMatrix)> = powers.iter().enumerate().map(|(k, p)| (b[2 * k + 2], p)).collect();
    let u = a.matmul(&combine(n, b[1], &odd));
    let v = combine(n, b[0], &even);
    (u, v)
}

fn pade13(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let b = &B13;
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let u_hi = combine(n, 0.0, &[(b[13], &a6), (b[11], &a4), (b[9], &a2)]);
    let u_lo = combine(n, b[1], &[(b[7], &a6), (b[5], &a4), (b[3], &a2)]);
    let u = a.matmul(&(a6.matmul(&u_hi) + u_lo));
    let v_hi = combine(n, 0.0, &[(b[12], &a6), (b[10], &a4), (b[8], &a2)]);
    let v_lo = combine(n, b[0], &[(b[6], &a6), (b[4], &a4), (b[2], &a2)]);
    let v = a6.matmul(&v_hi) + v_lo;
    (u, v)
}

fn overflow(norm: f64) -> SpectralError {
    SpectralError::Overflow { norm }
}

/// `exp(A)` to roughly unit roundoff times the conditioning of the problem.
///
/// Diagonal inputs are exponentiated entrywise. `tol` only has to be a
/// positive finite number; the algorithm always targets double precision.
pub fn mat_exp(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, SpectralError> {
    check_tol(tol)?;
    let n = a.ensure_square()?;
    if n == 0 {
        return Err(SpectralError::Empty);
    }
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(overflow(norm));
    }
    if a.is_diagonal() {
        let d: Vec<Complex64> = a.diagonal().iter().map(|z| z.exp()).collect();
        if d.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(overflow(norm));
        }
        return Ok(ComplexMatrix::from_diagonal(&d));
    }

    let (u, v, squarings) = if let Some(&(m, _)) = THETA.iter().find(|(_, th)| norm <= *th) {
        let a2 = a.matmul(a);
        let mut powers = vec![a2];
        for _ in 1..(m - 1) / 2 {
            let next = powers.last().unwrap().matmul(&powers[0]);
            powers.push(next);
        }
        let b: &[f64] = match m {
            3 => &B3,
            5 => &B5,
            7 => &B7,
            _ => &B9,
        };
        let (u, v) = pade_low(a, b, &powers[..(m - 1) / 2]);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        if s > MAX_SQUARINGS {
            return Err(overflow(norm));
        }
        let scaled = a.scale_real(2f64.powi(-s));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().map_err(SpectralError::from)?.solve_matrix(&p)?;
    for _ in 0..squarings {
        r = r.matmul(&r);
        if !r.is_finite() {
            return Err(overflow(norm));
        }
    }
    if !r.is_finite() {
        return Err(overflow(norm));
    }
    Ok(r)
}

/// `exp(t·A) v` for an operator given only through its action.
///
/// `norm_bound` must bound the 1-norm (or any consistent norm) of `A`. The
/// interval is split into `⌈norm_bound·|t|⌉` substeps and each substep is a
/// Taylor series truncated once terms fall below `tol` relative to the sum.
pub fn expm_action<F>(apply: F, norm_bound: f64, v: &[Complex64], t: f64, tol: f64) -> Result<Vec<Complex64>, SpectralError>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    check_tol(tol)?;
    if !(norm_bound.is_finite() && t.is_finite()) {
        return Err(overflow(norm_bound));
    }
    let steps = (norm_bound * t.abs()).ceil().max(1.0);
    if steps > 1e9 {
        return Err(overflow(norm_bound));
    }
    let steps = steps as usize;
    let h = t / steps as f64;
    let mut state = v.to_vec();
    for _ in 0..steps {
        let mut term = state.clone();
        let mut sum = state.clone();
        let mut small_in_a_row = 0;
        for k in 1..=80 {
            term = apply(&term);
            let w = h / k as f64;
            for x in term.iter_mut() {
                *x *= w;
            }
            for (s, x) in sum.iter_mut().zip(&term) {
                *s += x;
            }
            if vec_norm(&term) <= tol * vec_norm(&sum) {
                small_in_a_row += 1;
                if small_in_a_row == 2 {
                    break;
                }
            } else {
                small_in_a_row = 0;
            }
        }
        if sum.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(overflow(norm_bound));
        }
        state = sum;
    }
    Ok(state)
}

/// `exp(t·A) v` for an explicit matrix.
pub fn mat_exp_action(a: &ComplexMatrix, v: &[Complex64], t: f64, tol: f64) -> Result<Vec<Complex64>, SpectralError> {
    a.ensure_square()?;
    expm_action(|x| a.matvec(x), a.norm_one(), v, t, tol)
}
