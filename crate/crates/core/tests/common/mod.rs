#![allow(dead_code)]

use hiddenpt::fockspace::FockCutoff;
use hiddenpt::matrix::{normalize, ComplexMatrix};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_complex(rng: &mut StdRng) -> Complex64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut StdRng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| random_complex(rng))
}

pub fn random_state(rng: &mut StdRng, dim: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim).map(|_| random_complex(rng)).collect();
    normalize(&mut v);
    v
}

/// Random full-rank density matrix, optionally supported only on states
/// with every occupation below the top level.
pub fn random_density(rng: &mut StdRng, cutoff: FockCutoff, interior_only: bool) -> ComplexMatrix {
    let dim = cutoff.hilbert_dim();
    let support: Vec<usize> = if interior_only { cutoff.interior_indices() } else { (0..dim).collect() };
    let mut g = ComplexMatrix::zeros(dim, dim);
    for &i in &support {
        for &j in &support {
            g[(i, j)] = random_complex(rng);
        }
    }
    let rho = g.matmul(&g.dagger());
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr)
}

/// Largest distance in a greedy one-to-one matching of two multisets.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn vec_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}
