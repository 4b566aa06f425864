//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(M - zI)⁻¹` by Gauss-Jordan elimination with partial pivoting.
pub fn resolvent_by_solve(m: &Array2<f64>, z: Complex64) -> Array2<Complex64> {
    let n = m.nrows();
    let mut a: Array2<Complex64> = m.mapv(|v| Complex64::new(v, 0.0));
    for i in 0..n {
        a[[i, i]] -= z;
    }
    let mut inv: Array2<Complex64> = Array2::eye(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[[r, col]].norm().total_cmp(&a[[s, col]].norm()))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
                inv.swap([pivot, k], [col, k]);
            }
        }
        let d = a[[col, col]].inv();
        for k in 0..n {
            a[[col, k]] *= d;
            inv[[col, k]] *= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[[r, col]];
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..n {
                let ak = a[[col, k]];
                let ik = inv[[col, k]];
                a[[r, k]] -= f * ak;
                inv[[r, k]] -= f * ik;
            }
        }
    }
    inv
}

/// Dense `n×p` matrix of standard Gaussian entries.
pub fn gaussian_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, p), || rng.sample::<f64, _>(rand_distr::StandardNormal))
}

pub fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = rng.random_range(-1.0..1.0);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    m
}

/// Removes row and column `j`.
pub fn delete_index(m: &Array2<f64>, j: usize) -> Array2<f64> {
    let keep: Vec<usize> = (0..m.nrows()).filter(|&i| i != j).collect();
    m.select(ndarray::Axis(0), &keep)
        .select(ndarray::Axis(1), &keep)
}
