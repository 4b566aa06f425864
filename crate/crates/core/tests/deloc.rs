mod common;

use mplab::deloc::*;
use mplab::ensembles::{sample_matrix, EntryDistribution, MatrixShape};
use mplab::mp_law::RateScale;
use mplab::spectral::*;
use mplab::Complex64;
use ndarray::Array2;

use common::gaussian_matrix;

#[test]
fn z_block_diagonalizes_v() {
    for (n, p, seed) in [(3, 5, 1), (8, 8, 2), (16, 16, 3), (10, 16, 4)] {
        let x = gaussian_matrix(n, p, seed);
        let basis = block_eigenbasis(&x).unwrap();
        let z = &basis.z;
        let ortho = z.t().dot(z) - Array2::<f64>::eye(n + p);
        assert!(ortho.iter().all(|v| v.abs() <= 1e-10));
        let d = z.t().dot(&symmetrize_block(&x)).dot(z);
        let target = Array2::from_diag(&ndarray::Array1::from(basis.eigenvalues.clone()));
        let err = (&d - &target).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(err <= 1e-8, "n={n} p={p}: {err}");
    }
}

#[test]
fn weighted_esd_transform_is_resolvent_diagonal() {
    let x = gaussian_matrix(6, 11, 5);
    let v = symmetrize_block(&x);
    let dec = eigen_sym(&v, DEFAULT_TOL).unwrap();
    for j in 0..17 {
        let f = weighted_esd(&dec, j).unwrap();
        assert!((f.total_mass() - 1.0).abs() <= 1e-12);
        for z in [Complex64::new(0.4, 0.05), Complex64::new(-1.2, 1.0)] {
            let r = resolvent_diag(&dec, z, j).unwrap();
            assert!((f.stieltjes(z) - r).norm() <= 1e-10);
        }
    }
    let one = eigen_sym(&Array2::zeros((1, 1)), DEFAULT_TOL).unwrap();
    let f = weighted_esd(&one, 0).unwrap();
    assert_eq!((f.atoms(), f.weights()), (&[0.0][..], &[1.0][..]));
}

#[test]
fn window_bound_on_grid() {
    for (n, p, seed) in [(4, 7, 6), (12, 16, 7), (16, 16, 8)] {
        let x = gaussian_matrix(n, p, seed);
        let dec = eigen_sym(&symmetrize_block(&x), DEFAULT_TOL).unwrap();
        let grid: Vec<f64> = (0..801).map(|i| -4.0 + 0.01 * i as f64).collect();
        for j in 0..n + p {
            let f = weighted_esd(&dec, j).unwrap();
            for lambda in [0.01, 0.1, 0.5, 2.0] {
                let q = concentration_q(&f, lambda).unwrap();
                assert!(q <= concentration_bound(&f, lambda, &grid) + 1e-12);
            }
        }
    }
}

#[test]
fn weighted_distance_is_half_row_deviation() {
    for (n, p, seed) in [(5, 9, 9), (8, 12, 10)] {
        let x = gaussian_matrix(n, p, seed);
        let basis = block_eigenbasis(&x).unwrap();
        let w = eigen_sym(&sample_covariance(&x), DEFAULT_TOL).unwrap();
        let s = singular_values(&w.eigenvalues);
        let sym = sym_esd(&s, n).unwrap();
        for j in 0..n {
            let weights: Vec<f64> = basis.z.row(j).iter().map(|q| q * q).collect();
            let fnj = StepDistribution::new(&basis.eigenvalues, &weights).unwrap();
            // Brute-force sup over a fine grid and at all atoms.
            let mut brute: f64 = 0.0;
            for i in 0..20001 {
                let t = -3.0 + 6.0 * i as f64 / 20000.0;
                brute = brute.max((fnj.cdf(t) - sym.cdf(t)).abs());
            }
            let exact = kolmogorov_steps(&fnj, &sym);
            assert!(brute <= exact + 1e-15);
            let dev = row_partial_deviation(&w.vectors, j);
            assert!(
                (exact - 0.5 * dev).abs() <= 1e-12,
                "j={j}: {exact} vs {dev}"
            );
        }
    }
}

#[test]
fn gaussian_and_rademacher_delocalize() {
    let shape = MatrixShape::new(256, 512).unwrap();
    let scale = RateScale::new(1.0, 2.0, 256).unwrap();
    for dist in [EntryDistribution::Gaussian, EntryDistribution::Rademacher] {
        let x = sample_matrix(&dist, &shape, 3).unwrap();
        let dec = eigen_sym_tridiagonal(&sample_covariance(&x)).unwrap();
        let r = deloc_stats(&dec.vectors, &scale).unwrap();
        assert!(r.pass_coord && r.pass_partial, "{dist}: {r:?}");
        assert!(r.max_coord_sq >= 1.0 / 256.0 && r.max_coord_sq <= 1.0);
        assert!((0.0..=1.0).contains(&r.max_partial_dev));
    }
}
