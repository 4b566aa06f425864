//! Self-check suite behind `mplab verify`: the exact identities of the
//! spectral module and numeric scans of the law's analytic inequalities.
//! Each check reports a worst-case figure against its tolerance.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::deloc::{concentration_bound, concentration_q, weighted_esd};
use crate::distance::{distance_report, kolmogorov_mp, tau, H};
use crate::ensembles::{sample_matrix, EntryDistribution, MatrixShape};
use crate::mp_law::{self, MPParams};
use crate::spectral::{
    eigen_sym, resolvent_diag, sample_covariance, self_consistency, symmetrize_block,
    StepDistribution, DEFAULT_TOL,
};
use crate::{Complex64, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst value observed.
    pub worst: f64,
    /// Threshold it was compared with.
    pub limit: f64,
}

impl Check {
    fn at_most(name: &str, worst: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: worst <= limit,
            worst,
            limit,
        }
    }
}

const LAWS: [f64; 3] = [0.25, 0.5, 1.0];

fn upper_point(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(
        rng.random_range(-4.0..4.0),
        10f64.powf(rng.random_range(-3.0..1.0)),
    )
}

fn law_checks(rng: &mut ChaCha8Rng, points: usize) -> Result<Vec<Check>> {
    let mut residual: f64 = 0.0;
    let mut modulus: f64 = 0.0;
    let mut real_part: f64 = f64::NEG_INFINITY;
    let mut imsqrt: f64 = f64::INFINITY;
    let mut inversion: f64 = 0.0;
    let mut norm_err: f64 = 0.0;
    for &y in &LAWS {
        let law = MPParams::new(y)?;
        for _ in 0..points {
            let z = upper_point(rng);
            let s = mp_law::stieltjes_mp(&law, z)?;
            let big = mp_law::stieltjes_sym(&law, z)?;
            residual = residual
                .max(mp_law::mp_residual(&law, z, s))
                .max(mp_law::sym_residual(&law, z, big));
            modulus = modulus.max(big.norm() * y.sqrt());

            let u = law.inner_edge() + (law.outer_edge() - law.inner_edge()) * rng.random::<f64>();
            let u = if rng.random::<bool>() { u } else { -u };
            let zz = Complex64::new(u, 10f64.powf(rng.random_range(-4.0..1.0)));
            if let Ok(b) = mp_law::branch_diagnostics(&law, zz) {
                real_part = real_part.max(b.realpart_check);
                imsqrt = imsqrt.min(b.imsqrt_lower);
            }
        }
        for i in 1..100 {
            let x = law.a + (law.b - law.a) * i as f64 / 100.0;
            let approx = mp_law::stieltjes_mp(&law, Complex64::new(x, 1e-4))?.im / PI;
            inversion = inversion.max((approx - mp_law::density(&law, x)).abs());
        }
        norm_err = norm_err.max((mp_law::cdf(&law, law.b)? - 1.0).abs());
    }
    Ok(vec![
        Check::at_most("stieltjes equations residual", residual, 1e-12),
        Check::at_most("sqrt(y)|S_y| (<= 1)", modulus, 1.0 + 1e-12),
        Check::at_most("inversion |Im s/pi - g|", inversion, 2e-3),
        Check::at_most("tau = 3/4", (tau(H) - 0.75).abs(), 1e-12),
        Check::at_most("cdf(b) = 1", norm_err, 1e-8),
        Check::at_most("Re D(z) on the support strip", real_part, 0.0),
        Check::at_most("Im sqrt D lower bound deficit", -imsqrt, 0.0),
    ])
}

fn spectral_checks(rng: &mut ChaCha8Rng, instances: usize) -> Result<Vec<Check>> {
    let mut eig: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let mut identity: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    let mut weighted: f64 = 0.0;
    let mut window: f64 = f64::NEG_INFINITY;
    let z = Complex64::new(1.0, 0.5);
    for k in 0..instances {
        let shape = MatrixShape::new(12, 24)?;
        let x = sample_matrix(&EntryDistribution::Gaussian, &shape, rng.random())?;
        let w = sample_covariance(&x);
        let dec = eigen_sym(&w, DEFAULT_TOL)?;
        eig = eig
            .max(dec.orthogonality_error())
            .max(dec.reconstruction_error(&w));

        let law = MPParams::new(shape.y)?;
        let d = self_consistency(&x, z, &law)?;
        trace = trace.max(d.trace_residual);
        identity = identity
            .max(d.schur_residual)
            .max(d.representation_residual)
            .max(d.gn_residual)
            .max(d.delta_n3_residual);
        ratio = ratio
            .max(d.eps3_bound_ratio)
            .max(d.trace_gap_ratio)
            .max(d.m_gap_ratio)
            .max(d.delta_n3_bound_ratio);

        if k == 0 {
            let vdec = eigen_sym(&symmetrize_block(&x), DEFAULT_TOL)?;
            let grid: Vec<f64> = (0..601).map(|i| -3.0 + 0.01 * i as f64).collect();
            for j in 0..vdec.dim() {
                let f = weighted_esd(&vdec, j)?;
                weighted = weighted.max((f.stieltjes(z) - resolvent_diag(&vdec, z, j)?).norm());
                for lambda in [0.05, 0.5] {
                    window = window
                        .max(concentration_q(&f, lambda)? - concentration_bound(&f, lambda, &grid));
                }
            }
        }
    }
    Ok(vec![
        Check::at_most("eigensolver residuals", eig, 1e-9),
        Check::at_most("trace identity n m_n = Tr R/2 + (p-n)/2z", trace, 1e-10),
        Check::at_most(
            "resolvent identities (Schur, representation, g_n, delta_n3)",
            identity,
            1e-8,
        ),
        Check::at_most("deterministic bounds (ratio to bound)", ratio, 1.0 + 1e-9),
        Check::at_most("weighted ESD transform vs R_jj", weighted, 1e-10),
        Check::at_most("window bound Q - 2 sup lambda Im R_jj", window, 0.0),
    ])
}

fn distance_checks(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let law = MPParams::new(1.0)?;
    let atom = StepDistribution::new(&[1.0], &[1.0])?;
    let d = kolmogorov_mp(&atom, &law)?;
    let mut factor: f64 = 0.0;
    for _ in 0..5 {
        let shape = MatrixShape::from_ratio(64, 0.5)?;
        let x = sample_matrix(&EntryDistribution::Gaussian, &shape, rng.random())?;
        let eig = crate::spectral::eigenvalues_sym(&sample_covariance(&x))?;
        let rep = distance_report(&eig, &MPParams::new(shape.y)?, None)?;
        factor = factor.max((rep.kolmogorov_plain - 2.0 * rep.kolmogorov_sym).abs());
    }
    Ok(vec![
        Check::at_most(
            "single atom vs G_1 distance - 0.60900",
            (d - 0.609).abs(),
            1e-4,
        ),
        Check::at_most("plain = 2 x symmetrized distance", factor, 1e-12),
    ])
}

/// Runs every check with randomness derived from `seed`.
pub fn run_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = law_checks(&mut rng, 1000)?;
    checks.extend(spectral_checks(&mut rng, 5)?);
    checks.extend(distance_checks(&mut rng)?);
    Ok(checks)
}
