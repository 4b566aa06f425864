//! Eigen-decompositions, empirical spectral distributions, the block
//! symmetrization `V = p^{-1/2} [[0, X], [Xᵀ, 0]]` and its resolvents.

mod eigen;
mod resolvent;

use std::io::{BufRead, Write};

use ndarray::{s, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use eigen::{
    eigen_sym, eigen_sym_tridiagonal, eigenvalues_sym, SpectralDecomposition, DEFAULT_TOL,
    MAX_SWEEPS,
};
pub use resolvent::{
    delta_n3, epsilon_decomposition, minor_resolvent, resolvent_diag, self_consistency,
    BlockResolvent, EpsilonDecomposition, EpsilonTerms, MinorResolvent, ResolventDiagnostics,
    IDENTITY_TOL, TRACE_TOL,
};

/// Atoms closer than this are merged into one.
pub const TIE_TOL: f64 = 1e-12;

/// `W = XXᵀ/p`, made exactly symmetric.
pub fn sample_covariance(x: &Array2<f64>) -> Array2<f64> {
    let p = x.ncols().max(1) as f64;
    let w = x.dot(&x.t()) / p;
    (&w + &w.t()) * 0.5
}

/// `V = p^{-1/2} [[0, X], [Xᵀ, 0]]` of order `n + p`.
pub fn symmetrize_block(x: &Array2<f64>) -> Array2<f64> {
    let (n, p) = x.dim();
    let scale = 1.0 / (p.max(1) as f64).sqrt();
    let mut v = Array2::zeros((n + p, n + p));
    let scaled = x * scale;
    v.slice_mut(s![..n, n..]).assign(&scaled);
    v.slice_mut(s![n.., ..n]).assign(&scaled.t());
    v
}

/// Singular values of `X/√p` from the eigenvalues of `W`; tiny negative
/// rounding is clamped to zero.
pub fn singular_values(eigenvalues: &[f64]) -> Vec<f64> {
    eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect()
}

/// Right-continuous step CDF with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDistribution {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl StepDistribution {
    /// Builds from `(atom, weight)` pairs in any order. Weights must be
    /// positive and sum to one within `1e-12`; near-equal atoms are merged.
    pub fn new(atoms: &[f64], weights: &[f64]) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: atoms.len(),
                got: weights.len(),
            });
        }
        if atoms.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid weight {w}")));
        }
        if let Some(a) = atoms.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite atom {a}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let mut pairs: Vec<(f64, f64)> =
            atoms.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged_atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged_atoms.last() {
                Some(&last) if a - last <= TIE_TOL * last.abs().max(1.0) => {
                    *merged_weights.last_mut().unwrap() += w;
                }
                _ => {
                    merged_atoms.push(a);
                    merged_weights.push(w);
                }
            }
        }
        // Zero weights carry no mass; keep the representation minimal.
        let (atoms, weights): (Vec<f64>, Vec<f64>) = merged_atoms
            .into_iter()
            .zip(merged_weights)
            .filter(|(_, w)| *w > 0.0)
            .unzip();
        if atoms.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        Ok(Self {
            atoms,
            weights,
            cumulative,
        })
    }

    /// Sorted, distinct atoms.
    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn mass_up_to(&self, count: usize) -> f64 {
        if count == 0 {
            0.0
        } else if count == self.atoms.len() {
            1.0
        } else {
            self.cumulative[count - 1].min(1.0)
        }
    }

    /// `F(x)`: mass of atoms `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.mass_up_to(self.atoms.partition_point(|&a| a <= x))
    }

    /// `F(x-)`: mass of atoms `< x`.
    pub fn left_limit(&self, x: f64) -> f64 {
        self.mass_up_to(self.atoms.partition_point(|&a| a < x))
    }

    /// `∫ dF(λ)/(λ - z)`.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| w / (a - z))
            .sum()
    }
}

/// Empirical spectral distribution: mass `1/n` at each eigenvalue.
pub fn esd(eigenvalues: &[f64]) -> Result<StepDistribution> {
    if eigenvalues.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let w = 1.0 / eigenvalues.len() as f64;
    StepDistribution::new(eigenvalues, &vec![w; eigenvalues.len()])
}

/// Symmetrized ESD: atoms at `±s_j`, mass `1/(2n)` each.
pub fn sym_esd(singular_values: &[f64], n: usize) -> Result<StepDistribution> {
    if singular_values.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if singular_values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: singular_values.len(),
        });
    }
    if let Some(s) = singular_values.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "negative singular value {s}"
        )));
    }
    let atoms: Vec<f64> = singular_values.iter().flat_map(|&s| [-s, s]).collect();
    let w = 0.5 / n as f64;
    StepDistribution::new(&atoms, &vec![w; atoms.len()])
}

/// `m_n(z) = (z/n) Σ_k 1/(s_k² - z²)`, the Stieltjes transform of the
/// symmetrized ESD.
pub fn empirical_stieltjes(singular_values: &[f64], z: Complex64) -> Complex64 {
    let z2 = z * z;
    let sum: Complex64 = singular_values.iter().map(|&s| (s * s - z2).inv()).sum();
    z * sum / singular_values.len() as f64
}

/// Writes one value per line with 17 significant digits.
pub fn write_spectrum_csv<W: Write>(mut out: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_spectrum_csv`].
pub fn read_spectrum_csv<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for line in input.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse()
                .map_err(|_| Error::InvalidParameter(format!("bad spectrum value {t:?}")))?,
        );
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn covariance_examples() {
        let eye: Array2<f64> = Array2::eye(2);
        assert_eq!(sample_covariance(&eye), &eye * 0.5);
        let w = sample_covariance(&array![[1.0, 1.0], [1.0, 1.0]]);
        assert_eq!(w, array![[1.0, 1.0], [1.0, 1.0]]);
    }

    #[test]
    fn block_one_by_one() {
        let v = symmetrize_block(&array![[3.0]]);
        assert_eq!(v, array![[0.0, 3.0], [3.0, 0.0]]);
        let dec = eigen_sym(&v, DEFAULT_TOL).unwrap();
        assert!(
            (dec.eigenvalues[0] + 3.0).abs() < 1e-15 && (dec.eigenvalues[1] - 3.0).abs() < 1e-15
        );
    }

    #[test]
    fn esd_examples() {
        let f = esd(&[1.0, 1.0, 3.0]).unwrap();
        assert_eq!(f.atoms(), &[1.0, 3.0]);
        assert!((f.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((f.cdf(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.cdf(3.0), 1.0);
        assert_eq!(f.left_limit(1.0), 0.0);
        assert!(matches!(esd(&[]), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn sym_esd_examples() {
        let f = sym_esd(&[2.0], 1).unwrap();
        assert_eq!(f.atoms(), &[-2.0, 2.0]);
        assert_eq!(f.weights(), &[0.5, 0.5]);
        let f = sym_esd(&[0.5, 1.0, 1.5], 3).unwrap();
        assert!((f.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!(sym_esd(&[1.0], 2).is_err());
    }

    #[test]
    fn single_atom_stieltjes() {
        let m = empirical_stieltjes(&[1.0], Complex64::new(0.0, 2.0));
        assert!((m - Complex64::new(0.0, 0.4)).norm() < 1e-15);
    }

    #[test]
    fn spectrum_csv_round_trip() {
        let values = vec![0.1, 1.0 / 3.0, 2.5e-17, 123456.789];
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &values).unwrap();
        let back = read_spectrum_csv(buf.as_slice()).unwrap();
        assert_eq!(values, back);
    }
}
