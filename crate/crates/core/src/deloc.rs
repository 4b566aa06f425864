//! Eigenvector delocalization statistics and the weighted spectral
//! distributions `F_nj(x) = Σ_k Z_jk² 1{λ_k <= x}` of the block matrix.

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::mp_law::RateScale;
use crate::spectral::{
    eigen_sym, sample_covariance, SpectralDecomposition, StepDistribution, DEFAULT_TOL,
};
use crate::{Error, Result};

/// Orthonormality slack accepted by [`deloc_stats`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelocReport {
    /// `max_{j,k} |u_jk|²`.
    pub max_coord_sq: f64,
    /// `max_{j,k} |Σ_{ν<=k} |u_jν|² - k/n|`.
    pub max_partial_dev: f64,
    /// `β⁴/n`.
    pub threshold_coord: f64,
    /// `β²/√n`.
    pub threshold_partial: f64,
    pub pass_coord: bool,
    pub pass_partial: bool,
}

fn gram_deviation(q: &Array2<f64>) -> f64 {
    let g = q.t().dot(q);
    g.indexed_iter()
        .map(|((i, j), &v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

/// Coordinate and partial-sum statistics of the eigenvector columns of `vectors`.
pub fn deloc_stats(vectors: &Array2<f64>, scale: &RateScale) -> Result<DelocReport> {
    let (n, m) = vectors.dim();
    if n != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m,
        });
    }
    if n == 0 {
        return Err(Error::EmptySpectrum);
    }
    let dev = gram_deviation(vectors);
    if !(dev <= ORTHONORMAL_TOL) {
        return Err(Error::NotOrthonormal(dev));
    }
    let nf = n as f64;
    let mut max_coord_sq: f64 = 0.0;
    let mut max_partial_dev: f64 = 0.0;
    for col in vectors.columns() {
        let mut acc = 0.0;
        for (k, &u) in col.iter().enumerate() {
            let u2 = u * u;
            max_coord_sq = max_coord_sq.max(u2);
            acc += u2;
            max_partial_dev = max_partial_dev.max((acc - (k + 1) as f64 / nf).abs());
        }
    }
    let threshold_coord = scale.beta.powi(4) / nf;
    let threshold_partial = scale.beta.powi(2) / nf.sqrt();
    Ok(DelocReport {
        max_coord_sq,
        max_partial_dev,
        threshold_coord,
        threshold_partial,
        pass_coord: max_coord_sq <= threshold_coord,
        pass_partial: max_partial_dev <= threshold_partial,
    })
}

/// `max_k |Σ_{l<=k} Q_jl² - k/n|` over eigenvectors in eigenvalue order, for
/// a fixed coordinate `j` of an `n×n` orthonormal `Q`.
pub fn row_partial_deviation(vectors: &Array2<f64>, j: usize) -> f64 {
    let n = vectors.ncols() as f64;
    let mut acc = 0.0;
    let mut dev: f64 = 0.0;
    for (k, &q) in vectors.row(j).iter().enumerate() {
        acc += q * q;
        dev = dev.max((acc - (k + 1) as f64 / n).abs());
    }
    dev
}

/// `F_nj`: atoms at the eigenvalues of `V`, weights `Z_jk²`.
pub fn weighted_esd(decomp: &SpectralDecomposition, j: usize) -> Result<StepDistribution> {
    if j >= decomp.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomp.dim(),
            got: j,
        });
    }
    let weights: Vec<f64> = decomp.vectors.row(j).iter().map(|q| q * q).collect();
    StepDistribution::new(&decomp.eigenvalues, &weights)
}

/// `Q(λ) = sup_x (F(x+λ) - F(x))`, the largest mass in a window
/// `[a, a+λ)` starting at an atom.
pub fn concentration_q(step: &StepDistribution, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    let atoms = step.atoms();
    let weights = step.weights();
    let mut best: f64 = 0.0;
    let mut mass = 0.0;
    let mut hi = 0;
    for lo in 0..atoms.len() {
        while hi < atoms.len() && atoms[hi] - atoms[lo] < lambda {
            mass += weights[hi];
            hi += 1;
        }
        best = best.max(mass);
        mass -= weights[lo];
    }
    Ok(best.min(1.0))
}

/// `2 sup_u λ Im S(u + iλ)` over `grid` together with the midpoints
/// `a + λ/2` of every atom window, where the sup is certainly attained
/// to within the factor needed for `Q(λ) <=` this value.
pub fn concentration_bound(step: &StepDistribution, lambda: f64, grid: &[f64]) -> f64 {
    let eval = |u: f64| lambda * step.stieltjes(num_complex::Complex64::new(u, lambda)).im;
    let mids = step.atoms().iter().map(|a| a + 0.5 * lambda);
    2.0 * grid
        .iter()
        .copied()
        .chain(mids)
        .map(eval)
        .fold(0.0, f64::max)
}

/// `sup_x |F(x) - G(x)|` for two step distributions.
pub fn kolmogorov_steps(f: &StepDistribution, g: &StepDistribution) -> f64 {
    f.atoms()
        .iter()
        .chain(g.atoms())
        .map(|&x| (f.cdf(x) - g.cdf(x)).abs())
        .fold(0.0, f64::max)
}

/// Orthonormal eigenbasis of `V` assembled from the SVD of `X`.
#[derive(Debug, Clone)]
pub struct BlockEigenbasis {
    /// Columns `(u_k, h_k)/√2`, then `(u_k, -h_k)/√2`, then `(0, h⁰)`.
    pub z: Array2<f64>,
    /// `s_1..s_n, -s_1..-s_n, 0..0` matching the columns of `z`.
    pub eigenvalues: Vec<f64>,
}

/// Builds `Z` with `ZᵀVZ = diag(S, -S, 0)`: left vectors `u_k` are the
/// eigenvectors of `W`, right vectors are `h_k = Xᵀu_k/(√p s_k)`, and the
/// null space of `X` is completed by Gram-Schmidt on the standard basis.
pub fn block_eigenbasis(x: &Array2<f64>) -> Result<BlockEigenbasis> {
    let (n, p) = x.dim();
    if n == 0 || p < n {
        return Err(Error::InvalidShape { n, p });
    }
    let w = eigen_sym(&sample_covariance(x), DEFAULT_TOL)?;
    let sp = (p as f64).sqrt();
    let mut z = Array2::zeros((n + p, n + p));
    let mut right: Vec<Array1<f64>> = Vec::with_capacity(p);
    let mut values = vec![0.0; n + p];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..n {
        let sk = w.eigenvalues[k].max(0.0).sqrt();
        if sk <= 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "X is rank deficient (s_{k} = {sk:e})"
            )));
        }
        let u = w.vectors.column(k);
        let h = x.t().dot(&u) / (sp * sk);
        z.slice_mut(s![..n, k]).assign(&(&u * r));
        z.slice_mut(s![n.., k]).assign(&(&h * r));
        z.slice_mut(s![..n, n + k]).assign(&(&u * r));
        z.slice_mut(s![n.., n + k]).assign(&(&h * -r));
        values[k] = sk;
        values[n + k] = -sk;
        right.push(h);
    }
    let mut col = 2 * n;
    for e in 0..p {
        if col == n + p {
            break;
        }
        let mut cand = Array1::zeros(p);
        cand[e] = 1.0;
        // Two passes of classical Gram-Schmidt.
        for _ in 0..2 {
            for h in &right {
                let c = h.dot(&cand);
                cand.scaled_add(-c, h);
            }
        }
        let norm = cand.dot(&cand).sqrt();
        if norm > 1e-6 {
            cand /= norm;
            z.slice_mut(s![n.., col]).assign(&cand);
            right.push(cand);
            col += 1;
        }
    }
    Ok(BlockEigenbasis {
        z,
        eigenvalues: values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_localized() {
        let scale = RateScale::new(1.0, 2.0, 8).unwrap();
        let r = deloc_stats(&Array2::eye(8), &scale).unwrap();
        assert_eq!(r.max_coord_sq, 1.0);
        assert!((r.max_partial_dev - (1.0 - 1.0 / 8.0)).abs() < 1e-15);
    }

    #[test]
    fn flat_basis() {
        let h = ndarray::array![
            [1.0, 1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0, 1.0]
        ] * 0.5;
        let scale = RateScale::new(1.0, 2.0, 4).unwrap();
        let r = deloc_stats(&h, &scale).unwrap();
        assert!((r.max_coord_sq - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_orthonormal() {
        let scale = RateScale::new(1.0, 2.0, 4).unwrap();
        let m = Array2::eye(4) * 1.1;
        assert!(matches!(
            deloc_stats(&m, &scale),
            Err(Error::NotOrthonormal(_))
        ));
    }

    #[test]
    fn concentration_examples() {
        let one = StepDistribution::new(&[0.3], &[1.0]).unwrap();
        assert_eq!(concentration_q(&one, 0.01).unwrap(), 1.0);
        let two = StepDistribution::new(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(concentration_q(&two, 0.5).unwrap(), 0.5);
        assert_eq!(concentration_q(&two, 1.0).unwrap(), 0.5);
        assert_eq!(concentration_q(&two, 1.0 + 1e-9).unwrap(), 1.0);
        assert!(concentration_q(&two, 0.0).is_err());
    }
}
