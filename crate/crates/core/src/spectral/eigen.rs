//! Dense symmetric eigensolvers.
//!
//! [`eigen_sym`] is a row-cyclic Jacobi method: deterministic, with
//! excellent orthogonality, and the reference solver for the identity
//! suites. [`eigen_sym_tridiagonal`] (Householder reduction followed by
//! implicit QL) is several times faster and is what the Monte Carlo
//! harness uses at `n` in the hundreds to thousands.

use ndarray::Array2;
use serde::Serialize;

use crate::{Error, Result};

/// Default relative off-diagonal tolerance for [`eigen_sym`].
pub const DEFAULT_TOL: f64 = 1e-15;
/// Sweep limit for [`eigen_sym`].
pub const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order with matching orthonormal eigenvector
/// columns. Each column is signed so that its largest-magnitude entry is
/// positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub vectors: Array2<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `‖QᵀQ - I‖_max`.
    pub fn orthogonality_error(&self) -> f64 {
        let gram = self.vectors.t().dot(&self.vectors);
        gram.indexed_iter()
            .map(|((i, j), &g)| (g - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// `‖M - QΛQᵀ‖_max`.
    pub fn reconstruction_error(&self, m: &Array2<f64>) -> f64 {
        let mut scaled = self.vectors.clone();
        for (mut col, &l) in scaled.columns_mut().into_iter().zip(&self.eigenvalues) {
            col *= l;
        }
        let rebuilt = scaled.dot(&self.vectors.t());
        (&rebuilt - m).iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

fn check_symmetric(m: &Array2<f64>) -> Result<usize> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: c,
        });
    }
    let scale = m.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    for i in 0..r {
        for j in (i + 1)..r {
            if (m[[i, j]] - m[[j, i]]).abs() > 1e-12 * scale {
                return Err(Error::InvalidParameter(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[[i, j]],
                    m[[j, i]]
                )));
            }
        }
    }
    Ok(r)
}

/// Sorts ascending and fixes the sign of every eigenvector.
fn finish(values: Vec<f64>, vectors: Array2<f64>) -> SpectralDecomposition {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let mut sorted = Array2::zeros(vectors.raw_dim());
    for (dst, &src) in order.iter().enumerate() {
        let col = vectors.column(src);
        let mut pivot = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        sorted.column_mut(dst).assign(&(&col * sign));
    }
    SpectralDecomposition {
        eigenvalues,
        vectors: sorted,
    }
}

/// Cyclic Jacobi eigen-decomposition of a real symmetric matrix.
///
/// Sweeps rows in order and annihilates every nonzero off-diagonal entry;
/// stops once `‖offdiag(A)‖_F <= tol · ‖M‖_F`.
pub fn eigen_sym(m: &Array2<f64>, tol: f64) -> Result<SpectralDecomposition> {
    let n = check_symmetric(m)?;
    let mut a: Vec<f64> = m.iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = tol * frob;
    let mut converged = n < 2 || frob == 0.0;
    let mut sweep = 0;
    while !converged {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>();
        if (2.0 * off).sqrt() <= target {
            converged = true;
            break;
        }
        if sweep == MAX_SWEEPS {
            break;
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    let vectors = Array2::from_shape_vec((n, n), v).expect("n*n buffer");
    Ok(finish(values, vectors))
}

/// Householder tridiagonalization; returns `(diag, offdiag)` and leaves the
/// accumulated orthogonal transform in `v` when `accumulate` is set.
fn tridiagonalize(v: &mut [f64], n: usize, accumulate: bool) -> (Vec<f64>, Vec<f64>) {
    let mut d: Vec<f64> = (0..n).map(|j| v[(n - 1) * n + j]).collect();
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }
    if !accumulate {
        let diag = (0..n).map(|j| v[j * n + j]).collect();
        e[0] = 0.0;
        return (diag, e);
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
    (d, e)
}

/// Implicit QL iterations on a symmetric tridiagonal matrix, optionally
/// rotating the columns of `v` along.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut v: Option<&mut [f64]>, n: usize) -> Result<()> {
    const MAX_ITER: usize = 60;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_ITER {
                    return Err(Error::NoConvergence(MAX_ITER));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let vk1 = v[k * n + i + 1];
                            let vk = v[k * n + i];
                            v[k * n + i + 1] = s * vk + c * vk1;
                            v[k * n + i] = c * vk - s * vk1;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Eigen-decomposition by Householder tridiagonalization and implicit QL.
pub fn eigen_sym_tridiagonal(m: &Array2<f64>) -> Result<SpectralDecomposition> {
    let n = check_symmetric(m)?;
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: vec![],
            vectors: Array2::zeros((0, 0)),
        });
    }
    let mut v: Vec<f64> = m.iter().copied().collect();
    let (mut d, mut e) = tridiagonalize(&mut v, n, true);
    tridiagonal_ql(&mut d, &mut e, Some(&mut v), n)?;
    let vectors = Array2::from_shape_vec((n, n), v).expect("n*n buffer");
    Ok(finish(d, vectors))
}

/// Ascending eigenvalues only (no eigenvector accumulation).
pub fn eigenvalues_sym(m: &Array2<f64>) -> Result<Vec<f64>> {
    let n = check_symmetric(m)?;
    if n == 0 {
        return Ok(vec![]);
    }
    let mut v: Vec<f64> = m.iter().copied().collect();
    let (mut d, mut e) = tridiagonalize(&mut v, n, false);
    tridiagonal_ql(&mut d, &mut e, None, n)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}
