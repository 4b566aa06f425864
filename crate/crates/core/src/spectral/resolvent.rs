//! Resolvents of the block matrix `V` and of its minors `V^{(j)}`.
//!
//! Everything is a spectral sum over a real eigen-decomposition. Indices
//! are 0-based: rows `0..n` of `V` belong to `X`, rows `n..n+p` to `Xᵀ`.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use num_complex::Complex64;
use serde::Serialize;

use super::{eigen_sym_tridiagonal, empirical_stieltjes, symmetrize_block, SpectralDecomposition};
use crate::mp_law::{stieltjes_sym, MPParams};
use crate::{Error, Result};

fn check_upper(z: Complex64) -> Result<()> {
    if z.im > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!(
            "resolvent needs Im z > 0, got {z}"
        )))
    }
}

fn spectral_diag(decomp: &SpectralDecomposition, z: Complex64, j: usize) -> Complex64 {
    decomp
        .vectors
        .row(j)
        .iter()
        .zip(&decomp.eigenvalues)
        .map(|(&q, &l)| q * q / (l - z))
        .sum()
}

fn spectral_trace(decomp: &SpectralDecomposition, z: Complex64) -> Complex64 {
    decomp.eigenvalues.iter().map(|&l| (l - z).inv()).sum()
}

/// `Q_rows · diag(1/(λ - z)) · Q_rowsᵀ` for a subset of rows of `Q`.
fn spectral_block(rows: ArrayView2<f64>, eigenvalues: &[f64], z: Complex64) -> Array2<Complex64> {
    let mut re = rows.to_owned();
    let mut im = rows.to_owned();
    for (k, &l) in eigenvalues.iter().enumerate() {
        let w = (l - z).inv();
        re.column_mut(k).mapv_inplace(|q| q * w.re);
        im.column_mut(k).mapv_inplace(|q| q * w.im);
    }
    let re = re.dot(&rows.t());
    let im = im.dot(&rows.t());
    let mut out = Array2::zeros(re.raw_dim());
    Zip::from(&mut out)
        .and(&re)
        .and(&im)
        .for_each(|o, &r, &i| *o = Complex64::new(r, i));
    out
}

/// `R_jj(z) = Σ_k Q_jk² / (λ_k - z)`.
pub fn resolvent_diag(decomp: &SpectralDecomposition, z: Complex64, j: usize) -> Result<Complex64> {
    check_upper(z)?;
    if j >= decomp.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomp.dim(),
            got: j,
        });
    }
    Ok(spectral_diag(decomp, z, j))
}

/// `δ_n3 = (z²/n²) Σ_k 1/(s_k² - z²)²`.
pub fn delta_n3(singular_values: &[f64], z: Complex64) -> Complex64 {
    let n = singular_values.len() as f64;
    let z2 = z * z;
    let sum: Complex64 = singular_values
        .iter()
        .map(|&s| {
            let d = s * s - z2;
            (d * d).inv()
        })
        .sum();
    z2 * sum / (n * n)
}

/// Full resolvent of a minor `V^{(j)}`, indexed by the labels of `V`.
#[derive(Debug, Clone)]
pub struct MinorResolvent {
    pub removed: usize,
    pub matrix: Array2<Complex64>,
}

impl MinorResolvent {
    fn local(&self, label: usize) -> usize {
        assert_ne!(
            label, self.removed,
            "label {label} was removed from the minor"
        );
        if label < self.removed {
            label
        } else {
            label - 1
        }
    }

    /// `R^{(j)}_{ik}` for original labels `i, k != j`.
    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.matrix[[self.local(i), self.local(k)]]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diag().sum()
    }
}

/// The three parts of `ε_j = ε_j1 + ε_j2 + ε_j3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonTerms {
    pub eps1: Complex64,
    pub eps2: Complex64,
    pub eps3: Complex64,
}

impl EpsilonTerms {
    pub fn sum(&self) -> Complex64 {
        self.eps1 + self.eps2 + self.eps3
    }
}

/// One row's decomposition together with the two resolvent values it links.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsilonDecomposition {
    pub j: usize,
    pub z: Complex64,
    pub terms: EpsilonTerms,
    /// `R_jj` from the spectral sum of `V`.
    pub r_jj: Complex64,
    /// `R_jj` from the Schur complement `-1/(z + p⁻¹ Σ X_jk X_jl R^{(j)}_{k+n,l+n})`.
    pub r_jj_schur: Complex64,
    /// `a_n = z + (y-1)/z + y m_n` with `y = n/p`.
    pub a_n: Complex64,
    /// `Tr R - Tr R^{(j)}`.
    pub trace_gap: Complex64,
    /// `m_n - m_n^{(j)}`.
    pub m_gap: Complex64,
}

impl EpsilonDecomposition {
    pub fn schur_residual(&self) -> f64 {
        (self.r_jj - self.r_jj_schur).norm()
    }

    /// Residual of `R_jj = -1/a_n - ε_j R_jj / a_n`.
    pub fn representation_residual(&self) -> f64 {
        let rhs = -self.a_n.inv() - self.terms.sum() * self.r_jj / self.a_n;
        (self.r_jj - rhs).norm()
    }
}

/// `V` for a fixed `X` together with its eigen-decomposition.
#[derive(Debug, Clone)]
pub struct BlockResolvent {
    x: Array2<f64>,
    v: Array2<f64>,
    decomp: SpectralDecomposition,
}

impl BlockResolvent {
    pub fn new(x: &Array2<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidShape { n, p });
        }
        let v = symmetrize_block(x);
        let decomp = eigen_sym_tridiagonal(&v)?;
        Ok(Self {
            x: x.clone(),
            v,
            decomp,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.v
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomp
    }

    pub fn diag(&self, z: Complex64, j: usize) -> Complex64 {
        spectral_diag(&self.decomp, z, j)
    }

    pub fn trace(&self, z: Complex64) -> Complex64 {
        spectral_trace(&self.decomp, z)
    }

    /// `m_n(z) = (1/n) Σ_{j<n} R_jj`.
    pub fn m_n(&self, z: Complex64) -> Complex64 {
        let n = self.n();
        (0..n).map(|j| self.diag(z, j)).sum::<Complex64>() / n as f64
    }

    /// Eigen-decomposition of `V` with row and column `j` removed.
    pub fn minor_decomposition(&self, j: usize) -> Result<SpectralDecomposition> {
        let size = self.v.nrows();
        if j >= size {
            return Err(Error::DimensionMismatch {
                expected: size,
                got: j,
            });
        }
        let keep: Vec<usize> = (0..size).filter(|&i| i != j).collect();
        let minor = self.v.select(Axis(0), &keep).select(Axis(1), &keep);
        eigen_sym_tridiagonal(&minor)
    }

    pub fn minor_resolvent(&self, j: usize, z: Complex64) -> Result<MinorResolvent> {
        check_upper(z)?;
        let minor = self.minor_decomposition(j)?;
        Ok(MinorResolvent {
            removed: j,
            matrix: spectral_block(minor.vectors.view(), &minor.eigenvalues, z),
        })
    }

    /// `ε_j1, ε_j2, ε_j3` for a row `j < n`, plus the quantities the exact
    /// identities relate them to.
    pub fn epsilon(&self, j: usize, z: Complex64) -> Result<EpsilonDecomposition> {
        check_upper(z)?;
        let (n, p) = self.x.dim();
        if j >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: j,
            });
        }
        let pf = p as f64;
        let y = n as f64 / pf;
        let minor = self.minor_decomposition(j)?;
        // In the minor, labels n..n+p of V sit at n-1..n+p-1.
        let rows = minor.vectors.slice(ndarray::s![n - 1.., ..]);
        let block = spectral_block(rows, &minor.eigenvalues, z);
        let xj = self.x.row(j);

        let mut eps1 = Complex64::new(0.0, 0.0);
        let mut diag_quad = Complex64::new(0.0, 0.0);
        let mut minor_sum = Complex64::new(0.0, 0.0);
        for k in 0..p {
            let r = block[[k, k]];
            eps1 += (xj[k] * xj[k] - 1.0) * r;
            diag_quad += xj[k] * xj[k] * r;
            minor_sum += r;
        }
        let mut quad = Complex64::new(0.0, 0.0);
        for k in 0..p {
            let row_sum: Complex64 = (0..p).map(|l| block[[k, l]] * xj[l]).sum();
            quad += xj[k] * row_sum;
        }
        let full_sum: Complex64 = (n..n + p).map(|l| self.diag(z, l)).sum();
        let terms = EpsilonTerms {
            eps1: eps1 / pf,
            eps2: (quad - diag_quad) / pf,
            eps3: (minor_sum - full_sum) / pf,
        };

        let m_n = self.m_n(z);
        let a_n = z + (y - 1.0) / z + y * m_n;
        let trace_gap = self.trace(z) - spectral_trace(&minor, z);
        let m_gap = if n > 1 {
            let mnj: Complex64 = (0..n - 1)
                .map(|l| spectral_diag(&minor, z, l))
                .sum::<Complex64>()
                / (n - 1) as f64;
            m_n - mnj
        } else {
            Complex64::new(0.0, 0.0)
        };
        Ok(EpsilonDecomposition {
            j,
            z,
            terms,
            r_jj: self.diag(z, j),
            r_jj_schur: -(z + quad / pf).inv(),
            a_n,
            trace_gap,
            m_gap,
        })
    }
}

/// Resolvent of the minor `V^{(j)}` of the block matrix built from `X`.
pub fn minor_resolvent(x: &Array2<f64>, j: usize, z: Complex64) -> Result<MinorResolvent> {
    if j >= x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: j,
        });
    }
    BlockResolvent::new(x)?.minor_resolvent(j, z)
}

/// `(ε_j1, ε_j2, ε_j3)` for row `j` of `X` at `z`.
pub fn epsilon_decomposition(
    x: &Array2<f64>,
    j: usize,
    z: Complex64,
) -> Result<EpsilonDecomposition> {
    BlockResolvent::new(x)?.epsilon(j, z)
}

/// All self-consistency quantities for one matrix at one point `z`.
///
/// `δ_n = n⁻¹ Σ_j ε_j R_jj`. With `ε_j3` defined as the minor trace minus
/// the full trace, exact algebra gives `m_n = -(1 + δ_n)/a_n` and hence
/// `g_n = -δ_n / b_n`; `gn_residual` measures that identity.
#[derive(Debug, Clone, Serialize)]
pub struct ResolventDiagnostics {
    pub z: Complex64,
    pub y: f64,
    pub m_n: Complex64,
    pub s_y: Complex64,
    pub a_n: Complex64,
    pub b_n: Complex64,
    pub g_n: Complex64,
    pub eps: Vec<EpsilonTerms>,
    pub r_diag: Vec<Complex64>,
    pub delta_n: Complex64,
    /// `n⁻² Σ_j (Σ_l R_{l+n,l+n} - Σ_l R^{(j)}_{l+n,l+n}) R_jj`, from the minors.
    pub delta_n3: Complex64,
    /// `(z²/n²) Σ_k 1/(s_k² - z²)²` from the singular values.
    pub delta_n3_closed: Complex64,
    /// `|n m_n - Tr R/2 - (p-n)/(2z)|`.
    pub trace_residual: f64,
    /// `|m_n - (z/n) Σ 1/(s_k² - z²)|`.
    pub stieltjes_residual: f64,
    /// `max_j |R_jj + 1/(z + p⁻¹ Σ X_jk X_jl R^{(j)}_{k+n,l+n})|`.
    pub schur_residual: f64,
    /// `max_j |R_jj + 1/a_n + ε_j R_jj/a_n|`.
    pub representation_residual: f64,
    /// `|g_n + δ_n/b_n|`.
    pub gn_residual: f64,
    /// `|1 + y S_y/a_n - b_n/a_n|`.
    pub ratio_residual: f64,
    /// `|δ_n3 - δ_n3_closed - m_n/(z n)|`. The minor sum differs from the
    /// closed form by `m_n/(zn)` because `(Tr R - Tr R^{(j)}) R_jj = +dR_jj/dz`.
    pub delta_n3_residual: f64,
    /// `max_j |ε_j3| / (y/(n v))`; at most one.
    pub eps3_bound_ratio: f64,
    /// `max_j v |Tr R - Tr R^{(j)}|`; at most one.
    pub trace_gap_ratio: f64,
    /// `max_j v |m_n - m_n^{(j)}|`; at most one.
    pub m_gap_ratio: f64,
    /// `|δ_n3_closed| / (Im m_n / (n v))`; at most one.
    pub delta_n3_bound_ratio: f64,
}

/// Tolerances used by [`ResolventDiagnostics::failures`].
pub const IDENTITY_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-10;

impl ResolventDiagnostics {
    /// Names of the exact identities and inequalities that do not hold.
    pub fn failures(&self) -> Vec<&'static str> {
        let slack = 1.0 + 1e-9;
        let checks = [
            ("trace", self.trace_residual <= TRACE_TOL),
            ("stieltjes", self.stieltjes_residual <= TRACE_TOL),
            ("schur", self.schur_residual <= IDENTITY_TOL),
            (
                "representation",
                self.representation_residual <= IDENTITY_TOL,
            ),
            ("g_n", self.gn_residual <= IDENTITY_TOL),
            (
                "ratio",
                self.ratio_residual <= 1e-12 * (1.0 + self.b_n.norm() / self.a_n.norm()),
            ),
            ("delta_n3", self.delta_n3_residual <= IDENTITY_TOL),
            ("eps3_bound", self.eps3_bound_ratio <= slack),
            ("trace_gap", self.trace_gap_ratio <= slack),
            ("m_gap", self.m_gap_ratio <= slack),
            ("delta_n3_bound", self.delta_n3_bound_ratio <= slack),
        ];
        checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(name, _)| *name)
            .collect()
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Computes every diagnostic quantity at `z`. `law.y` must equal `n/p`.
pub fn self_consistency(
    x: &Array2<f64>,
    z: Complex64,
    law: &MPParams,
) -> Result<ResolventDiagnostics> {
    check_upper(z)?;
    let (n, p) = x.dim();
    if n < 2 || p < n {
        return Err(Error::InvalidShape { n, p });
    }
    let y = n as f64 / p as f64;
    if (law.y - y).abs() > 1e-9 * y {
        return Err(Error::InvalidParameter(format!(
            "law has y = {} but the matrix has n/p = {y}",
            law.y
        )));
    }
    let v = z.im;
    let block = BlockResolvent::new(x)?;
    // The n largest eigenvalues of V are the singular values of X/√p.
    let s: Vec<f64> = block
        .decomp
        .eigenvalues
        .iter()
        .rev()
        .take(n)
        .map(|&l| l.max(0.0))
        .collect();

    let m_n = block.m_n(z);
    let s_y = stieltjes_sym(law, z)?;
    let a_n = z + (y - 1.0) / z + y * m_n;
    let b_n = a_n + y * s_y;
    let g_n = m_n - s_y;

    let mut eps = Vec::with_capacity(n);
    let mut r_diag = Vec::with_capacity(n);
    let mut delta_n = Complex64::new(0.0, 0.0);
    let mut delta_minor = Complex64::new(0.0, 0.0);
    let mut schur_residual: f64 = 0.0;
    let mut representation_residual: f64 = 0.0;
    let mut eps3_max: f64 = 0.0;
    let mut trace_gap_max: f64 = 0.0;
    let mut m_gap_max: f64 = 0.0;
    for j in 0..n {
        let e = block.epsilon(j, z)?;
        delta_n += e.terms.sum() * e.r_jj;
        delta_minor += -(p as f64) * e.terms.eps3 * e.r_jj;
        schur_residual = schur_residual.max(e.schur_residual());
        representation_residual = representation_residual.max(e.representation_residual());
        eps3_max = eps3_max.max(e.terms.eps3.norm());
        trace_gap_max = trace_gap_max.max(e.trace_gap.norm());
        m_gap_max = m_gap_max.max(e.m_gap.norm());
        eps.push(e.terms);
        r_diag.push(e.r_jj);
    }
    let nf = n as f64;
    delta_n /= nf;
    delta_minor /= nf * nf;
    let delta_n3_closed = delta_n3(&s, z);

    Ok(ResolventDiagnostics {
        z,
        y,
        m_n,
        s_y,
        a_n,
        b_n,
        g_n,
        eps,
        r_diag,
        delta_n,
        delta_n3: delta_minor,
        delta_n3_closed,
        trace_residual: (nf * m_n - 0.5 * block.trace(z) - (p - n) as f64 / (2.0 * z)).norm(),
        stieltjes_residual: (m_n - empirical_stieltjes(&s, z)).norm(),
        schur_residual,
        representation_residual,
        gn_residual: (g_n + delta_n / b_n).norm(),
        ratio_residual: (1.0 + y * s_y / a_n - b_n / a_n).norm(),
        delta_n3_residual: (delta_minor - delta_n3_closed - m_n / (z * nf)).norm(),
        eps3_bound_ratio: eps3_max / (y / (nf * v)),
        trace_gap_ratio: trace_gap_max * v,
        m_gap_ratio: m_gap_max * v,
        delta_n3_bound_ratio: delta_n3_closed.norm() / (m_n.im / (nf * v)),
    })
}
