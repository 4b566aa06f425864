//! The Marchenko–Pastur law with ratio `y = n/p ∈ (0, 1]`, its
//! symmetrization to `[-(1+√y), -(1-√y)] ∪ [1-√y, 1+√y]`, and their
//! Stieltjes transforms.
//!
//! ```text
//! g_y(x)   = √((x-a)(b-x)) / (2π y x)     on [a, b],  a = (1-√y)², b = (1+√y)²
//! G̃_y(x)  = (1 + sign(x) G_y(x²)) / 2
//! s_y:       y z s² + (y - 1 + z) s + 1 = 0
//! S_y(z)   = z s_y(z²),   y S² + (z + (y-1)/z) S + 1 = 0
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quad::{integrate, QuadOptions};
use crate::{Error, Result};

/// Absolute tolerance used for the distribution function quadrature.
pub const CDF_TOL: f64 = 1e-12;

/// Law parameter with its support edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MPParams {
    pub y: f64,
    pub a: f64,
    pub b: f64,
}

impl MPParams {
    pub fn new(y: f64) -> Result<Self> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "y = {y} must lie in (0, 1]"
            )));
        }
        let sy = y.sqrt();
        Ok(Self {
            y,
            a: (1.0 - sy) * (1.0 - sy),
            b: (1.0 + sy) * (1.0 + sy),
        })
    }

    pub fn sqrt_y(&self) -> f64 {
        self.y.sqrt()
    }

    /// Inner edge `1-√y` of the symmetrized support.
    pub fn inner_edge(&self) -> f64 {
        1.0 - self.sqrt_y()
    }

    /// Outer edge `1+√y` of the symmetrized support.
    pub fn outer_edge(&self) -> f64 {
        1.0 + self.sqrt_y()
    }

    /// Distance of `|x|` to the nearest edge of the symmetrized support,
    /// `min(|x| - (1-√y), (1+√y) - |x|)`. Negative outside the support.
    pub fn gamma(&self, x: f64) -> f64 {
        let ax = x.abs();
        (ax - self.inner_edge()).min(self.outer_edge() - ax)
    }

    pub fn is_critical(&self) -> bool {
        self.y == 1.0
    }
}

/// Polylogarithmic rate factor `β_n = ℓ^(1/κ + 1/2)` with
/// `ℓ = ln n (ln ln n)^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateScale {
    pub alpha: f64,
    pub kappa: f64,
    pub n: usize,
    pub ell: f64,
    pub beta: f64,
}

impl RateScale {
    pub fn new(alpha: f64, kappa: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0) || !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} and kappa = {kappa} must be positive"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "n = {n} must be at least 3"
            )));
        }
        let ln_n = (n as f64).ln();
        let ell = ln_n * ln_n.ln().powf(alpha);
        let beta = ell.powf(1.0 / kappa + 0.5);
        if n >= 16 && beta < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "beta = {beta} < 1 at n = {n}"
            )));
        }
        Ok(Self {
            alpha,
            kappa,
            n,
            ell,
            beta,
        })
    }

    /// Lower spectral height `v₀ = d y β⁴ / n`.
    pub fn v0(&self, y: f64, d: f64) -> f64 {
        d * y * self.beta.powi(4) / self.n as f64
    }
}

/// The spectral window `J_ε` together with the height `v₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDomain {
    pub params: MPParams,
    pub epsilon: f64,
    pub d: f64,
    pub v0: f64,
}

impl SpectralDomain {
    pub fn new(params: MPParams, epsilon: f64, scale: &RateScale, d: f64) -> Result<Self> {
        let limit = 0.5 * params.sqrt_y();
        if !(epsilon > 0.0 && epsilon < limit) {
            return Err(Error::EpsilonTooLarge { epsilon, limit });
        }
        if !(d >= 32.0) {
            return Err(Error::InvalidParameter(format!(
                "d = {d} must be at least 32"
            )));
        }
        Ok(Self {
            params,
            epsilon,
            d,
            v0: scale.v0(params.y, d),
        })
    }

    pub fn gamma(&self, x: f64) -> f64 {
        self.params.gamma(x)
    }

    /// `v₀' = √y v₀ / √γ(x)`.
    pub fn v0prime(&self, x: f64) -> f64 {
        self.params.sqrt_y() * self.v0 / self.gamma(x).sqrt()
    }

    /// `|x| ∈ J_ε = [1-√y+ε, 1+√y-ε]`.
    pub fn in_j_eps(&self, x: f64) -> bool {
        self.gamma(x) >= self.epsilon
    }

    /// `|x| ∈ J'_ε = [1-√y+ε/2, 1+√y-ε/2]`.
    pub fn in_j_eps_prime(&self, x: f64) -> bool {
        self.gamma(x) >= 0.5 * self.epsilon
    }
}

/// Density `g_y(x)`; zero outside `(a, b)` and at `x = 0`.
pub fn density(params: &MPParams, x: f64) -> f64 {
    if !(x > params.a && x < params.b) || x <= 0.0 {
        return 0.0;
    }
    ((x - params.a) * (params.b - x)).sqrt() / (2.0 * PI * params.y * x)
}

/// Distribution function `G_y(x)`.
///
/// Integrates the density after `x = a + (b-a) sin²(θ/2)`, which turns the
/// integrand into the smooth `(b-a)² sin²θ / (8πy x(θ))` and removes both
/// the square-root edges and, for `y = 1`, the `x^(-1/2)` pole at zero.
pub fn cdf(params: &MPParams, x: f64) -> Result<f64> {
    if x <= params.a {
        return Ok(0.0);
    }
    if x >= params.b {
        return Ok(1.0);
    }
    let width = params.b - params.a;
    let theta = 2.0 * ((x - params.a) / width).sqrt().min(1.0).asin();
    let scale = width * width / (8.0 * PI * params.y);
    let integrand = |t: f64| {
        let half = (0.5 * t).sin();
        let xt = params.a + width * half * half;
        let s = t.sin();
        scale * s * s / xt
    };
    let est = integrate(integrand, 0.0, theta, QuadOptions::with_abs_tol(CDF_TOL))?;
    Ok(est.value.clamp(0.0, 1.0))
}

/// Symmetrized distribution function `(1 + sign(x) G_y(x²)) / 2`.
pub fn sym_cdf(params: &MPParams, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.5);
    }
    let g = cdf(params, x * x)?;
    Ok(0.5 * (1.0 + x.signum() * g))
}

/// Symmetrized density `|x| g_y(x²)`, the derivative of [`sym_cdf`].
pub fn sym_density(params: &MPParams, x: f64) -> f64 {
    let ax = x.abs();
    if ax < params.inner_edge() || ax > params.outer_edge() || ax == 0.0 {
        return 0.0;
    }
    let x2 = ax * ax;
    let prod = (x2 - params.a) * (params.b - x2);
    if prod <= 0.0 {
        return 0.0;
    }
    prod.sqrt() / (2.0 * PI * params.y * ax)
}

/// Both roots of `A s² + B s + C = 0`, formed without cancellation.
pub(crate) fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> (Complex64, Complex64) {
    let mut sq = (b * b - 4.0 * a * c).sqrt();
    if (b.conj() * sq).re < 0.0 {
        sq = -sq;
    }
    let q = -0.5 * (b + sq);
    if q == Complex64::new(0.0, 0.0) {
        let r = -b / (2.0 * a);
        return (r, r);
    }
    (q / a, c / q)
}

/// Stieltjes transform `s_y(z) = ∫ dG_y(x)/(x - z)`.
///
/// For `Im z > 0` the root with positive imaginary part is returned (and
/// its conjugate counterpart below the axis). On the real axis outside the
/// support the root of smaller modulus is the transform; on the support the
/// boundary value from above is returned, so `Im s_y(x)/π = g_y(x)`.
pub fn stieltjes_mp(params: &MPParams, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::DegenerateQuadratic(format!("{z}")));
    }
    let y = params.y;
    let (r1, r2) = quadratic_roots(
        y * z,
        Complex64::new(y - 1.0, 0.0) + z,
        Complex64::new(1.0, 0.0),
    );
    let root = if z.im > 0.0 {
        if r1.im >= r2.im {
            r1
        } else {
            r2
        }
    } else if z.im < 0.0 {
        if r1.im <= r2.im {
            r1
        } else {
            r2
        }
    } else if z.re >= params.a && z.re <= params.b {
        let r = if r1.im >= r2.im { r1 } else { r2 };
        Complex64::new(r.re, r.im.abs())
    } else if r1.norm() <= r2.norm() {
        Complex64::new(r1.re, 0.0)
    } else {
        Complex64::new(r2.re, 0.0)
    };
    Ok(root)
}

/// Stieltjes transform of the symmetrized law, `S_y(z) = z s_y(z²)`.
pub fn stieltjes_sym(params: &MPParams, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::DomainError(format!("S_y needs Im z > 0, got {z}")));
    }
    Ok(z * stieltjes_mp(params, z * z)?)
}

/// Residual of `y z s² + (y-1+z) s + 1`.
pub fn mp_residual(params: &MPParams, z: Complex64, s: Complex64) -> f64 {
    let y = params.y;
    (y * z * s * s + (Complex64::new(y - 1.0, 0.0) + z) * s + 1.0).norm()
}

/// Residual of `y S² + ((y-1)/z + z) S + 1`.
pub fn sym_residual(params: &MPParams, z: Complex64, s: Complex64) -> f64 {
    let y = params.y;
    (y * s * s + ((y - 1.0) / z + z) * s + 1.0).norm()
}

/// Sign and imaginary-part checks of the discriminant
/// `D(z) = (z + (y-1)/z)² - 4y` on the strip over the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchDiagnostics {
    /// `Re D(z)`, expected `<= 0`.
    pub realpart_check: f64,
    /// `Im √D(z) - (y^¼/2)√(γ + v)` on the `Im ≥ 0` branch, expected `>= 0`.
    pub imsqrt_lower: f64,
}

pub fn branch_diagnostics(params: &MPParams, z: Complex64) -> Result<BranchDiagnostics> {
    let (u, v) = (z.re, z.im);
    if !(v > 0.0) {
        return Err(Error::DomainError(format!("need Im z > 0, got {z}")));
    }
    let gamma = params.gamma(u);
    if gamma < 0.0 {
        return Err(Error::DomainError(format!(
            "|u| = {} outside [{}, {}]",
            u.abs(),
            params.inner_edge(),
            params.outer_edge()
        )));
    }
    let y = params.y;
    let w = z + (y - 1.0) / z;
    let disc = w * w - 4.0 * y;
    let mut root = disc.sqrt();
    if root.im < 0.0 {
        root = -root;
    }
    Ok(BranchDiagnostics {
        realpart_check: disc.re,
        imsqrt_lower: root.im - 0.5 * y.powf(0.25) * (gamma + v).sqrt(),
    })
}

/// Whether `sym_density(x) <= 3√γ(x) / (π √(y(1-√y)))`.
pub fn density_bound_check(params: &MPParams, x: f64) -> Result<bool> {
    if params.is_critical() {
        return Err(Error::DomainError("density bound needs y < 1".into()));
    }
    let gamma = params.gamma(x);
    if gamma < 0.0 {
        return Err(Error::DomainError(format!(
            "|x| = {} outside the support",
            x.abs()
        )));
    }
    let sy = params.sqrt_y();
    let bound = 3.0 * gamma.sqrt() / (PI * (params.y * (1.0 - sy)).sqrt());
    Ok(sym_density(params, x) <= bound)
}
