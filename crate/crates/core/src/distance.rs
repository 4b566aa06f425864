//! Kolmogorov distances to the Marchenko-Pastur law and the Stieltjes
//! smoothing-inequality bound on the symmetrized distance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mp_law::{self, MPParams, RateScale};
use crate::quad::{integrate, QuadOptions};
use crate::spectral::{empirical_stieltjes, esd, singular_values, sym_esd, StepDistribution};
use crate::{Error, Result};

/// `H = tan(3π/8) = 1 + √2`.
pub const H: f64 = 1.0 + std::f64::consts::SQRT_2;
/// Default number of points in the sup grid over `J'_ε`.
pub const DEFAULT_U_GRID: usize = 512;
/// Default absolute tolerance of every contour integral.
pub const DEFAULT_QUAD_TOL: f64 = 1e-7;

/// `(2/π) arctan H`, the mass of the Cauchy law on `[-H, H]`.
pub fn tau(h: f64) -> f64 {
    2.0 / std::f64::consts::PI * h.atan()
}

/// `(C1, C2)` of the smoothing inequality.
pub fn smoothing_constants(law: &MPParams) -> (f64, f64) {
    use std::f64::consts::PI;
    if law.is_critical() {
        (H * H / PI, 1.0 / PI)
    } else {
        let root = (law.y * (1.0 - law.sqrt_y())).sqrt();
        (
            2.0 * H * H * 3f64.sqrt() / (PI * PI * root),
            4.0 / (PI * root),
        )
    }
}

/// Parameters of the smoothing bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub h: f64,
    pub tau: f64,
    /// Height `v` of the lower contour.
    pub v: f64,
    pub epsilon: f64,
    /// Height `V = 4√y` of the horizontal contour.
    pub v_top: f64,
    pub c1: f64,
    pub c2: f64,
    pub u_grid: usize,
    pub quad_tol: f64,
    /// Truncation of the horizontal integral, `max(8, 2n)`.
    pub u_max: f64,
}

impl SmoothingConfig {
    fn build(law: &MPParams, v: f64, epsilon: f64, n: usize) -> Result<Self> {
        let limit = 0.5 * law.sqrt_y();
        if !(epsilon > 0.0 && epsilon < limit) {
            return Err(Error::EpsilonTooLarge { epsilon, limit });
        }
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("v = {v} must be positive")));
        }
        let (c1, c2) = smoothing_constants(law);
        Ok(Self {
            h: H,
            tau: tau(H),
            v,
            epsilon,
            v_top: 4.0 * law.sqrt_y(),
            c1,
            c2,
            u_grid: DEFAULT_U_GRID,
            quad_tol: DEFAULT_QUAD_TOL,
            u_max: (2.0 * n as f64).max(8.0),
        })
    }

    /// `v = v₀ = d y β⁴/n`, `ε = (2H v₀)^{2/3}`.
    pub fn default_config(law: &MPParams, scale: &RateScale, d: f64) -> Result<Self> {
        let v0 = scale.v0(law.y, d);
        Self::build(law, v0, (2.0 * H * v0).powf(2.0 / 3.0), scale.n)
    }

    /// The largest admissible `v = ε^{3/2}/(2H)` for a given `ε`.
    pub fn from_epsilon(law: &MPParams, epsilon: f64, n: usize) -> Result<Self> {
        Self::build(law, epsilon.powf(1.5) / (2.0 * H), epsilon, n)
    }

    /// `2vH <= ε^{3/2}`, up to rounding.
    pub fn is_admissible(&self) -> bool {
        2.0 * self.v * self.h <= self.epsilon.powf(1.5) * (1.0 + 1e-12)
    }
}

/// Itemized smoothing bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingTerms {
    /// `∫_{|u|<=U} |m(u+iV) - S(u+iV)| du`.
    pub horizontal_integral: f64,
    /// Certified bound on the same integral over `|u| > U`.
    pub tail_allowance: f64,
    /// `sup_x ∫_{v/√γ(x)}^V |m(x+iu) - S(x+iu)| du` over the grid on `J'_ε`.
    pub vertical_sup_integral: f64,
    pub vertical_argsup: f64,
    pub c1v: f64,
    pub c2eps32: f64,
    /// `2 (horizontal + tail) + C1 v + C2 ε^{3/2} + 2 vertical_sup`.
    pub bound: f64,
    /// Sum of the quadrature error estimates entering `bound`.
    pub quadrature_error: f64,
    /// Spacing of the sup grid.
    pub grid_step: f64,
    pub u_max: f64,
    pub v: f64,
    pub epsilon: f64,
}

fn check_config(cfg: &SmoothingConfig) -> Result<()> {
    if !cfg.is_admissible() {
        return Err(Error::InadmissibleConfig {
            lhs: 2.0 * cfg.v * cfg.h,
            rhs: cfg.epsilon.powf(1.5),
        });
    }
    if cfg.u_grid < 2 {
        return Err(Error::InvalidParameter("u_grid must be at least 2".into()));
    }
    Ok(())
}

/// Evaluates the smoothing bound for a symmetric distribution `F` with
/// Stieltjes transform `m_eval`, supported in `[-radius, radius]`.
///
/// By symmetry of both laws the vertical integrals are taken at `x > 0` only.
pub fn smoothing_bound<M>(
    m_eval: M,
    radius: f64,
    law: &MPParams,
    cfg: &SmoothingConfig,
) -> Result<SmoothingTerms>
where
    M: Fn(Complex64) -> Complex64,
{
    check_config(cfg)?;
    let r = radius.max(law.outer_edge());
    let diff =
        |z: Complex64| -> Result<f64> { Ok((m_eval(z) - mp_law::stieltjes_sym(law, z)?).norm()) };
    let opts = QuadOptions::with_abs_tol(cfg.quad_tol);

    // Horizontal contour at height V. Keep U well clear of the support.
    let u_max = cfg.u_max.max(2.0 * r);
    let mut horizontal = 0.0;
    let mut qerr = 0.0;
    let cuts = [-u_max, -2.0 * r, 0.0, 2.0 * r, u_max];
    for w in cuts.windows(2) {
        let mut fail = None;
        let est = integrate(
            |u| match diff(Complex64::new(u, cfg.v_top)) {
                Ok(d) => d,
                Err(e) => {
                    fail.get_or_insert(e);
                    f64::NAN
                }
            },
            w[0],
            w[1],
            opts,
        );
        if let Some(e) = fail {
            return Err(e);
        }
        let est = est?;
        horizontal += est.value;
        qerr += 2.0 * est.error;
    }
    // |S_F(z) - S_G(z)| <= 2R²/(|z|(|z|²-R²)) for symmetric laws on [-R, R].
    let tail = -2.0 * (-(r * r) / (u_max * u_max)).ln_1p();

    // Vertical contours over the grid on J'_ε, in log-height.
    let lo = law.inner_edge() + 0.5 * cfg.epsilon;
    let hi = law.outer_edge() - 0.5 * cfg.epsilon;
    let step = (hi - lo) / (cfg.u_grid - 1) as f64;
    let mut vertical_sup: f64 = 0.0;
    let mut argsup = lo;
    let mut vertical_err = 0.0;
    for i in 0..cfg.u_grid {
        let x = if i + 1 == cfg.u_grid {
            hi
        } else {
            lo + step * i as f64
        };
        let bottom = cfg.v / law.gamma(x).sqrt();
        if bottom >= cfg.v_top {
            continue;
        }
        let mut fail = None;
        let est = integrate(
            |t| {
                let u = t.exp();
                match diff(Complex64::new(x, u)) {
                    Ok(d) => d * u,
                    Err(e) => {
                        fail.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            bottom.ln(),
            cfg.v_top.ln(),
            opts,
        );
        if let Some(e) = fail {
            return Err(e);
        }
        let est = est?;
        if est.value > vertical_sup {
            vertical_sup = est.value;
            argsup = x;
            vertical_err = est.error;
        }
    }

    let c1v = cfg.c1 * cfg.v;
    let c2eps32 = cfg.c2 * cfg.epsilon.powf(1.5);
    Ok(SmoothingTerms {
        horizontal_integral: horizontal,
        tail_allowance: tail,
        vertical_sup_integral: vertical_sup,
        vertical_argsup: argsup,
        c1v,
        c2eps32,
        bound: 2.0 * (horizontal + tail) + c1v + c2eps32 + 2.0 * vertical_sup,
        quadrature_error: qerr + 2.0 * vertical_err,
        grid_step: step,
        u_max,
        v: cfg.v,
        epsilon: cfg.epsilon,
    })
}

/// Exact `sup_x |F(x) - G(x)|` for a step `F` and a continuous `G`.
pub fn kolmogorov<G>(step: &StepDistribution, mut cdf: G) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    let mut sup: f64 = 0.0;
    for &a in step.atoms() {
        let g = cdf(a)?;
        sup = sup
            .max((step.cdf(a) - g).abs())
            .max((step.left_limit(a) - g).abs());
    }
    Ok(sup)
}

/// `sup_x |𝓕(x) - G_y(x)|`.
pub fn kolmogorov_mp(step: &StepDistribution, law: &MPParams) -> Result<f64> {
    kolmogorov(step, |x| mp_law::cdf(law, x))
}

/// `sup_x |𝓕̃(x) - G̃_y(x)|`.
pub fn kolmogorov_sym(step: &StepDistribution, law: &MPParams) -> Result<f64> {
    kolmogorov(step, |x| mp_law::sym_cdf(law, x))
}

/// Distances of one spectrum to the law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// `Δ*_n = sup|𝓕_n - G_y|`.
    pub kolmogorov_plain: f64,
    /// `sup|𝓕̃_n - G̃_y|`; exactly half the plain distance.
    pub kolmogorov_sym: f64,
    pub smoothing: Option<SmoothingTerms>,
}

impl DistanceReport {
    pub fn smoothing_bound(&self) -> Option<f64> {
        self.smoothing.map(|s| s.bound)
    }
}

/// Distances for the eigenvalues of `W`; the smoothing bound is added when
/// a configuration is supplied.
pub fn distance_report(
    eigenvalues: &[f64],
    law: &MPParams,
    cfg: Option<&SmoothingConfig>,
) -> Result<DistanceReport> {
    let s = singular_values(eigenvalues);
    let squares: Vec<f64> = s.iter().map(|v| v * v).collect();
    let kolmogorov_plain = kolmogorov_mp(&esd(&squares)?, law)?;
    let kolmogorov_sym = kolmogorov_sym(&sym_esd(&s, s.len())?, law)?;
    let smoothing = match cfg {
        Some(cfg) => {
            let radius = s.iter().copied().fold(0.0, f64::max);
            Some(smoothing_bound(
                |z| empirical_stieltjes(&s, z),
                radius,
                law,
                cfg,
            )?)
        }
        None => None,
    };
    Ok(DistanceReport {
        kolmogorov_plain,
        kolmogorov_sym,
        smoothing,
    })
}

/// Envelope `32β⁴(1+√y+c₀)/(nv) + 32β⁴/(n²v²√(γ+v))` for `|g_n(x+iv)|`,
/// with `c₀ = √((1+√y)/(1-√y))` for `y < 1` and `0` for `y = 1`. Reported as
/// a diagnostic only.
pub fn gn_envelope(law: &MPParams, scale: &RateScale, x: f64, v: f64) -> f64 {
    let sy = law.sqrt_y();
    let c0 = if law.is_critical() {
        0.0
    } else {
        ((1.0 + sy) / (1.0 - sy)).sqrt()
    };
    let b4 = 32.0 * scale.beta.powi(4);
    let n = scale.n as f64;
    let gamma = law.gamma(x).max(0.0);
    b4 * (1.0 + sy + c0) / (n * v) + b4 / (n * n * v * v * (gamma + v).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_is_three_quarters() {
        assert!((tau(H) - 0.75).abs() < 1e-12);
        assert!((H - (3.0 * std::f64::consts::PI / 8.0).tan()).abs() < 1e-12);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn critical_constants() {
        let (c1, c2) = smoothing_constants(&MPParams::new(1.0).unwrap());
        assert!((c1 - 1.855_25).abs() < 1e-5);
        assert!((c2 - 0.31831).abs() < 1e-5);
    }

    #[test]
    fn from_epsilon_is_admissible() {
        let law = MPParams::new(0.5).unwrap();
        let cfg = SmoothingConfig::from_epsilon(&law, 0.1, 256).unwrap();
        assert!(cfg.is_admissible());
        assert_eq!(cfg.u_max, 512.0);
        assert!(matches!(
            SmoothingConfig::from_epsilon(&law, 0.4, 256),
            Err(Error::EpsilonTooLarge { .. })
        ));
        let mut bad = cfg;
        bad.v *= 1.01;
        assert!(!bad.is_admissible());
    }

    #[test]
    fn default_config_small_n_is_too_large() {
        let law = MPParams::new(0.5).unwrap();
        let scale = RateScale::new(1.0, 2.0, 1024).unwrap();
        assert!(matches!(
            SmoothingConfig::default_config(&law, &scale, 32.0),
            Err(Error::EpsilonTooLarge { .. })
        ));
    }

    #[test]
    fn single_atom_distance() {
        let law = MPParams::new(1.0).unwrap();
        let step = StepDistribution::new(&[1.0], &[1.0]).unwrap();
        let d = kolmogorov_mp(&step, &law).unwrap();
        assert!((d - 0.60900).abs() < 1e-4);
    }
}
