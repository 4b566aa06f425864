//! Seeded generation of `n × p` matrices with independent, centered,
//! unit-variance entries whose tails satisfy `P(|X| > t) <= ϰ⁻¹ exp(-t^ϰ)`.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EntryDistribution {
    Gaussian,
    Rademacher,
    /// `c · S · E^(1/κ)` with a fair sign `S`, `E ~ Exp(1)` and `c` from
    /// [`symmetrized_weibull_scale`].
    SymmetrizedWeibull {
        kappa: f64,
    },
}

impl EntryDistribution {
    /// Draws one standardized entry.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntryDistribution::Gaussian => rng.sample(StandardNormal),
            EntryDistribution::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDistribution::SymmetrizedWeibull { kappa } => {
                let e: f64 = Exp1.sample(rng);
                let magnitude = symmetrized_weibull_scale(kappa) * e.powf(1.0 / kappa);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }

    /// `ln P(|X| > t)`.
    pub fn log_tail(&self, t: f64) -> f64 {
        match *self {
            EntryDistribution::Gaussian => erfc(t / std::f64::consts::SQRT_2).ln(),
            EntryDistribution::Rademacher => {
                if t >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
            EntryDistribution::SymmetrizedWeibull { kappa } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(t / symmetrized_weibull_scale(kappa)).powf(kappa)
                }
            }
        }
    }

    /// Whether `P(|X| > t) <= ϰ⁻¹ exp(-t^ϰ)` holds on a dense grid of `t ∈ [1, 12]`.
    pub fn satisfies_tail_bound(&self, varkappa: f64) -> bool {
        const STEPS: usize = 11_000;
        (0..=STEPS).all(|i| {
            let t = 1.0 + 11.0 * i as f64 / STEPS as f64;
            self.log_tail(t) <= -varkappa.ln() - t.powf(varkappa) + 1e-12
        })
    }

    /// Largest tail exponent `ϰ` for which the entry law satisfies the
    /// sub-exponential bound, found by bisection. Infinite for bounded
    /// entries (`|X| <= 1`).
    ///
    /// The `ϰ⁻¹` prefactor makes this strictly smaller than the "natural"
    /// exponent: about 1.1 for Gaussian entries rather than 2.
    pub fn kappa_effective(&self) -> f64 {
        let cap = match *self {
            EntryDistribution::Rademacher => return f64::INFINITY,
            EntryDistribution::Gaussian => 2.0,
            EntryDistribution::SymmetrizedWeibull { kappa } => kappa,
        };
        if self.satisfies_tail_bound(cap) {
            return cap;
        }
        let (mut lo, mut hi) = (1e-3, cap);
        if !self.satisfies_tail_bound(lo) {
            return 0.0;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if self.satisfies_tail_bound(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryDistribution::Gaussian => f.write_str("gaussian"),
            EntryDistribution::Rademacher => f.write_str("rademacher"),
            EntryDistribution::SymmetrizedWeibull { kappa } => write!(f, "weibull:{kappa}"),
        }
    }
}

impl FromStr for EntryDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "gaussian" | "normal" => Ok(EntryDistribution::Gaussian),
            "rademacher" => Ok(EntryDistribution::Rademacher),
            other => {
                let kappa = other
                    .strip_prefix("weibull:")
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!("unknown distribution `{other}`"))
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("bad weibull exponent: {e}")))?;
                if !(kappa > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "weibull exponent {kappa} must be positive"
                    )));
                }
                Ok(EntryDistribution::SymmetrizedWeibull { kappa })
            }
        }
    }
}

impl TryFrom<String> for EntryDistribution {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EntryDistribution> for String {
    fn from(d: EntryDistribution) -> Self {
        d.to_string()
    }
}

/// `c = 1/√Γ(1 + 2/κ)`, the scale giving `c · S · E^(1/κ)` unit variance.
pub fn symmetrized_weibull_scale(kappa: f64) -> f64 {
    1.0 / gamma(1.0 + 2.0 / kappa).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixShape {
    pub n: usize,
    pub p: usize,
    pub y: f64,
}

impl MatrixShape {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if n < 2 || p < n {
            return Err(Error::InvalidShape { n, p });
        }
        Ok(Self {
            n,
            p,
            y: n as f64 / p as f64,
        })
    }

    /// `p = round(n / y)`; the realized ratio is stored in `y`.
    pub fn from_ratio(n: usize, y: f64) -> Result<Self> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "y = {y} must lie in (0, 1]"
            )));
        }
        Self::new(n, (n as f64 / y).round() as usize)
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of trial `trial` at size `n` from the sweep seed.
pub fn split_seed(seed0: u64, n: usize, trial: usize) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let h = mix64(seed0.wrapping_add(GOLDEN));
    let h = mix64(h ^ (n as u64).wrapping_mul(GOLDEN));
    mix64(
        h ^ (trial as u64)
            .wrapping_add(1)
            .wrapping_mul(0xd1b5_4a32_d192_ed03),
    )
}

/// Samples an `n × p` matrix of i.i.d. entries from `dist`; deterministic
/// in `(dist, shape, seed)`.
pub fn sample_matrix(
    dist: &EntryDistribution,
    shape: &MatrixShape,
    seed: u64,
) -> Result<Array2<f64>> {
    let shape = MatrixShape::new(shape.n, shape.p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Array2::from_shape_simple_fn((shape.n, shape.p), || {
        dist.sample(&mut rng)
    }))
}
