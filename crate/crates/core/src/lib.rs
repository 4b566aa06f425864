//! Numerical laboratory for the Marchenko–Pastur law.
//!
//! The crate evaluates the Marchenko–Pastur law and its symmetrization
//! (density, distribution function, Stieltjes transforms), samples sample
//! covariance matrices `W = XXᵀ/p` with independent standardized entries,
//! and measures how far their empirical spectra sit from the limit law:
//!
//! * [`mp_law`] closed-form and quadrature evaluation of the law,
//! * [`ensembles`] seeded, stream-splittable matrix generation,
//! * [`spectral`] eigensolvers, empirical spectral distributions,
//!   resolvents of the block matrix `V` and their exact identities,
//! * [`distance`] Kolmogorov distances and the Stieltjes smoothing bound,
//! * [`deloc`] eigenvector delocalization statistics,
//! * [`harness`] trial/sweep driver, power-law rate fits and report emission.
//!
//! Indices in the public API are zero-based.

pub mod deloc;
pub mod distance;
pub mod ensembles;
pub mod harness;
pub mod mp_law;
pub mod quad;
pub mod spectral;
pub mod verify;

mod error;

pub use error::{Error, Result};
pub use num_complex::Complex64;
