//! Edge statistics of general-population sample covariance matrices.
//!
//! The crate computes the rightmost-edge parameters `(c, λ_r, σ)` of
//! `Σ^{1/2} X X* Σ^{1/2}`, normalizes largest eigenvalues to Tracy–Widom
//! scale, samples the matrix ensembles used to validate that normalization,
//! and runs Onatski-type ratio tests for signal detection and separable
//! covariance identity.
//!
//! The deterministic solvers in [`spectral`] are generic over [`Real`]
//! (`f32`/`f64`); the aliases below fix the scalar to `f64`, which is what the
//! Monte-Carlo layers use.

pub mod diagnostics;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod linalg;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod tw;

pub use error::{Error, Result};
pub use scalar::Real;

pub type PopulationSpectrumF64 = spectral::PopulationSpectrum<f64>;
pub type PopulationSpectrumF32 = spectral::PopulationSpectrum<f32>;
pub type EdgeParamsF64 = spectral::EdgeParams<f64>;
pub type EdgeParamsF32 = spectral::EdgeParams<f32>;
pub type StieltjesValueF64 = spectral::StieltjesValue<f64>;
pub type StieltjesValueF32 = spectral::StieltjesValue<f32>;
