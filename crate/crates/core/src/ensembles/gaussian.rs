//! Gaussian orthogonal / unitary ensembles.
//!
//! Convention: off-diagonal entries have `E|h_ij|² = 1`; GOE diagonal entries
//! have variance 2 and GUE diagonal entries variance 1. The spectrum edge is
//! at `2√n` in both cases.
//!
//! Draws use the tridiagonal β-Hermite model, whose eigenvalues have exactly
//! the GOE/GUE joint law: diagonal `N(0, 2/β)`, off-diagonal `χ_{β(n-k)}/√β`.
//! A dense sampler is kept for cross-checking.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, Stream};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_top_eigenvalues, Tridiagonal};

/// Dyson index: 1 for real (GOE / TW₁), 2 for standard complex (GUE / TW₂).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Beta {
    Real = 1,
    Complex = 2,
}

impl Beta {
    pub fn value(self) -> f64 {
        self as u8 as f64
    }
}

impl TryFrom<u8> for Beta {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            1 => Ok(Beta::Real),
            2 => Ok(Beta::Complex),
            other => Err(Error::InvalidParameter(format!(
                "beta must be 1 or 2, got {other}"
            ))),
        }
    }
}

impl From<Beta> for u8 {
    fn from(b: Beta) -> u8 {
        b as u8
    }
}

/// Tridiagonal model of an `n×n` GOE (β = 1) or GUE (β = 2) matrix.
pub fn gaussian_tridiagonal<R: Rng + ?Sized>(beta: Beta, n: usize, rng: &mut R) -> Tridiagonal {
    let b = beta.value();
    let diag_sd = (2.0 / b).sqrt();
    let diagonal: Vec<f64> = (0..n)
        .map(|_| diag_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let off_diagonal: Vec<f64> = (1..n)
        .map(|k| {
            let dof = b * (n - k) as f64;
            let chi2 = ChiSquared::new(dof).expect("positive degrees of freedom");
            (chi2.sample(rng) / b).sqrt()
        })
        .collect();
    Tridiagonal::new(diagonal, off_diagonal)
}

/// Dense `n×n` GOE/GUE matrix under the same variance convention.
pub fn gaussian_dense<R: Rng + ?Sized>(beta: Beta, n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut a = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for j in 0..n {
        for i in 0..=j {
            let g: f64 = rng.sample(StandardNormal);
            let value = match beta {
                Beta::Real if i == j => Complex64::new(2f64.sqrt() * g, 0.0),
                Beta::Real => Complex64::new(g, 0.0),
                Beta::Complex if i == j => Complex64::new(g, 0.0),
                Beta::Complex => {
                    let g2: f64 = rng.sample(StandardNormal);
                    Complex64::new(g, g2) * std::f64::consts::FRAC_1_SQRT_2
                }
            };
            a[(i, j)] = value;
            a[(j, i)] = value.conj();
        }
    }
    a
}

/// Top three eigenvalues of any Hermitian matrix, descending.
pub fn top3_of_matrix(a: DMatrix<Complex64>) -> Result<[f64; 3]> {
    if a.nrows() < 3 {
        return Err(Error::InvalidParameter("need at least a 3x3 matrix".into()));
    }
    let v = hermitian_top_eigenvalues(a, 3)?;
    Ok([v[0], v[1], v[2]])
}

/// Top three eigenvalues of a GOE/GUE draw of dimension `dim`.
pub fn draw_goe_top3(beta: Beta, dim: usize, seed: u64) -> Result<[f64; 3]> {
    if dim < 3 {
        return Err(Error::InvalidParameter(format!(
            "dim = {dim} must be at least 3"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Ensemble);
    let v = gaussian_tridiagonal(beta, dim, &mut rng).top_eigenvalues(3)?;
    Ok([v[0], v[1], v[2]])
}

/// Same as [`draw_goe_top3`] through a dense matrix; slower, kept as a cross-check.
pub fn draw_goe_top3_dense(beta: Beta, dim: usize, seed: u64) -> Result<[f64; 3]> {
    let mut rng = stream_rng(seed, Stream::Ensemble);
    top3_of_matrix(gaussian_dense(beta, dim, &mut rng))
}

/// Largest eigenvalue on the Tracy–Widom scale, `dim^{1/6}(λ₁ - 2√dim)`.
pub fn edge_rescaled(lambda1: f64, dim: usize) -> f64 {
    let n = dim as f64;
    n.powf(1.0 / 6.0) * (lambda1 - 2.0 * n.sqrt())
}
