//! Sample covariance draws `𝒲 = Σ^{1/2} X X* Σ^{1/2}` and their top spectrum.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use super::entries::{sample_entries, EntryDistribution, EntryMatrix};
use super::sigma::Sigma;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_top_eigenvalues};

/// Eigenvectors are only extracted for `M` up to this size.
pub const DEFAULT_EIGENVECTOR_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleDraw {
    /// Largest eigenvalues of `𝒲`, descending.
    pub top_eigenvalues: Vec<f64>,
    /// Unit eigenvector `u₁` of `𝒲` (length `M`), when requested.
    pub top_eigenvector: Option<Vec<Complex64>>,
    pub m_dim: usize,
    pub n_dim: usize,
    pub seed: u64,
}

/// Top spectrum of `Y Y*` for an `M×N` matrix `Y`.
///
/// Works on the smaller of `Y Y*` (M×M) and the Gram matrix `Y* Y` (N×N),
/// which share their nonzero eigenvalues. When the Gram side is used the
/// eigenvector is mapped back through `u = Y v / |Y v|`.
pub fn outer_top_spectrum<T>(
    y: &DMatrix<T>,
    k: usize,
    want_vector: bool,
) -> Result<(Vec<f64>, Option<Vec<Complex64>>)>
where
    T: ComplexField<RealField = f64> + Into<Complex64>,
{
    let (m, n) = y.shape();
    if k > m.min(n) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds min(M, N) = {}",
            m.min(n)
        )));
    }
    let gram_side = m > n;
    let a = if gram_side {
        y.adjoint() * y
    } else {
        y * y.adjoint()
    };
    if !want_vector {
        return Ok((hermitian_top_eigenvalues(a, k)?, None));
    }
    let (values, vectors) = hermitian_eigen(a)?;
    let top = values[..k].to_vec();
    let v = vectors.column(0).into_owned();
    let u = if gram_side { y * v } else { v };
    let norm = u.norm();
    if !(norm > 0.0) {
        return Err(Error::EigenFailure("top eigenvector vanished".into()));
    }
    let u: Vec<Complex64> = u
        .iter()
        .map(|x| {
            let c: Complex64 = x.clone().into();
            c / norm
        })
        .collect();
    Ok((top, Some(u)))
}

/// `Σ^{1/2} X`, using a row scaling when `Σ` is diagonal.
pub fn apply_sigma_sqrt(sigma: &Sigma, x: EntryMatrix) -> EntryMatrix {
    match (x, &sigma.diagonal) {
        (EntryMatrix::Real(mut x), Some(d)) => {
            for (i, v) in d.iter().enumerate() {
                x.row_mut(i).scale_mut(v.sqrt());
            }
            EntryMatrix::Real(x)
        }
        (EntryMatrix::Complex(mut x), Some(d)) => {
            for (i, v) in d.iter().enumerate() {
                x.row_mut(i).scale_mut(v.sqrt());
            }
            EntryMatrix::Complex(x)
        }
        (EntryMatrix::Real(x), None) => EntryMatrix::Real(&sigma.sqrt * x),
        (EntryMatrix::Complex(x), None) => {
            EntryMatrix::Complex(sigma.sqrt.map(|v| Complex64::new(v, 0.0)) * x)
        }
    }
}

pub(crate) fn top_spectrum_of(
    y: &EntryMatrix,
    k: usize,
    want_vector: bool,
) -> Result<(Vec<f64>, Option<Vec<Complex64>>)> {
    match y {
        EntryMatrix::Real(y) => outer_top_spectrum(y, k, want_vector),
        EntryMatrix::Complex(y) => outer_top_spectrum(y, k, want_vector),
    }
}

/// Draws `X` (entries scaled by `1/√N`) from `seed` and returns the top `k`
/// eigenvalues of `Σ^{1/2} X X* Σ^{1/2}`, plus `u₁` when `want_vector` is set
/// and `M` does not exceed [`DEFAULT_EIGENVECTOR_CAP`].
pub fn draw_sample(
    sigma: &Sigma,
    dist: EntryDistribution,
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    want_vector: bool,
) -> Result<SampleDraw> {
    if sigma.dim() != m {
        return Err(Error::InvalidParameter(format!(
            "sigma is {0}x{0} but m = {m}",
            sigma.dim()
        )));
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let y = apply_sigma_sqrt(sigma, sample_entries(dist, m, n, seed));
    let (top_eigenvalues, top_eigenvector) =
        top_spectrum_of(&y, k, want_vector && m <= DEFAULT_EIGENVECTOR_CAP)?;
    Ok(SampleDraw {
        top_eigenvalues,
        top_eigenvector,
        m_dim: m,
        n_dim: n,
        seed,
    })
}
