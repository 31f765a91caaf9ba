use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Weighted point masses representing the spectral distribution of a
/// population covariance matrix.
///
/// Atoms are kept sorted by value in descending order with duplicate values
/// merged, so `lambda_max()` is always the first atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct PopulationSpectrum<T> {
    atoms: Vec<(T, T)>,
    m_dim: usize,
}

impl<T: Real> PopulationSpectrum<T> {
    /// Builds a spectrum from `(value, weight)` pairs. `m_dim` is the matrix
    /// dimension the spectrum was taken from, or 0 for an abstract law.
    pub fn new(atoms: impl IntoIterator<Item = (T, T)>, m_dim: usize) -> Result<Self> {
        let mut atoms: Vec<(T, T)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(Error::InvalidSpectrum("no atoms".into()));
        }
        for &(v, w) in &atoms {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidSpectrum(format!(
                    "atom value {v} is not positive"
                )));
            }
            if !(w > T::zero() && w <= T::one()) {
                return Err(Error::InvalidSpectrum(format!(
                    "atom weight {w} outside (0, 1]"
                )));
            }
        }
        atoms.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite values"));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(atoms.len());
        for (v, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 = last.1 + w,
                _ => merged.push((v, w)),
            }
        }
        let total = merged.iter().fold(T::zero(), |acc, &(_, w)| acc + w);
        let tol = weight_tolerance::<T>(merged.len());
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidSpectrum(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            atoms: merged,
            m_dim,
        })
    }

    /// The law `δ_value`.
    pub fn point_mass(value: T) -> Result<Self> {
        Self::new([(value, T::one())], 0)
    }

    /// Empirical spectral distribution of the given eigenvalues.
    pub fn from_eigenvalues(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpectrum("no eigenvalues".into()));
        }
        let w = T::one() / T::from_usize(values.len()).expect("length fits");
        Self::new(values.iter().map(|&v| (v, w)), values.len())
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn m_dim(&self) -> usize {
        self.m_dim
    }

    pub fn lambda_max(&self) -> T {
        self.atoms[0].0
    }

    pub fn lambda_min(&self) -> T {
        self.atoms[self.atoms.len() - 1].0
    }

    /// `∫ f dH`.
    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |acc, &(v, w)| acc + w * f(v))
    }

    /// Law of `alpha * λ` for `λ ~ H`.
    pub fn scaled(&self, alpha: T) -> Result<Self> {
        Self::new(self.atoms.iter().map(|&(v, w)| (alpha * v, w)), self.m_dim)
    }
}

fn weight_tolerance<T: Real>(n: usize) -> T {
    let n = T::from_usize(n.max(1)).expect("length fits");
    T::lit(1e-12).max(T::lit(4.0) * n * T::epsilon())
}
