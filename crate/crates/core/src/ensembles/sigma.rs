//! Population covariance models.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, Stream};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::spectral::PopulationSpectrum;

/// How `Σ` is built for a given dimension `M` and ratio `d_N = N/M`.
///
/// `DcDiag` is `diag(1,…,1, 2,…,2)` with `⌊M/2⌋` ones. `DrSpikedDiag` is
/// `diag(spike, 1, …, 1)` where the spike defaults to `1 + d_N^{-1/2}/2`.
/// Rotated kinds conjugate the diagonal form by a Haar orthogonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaModel {
    Identity,
    DcDiag,
    DcRotated {
        #[serde(default)]
        rotation_seed: u64,
    },
    DrSpikedDiag {
        #[serde(default)]
        spike: Option<f64>,
    },
    DrRotated {
        #[serde(default)]
        spike: Option<f64>,
        #[serde(default)]
        rotation_seed: u64,
    },
    CustomAtoms {
        atoms: Vec<(f64, f64)>,
    },
}

impl SigmaModel {
    pub fn is_diagonal(&self) -> bool {
        !matches!(self, Self::DcRotated { .. } | Self::DrRotated { .. })
    }

    /// Short label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::DcDiag => "dc_diag",
            Self::DcRotated { .. } => "dc_rotated",
            Self::DrSpikedDiag { .. } => "dr_spiked_diag",
            Self::DrRotated { .. } => "dr_rotated",
            Self::CustomAtoms { .. } => "custom_atoms",
        }
    }
}

/// A population covariance together with its square root and exact spectrum.
#[derive(Debug, Clone)]
pub struct Sigma {
    pub matrix: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
    /// Diagonal entries when `Σ` is diagonal; lets callers skip dense products.
    pub diagonal: Option<DVector<f64>>,
    pub spectrum: PopulationSpectrum<f64>,
}

impl Sigma {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn from_diagonal(values: Vec<f64>) -> Result<Self> {
        let spectrum = PopulationSpectrum::from_eigenvalues(&values)?;
        let diag = DVector::from_vec(values);
        Ok(Self {
            matrix: DMatrix::from_diagonal(&diag),
            sqrt: DMatrix::from_diagonal(&diag.map(f64::sqrt)),
            diagonal: Some(diag),
            spectrum,
        })
    }

    fn rotated(self, u: &DMatrix<f64>) -> Self {
        let diag = self.diagonal.expect("rotating a diagonal model");
        let scale_cols = |values: &DVector<f64>| {
            let mut ud = u.clone();
            for (j, v) in values.iter().enumerate() {
                ud.column_mut(j).scale_mut(*v);
            }
            &ud * u.transpose()
        };
        let mut matrix = scale_cols(&diag);
        let mut sqrt = scale_cols(&diag.map(f64::sqrt));
        symmetrize(&mut matrix);
        symmetrize(&mut sqrt);
        Self {
            matrix,
            sqrt,
            diagonal: None,
            spectrum: self.spectrum,
        }
    }
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Haar orthogonal `m×m` matrix `U = G (GᵀG)^{-1/2}` from a Gaussian `G`.
///
/// The inverse square root comes from an eigendecomposition of `GᵀG`; two
/// Newton–Schulz steps `U ← U(3I - UᵀU)/2` then remove the rounding left by
/// ill-conditioned draws (they converge to the same polar factor).
pub fn haar_orthogonal(m: usize, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = stream_rng(seed, Stream::Rotation);
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let gram = g.transpose() * &g;
    let (values, vectors) = hermitian_eigen(gram)?;
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::EigenFailure(
            "singular Gaussian draw for Haar rotation".into(),
        ));
    }
    let mut scaled = vectors.clone();
    for (j, v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / v.sqrt());
    }
    let inv_sqrt = &scaled * vectors.transpose();
    let mut u = &g * inv_sqrt;
    let eye = DMatrix::<f64>::identity(m, m);
    for _ in 0..2 {
        let utu = u.transpose() * &u;
        u = &u * (&eye * 3.0 - utu) * 0.5;
    }
    Ok(u)
}

/// Builds `Σ` for dimension `m` and ratio `d_n = N/M`.
pub fn build_sigma(model: &SigmaModel, m: usize, d_n: f64) -> Result<Sigma> {
    if m == 0 {
        return Err(Error::InvalidModel("dimension must be positive".into()));
    }
    let needs_three = !matches!(model, SigmaModel::Identity | SigmaModel::CustomAtoms { .. });
    if needs_three && m < 3 {
        return Err(Error::InvalidModel(format!(
            "{} needs m >= 3, got {m}",
            model.label()
        )));
    }
    if !(d_n > 0.0 && d_n.is_finite()) {
        return Err(Error::InvalidModel(format!("d_n = {d_n} must be positive")));
    }
    let default_spike = 1.0 + 0.5 / d_n.sqrt();
    let spiked = |spike: Option<f64>| -> Result<Vec<f64>> {
        let s = spike.unwrap_or(default_spike);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidModel(format!("spike {s} must be positive")));
        }
        let mut v = vec![1.0; m];
        v[0] = s;
        Ok(v)
    };
    let dc = || -> Vec<f64> {
        let ones = m / 2;
        (0..m).map(|i| if i < ones { 1.0 } else { 2.0 }).collect()
    };
    match model {
        SigmaModel::Identity => Sigma::from_diagonal(vec![1.0; m]),
        SigmaModel::DcDiag => Sigma::from_diagonal(dc()),
        SigmaModel::DcRotated { rotation_seed } => {
            Ok(Sigma::from_diagonal(dc())?.rotated(&haar_orthogonal(m, *rotation_seed)?))
        }
        SigmaModel::DrSpikedDiag { spike } => Sigma::from_diagonal(spiked(*spike)?),
        SigmaModel::DrRotated {
            spike,
            rotation_seed,
        } => Ok(
            Sigma::from_diagonal(spiked(*spike)?)?.rotated(&haar_orthogonal(m, *rotation_seed)?)
        ),
        SigmaModel::CustomAtoms { atoms } => {
            let spectrum = PopulationSpectrum::new(atoms.iter().copied(), m)
                .map_err(|e| Error::InvalidModel(e.to_string()))?;
            let mut values = Vec::with_capacity(m);
            for &(v, w) in spectrum.atoms() {
                let count = (w * m as f64).round() as usize;
                if count == 0 || ((count as f64) - w * m as f64).abs() > 1e-6 {
                    return Err(Error::InvalidModel(format!(
                        "atom weight {w} is not a multiple of 1/{m}"
                    )));
                }
                values.extend(std::iter::repeat_n(v, count));
            }
            if values.len() != m {
                return Err(Error::InvalidModel("atom counts do not add up to m".into()));
            }
            Sigma::from_diagonal(values)
        }
    }
}
