//! Entry distributions for `X`, all standardized to mean 0 and `E|h|² = 1`
//! before the `1/√N` scaling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, Stream};

/// Atoms of the four-moment-matching discrete law `𝔲`.
pub const DISCRETE_U_ATOMS: [f64; 5] = [-2.0, -1.0, 0.0, 1.5, 4.0];
/// Weights of `𝔲` in units of 1/600: 1/12, 4/25, 13/24, 16/75, 1/600.
pub const DISCRETE_U_COUNTS: [u32; 5] = [50, 96, 325, 128, 1];
const DISCRETE_U_DENOM: u32 = 600;

/// Lower cutoff `√(3/5)` of the symmetric Pareto law with density
/// `(9/10)√(3/5) |x|^{-6}` on `|x| > √(3/5)`.
pub fn pareto_threshold() -> f64 {
    (3.0f64 / 5.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDistribution {
    GaussReal,
    GaussComplexStandard,
    DiscreteUReal,
    DiscreteUComplex,
    ParetoReal,
    ParetoComplex,
}

impl EntryDistribution {
    pub fn label(self) -> &'static str {
        match self {
            Self::GaussReal => "gauss_real",
            Self::GaussComplexStandard => "gauss_complex_standard",
            Self::DiscreteUReal => "discrete_u_real",
            Self::DiscreteUComplex => "discrete_u_complex",
            Self::ParetoReal => "pareto_real",
            Self::ParetoComplex => "pareto_complex",
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(
            self,
            Self::GaussComplexStandard | Self::DiscreteUComplex | Self::ParetoComplex
        )
    }

    /// One real unit-variance draw of the underlying law.
    fn real_draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::GaussReal | Self::GaussComplexStandard => rng.sample(StandardNormal),
            Self::DiscreteUReal | Self::DiscreteUComplex => {
                let mut slot = rng.random_range(0..DISCRETE_U_DENOM);
                for (atom, count) in DISCRETE_U_ATOMS.iter().zip(DISCRETE_U_COUNTS) {
                    if slot < count {
                        return *atom;
                    }
                    slot -= count;
                }
                unreachable!("counts sum to the denominator")
            }
            Self::ParetoReal | Self::ParetoComplex => {
                // P(|x| > t) = (a/t)^5 on t > a
                let u: f64 = 1.0 - rng.random::<f64>();
                let magnitude = pareto_threshold() * u.powf(-0.2);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }

    /// One standardized draw `h`; complex kinds return `(s₁ + i s₂)/√2`.
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        if self.is_complex() {
            let re = self.real_draw(rng);
            let im = self.real_draw(rng);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        } else {
            Complex64::new(self.real_draw(rng), 0.0)
        }
    }
}

/// An `M×N` data matrix, real or complex depending on the entry law.
#[derive(Debug, Clone, PartialEq)]
pub enum EntryMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl EntryMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Real(x) => x.shape(),
            Self::Complex(x) => x.shape(),
        }
    }
}

/// `M×N` matrix of independent entries `h_ij / √N` drawn from the entries
/// stream of `seed`, column by column.
pub fn sample_entries(kind: EntryDistribution, m: usize, n: usize, seed: u64) -> EntryMatrix {
    let mut rng = stream_rng(seed, Stream::Entries);
    let scale = 1.0 / (n as f64).sqrt();
    if kind.is_complex() {
        EntryMatrix::Complex(DMatrix::from_fn(m, n, |_, _| kind.draw(&mut rng) * scale))
    } else {
        EntryMatrix::Real(DMatrix::from_fn(m, n, |_, _| {
            kind.draw(&mut rng).re * scale
        }))
    }
}
