//! Monte-Carlo checks of edge rigidity, eigenvector delocalization and the
//! trace identity between the two resolvents.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{
    apply_sigma_sqrt, build_sigma, draw_sample, replicate_seed, sample_entries, top_spectrum_of,
    EntryDistribution, EntryMatrix, SigmaModel, DEFAULT_EIGENVECTOR_CAP,
};
use crate::error::{Error, Result};
use crate::spectral::{edge_params, edge_params_unchecked, subcritical_check};
use crate::stats::{least_squares, robust_sigma};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Sample sizes `N`, increasing.
    pub sizes: Vec<usize>,
    /// Dimensions `M` paired with `sizes`.
    pub dims: Vec<usize>,
    /// Robust spread (`IQR/1.349`) of `λ₁` per size.
    pub spreads: Vec<f64>,
    pub means: Vec<f64>,
    pub lambda_r: Vec<f64>,
    /// Least-squares slope of `ln spread` against `ln N`.
    pub slope: f64,
    pub r2: f64,
}

/// Spread of `λ₁` as `N` grows along `sizes` with `M = round(N/d_n)`.
pub fn rigidity_scan(
    model: &SigmaModel,
    dist: EntryDistribution,
    sizes: &[usize],
    d_n: f64,
    reps: usize,
    seed: u64,
) -> Result<ScalingFit> {
    if sizes.len() < 3 {
        return Err(Error::InsufficientSizes(sizes.len()));
    }
    if sizes.iter().any(|&n| n < 50) || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "sizes must be increasing and at least 50".into(),
        ));
    }
    if reps < 4 {
        return Err(Error::InvalidParameter(
            "rigidity scan needs reps >= 4".into(),
        ));
    }
    let mut fit = ScalingFit {
        sizes: sizes.to_vec(),
        dims: Vec::new(),
        spreads: Vec::new(),
        means: Vec::new(),
        lambda_r: Vec::new(),
        slope: f64::NAN,
        r2: f64::NAN,
    };
    for (index, &n) in sizes.iter().enumerate() {
        let m = ((n as f64 / d_n).round() as usize).max(1);
        let d = n as f64 / m as f64;
        let sigma = build_sigma(model, m, d)?;
        let edge = edge_params_unchecked(&sigma.spectrum, d)?;
        let base = replicate_seed(seed, index as u64);
        let l1 = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let draw = draw_sample(&sigma, dist, m, n, 1, replicate_seed(base, r), false)?;
                Ok(draw.top_eigenvalues[0])
            })
            .collect::<Result<Vec<f64>>>()?;
        let spread = robust_sigma(&l1);
        if !(spread > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "zero spread of λ1 at N = {n}"
            )));
        }
        fit.dims.push(m);
        fit.spreads.push(spread);
        fit.means.push(l1.iter().sum::<f64>() / reps as f64);
        fit.lambda_r.push(edge.lambda_r);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = fit.spreads.iter().map(|s| s.ln()).collect();
    let line = least_squares(&xs, &ys);
    fit.slope = line.slope;
    fit.r2 = line.r2;
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Rotated `Σ`: reported without a bound.
    Informational,
    /// A supercritical spike localizes the top eigenvector by design.
    ExpectedViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelocalizationReport {
    pub m: usize,
    pub n: usize,
    pub reps: usize,
    /// Maximum over replicates of `m · max_i |u₁ᵢ|²`.
    pub max_statistic: f64,
    /// `(ln m)³`.
    pub envelope: f64,
    pub verdict: Verdict,
}

/// `m · max_i |u₁ᵢ|²` for the top eigenvector of `Y Y*`.
pub fn delocalization_statistic(y: &EntryMatrix) -> Result<f64> {
    let m = y.shape().0;
    let (_, u) = top_spectrum_of(y, 1, true)?;
    let u = u.ok_or_else(|| Error::EigenFailure("no eigenvector".into()))?;
    Ok(m as f64 * u.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max))
}

fn supercritical_spike(model: &SigmaModel, d_n: f64) -> bool {
    match model {
        SigmaModel::DrSpikedDiag { spike: Some(s) }
        | SigmaModel::DrRotated { spike: Some(s), .. } => !subcritical_check(*s, d_n),
        _ => false,
    }
}

/// Largest normalized sup-norm of `u₁` over `reps` draws with `N = round(d_n·m)`.
pub fn delocalization_scan(
    model: &SigmaModel,
    dist: EntryDistribution,
    m: usize,
    d_n: f64,
    reps: usize,
    seed: u64,
) -> Result<DelocalizationReport> {
    if m == 0 || m > DEFAULT_EIGENVECTOR_CAP {
        return Err(Error::InvalidParameter(format!(
            "m = {m} outside 1..={DEFAULT_EIGENVECTOR_CAP}"
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    let n = ((d_n * m as f64).round() as usize).max(1);
    let d = n as f64 / m as f64;
    let sigma = build_sigma(model, m, d)?;
    let max_statistic = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let y = apply_sigma_sqrt(&sigma, sample_entries(dist, m, n, replicate_seed(seed, r)));
            delocalization_statistic(&y)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    let envelope = (m as f64).ln().powi(3);
    let verdict = if !model.is_diagonal() {
        Verdict::Informational
    } else if supercritical_spike(model, d) {
        Verdict::ExpectedViolation
    } else {
        match edge_params(&sigma.spectrum, d) {
            Err(Error::EdgeConditionViolated { .. }) => Verdict::ExpectedViolation,
            Err(e) => return Err(e),
            Ok(_) if max_statistic <= envelope.max(1.0) => Verdict::Pass,
            Ok(_) => Verdict::Fail,
        }
    };
    Ok(DelocalizationReport {
        m,
        n,
        reps,
        max_statistic,
        envelope,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceIdentity {
    pub m: usize,
    pub n: usize,
    pub z: Complex64,
    /// `Tr G(z) − Tr 𝒢(z)` computed by explicit inversion.
    pub difference: Complex64,
    /// `(M − N)/z`.
    pub expected: Complex64,
    /// Relative error, or absolute when `M = N`.
    pub residual: f64,
}

fn resolvent_trace(a: DMatrix<Complex64>, z: Complex64) -> Result<Complex64> {
    let n = a.nrows();
    let shifted = a - DMatrix::from_diagonal_element(n, n, z);
    let inv = shifted
        .try_inverse()
        .ok_or_else(|| Error::EigenFailure("resolvent is singular".into()))?;
    Ok(inv.trace())
}

/// Checks `Tr (Y*Y − z)⁻¹ − Tr (YY* − z)⁻¹ = (M − N)/z` on a complex Gaussian
/// `M×N` draw.
pub fn trace_identity_check(m: usize, n: usize, z: Complex64, seed: u64) -> Result<TraceIdentity> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Im z = {} must be positive",
            z.im
        )));
    }
    if m == 0 || n == 0 || m > 200 || n > 200 {
        return Err(Error::InvalidParameter(format!("{m}x{n} outside 1..=200")));
    }
    let y = match sample_entries(EntryDistribution::GaussComplexStandard, m, n, seed) {
        EntryMatrix::Complex(y) => y,
        EntryMatrix::Real(y) => y.map(|v| Complex64::new(v, 0.0)),
    };
    let small = resolvent_trace(y.adjoint() * &y, z)?;
    let big = resolvent_trace(&y * y.adjoint(), z)?;
    let difference = small - big;
    let expected = Complex64::new(m as f64 - n as f64, 0.0) / z;
    let err = (difference - expected).norm();
    let residual = if m == n { err } else { err / expected.norm() };
    Ok(TraceIdentity {
        m,
        n,
        z,
        difference,
        expected,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_identity_examples() {
        for (m, n, z) in [
            (50, 30, Complex64::new(1.0, 1.0)),
            (120, 40, Complex64::new(4.0, 0.01)),
            (30, 50, Complex64::new(-0.5, 0.2)),
        ] {
            let t = trace_identity_check(m, n, z, 3).unwrap();
            assert!(t.residual <= 1e-8, "{t:?}");
        }
        let t = trace_identity_check(40, 40, Complex64::new(2.0, 0.5), 1).unwrap();
        assert_eq!(t.expected, Complex64::new(0.0, 0.0));
        assert!(t.residual <= 1e-8);
        assert!(trace_identity_check(10, 5, Complex64::new(1.0, 0.0), 1).is_err());
    }

    #[test]
    fn delocalization_unit_dimension() {
        let r = delocalization_scan(
            &SigmaModel::Identity,
            EntryDistribution::GaussReal,
            1,
            5.0,
            10,
            0,
        )
        .unwrap();
        assert_eq!(r.max_statistic, 1.0);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn delocalization_identity_passes() {
        let r = delocalization_scan(
            &SigmaModel::Identity,
            EntryDistribution::GaussReal,
            200,
            1.0,
            200,
            5,
        )
        .unwrap();
        assert!((r.envelope - 200f64.ln().powi(3)).abs() < 1e-12);
        assert!(r.max_statistic <= r.envelope, "{r:?}");
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn supercritical_spike_localizes() {
        let model = SigmaModel::DrSpikedDiag { spike: Some(3.0) };
        let r = delocalization_scan(&model, EntryDistribution::GaussReal, 200, 1.0, 20, 5).unwrap();
        assert_eq!(r.verdict, Verdict::ExpectedViolation);
        // |⟨u₁, e₁⟩|² → (1 − 1/(d(s−1)²)) / (1 + 1/(d(s−1))) = 0.5 for s = 3, d = 1.
        assert!(r.max_statistic > 0.3 * 200.0, "{r:?}");
    }

    #[test]
    fn rotated_sigma_is_informational() {
        let model = SigmaModel::DcRotated { rotation_seed: 1 };
        let r = delocalization_scan(&model, EntryDistribution::GaussReal, 60, 1.0, 5, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Informational);
    }

    #[test]
    fn sign_flips_preserve_statistic() {
        for seed in 0..10 {
            let y = sample_entries(EntryDistribution::DiscreteUReal, 40, 60, seed);
            let EntryMatrix::Real(mut flipped) = y.clone() else {
                unreachable!()
            };
            for i in (0..40).step_by(3) {
                flipped.row_mut(i).neg_mut();
            }
            let a = delocalization_statistic(&y).unwrap();
            let b = delocalization_statistic(&EntryMatrix::Real(flipped)).unwrap();
            assert!((a - b).abs() < 1e-10 * a, "{a} {b}");
        }
    }

    #[test]
    fn rigidity_preconditions() {
        let run = |sizes: &[usize]| {
            rigidity_scan(
                &SigmaModel::Identity,
                EntryDistribution::GaussReal,
                sizes,
                1.0,
                10,
                0,
            )
        };
        assert!(matches!(run(&[50, 100]), Err(Error::InsufficientSizes(2))));
        assert!(run(&[40, 100, 200]).is_err());
        assert!(run(&[100, 50, 200]).is_err());
    }

    #[test]
    fn rigidity_small_scan() {
        let fit = rigidity_scan(
            &SigmaModel::Identity,
            EntryDistribution::GaussReal,
            &[50, 100, 200],
            1.0,
            200,
            1,
        )
        .unwrap();
        assert!((-0.9..=-0.45).contains(&fit.slope), "{fit:?}");
        assert_eq!(fit.dims, vec![50, 100, 200]);
        assert!(fit.lambda_r.iter().all(|&l| (l - 4.0).abs() < 1e-10));
        let last = fit.means.len() - 1;
        assert!((fit.means[last] - fit.lambda_r[last]).abs() <= 3.0 * fit.spreads[last]);
    }
}
