//! Onatski's gap-ratio test, its simulated null and size/power experiments.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{
    apply_sigma_sqrt, build_sigma, draw_goe_top3, outer_top_spectrum, replicate_seed,
    sample_entries, stream_rng, top_spectrum_of, Beta, EntryDistribution, EntryMatrix, SampleDraw,
    Sigma, SigmaModel, Stream,
};
use crate::error::{Error, Result};
use crate::stats::{binomial_two_se, quantile_type7};
use crate::Real;

/// `(l1 - l2) / (l2 - l3)` for `l1 ≥ l2 ≥ l3`.
///
/// A vanishing lower gap with a positive upper gap gives `+∞`; three equal
/// values are rejected as [`Error::DegenerateSpectrum`].
pub fn onatski_statistic<T: Real>(l1: T, l2: T, l3: T) -> Result<T> {
    if !(l1 >= l2 && l2 >= l3) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalues must be ordered, got ({l1}, {l2}, {l3})"
        )));
    }
    let upper = l1 - l2;
    let lower = l2 - l3;
    if lower == T::zero() {
        return if upper == T::zero() {
            Err(Error::DegenerateSpectrum)
        } else {
            Ok(T::infinity())
        };
    }
    Ok(upper / lower)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullMeta {
    pub beta: Beta,
    pub dim: usize,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullTable {
    pub beta: Beta,
    /// Ascending.
    pub sorted_ratios: Vec<f64>,
    pub meta: NullMeta,
}

impl NullTable {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: Self = serde_json::from_str(&text)?;
        if table.sorted_ratios.is_empty()
            || table.sorted_ratios.windows(2).any(|w| w[0] > w[1])
            || table.sorted_ratios[0] < 0.0
        {
            return Err(Error::InvalidParameter(format!(
                "{}: ratios must be nonnegative and ascending",
                path.display()
            )));
        }
        Ok(table)
    }
}

/// Sorted gap ratios of the top three eigenvalues of `reps` Gaussian-ensemble
/// matrices of dimension `dim`.
pub fn build_null_table(beta: Beta, dim: usize, reps: usize, seed: u64) -> Result<NullTable> {
    if dim < 50 || reps < 500 {
        return Err(Error::InvalidParameter(format!(
            "null table needs dim >= 50 and reps >= 500, got {dim} and {reps}"
        )));
    }
    let mut ratios = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let [l1, l2, l3] = draw_goe_top3(beta, dim, replicate_seed(seed, i))?;
            onatski_statistic(l1, l2, l3)
        })
        .collect::<Result<Vec<f64>>>()?;
    ratios.sort_by(f64::total_cmp);
    Ok(NullTable {
        beta,
        sorted_ratios: ratios,
        meta: NullMeta {
            beta,
            dim,
            reps,
            seed,
        },
    })
}

/// Reads a null table from `path` when its metadata matches, otherwise builds
/// one and writes it there.
pub fn load_or_build_null_table(
    path: impl AsRef<Path>,
    beta: Beta,
    dim: usize,
    reps: usize,
    seed: u64,
) -> Result<NullTable> {
    let path = path.as_ref();
    let wanted = NullMeta {
        beta,
        dim,
        reps,
        seed,
    };
    match NullTable::load(path) {
        Ok(table) if table.meta == wanted => return Ok(table),
        Ok(_) => log::info!(
            "{}: null table parameters differ, rebuilding",
            path.display()
        ),
        Err(e) => log::info!("{}: {e}; building null table", path.display()),
    }
    let table = build_null_table(beta, dim, reps, seed)?;
    table.save(path)?;
    Ok(table)
}

/// Empirical `(1 - level)` quantile of the null ratios (type-7).
pub fn critical_value(table: &NullTable, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "level {level} outside (0, 1)"
        )));
    }
    if table.sorted_ratios.is_empty() {
        return Err(Error::InvalidParameter("empty null table".into()));
    }
    Ok(quantile_type7(&table.sorted_ratios, 1.0 - level))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    I,
    II,
}

impl Setting {
    /// Population covariance of the setting: the `D_r` spiked diagonal for I,
    /// the two-atom `D_c` diagonal for II.
    pub fn sigma_model(self) -> SigmaModel {
        match self {
            Setting::I => SigmaModel::DrSpikedDiag { spike: None },
            Setting::II => SigmaModel::DcDiag,
        }
    }

    fn multiplier(self) -> f64 {
        match self {
            Setting::I => 1.0,
            Setting::II => 2.0,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::I => "I",
            Setting::II => "II",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AltFamily {
    /// Additive rank-one signal along `e₁`.
    #[serde(rename = "H1_a")]
    H1A,
    /// Temporal covariance `T = I + ρ e₁e₁'`.
    #[serde(rename = "H1_b_spike_e1")]
    H1BSpikeE1,
    /// Temporal covariance `T = I + ρ 𝟙𝟙'/N`.
    #[serde(rename = "H1_b_rank1_ones")]
    H1BRank1Ones,
}

impl AltFamily {
    pub fn label(self) -> &'static str {
        match self {
            AltFamily::H1A => "H1_a",
            AltFamily::H1BSpikeE1 => "H1_b_spike_e1",
            AltFamily::H1BRank1Ones => "H1_b_rank1_ones",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlternativeSpec {
    pub family: AltFamily,
    pub tau: f64,
    pub setting: Setting,
}

impl AlternativeSpec {
    /// Perturbation strength: `τ/√d` (times 2 in setting II) for the additive
    /// family and `τ√d` (times 2 in setting II) for the temporal families.
    pub fn rho(&self, d_n: f64) -> f64 {
        let k = self.setting.multiplier() * self.tau;
        match self.family {
            AltFamily::H1A => k / d_n.sqrt(),
            AltFamily::H1BSpikeE1 | AltFamily::H1BRank1Ones => k * d_n.sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "tau = {} must be nonnegative",
                self.tau
            )));
        }
        Ok(())
    }
}

fn perturb<T>(y: &mut DMatrix<T>, alt: &AlternativeSpec, rho: f64, seed: u64)
where
    T: nalgebra::ComplexField<RealField = f64> + From<f64> + Copy,
{
    let n = y.ncols();
    let scale = 1.0 / (n as f64).sqrt();
    match alt.family {
        AltFamily::H1A => {
            let mut rng = stream_rng(seed, Stream::Signal);
            let sd = rho.sqrt() * scale;
            for j in 0..n {
                let s: f64 = rng.sample(StandardNormal);
                y[(0, j)] += T::from(sd * s);
            }
        }
        AltFamily::H1BSpikeE1 => {
            let f = T::from((1.0 + rho).sqrt());
            y.column_mut(0).scale_mut(f.real());
        }
        AltFamily::H1BRank1Ones => {
            let k = T::from(((1.0 + rho).sqrt() - 1.0) / n as f64);
            let sums = y.column_sum();
            for mut col in y.column_iter_mut() {
                col.axpy(k, &sums, T::one());
            }
        }
    }
}

/// Draws data under `alt` and returns the top three eigenvalues of its sample
/// covariance. With `τ = 0` the draw coincides with the null draw of `seed`.
pub fn generate_alt_sample(
    alt: &AlternativeSpec,
    sigma: &Sigma,
    dist: EntryDistribution,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<SampleDraw> {
    alt.validate()?;
    if sigma.dim() != m {
        return Err(Error::InvalidModel(format!(
            "sigma is {0}x{0} but m = {m}",
            sigma.dim()
        )));
    }
    if m.min(n) < 3 {
        return Err(Error::InvalidModel(format!("need m, n >= 3, got {m}x{n}")));
    }
    let rho = alt.rho(n as f64 / m as f64);
    let mut y = apply_sigma_sqrt(sigma, sample_entries(dist, m, n, seed));
    if rho > 0.0 {
        match &mut y {
            EntryMatrix::Real(y) => perturb(y, alt, rho, seed),
            EntryMatrix::Complex(y) => perturb(y, alt, rho, seed),
        }
    }
    let (top, _) = top_spectrum_of(&y, 3, false)?;
    Ok(SampleDraw {
        top_eigenvalues: top,
        top_eigenvector: None,
        m_dim: m,
        n_dim: n,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub level: f64,
    pub reject: bool,
    pub null_meta: NullMeta,
}

fn decide(top: &[f64], table: &NullTable, level: f64) -> Result<TestResult> {
    let statistic = onatski_statistic(top[0], top[1], top[2])?;
    let critical_value = critical_value(table, level)?;
    Ok(TestResult {
        statistic,
        critical_value,
        level,
        reject: statistic > critical_value,
        null_meta: table.meta,
    })
}

/// Tests an `M×N` data matrix (columns are observations) via the top three
/// eigenvalues of `N⁻¹ Y Yᵀ`.
pub fn run_test(data: &DMatrix<f64>, table: &NullTable, level: f64) -> Result<TestResult> {
    let (m, n) = data.shape();
    if m < 3 || n < 3 {
        return Err(Error::InvalidParameter(format!(
            "data must be at least 3x3, got {m}x{n}"
        )));
    }
    let y = data / (n as f64).sqrt();
    let (top, _) = outer_top_spectrum(&y, 3, false)?;
    decide(&top, table, level)
}

/// Inputs of a rejection-rate experiment. `alternative: None` measures size.
#[derive(Debug, Clone, PartialEq)]
pub struct SizePowerSpec {
    pub setting: Setting,
    pub alternative: Option<AltFamily>,
    pub tau: f64,
    pub shapes: Vec<(usize, usize)>,
    pub reps: usize,
    pub seed: u64,
    pub level: f64,
    pub dist: EntryDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizePowerRow {
    pub setting: Setting,
    pub alternative: String,
    pub tau: f64,
    pub m: usize,
    pub n: usize,
    pub rejection_rate: f64,
    pub two_se: f64,
}

/// Seed of the `index`-th shape cell. It does not depend on the alternative,
/// so null and alternative cells share their noise draws.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    replicate_seed(seed, index as u64)
}

/// Rejection frequencies per shape. Each replicate is seeded independently, so
/// the result does not depend on scheduling.
pub fn size_power_experiment(spec: &SizePowerSpec, table: &NullTable) -> Result<Vec<SizePowerRow>> {
    if spec.reps < 100 {
        return Err(Error::InvalidParameter(format!(
            "reps = {} must be >= 100",
            spec.reps
        )));
    }
    let critical = critical_value(table, spec.level)?;
    let alt = AlternativeSpec {
        family: spec.alternative.unwrap_or(AltFamily::H1A),
        tau: if spec.alternative.is_some() {
            spec.tau
        } else {
            0.0
        },
        setting: spec.setting,
    };
    alt.validate()?;
    let mut rows = Vec::with_capacity(spec.shapes.len());
    for (index, &(m, n)) in spec.shapes.iter().enumerate() {
        let sigma = build_sigma(&spec.setting.sigma_model(), m, n as f64 / m as f64)?;
        let base = cell_seed(spec.seed, index);
        let rejections = (0..spec.reps as u64)
            .into_par_iter()
            .map(|r| {
                let draw =
                    generate_alt_sample(&alt, &sigma, spec.dist, m, n, replicate_seed(base, r))?;
                let t = &draw.top_eigenvalues;
                Ok::<usize, Error>(usize::from(onatski_statistic(t[0], t[1], t[2])? > critical))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        let rate = rejections as f64 / spec.reps as f64;
        rows.push(SizePowerRow {
            setting: spec.setting,
            alternative: spec
                .alternative
                .map_or("null", AltFamily::label)
                .to_string(),
            tau: alt.tau,
            m,
            n,
            rejection_rate: rate,
            two_se: binomial_two_se(rate, spec.reps),
        });
    }
    Ok(rows)
}

/// Complex analogue of [`run_test`] for data that is not real.
pub fn run_test_complex(
    data: &DMatrix<Complex64>,
    table: &NullTable,
    level: f64,
) -> Result<TestResult> {
    let (m, n) = data.shape();
    if m < 3 || n < 3 {
        return Err(Error::InvalidParameter(format!(
            "data must be at least 3x3, got {m}x{n}"
        )));
    }
    let y = data.unscale((n as f64).sqrt());
    let (top, _) = outer_top_spectrum(&y, 3, false)?;
    decide(&top, table, level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::draw_sample;

    fn toy_table() -> NullTable {
        NullTable {
            beta: Beta::Real,
            sorted_ratios: (1..=100).map(f64::from).collect(),
            meta: NullMeta {
                beta: Beta::Real,
                dim: 0,
                reps: 100,
                seed: 0,
            },
        }
    }

    #[test]
    fn statistic_examples() {
        assert_eq!(onatski_statistic(5.0, 3.0, 2.0).unwrap(), 2.0);
        assert_eq!(onatski_statistic(10.0, 6.0, 4.0).unwrap(), 2.0);
        assert_eq!(onatski_statistic(5.0, 3.0, 3.0).unwrap(), f64::INFINITY);
        assert_eq!(onatski_statistic(3.0, 3.0, 1.0).unwrap(), 0.0);
        assert!(matches!(
            onatski_statistic(2.0, 2.0, 2.0),
            Err(Error::DegenerateSpectrum)
        ));
        assert!(onatski_statistic(1.0, 2.0, 0.0).is_err());
        assert_eq!(onatski_statistic(5.0f32, 3.0, 2.0).unwrap(), 2.0f32);
    }

    #[test]
    fn critical_values() {
        let t = toy_table();
        assert!((critical_value(&t, 0.05).unwrap() - 95.05).abs() < 1e-12);
        assert!((critical_value(&t, 0.5).unwrap() - 50.5).abs() < 1e-12);
        assert!(critical_value(&t, 0.0).is_err());
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let c = critical_value(&t, i as f64 / 100.0).unwrap();
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn decisions() {
        let mut t = toy_table();
        t.sorted_ratios = vec![7.16; 10];
        assert!(!decide(&[5.0, 3.0, 2.0], &t, 0.05).unwrap().reject);
        assert!(decide(&[12.0, 2.0, 1.0], &t, 0.05).unwrap().reject);
        assert!(decide(&[5.0, 3.0, 3.0], &t, 0.05).unwrap().reject);
    }

    #[test]
    fn rho_scaling() {
        let alt = |family, setting| AlternativeSpec {
            family,
            tau: 2.0,
            setting,
        };
        assert_eq!(alt(AltFamily::H1A, Setting::I).rho(4.0), 1.0);
        assert_eq!(alt(AltFamily::H1A, Setting::II).rho(4.0), 2.0);
        assert_eq!(alt(AltFamily::H1BSpikeE1, Setting::I).rho(4.0), 4.0);
        assert_eq!(alt(AltFamily::H1BRank1Ones, Setting::II).rho(4.0), 8.0);
    }

    #[test]
    fn zero_tau_is_the_null_draw() {
        let sigma = build_sigma(&Setting::I.sigma_model(), 40, 1.5).unwrap();
        for family in [
            AltFamily::H1A,
            AltFamily::H1BSpikeE1,
            AltFamily::H1BRank1Ones,
        ] {
            let alt = AlternativeSpec {
                family,
                tau: 0.0,
                setting: Setting::I,
            };
            let a = generate_alt_sample(&alt, &sigma, EntryDistribution::DiscreteUReal, 40, 60, 9)
                .unwrap();
            let b = draw_sample(
                &sigma,
                EntryDistribution::DiscreteUReal,
                40,
                60,
                3,
                9,
                false,
            )
            .unwrap();
            assert_eq!(a, b);
        }
    }

    /// The closed-form `T^{1/2}` updates agree with an explicit product.
    #[test]
    fn temporal_square_roots() {
        let (m, n, rho) = (5, 7, 1.7f64);
        let x = match sample_entries(EntryDistribution::GaussReal, m, n, 3) {
            EntryMatrix::Real(x) => x,
            EntryMatrix::Complex(_) => unreachable!(),
        };
        let r = (1.0 + rho).sqrt() - 1.0;
        let e1 = DMatrix::from_fn(n, n, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
        let ones = DMatrix::from_element(n, n, 1.0 / n as f64);
        for (family, p) in [(AltFamily::H1BSpikeE1, e1), (AltFamily::H1BRank1Ones, ones)] {
            let half = DMatrix::identity(n, n) + &p * r;
            let t = DMatrix::identity(n, n) + &p * rho;
            assert!((&half * &half - &t).abs().max() < 1e-12);
            let alt = AlternativeSpec {
                family,
                tau: 1.0,
                setting: Setting::I,
            };
            let mut y = x.clone();
            perturb(&mut y, &alt, rho, 0);
            assert!((y - &x * &half).abs().max() < 1e-12);
        }
    }

    #[test]
    fn additive_signal_raises_first_row_variance() {
        let (m, n, rho) = (4, 20_000, 3.0);
        let alt = AlternativeSpec {
            family: AltFamily::H1A,
            tau: 1.0,
            setting: Setting::I,
        };
        let mut y = DMatrix::<f64>::zeros(m, n);
        perturb(&mut y, &alt, rho, 11);
        let var0: f64 = y.row(0).iter().map(|v| v * v).sum();
        assert!(
            (var0 - rho).abs() < 4.0 * rho * (2.0 / n as f64).sqrt(),
            "{var0}"
        );
        assert_eq!(y.rows(1, m - 1).abs().max(), 0.0);
    }

    #[test]
    fn run_test_is_scale_invariant() {
        let table = build_null_table(Beta::Real, 50, 500, 1).unwrap();
        let x = match sample_entries(EntryDistribution::GaussReal, 30, 40, 5) {
            EntryMatrix::Real(x) => x,
            EntryMatrix::Complex(_) => unreachable!(),
        };
        let base = run_test(&x, &table, 0.05).unwrap();
        for alpha in [1e-3, 0.37, 2.0, 1e4] {
            let r = run_test(&(&x * alpha), &table, 0.05).unwrap();
            assert_eq!(r.reject, base.reject);
            assert!((r.statistic - base.statistic).abs() <= 1e-9 * base.statistic);
        }
        assert!(run_test(&DMatrix::zeros(2, 5), &table, 0.05).is_err());
    }

    #[test]
    fn null_table_basics() {
        let a = build_null_table(Beta::Real, 50, 500, 4).unwrap();
        assert_eq!(a, build_null_table(Beta::Real, 50, 500, 4).unwrap());
        assert!(a.sorted_ratios.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.sorted_ratios[0] >= 0.0);
        assert!(build_null_table(Beta::Real, 50, 499, 4).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("null.json");
        let b = load_or_build_null_table(&path, Beta::Real, 50, 500, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(NullTable::load(&path).unwrap(), a);
        let c = load_or_build_null_table(&path, Beta::Real, 50, 500, 5).unwrap();
        assert_ne!(c, a);
    }

    #[test]
    fn complex_and_real_tests_agree_on_real_data() {
        let table = toy_table();
        let x = match sample_entries(EntryDistribution::GaussReal, 6, 9, 2) {
            EntryMatrix::Real(x) => x,
            EntryMatrix::Complex(_) => unreachable!(),
        };
        let a = run_test(&x, &table, 0.05).unwrap();
        let b = run_test_complex(&x.map(|v| Complex64::new(v, 0.0)), &table, 0.05).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-9 * a.statistic);
    }
}
