//! Tracy–Widom reference distributions for β = 1, 2.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{draw_goe_top3, edge_rescaled, replicate_seed, Beta};
use crate::error::{Error, Result};
use crate::stats::quantile_type7;

/// Nine-point percentile tables `(quantile, cdf)` for TW₁ and TW₂.
pub const TW1_TABLE: [(f64, f64); 9] = [
    (-3.90, 0.01),
    (-3.18, 0.05),
    (-2.78, 0.10),
    (-1.91, 0.30),
    (-1.27, 0.50),
    (-0.59, 0.70),
    (0.45, 0.90),
    (0.98, 0.95),
    (2.02, 0.99),
];
pub const TW2_TABLE: [(f64, f64); 9] = [
    (-3.73, 0.01),
    (-3.20, 0.05),
    (-2.90, 0.10),
    (-2.27, 0.30),
    (-1.81, 0.50),
    (-1.33, 0.70),
    (-0.60, 0.90),
    (-0.23, 0.95),
    (0.48, 0.99),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwSource {
    EmbeddedTable,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McMeta {
    pub dim: usize,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwReference {
    pub beta: Beta,
    /// `(quantile, cdf)` pairs, strictly increasing in both coordinates.
    pub points: Vec<(f64, f64)>,
    pub source: TwSource,
    pub mc_meta: Option<McMeta>,
}

impl TwReference {
    pub fn new(
        beta: Beta,
        points: Vec<(f64, f64)>,
        source: TwSource,
        mc_meta: Option<McMeta>,
    ) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(
                "reference needs at least two points".into(),
            ));
        }
        if points
            .iter()
            .any(|&(x, p)| !x.is_finite() || !(p > 0.0 && p < 1.0))
        {
            return Err(Error::InvalidParameter(
                "reference probabilities must lie in (0, 1)".into(),
            ));
        }
        if points
            .windows(2)
            .any(|w| !(w[0].0 < w[1].0 && w[0].1 < w[1].1))
        {
            return Err(Error::InvalidParameter(
                "reference points must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            beta,
            points,
            source,
            mc_meta,
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        tw_cdf(self, x)
    }

    /// Quantile at the tabulated probability `p`, if present.
    pub fn quantile_at(&self, p: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|&&(_, q)| (q - p).abs() < 1e-12)
            .map(|&(x, _)| x)
    }
}

pub fn embedded_tw_table(beta: Beta) -> TwReference {
    let table = match beta {
        Beta::Real => TW1_TABLE,
        Beta::Complex => TW2_TABLE,
    };
    TwReference::new(beta, table.to_vec(), TwSource::EmbeddedTable, None)
        .expect("embedded tables are monotone")
}

/// Probability grid used by Monte-Carlo references: 0.01, 0.02, …, 0.99.
pub fn default_p_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// Sorted samples of `dim^{1/6}(λ₁ - 2√dim)` over Gaussian-ensemble draws.
pub fn edge_samples(beta: Beta, dim: usize, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let mut xs = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            Ok(edge_rescaled(
                draw_goe_top3(beta, dim, replicate_seed(seed, i))?[0],
                dim,
            ))
        })
        .collect::<Result<Vec<f64>>>()?;
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Monte-Carlo TW reference on [`default_p_grid`].
pub fn mc_tw_reference(beta: Beta, dim: usize, reps: usize, seed: u64) -> Result<TwReference> {
    mc_tw_reference_on(beta, dim, reps, seed, &default_p_grid())
}

pub fn mc_tw_reference_on(
    beta: Beta,
    dim: usize,
    reps: usize,
    seed: u64,
    p_grid: &[f64],
) -> Result<TwReference> {
    if dim < 50 || reps < 100 {
        return Err(Error::InvalidParameter(format!(
            "MC reference needs dim >= 50 and reps >= 100, got {dim} and {reps}"
        )));
    }
    let xs = edge_samples(beta, dim, reps, seed)?;
    let points = p_grid
        .iter()
        .map(|&p| (quantile_type7(&xs, p), p))
        .collect();
    TwReference::new(
        beta,
        points,
        TwSource::MonteCarlo,
        Some(McMeta { dim, reps, seed }),
    )
}

/// Piecewise-linear CDF through the reference points with exponential tails
/// fitted to the two outermost points on each side.
pub fn tw_cdf(reference: &TwReference, x: f64) -> f64 {
    let pts = &reference.points;
    let n = pts.len();
    let (x0, p0) = pts[0];
    let (xn, pn) = pts[n - 1];
    if x <= x0 {
        let (x1, p1) = pts[1];
        let rate = (p1 / p0).ln() / (x1 - x0);
        return p0 * (rate * (x - x0)).exp();
    }
    if x >= xn {
        let (xm, pm) = pts[n - 2];
        let rate = ((1.0 - pm) / (1.0 - pn)).ln() / (xn - xm);
        return 1.0 - (1.0 - pn) * (-rate * (x - xn)).exp();
    }
    let i = pts.partition_point(|&(q, _)| q <= x);
    let (xa, pa) = pts[i - 1];
    let (xb, pb) = pts[i];
    pa + (pb - pa) * (x - xa) / (xb - xa)
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    beta: Beta,
    dim: usize,
    reps: usize,
    seed: u64,
    grid: Vec<f64>,
    reference: TwReference,
}

/// Loads a cached MC reference from `path`, rebuilding (and rewriting) it when
/// the file is missing, unreadable or was made with different parameters.
pub fn load_or_build_mc_reference(
    path: impl AsRef<Path>,
    beta: Beta,
    dim: usize,
    reps: usize,
    seed: u64,
) -> Result<TwReference> {
    let path = path.as_ref();
    let grid = default_p_grid();
    if let Ok(text) = std::fs::read_to_string(path) {
        match serde_json::from_str::<CacheFile>(&text) {
            Ok(c)
                if c.beta == beta
                    && c.dim == dim
                    && c.reps == reps
                    && c.seed == seed
                    && c.grid == grid =>
            {
                return Ok(c.reference);
            }
            Ok(_) => log::info!("{}: cache parameters differ, regenerating", path.display()),
            Err(e) => log::warn!("{}: unreadable cache ({e}), regenerating", path.display()),
        }
    }
    let reference = mc_tw_reference_on(beta, dim, reps, seed, &grid)?;
    let cache = CacheFile {
        beta,
        dim,
        reps,
        seed,
        grid,
        reference,
    };
    let text = serde_json::to_string_pretty(&cache)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(cache.reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_medians() {
        assert_eq!(embedded_tw_table(Beta::Real).quantile_at(0.5), Some(-1.27));
        assert_eq!(
            embedded_tw_table(Beta::Complex).quantile_at(0.5),
            Some(-1.81)
        );
    }

    #[test]
    fn interpolation_and_tails() {
        let t = embedded_tw_table(Beta::Complex);
        assert!((tw_cdf(&t, -1.81) - 0.5).abs() < 1e-15);
        assert!((tw_cdf(&t, -3.05) - 0.075).abs() < 1e-12);
        let low = tw_cdf(&t, -6.0);
        assert!(low > 0.0 && low <= 0.01);
        let high = tw_cdf(&t, 3.0);
        assert!(high >= 0.99 && high < 1.0);
    }

    #[test]
    fn cdf_nondecreasing() {
        for beta in [Beta::Real, Beta::Complex] {
            let t = embedded_tw_table(beta);
            let mut prev = 0.0;
            for i in 0..2000 {
                let x = -8.0 + 12.0 * i as f64 / 1999.0;
                let p = tw_cdf(&t, x);
                assert!(p >= prev && (0.0..=1.0).contains(&p), "{x}: {p}");
                prev = p;
            }
        }
    }

    #[test]
    fn mc_reference_shape_and_determinism() {
        let a = mc_tw_reference(Beta::Real, 50, 100, 3).unwrap();
        assert_eq!(a.points.len(), default_p_grid().len());
        assert_eq!(a, mc_tw_reference(Beta::Real, 50, 100, 3).unwrap());
        assert!(mc_tw_reference(Beta::Real, 49, 100, 3).is_err());
        assert!(mc_tw_reference(Beta::Real, 50, 99, 3).is_err());
    }

    #[test]
    fn mc_gue_median_matches_table() {
        let r = mc_tw_reference(Beta::Complex, 400, 5000, 1).unwrap();
        let p = tw_cdf(&r, -1.81);
        assert!((0.46..=0.54).contains(&p), "{p}");
    }

    #[test]
    fn cache_round_trip_and_regeneration() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tw.json");
        let a = load_or_build_mc_reference(&path, Beta::Real, 50, 100, 1).unwrap();
        let b = load_or_build_mc_reference(&path, Beta::Real, 50, 100, 1).unwrap();
        assert_eq!(a, b);
        let c = load_or_build_mc_reference(&path, Beta::Real, 50, 100, 2).unwrap();
        assert_ne!(a, c);
        std::fs::write(&path, "garbage").unwrap();
        assert_eq!(
            load_or_build_mc_reference(&path, Beta::Real, 50, 100, 1).unwrap(),
            a
        );
    }

    /// Gap to the embedded table at its nine quantiles shrinks (up to MC noise)
    /// as the ensemble dimension doubles.
    #[test]
    fn mc_reference_drifts_toward_table() {
        let reps = 4000;
        for beta in [Beta::Real, Beta::Complex] {
            let table = embedded_tw_table(beta);
            let gaps: Vec<f64> = [50, 100, 200]
                .iter()
                .map(|&dim| {
                    let xs = edge_samples(beta, dim, reps, 21).unwrap();
                    table
                        .points
                        .iter()
                        .map(|&(q, p)| {
                            let emp = xs.partition_point(|&x| x <= q) as f64 / reps as f64;
                            (emp - p).abs()
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            let two_se = 2.0 * 2.0 * (0.25 / reps as f64).sqrt();
            for w in gaps.windows(2) {
                assert!(w[1] <= w[0] + two_se, "{beta:?}: {gaps:?}");
            }
        }
    }
}
