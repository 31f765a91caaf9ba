//! Rightmost-edge parameters `(c, λ_r, σ)` of the limiting spectral law.

use serde::{Deserialize, Serialize};

use super::PopulationSpectrum;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Centering and scaling of the largest eigenvalue for a given population
/// spectrum and dimension ratio `d_n = N / M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams<T> {
    pub c: T,
    pub lambda_r: T,
    pub sigma: T,
    pub d_n: T,
    /// `1 - λ_max · c`; positive values mean the edge is regular.
    pub regularity_margin: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeOptions {
    /// `edge_params` fails when the regularity margin drops below this.
    pub margin_threshold: f64,
}

impl Default for EdgeOptions {
    fn default() -> Self {
        Self {
            margin_threshold: 0.05,
        }
    }
}

/// Left side of the defining equation for `c` minus `d_n`, with its derivative.
fn c_equation<T: Real>(h: &PopulationSpectrum<T>, d_n: T, c: T) -> (T, T) {
    let two = T::lit(2.0);
    let mut value = -d_n;
    let mut slope = T::zero();
    for &(lambda, w) in h.atoms() {
        let q = T::one() - lambda * c;
        let r = lambda * c / q;
        value = value + w * r * r;
        slope = slope + w * two * r * lambda / (q * q);
    }
    (value, slope)
}

/// Solves `∫ (λc / (1 - λc))² dH(λ) = d_n` for `c ∈ [0, 1/λ_max)`.
///
/// Bracketed bisection down to a narrow interval, then a safeguarded Newton
/// polish. The left side is strictly increasing in `c`, so the root is unique.
pub fn solve_c<T: Real>(h: &PopulationSpectrum<T>, d_n: T) -> Result<T> {
    if !(d_n > T::zero() && d_n.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "d_n = {d_n} must be positive"
        )));
    }
    let inv_max = T::one() / h.lambda_max();
    let gap = T::lit(1e-9).max(T::lit(4.0) * T::epsilon());
    let mut lo = T::zero();
    let mut hi = (T::one() - gap) * inv_max;
    let (f_hi, _) = c_equation(h, d_n, hi);
    if !(f_hi > T::zero()) {
        return Err(Error::NonConvergence {
            what: "solve_c bracket",
            residual: f_hi.to_f64_lossy().abs(),
        });
    }

    let width = T::lit(1e-8) * inv_max;
    let half = T::lit(0.5);
    while hi - lo > width {
        let mid = half * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if c_equation(h, d_n, mid).0 > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let scale = T::one().max(d_n);
    let target = T::lit(1e-12).max(T::lit(64.0) * T::epsilon()) * scale;
    let accept = T::lit(1e-10).max(T::lit(1024.0) * T::epsilon()) * scale;
    let mut c = half * (lo + hi);
    let mut best = (T::infinity(), c);
    for _ in 0..100 {
        let (f, df) = c_equation(h, d_n, c);
        if f.abs() < best.0 {
            best = (f.abs(), c);
        }
        if f.abs() <= target {
            return Ok(c);
        }
        if f > T::zero() {
            hi = c;
        } else {
            lo = c;
        }
        let newton = c - f / df;
        c = if newton > lo && newton < hi {
            newton
        } else {
            half * (lo + hi)
        };
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    if best.0 <= accept {
        Ok(best.1)
    } else {
        Err(Error::NonConvergence {
            what: "solve_c",
            residual: best.0.to_f64_lossy(),
        })
    }
}

/// `λ_r = (1/c)(1 + d_n⁻¹ ∫ λc / (1 - λc) dH)`.
pub fn compute_lambda_r<T: Real>(c: T, h: &PopulationSpectrum<T>, d_n: T) -> T {
    let mean = h.integrate(|lambda| lambda * c / (T::one() - lambda * c));
    (T::one() + mean / d_n) / c
}

/// `σ = ((1/c³)(1 + d_n⁻¹ ∫ (λc / (1 - λc))³ dH))^{1/3}`.
pub fn compute_sigma<T: Real>(c: T, h: &PopulationSpectrum<T>, d_n: T) -> T {
    let third = h.integrate(|lambda| {
        let r = lambda * c / (T::one() - lambda * c);
        r * r * r
    });
    ((T::one() + third / d_n) / (c * c * c)).cbrt()
}

/// All edge parameters with the default 0.05 regularity margin.
pub fn edge_params<T: Real>(h: &PopulationSpectrum<T>, d_n: T) -> Result<EdgeParams<T>> {
    edge_params_with(h, d_n, EdgeOptions::default())
}

pub fn edge_params_with<T: Real>(
    h: &PopulationSpectrum<T>,
    d_n: T,
    options: EdgeOptions,
) -> Result<EdgeParams<T>> {
    let params = edge_params_unchecked(h, d_n)?;
    let margin = params.regularity_margin.to_f64_lossy();
    if margin < options.margin_threshold {
        return Err(Error::EdgeConditionViolated {
            margin,
            threshold: options.margin_threshold,
        });
    }
    Ok(params)
}

/// Edge parameters without the regularity check. Useful for diagnostics on
/// supercritical populations, where `λ_r` still locates the bulk edge.
pub fn edge_params_unchecked<T: Real>(h: &PopulationSpectrum<T>, d_n: T) -> Result<EdgeParams<T>> {
    let c = solve_c(h, d_n)?;
    Ok(EdgeParams {
        c,
        lambda_r: compute_lambda_r(c, h, d_n),
        sigma: compute_sigma(c, h, d_n),
        d_n,
        regularity_margin: T::one() - h.lambda_max() * c,
    })
}

/// A spike keeps Tracy–Widom fluctuations iff it lies strictly below `1 + d^{-1/2}`.
pub fn subcritical_check<T: Real>(spike: T, d: T) -> bool {
    spike < T::one() + T::one() / d.sqrt()
}

/// `n^{2/3} (λ₁ - λ_r) / σ`.
pub fn normalize_top_eigenvalue<T: Real>(lambda1: T, params: &EdgeParams<T>, n: usize) -> T {
    let n = T::from_usize(n).expect("n fits");
    n.powf(T::lit(2.0 / 3.0)) * (lambda1 - params.lambda_r) / params.sigma
}
