//! Stieltjes transform `m₀(z)` of the limiting law of `X*ΣX` and its density.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{compute_lambda_r, solve_c, PopulationSpectrum};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesValue<T> {
    pub z: Complex<T>,
    pub m0: Complex<T>,
    /// `|m₀ - 1/(-z + d⁻¹ ∫ t/(t m₀ + 1) dH(t))|`.
    pub residual: T,
}

/// Homotopy and Newton controls for [`solve_m0_with`].
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Starting imaginary part, in units of `max(1, |Re z|, λ_max(1 + d^{-1/2})²)`.
    pub eta_start: f64,
    /// Geometric factor applied to `Im z` between homotopy stages.
    pub eta_factor: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    /// Number of times a failed stage may be split in two.
    pub max_refinements: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eta_start: 1.0,
            eta_factor: 0.25,
            max_newton: 60,
            max_halvings: 40,
            max_refinements: 12,
        }
    }
}

/// Right side of the self-consistent equation, `1/(-z + d⁻¹ ∫ t/(tm+1) dH)`.
pub fn self_consistent_map<T: Real>(
    m: Complex<T>,
    z: Complex<T>,
    h: &PopulationSpectrum<T>,
    d_n: T,
) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    (-z + integral(m, h) / d_n).inv() * one
}

fn integral<T: Real>(m: Complex<T>, h: &PopulationSpectrum<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    h.atoms()
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &(t, w)| {
            acc + (m * t + one).inv() * (w * t)
        })
}

/// `F(m) = 1/m + z - d⁻¹ ∫ t/(tm+1) dH` and `F'(m)`.
fn newton_system<T: Real>(
    m: Complex<T>,
    z: Complex<T>,
    h: &PopulationSpectrum<T>,
    d_n: T,
) -> (Complex<T>, Complex<T>) {
    let one = Complex::new(T::one(), T::zero());
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut dsum = Complex::new(T::zero(), T::zero());
    for &(t, w) in h.atoms() {
        let inv = (m * t + one).inv();
        sum = sum + inv * (w * t);
        dsum = dsum + inv * inv * (w * t * t);
    }
    let minv = m.inv();
    (minv + z - sum / d_n, -minv * minv + dsum / d_n)
}

fn residual<T: Real>(m: Complex<T>, z: Complex<T>, h: &PopulationSpectrum<T>, d_n: T) -> T {
    (m - self_consistent_map(m, z, h, d_n)).norm()
}

/// Damped Newton at a single `z`, starting from `m`. Iterates that leave the
/// upper half-plane (or fail to reduce `|F|`) are rejected and the damping halved.
fn newton<T: Real>(
    mut m: Complex<T>,
    z: Complex<T>,
    h: &PopulationSpectrum<T>,
    d_n: T,
    tol: T,
    opts: &SolverOptions,
) -> Option<Complex<T>> {
    let half = T::lit(0.5);
    let (mut f, mut df) = newton_system(m, z, h, d_n);
    let mut polished = false;
    for _ in 0..opts.max_newton {
        if residual(m, z, h, d_n) <= tol {
            // one extra step once inside tolerance; quadratic convergence makes it nearly free
            if polished {
                return Some(m);
            }
            polished = true;
        }
        let step = -f / df;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        let fnorm = f.norm();
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..opts.max_halvings {
            let trial = m + step * alpha;
            if trial.im > T::zero() {
                let (ft, dft) = newton_system(trial, z, h, d_n);
                let ftn = ft.norm();
                if ftn.is_finite() && (ftn < fnorm || polished) {
                    m = trial;
                    f = ft;
                    df = dft;
                    accepted = true;
                    break;
                }
            }
            alpha = alpha * half;
        }
        if !accepted {
            return (residual(m, z, h, d_n) <= tol).then_some(m);
        }
    }
    (residual(m, z, h, d_n) <= tol).then_some(m)
}

/// Solves the self-consistent equation for `m₀(z)`, `Im z > 0`, with the default
/// homotopy controls.
pub fn solve_m0<T: Real>(
    z: Complex<T>,
    h: &PopulationSpectrum<T>,
    d_n: T,
    tol: T,
) -> Result<StieltjesValue<T>> {
    solve_m0_with(z, h, d_n, tol, &SolverOptions::default())
}

/// Homotopy in `Im z`: solve high above the support from `-1/z`, then shrink
/// the imaginary part geometrically to the target, warm-starting each stage.
pub fn solve_m0_with<T: Real>(
    z: Complex<T>,
    h: &PopulationSpectrum<T>,
    d_n: T,
    tol: T,
    opts: &SolverOptions,
) -> Result<StieltjesValue<T>> {
    if !(z.im > T::zero()) || !z.re.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Im z must be positive, got {z}"
        )));
    }
    if !(d_n > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "d_n = {d_n} must be positive"
        )));
    }
    let fail = |m: Complex<T>| Error::NonConvergence {
        what: "solve_m0",
        residual: residual(m, z, h, d_n).to_f64_lossy(),
    };
    let one = Complex::new(T::one(), T::zero());
    // start well above the support, where -1/z is already accurate
    let edge_bound = h.lambda_max() * (T::one() + T::one() / d_n.sqrt()).powi(2);
    let scale = edge_bound.max(z.re.abs()).max(T::one());
    let eta_start = (T::lit(opts.eta_start) * scale).max(z.im);
    let start = Complex::new(z.re, eta_start);
    let mut m =
        newton(-(one / start), start, h, d_n, tol, opts).ok_or_else(|| fail(-(one / start)))?;

    let factor = T::lit(opts.eta_factor);
    let mut eta = eta_start;
    while eta > z.im {
        let mut next = (eta * factor).max(z.im);
        let mut refinements = 0;
        loop {
            let zt = Complex::new(z.re, next);
            match newton(m, zt, h, d_n, tol, opts) {
                Some(sol) => {
                    m = sol;
                    eta = next;
                    break;
                }
                None if refinements < opts.max_refinements => {
                    // split the stage geometrically and retry
                    next = (eta * next).sqrt();
                    refinements += 1;
                }
                None => return Err(fail(m)),
            }
        }
    }

    let res = residual(m, z, h, d_n);
    if res > tol || !(m.im > T::zero()) {
        return Err(fail(m));
    }
    Ok(StieltjesValue {
        z,
        m0: m,
        residual: res,
    })
}

/// Companion transform: given `m` (law of the `N×N` matrix), returns `m̲`
/// (law of the `M×M` matrix) from `m = d⁻¹ m̲ - (1 - d⁻¹)/z`.
pub fn companion_transform<T: Real>(m: Complex<T>, z: Complex<T>, d_n: T) -> Complex<T> {
    (m + (z.inv() * (T::one() - T::one() / d_n))) * d_n
}

/// Inverse of [`companion_transform`].
pub fn companion_inverse<T: Real>(m_under: Complex<T>, z: Complex<T>, d_n: T) -> Complex<T> {
    m_under / d_n - z.inv() * (T::one() - T::one() / d_n)
}

/// Imaginary parts at which the density is probed before extrapolating to 0.
pub const DENSITY_ETAS: [f64; 2] = [1e-5, 2e-5];

/// Density `ρ₀(E) = π⁻¹ lim_{η↓0} Im m₀(E + iη)` on a grid, using linear
/// Richardson extrapolation from the two probe heights in [`DENSITY_ETAS`].
/// Points beyond the right edge `λ_r` (plus a small band) are exactly zero.
pub fn density_rho0<T: Real>(e_grid: &[T], h: &PopulationSpectrum<T>, d_n: T) -> Result<Vec<T>> {
    let c = solve_c(h, d_n)?;
    let lambda_r = compute_lambda_r(c, h, d_n);
    let band = T::lit(10.0 * DENSITY_ETAS[1]) * T::one().max(lambda_r);
    let tol = T::lit(1e-12).max(T::lit(64.0) * T::epsilon());
    let [eta1, eta2] = DENSITY_ETAS.map(T::lit);
    e_grid
        .iter()
        .map(|&e| {
            if e > lambda_r + band {
                return Ok(T::zero());
            }
            let near = solve_m0(Complex::new(e, eta1), h, d_n, tol)?.m0.im;
            let far = solve_m0(Complex::new(e, eta2), h, d_n, tol)?.m0.im;
            let extrapolated = (near + near - far) / T::PI();
            Ok(extrapolated.max(T::zero()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type C = Complex<f64>;

    fn delta1() -> PopulationSpectrum<f64> {
        PopulationSpectrum::point_mass(1.0).unwrap()
    }

    /// Closed-form transform for `H = δ₁`: root of `z m² + (z + 1 - 1/d) m + 1 = 0`
    /// with positive imaginary part.
    fn mp_closed_form(z: C, d: f64) -> C {
        let b = z + C::new(1.0 - 1.0 / d, 0.0);
        let disc = (b * b - z * 4.0).sqrt();
        let r1 = (-b + disc) / (z * 2.0);
        let r2 = (-b - disc) / (z * 2.0);
        if r1.im > r2.im {
            r1
        } else {
            r2
        }
    }

    #[test]
    fn large_z_asymptote() {
        let z = C::new(0.0, 1e6);
        for h in [
            delta1(),
            PopulationSpectrum::new([(1.0, 0.5), (2.0, 0.5)], 0).unwrap(),
        ] {
            let v = solve_m0(z, &h, 1.0, 1e-13).unwrap();
            assert!((z * v.m0 + 1.0).norm() <= 1e-5);
        }
    }

    #[test]
    fn approaches_minus_c_at_edge() {
        let v = solve_m0(C::new(4.0, 1e-3), &delta1(), 1.0, 1e-12).unwrap();
        assert!((v.m0 + 0.5).norm() <= 0.05, "{}", v.m0);
    }

    #[test]
    fn matches_closed_form_on_grid() {
        for d in [1.0, 0.5, 3.0] {
            let mut worst: f64 = 0.0;
            for k in 0..60 {
                let e = -0.5 + 7.0 * k as f64 / 59.0;
                let z = C::new(e, 1e-4);
                let got = solve_m0(z, &delta1(), d, 1e-13).unwrap();
                assert!(got.m0.im > 0.0);
                worst = worst.max((got.m0 - mp_closed_form(z, d)).norm());
            }
            assert!(worst <= 1e-8, "d = {d}: {worst}");
        }
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(solve_m0(C::new(1.0, 0.0), &delta1(), 1.0, 1e-12).is_err());
        assert!(solve_m0(C::new(1.0, -1.0), &delta1(), 1.0, 1e-12).is_err());
    }

    #[test]
    fn density_closed_form_points() {
        let rho = density_rho0(&[1.0, 4.5], &delta1(), 1.0).unwrap();
        assert_relative_eq!(
            rho[0],
            3f64.sqrt() / (2.0 * std::f64::consts::PI),
            epsilon = 1e-4
        );
        assert!(rho[1].abs() <= 1e-4);
    }

    #[test]
    fn density_square_root_edge() {
        let kappas: Vec<f64> = (0..8).map(|i| 1e-3 * 2f64.powi(i)).collect();
        let grid: Vec<f64> = kappas.iter().map(|k| 4.0 - k).collect();
        let rho = density_rho0(&grid, &delta1(), 1.0).unwrap();
        let xs: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
        let ys: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope - 0.5).abs() <= 0.05, "slope {slope}");
    }

    #[test]
    fn companion_pair() {
        let z = C::new(0.3, 0.7);
        let m = C::new(-0.2, 0.4);
        assert_eq!(companion_transform(m, z, 1.0), m);
        let minus_inv = -z.inv();
        assert!((companion_transform(minus_inv, z, 2.0) - minus_inv).norm() < 1e-15);
        let back = companion_inverse(companion_transform(m, z, 2.5), z, 2.5);
        assert!((back - m).norm() < 1e-14);
    }

    #[test]
    fn single_precision_solve() {
        let h = PopulationSpectrum::<f32>::point_mass(1.0).unwrap();
        let v = solve_m0(Complex::new(1.0f32, 0.01), &h, 1.0, 1e-5).unwrap();
        assert!(v.m0.im > 0.0);
    }
}
