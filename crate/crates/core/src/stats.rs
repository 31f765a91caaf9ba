//! Small order-statistic and regression helpers shared by the Monte-Carlo layers.

/// Type-7 (linear interpolation) sample quantile of ascending `sorted` data.
///
/// Infinite order statistics are handled without producing NaN: a zero
/// interpolation weight returns the lower order statistic unchanged.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    assert!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        return sorted[lo];
    }
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    if a == b {
        a
    } else {
        a + frac * (b - a)
    }
}

/// Robust standard deviation `IQR / 1.349`.
pub fn robust_sigma(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (quantile_type7(&sorted, 0.75) - quantile_type7(&sorted, 0.25)) / 1.349
}

/// Two binomial standard errors, `2√(p(1-p)/n)`.
pub fn binomial_two_se(p: f64, n: usize) -> f64 {
    2.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ intercept + slope · x`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_convention() {
        let data: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile_type7(&data, 0.95) - 95.05).abs() < 1e-12);
        assert_eq!(quantile_type7(&data, 0.0), 1.0);
        assert_eq!(quantile_type7(&data, 1.0), 100.0);
        assert!((quantile_type7(&data, 0.5) - 50.5).abs() < 1e-12);
    }

    #[test]
    fn infinite_tail() {
        let data = [1.0, 2.0, f64::INFINITY];
        assert_eq!(quantile_type7(&data, 0.5), 2.0);
        assert_eq!(quantile_type7(&data, 0.75), f64::INFINITY);
        assert_eq!(
            quantile_type7(&[f64::INFINITY, f64::INFINITY], 0.3),
            f64::INFINITY
        );
    }

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = least_squares(&xs, &ys);
        assert!((fit.slope + 0.5).abs() < 1e-14 && (fit.intercept - 2.0).abs() < 1e-14);
        assert!((fit.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn robust_sigma_of_uniform_grid() {
        let data: Vec<f64> = (0..=100).map(f64::from).collect();
        assert!((robust_sigma(&data) - 50.0 / 1.349).abs() < 1e-12);
    }
}
