//! Hermitian eigenvalue helpers.
//!
//! Top-k eigenvalues come from Householder tridiagonalization (nalgebra)
//! followed by Sturm-sequence bisection, which converges unconditionally and
//! only resolves the eigenvalues that are asked for.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen, SymmetricTridiagonal};

use crate::error::{Error, Result};

/// A real symmetric tridiagonal matrix: `diagonal` of length n and
/// `off_diagonal` of length n - 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diagonal: Vec<f64>, off_diagonal: Vec<f64>) -> Self {
        assert_eq!(diagonal.len(), off_diagonal.len() + 1, "tridiagonal shape");
        Self {
            diagonal,
            off_diagonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn pivmin(&self) -> f64 {
        let b2 = self
            .off_diagonal
            .iter()
            .map(|b| b * b)
            .fold(1.0f64, f64::max);
        f64::MIN_POSITIVE * b2
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            let coupling = if i == 0 {
                0.0
            } else {
                self.off_diagonal[i - 1] * self.off_diagonal[i - 1] / q
            };
            q = self.diagonal[i] - x - coupling;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 {
                self.off_diagonal[i - 1].abs()
            } else {
                0.0
            };
            let right = if i + 1 < n {
                self.off_diagonal[i].abs()
            } else {
                0.0
            };
            lo = lo.min(self.diagonal[i] - left - right);
            hi = hi.max(self.diagonal[i] + left + right);
        }
        let pad = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + self.pivmin();
        (lo - pad, hi + pad)
    }

    /// The `k` largest eigenvalues in descending order.
    pub fn top_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        let n = self.dim();
        if k > n {
            return Err(Error::InvalidParameter(format!(
                "asked for {k} eigenvalues of a {n}x{n} matrix"
            )));
        }
        if self
            .diagonal
            .iter()
            .chain(&self.off_diagonal)
            .any(|v| !v.is_finite())
        {
            return Err(Error::EigenFailure("non-finite matrix entry".into()));
        }
        let (glo, ghi) = self.gershgorin();
        let pivmin = self.pivmin();
        let mut out = Vec::with_capacity(k);
        let mut upper = ghi;
        for j in 1..=k {
            // j-th largest is the (n - j + 1)-th smallest
            let rank = n - j + 1;
            let (mut lo, mut hi) = (glo, upper);
            for _ in 0..200 {
                let tol = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + pivmin;
                if hi - lo <= tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if self.count_below(mid) >= rank {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let value = 0.5 * (lo + hi);
            out.push(value);
            upper = hi;
        }
        Ok(out)
    }
}

/// Tridiagonal form of a Hermitian matrix.
pub fn tridiagonalize<T>(a: DMatrix<T>) -> Tridiagonal
where
    T: ComplexField<RealField = f64>,
{
    if a.nrows() == 1 {
        return Tridiagonal::new(vec![a[(0, 0)].clone().real()], Vec::new());
    }
    let tri = SymmetricTridiagonal::new(a);
    Tridiagonal::new(
        tri.diagonal().iter().copied().collect(),
        tri.off_diagonal().iter().copied().collect(),
    )
}

/// The `k` largest eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_top_eigenvalues<T>(a: DMatrix<T>, k: usize) -> Result<Vec<f64>>
where
    T: ComplexField<RealField = f64>,
{
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::InvalidParameter(format!(
            "matrix shape {:?} is not square",
            a.shape()
        )));
    }
    tridiagonalize(a).top_eigenvalues(k)
}

/// Full eigen decomposition, eigenvalues sorted descending with matching
/// eigenvector columns.
pub fn hermitian_eigen<T>(a: DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64>,
{
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure(format!("QR iteration on {n}x{n} matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])].clone());
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let top = hermitian_top_eigenvalues(a, 3).unwrap();
        for (x, y) in top.iter().zip([3.0, 2.0, 1.0]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_full_decomposition() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |i, j| {
            ((i * 7 + j * 3) % 11) as f64 + ((j * 7 + i * 3) % 11) as f64
        });
        let top = hermitian_top_eigenvalues(a.clone(), 5).unwrap();
        let (all, _) = hermitian_eigen(a).unwrap();
        for (x, y) in top.iter().zip(&all) {
            assert!((x - y).abs() < 1e-10 * all[0].abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn hermitian_complex() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let top = hermitian_top_eigenvalues(a, 2).unwrap();
        assert!((top[0] - 3.0).abs() < 1e-14 && (top[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn repeated_eigenvalues() {
        let t = Tridiagonal::new(vec![2.0, 2.0, 2.0, 5.0], vec![0.0, 0.0, 0.0]);
        let top = t.top_eigenvalues(4).unwrap();
        for (x, y) in top.iter().zip([5.0, 2.0, 2.0, 2.0]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn non_finite_is_eigen_failure() {
        let t = Tridiagonal::new(vec![f64::NAN, 1.0], vec![0.5]);
        assert!(matches!(t.top_eigenvalues(1), Err(Error::EigenFailure(_))));
    }
}
