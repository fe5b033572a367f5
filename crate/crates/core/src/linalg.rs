//! Small linear-algebra helpers shared by the baseline and policy modules.

use nalgebra::{DMatrix, DVector};

/// Estimates the spectral norm of `a` by power iteration on `aᵀa`.
///
/// Runs a fixed 100 iterations with early exit once the Rayleigh quotient
/// moves by less than 1e-10 relative. The start vector is deterministic so
/// repeated calls agree bit-for-bit.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let gram = a.transpose() * a;
    let n = gram.nrows();
    // Slightly uneven start vector avoids starting orthogonal to the
    // dominant eigenvector for structured matrices.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 1e-3);
    v /= v.norm();
    let mut lambda = 0.0_f64;
    for _ in 0..100 {
        let w = &gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= 1e-10 * next.abs().max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// `‖I − m‖` estimated by power iteration, for contraction checks.
pub fn norm_i_minus(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let shifted = DMatrix::identity(n, n) - m;
    spectral_norm(&shifted)
}

/// Checks entrywise symmetry within `tol`.
pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0, 2.0]));
        assert_relative_eq!(spectral_norm(&a), 3.0, max_relative = 1e-8);
    }

    #[test]
    fn spectral_norm_of_rectangular() {
        // Singular values of [[1,1],[0,1]] are sqrt((3±sqrt(5))/2).
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let expected = ((3.0 + 5.0_f64.sqrt()) / 2.0).sqrt();
        assert_relative_eq!(spectral_norm(&a), expected, max_relative = 1e-8);
    }

    #[test]
    fn spectral_norm_of_zero() {
        let a = DMatrix::zeros(3, 3);
        assert_eq!(spectral_norm(&a), 0.0);
    }

    #[test]
    fn contraction_norm() {
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 0.1]));
        assert_relative_eq!(norm_i_minus(&b), 0.9, max_relative = 1e-8);
    }
}
