//! Dense eigenvalue helpers.
//!
//! Tilted rate matrices have nonnegative off-diagonal entries, so after a
//! diagonal shift they are entrywise nonnegative and their top eigenpair is
//! the Perron pair. [`perron_pair`] finds it by power iteration with
//! repeated squaring: every multiplication is between nonnegative matrices,
//! which keeps the relative accuracy of each entry near machine precision.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Numerical failure inside an eigenvalue routine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    /// A matrix that must be Metzler (nonnegative off-diagonal) is not.
    #[error("matrix has a negative off-diagonal entry at ({0},{1})")]
    NotMetzler(usize, usize),
    /// Non-finite entries.
    #[error("matrix contains non-finite entries")]
    NonFinite,
    /// Power iteration did not settle.
    #[error("power iteration did not converge after {0} squarings")]
    NoConvergence(usize),
    /// Left and right eigenvectors are (numerically) orthogonal.
    #[error("top eigenpair is defective: <l|r> vanishes")]
    Defective,
    /// A linear system has no unique solution.
    #[error("singular linear system")]
    Singular,
}

/// Top eigenvalue of a Metzler matrix with its right and left eigenvectors.
///
/// `right` is normalized to unit 1-norm and `left` so that `⟨l|r⟩ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronPair {
    /// Largest real eigenvalue.
    pub value: f64,
    /// Right eigenvector, entrywise nonnegative.
    pub right: DVector<f64>,
    /// Left eigenvector, entrywise nonnegative.
    pub left: DVector<f64>,
}

const MAX_SQUARINGS: usize = 256;

/// Perron eigenpair of a Metzler matrix.
///
/// The matrix is shifted by `max|W_ii| + 1` to make it nonnegative with a
/// positive diagonal, then squared until the normalized power stops changing.
/// The limit is proportional to `r lᵀ`, from which both eigenvectors are read
/// off; the eigenvalue is the Rayleigh quotient `lᵀ W r / lᵀ r`.
pub fn perron_pair(w: &DMatrix<f64>) -> Result<PerronPair, LinalgError> {
    let n = w.nrows();
    assert_eq!(n, w.ncols(), "perron_pair needs a square matrix");
    if w.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && w[(i, j)] < 0.0 {
                return Err(LinalgError::NotMetzler(i, j));
            }
        }
    }
    let shift = (0..n).fold(0.0f64, |acc, i| acc.max(w[(i, i)].abs())) + 1.0;
    let mut p = w.clone();
    for i in 0..n {
        p[(i, i)] += shift;
    }
    normalize_max(&mut p);

    let mut converged = false;
    for _ in 0..MAX_SQUARINGS {
        let mut next = &p * &p;
        normalize_max(&mut next);
        let change = next
            .iter()
            .zip(p.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        p = next;
        if change <= 4.0 * f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence(MAX_SQUARINGS));
    }

    let ones = DVector::from_element(n, 1.0);
    let mut right = &p * &ones;
    let mut left = p.transpose() * &ones;
    let rsum: f64 = right.iter().sum();
    if rsum <= 0.0 {
        return Err(LinalgError::Defective);
    }
    right /= rsum;
    let overlap = left.dot(&right);
    if overlap <= 1e-14 * left.norm() * right.norm() {
        return Err(LinalgError::Defective);
    }
    left /= overlap;
    let value = left.dot(&(w * &right));
    Ok(PerronPair { value, right, left })
}

fn normalize_max(m: &mut DMatrix<f64>) {
    let max = m.iter().fold(0.0f64, |acc, v| acc.max(*v));
    if max > 0.0 {
        *m /= max;
    }
}

/// All eigenvalues of a complex matrix, from its Schur form.
pub fn complex_eigenvalues(m: DMatrix<Complex64>) -> Vec<Complex64> {
    let (_, t) = m.schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// All eigenvalues of a real matrix.
pub fn real_matrix_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    complex_eigenvalues(m.map(|v| Complex64::new(v, 0.0)))
}

/// Solves `(A + u vᵀ) x = b`; used with the singular `W − θI` bordered by
/// its null vectors.
pub fn solve_bordered(
    a: &DMatrix<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>, LinalgError> {
    let m = a + u * v.transpose();
    m.lu().solve(b).ok_or(LinalgError::Singular)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perron_pair_of_two_state_generator() {
        let (k, g) = (2.0, 5.0);
        let w = DMatrix::from_row_slice(2, 2, &[-k, g, k, -g]);
        let pair = perron_pair(&w).unwrap();
        assert!(pair.value.abs() < 1e-14);
        // stationary populations (g, k)/(k+g)
        assert!((pair.right[0] - g / (k + g)).abs() < 1e-15);
        assert!((pair.left[0] - pair.left[1]).abs() < 1e-14);
    }

    #[test]
    fn perron_pair_matches_schur_on_tilted_matrix() {
        let w = DMatrix::from_row_slice(3, 3, &[-3.0, 0.2, 1.5, 1.0, -0.7, 0.1, 2.0, 0.5, -1.6]);
        let pair = perron_pair(&w).unwrap();
        let top = real_matrix_eigenvalues(&w)
            .into_iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((pair.value - top).abs() < 1e-12);
        let resid = &w * &pair.right - &pair.right * pair.value;
        assert!(resid.amax() < 1e-13);
        let lresid = w.transpose() * &pair.left - &pair.left * pair.value;
        assert!(lresid.amax() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_zero_pair() {
        let pair = perron_pair(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(pair.value, 0.0);
    }

    #[test]
    fn rejects_negative_off_diagonal() {
        let w = DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, 1.0, 0.5]);
        assert_eq!(perron_pair(&w), Err(LinalgError::NotMetzler(0, 1)));
    }
}
