use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `det(I − M)` for a row-major square matrix, by partial-pivot LU.
pub(crate) fn det_identity_minus(dim: usize, m: &[f64]) -> f64 {
    if dim == 0 {
        return 1.0;
    }
    let a = DMatrix::from_fn(dim, dim, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - m[i * dim + j]
    });
    a.lu().determinant()
}

/// Solves `(I − M) x = b` for each column of `rhs` (row-major `dim × cols`).
pub(crate) fn solve_identity_minus(dim: usize, m: &[f64], rhs: &[f64], cols: usize) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(dim, dim, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - m[i * dim + j]
    });
    let lu = a.lu();
    let u = lu.u();
    let pivot = (0..dim).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(pivot > 1e-13) {
        return Err(Error::NearSingular { pivot });
    }
    let b = DMatrix::from_fn(dim, cols, |i, j| rhs[i * cols + j]);
    let x = lu.solve(&b).ok_or(Error::NearSingular { pivot })?;
    let mut out = vec![0.0; dim * cols];
    for i in 0..dim {
        for j in 0..cols {
            out[i * cols + j] = x[(i, j)];
        }
    }
    Ok(out)
}

/// Eigenvalues of a symmetric row-major matrix.
pub(crate) fn symmetric_eigenvalues(dim: usize, m: &[f64]) -> Vec<f64> {
    let a = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (m[i * dim + j] + m[j * dim + i]));
    a.symmetric_eigenvalues().iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_and_solve() {
        let m = [0.5, 0.2, -0.1, 0.3];
        // I − M = [[0.5, −0.2], [0.1, 0.7]]
        let d = det_identity_minus(2, &m);
        assert!((d - (0.35 + 0.02)).abs() < 1e-15);
        let x = solve_identity_minus(2, &m, &[1.0, 2.0], 1).unwrap();
        assert!((0.5 * x[0] - 0.2 * x[1] - 1.0).abs() < 1e-14);
        assert!((0.1 * x[0] + 0.7 * x[1] - 2.0).abs() < 1e-14);
        assert_eq!(det_identity_minus(0, &[]), 1.0);
    }

    #[test]
    fn singular_system_is_reported() {
        let m = [1.0, 0.0, 0.0, 0.5];
        assert!(matches!(
            solve_identity_minus(2, &m, &[1.0, 1.0], 1),
            Err(Error::NearSingular { .. })
        ));
    }
}
