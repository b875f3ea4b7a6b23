//! Small dense linear-algebra helpers shared by the kernel and state modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute symmetry tolerance, scaled by `max(1, max|G_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Largest `|G_ij - G_ji|`.
pub fn asymmetry(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((g[(i, j)] - g[(j, i)]).abs());
        }
    }
    worst
}

pub fn ensure_square(g: &DMatrix<f64>) -> Result<()> {
    if g.nrows() != g.ncols() {
        return Err(Error::NotSquare(g.nrows(), g.ncols()));
    }
    if g.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn ensure_symmetric(g: &DMatrix<f64>) -> Result<()> {
    ensure_square(g)?;
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let dev = asymmetry(g);
    if dev > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric(dev));
    }
    Ok(())
}

/// Eigenpairs of a symmetric matrix, eigenvalues non-increasing, eigenvectors
/// as matching columns.
pub fn sorted_symmetric_eigen(g: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    // Symmetrize away rounding in the lower triangle before factoring.
    let sym = (g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col: DVector<f64> = eig.eigenvectors.column(src).into_owned();
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian complex matrix.
pub fn hermitian_min_eigenvalue(h: &DMatrix<Complex64>) -> f64 {
    let herm = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a Hermitian complex matrix in non-increasing order.
pub fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let herm = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut v: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = sorted_symmetric_eigen(&g);
        assert_eq!(vals, vec![5.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(ensure_symmetric(&g), Err(Error::Asymmetric(_))));
    }
}
