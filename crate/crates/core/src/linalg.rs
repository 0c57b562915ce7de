//! Dense Hermitian eigensolver wrapper with ascending eigenvalue order.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dimension handed to the dense eigensolver.
pub const DENSE_EIGEN_LIMIT: usize = 4096;

/// Eigenvalues in ascending order and the matching eigenvectors as columns.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    if n > DENSE_EIGEN_LIMIT {
        return Err(Error::Budget { what: "dense eigenproblem", size: n as u128, budget: DENSE_EIGEN_LIMIT as u128 });
    }
    let eig = SymmetricEigen::try_new(m.clone(), 1e-15, 100_000)
        .ok_or_else(|| Error::Diagonalization(format!("no convergence for {n}x{n} matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diagonalization("non-finite eigenvalue".into()));
    }
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    hermitian_eigen(m).map(|(v, _)| v)
}

/// Multiplies by a global phase so the largest-magnitude component is real
/// and positive.
pub fn fix_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let pivot = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i);
    if let Some(i) = pivot {
        let norm = v[i].norm();
        if norm > 0.0 {
            let phase = v[i].conj() / norm;
            for x in &mut v {
                *x *= phase;
            }
        }
    }
    v
}
