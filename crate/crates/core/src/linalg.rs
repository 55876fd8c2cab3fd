//! Dense symmetric linear algebra used by the spatial filters.
//!
//! Factorisations come from `nalgebra`; this module adds ordering,
//! ridge loading and the whitening reduction of a symmetric-definite
//! generalized eigenproblem to an ordinary symmetric one.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Adds `eps · trace(A)/n · I`.
pub fn ridge_load(a: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let shift = eps * a.trace() / n as f64;
    let mut out = a.clone();
    for i in 0..n {
        out[(i, i)] += shift;
    }
    out
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending; eigenvector
/// `k` is column `k`.
pub fn symmetric_eigen_desc(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(a));
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(symmetrize(a)).ok_or_else(|| Error::numerical("matrix is not positive definite"))
}

/// Whitening transform of an SPD `composite`: returns `T = L⁻ᵀ` with
/// `Tᵀ·composite·T = I`.
pub fn whitening(composite: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = composite.nrows();
    let l = cholesky(composite)?.l();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    let t = linv.transpose();
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("whitening transform is not finite"));
    }
    Ok(t)
}

/// Eigenvectors of the pencil `(a, composite)` with `composite` SPD,
/// eigenvalues descending: returns `(μ, W)` with `a·w = μ·composite·w`
/// and `wᵀ·composite·w = 1`.
pub fn whitened_pencil(a: &DMatrix<f64>, whiten: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let reduced = whiten.transpose() * a * whiten;
    let (mu, v) = symmetric_eigen_desc(&reduced);
    (mu, whiten * v)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = cholesky(a)?.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("inverse is not finite"));
    }
    Ok(symmetrize(&inv))
}
