use nalgebra::DMatrix;

use crate::dataio::{ClassLabel, EpochedDataset};
use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// A symmetric positive semi-definite channel covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    /// Wraps `m` after checking it is square, finite, symmetric within
    /// 1e−10 relative and PSD within 1e−10·trace.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::dims(format!("covariance must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("covariance has non-finite entries"));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        if (&m - m.transpose()).amax() > 1e-10 * scale {
            return Err(Error::numerical("covariance is not symmetric"));
        }
        let m = symmetrize(&m);
        let min_eig = m.symmetric_eigenvalues().min();
        if min_eig < -1e-10 * m.trace().abs().max(scale) {
            return Err(Error::numerical(format!("covariance is not PSD (eigenvalue {min_eig})")));
        }
        Ok(CovMatrix(m))
    }

    pub(crate) fn from_symmetric(m: DMatrix<f64>) -> Self {
        CovMatrix(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn scaled(&self, c: f64) -> Self {
        CovMatrix(&self.0 * c)
    }
}

/// `(1/T)·(X − x̄)(X − x̄)ᵀ` over the rows of an `n_channels × T` trial,
/// optionally divided by its trace.
pub fn trial_covariance(trial: &DMatrix<f64>, normalize: bool) -> Result<CovMatrix> {
    let t = trial.ncols();
    if t < 2 {
        return Err(Error::invalid(format!("covariance needs at least 2 samples, got {t}")));
    }
    if trial.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("trial has non-finite samples"));
    }
    let mut centered = trial.clone();
    for mut row in centered.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    let mut c = symmetrize(&(&centered * centered.transpose())) / t as f64;
    if normalize {
        let tr = c.trace();
        if tr <= 0.0 {
            return Err(Error::numerical("cannot trace-normalise a covariance with zero trace"));
        }
        c /= tr;
    }
    Ok(CovMatrix(c))
}

/// Arithmetic mean of covariances of equal dimension.
pub fn mean_covariance<'a, I>(covs: I) -> Result<CovMatrix>
where
    I: IntoIterator<Item = &'a DMatrix<f64>>,
{
    let mut iter = covs.into_iter();
    let first = iter.next().ok_or_else(|| Error::invalid("no covariances to average"))?;
    let mut sum = first.clone();
    let mut n = 1usize;
    for c in iter {
        if c.shape() != sum.shape() {
            return Err(Error::dims("covariances of different sizes"));
        }
        sum += c;
        n += 1;
    }
    Ok(CovMatrix(sum / n as f64))
}

/// Mean of the per-trial covariances of class `label`.
pub fn class_mean_covariance(ds: &EpochedDataset, label: ClassLabel, normalize: bool) -> Result<CovMatrix> {
    let covs = (0..ds.n_trials())
        .filter(|&i| ds.labels()[i] == label)
        .map(|i| trial_covariance(&ds.trial_matrix(i), normalize).map(CovMatrix::into_matrix))
        .collect::<Result<Vec<_>>>()?;
    if covs.is_empty() {
        return Err(Error::invalid(format!("class {label} is absent from the dataset")));
    }
    mean_covariance(&covs)
}
