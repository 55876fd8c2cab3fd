use nalgebra::DMatrix;

use super::SpatialFilters;
use crate::dataio::EpochedDataset;
use crate::error::{Error, Result};

/// Row-major `N × d` feature matrix, one row per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::dims("feature rows of different lengths"));
            }
            values.extend_from_slice(r);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite feature value"));
        }
        Ok(FeatureMatrix { n_cols, values })
    }

    /// A matrix with no rows and `n_cols` columns.
    pub fn empty(n_cols: usize) -> Result<Self> {
        Ok(FeatureMatrix { n_cols, values: Vec::new() })
    }

    pub fn n_rows(&self) -> usize {
        self.values.len().checked_div(self.n_cols).unwrap_or(0)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix { n_cols: self.n_cols, values }
    }
}

/// `Z = Wᵀ·X`.
pub fn spatial_filter_trial(w: &SpatialFilters, trial: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if trial.nrows() != w.n_channels() {
        return Err(Error::dims(format!(
            "trial has {} channels, filters expect {}",
            trial.nrows(),
            w.n_channels()
        )));
    }
    Ok(w.w().tr_mul(trial))
}

fn normalised_log(variances: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = variances.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::numerical("zero total variance: every filtered component is constant"));
    }
    let features: Vec<f64> = variances.iter().map(|v| (v / total).ln()).collect();
    if features.iter().any(|f| !f.is_finite()) {
        return Err(Error::numerical("a filtered component has zero variance"));
    }
    Ok(features)
}

/// `F_i = log(var(Z_i) / Σ_j var(Z_j))`, variances with the 1/T divisor.
pub fn log_variance_features(z: &DMatrix<f64>) -> Result<Vec<f64>> {
    let t = z.ncols();
    if t == 0 {
        return Err(Error::invalid("filtered trial has no samples"));
    }
    let variances: Vec<f64> = z
        .row_iter()
        .map(|row| {
            let mean = row.mean();
            row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t as f64
        })
        .collect();
    normalised_log(&variances)
}

/// Log-variance features from a trial's un-normalised covariance `C`,
/// using `var(wᵀX) = wᵀ·C·w`.
pub fn features_from_covariance(w: &SpatialFilters, cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    if cov.nrows() != w.n_channels() {
        return Err(Error::dims(format!(
            "covariance is {0}x{0}, filters expect {1} channels",
            cov.nrows(),
            w.n_channels()
        )));
    }
    let cw = cov * w.w();
    let variances: Vec<f64> = (0..w.n_filters())
        .map(|k| w.w().column(k).dot(&cw.column(k)).max(0.0))
        .collect();
    normalised_log(&variances)
}

/// One feature row per trial, in trial order.
pub fn build_feature_set(ds: &EpochedDataset, w: &SpatialFilters) -> Result<FeatureMatrix> {
    let rows = (0..ds.n_trials())
        .map(|i| log_variance_features(&spatial_filter_trial(w, &ds.trial_matrix(i))?))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return FeatureMatrix::empty(w.n_filters());
    }
    FeatureMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows() {
        // variances 1 and 3 with the 1/T divisor
        let z = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -3f64.sqrt(), 3f64.sqrt()]);
        let f = log_variance_features(&z).unwrap();
        assert!((f[0] - (0.25f64).ln()).abs() < 1e-12);
        assert!((f[1] - (0.75f64).ln()).abs() < 1e-12);
        assert!((f[0] + 1.3863).abs() < 1e-4);
        assert!((f[1] + 0.2877).abs() < 1e-4);
    }

    #[test]
    fn equal_variances() {
        let z = DMatrix::from_fn(4, 6, |_, t| if t % 2 == 0 { 2.0 } else { -2.0 });
        for v in log_variance_features(&z).unwrap() {
            assert!((v - (0.25f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_rows_fail() {
        assert!(log_variance_features(&DMatrix::from_element(2, 5, 1.0)).is_err());
    }

    #[test]
    fn identity_filters_select_channels() {
        let w = SpatialFilters::new(DMatrix::identity(3, 2), vec![1.0, 1.0]).unwrap();
        let x = DMatrix::from_fn(3, 4, |c, t| (c * 10 + t) as f64);
        let z = spatial_filter_trial(&w, &x).unwrap();
        assert_eq!(z, x.rows(0, 2).into_owned());
        assert_eq!(spatial_filter_trial(&w, &DMatrix::zeros(3, 4)).unwrap(), DMatrix::zeros(2, 4));
        assert!(spatial_filter_trial(&w, &DMatrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn feature_matrix_accessors() {
        let f = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(f.n_rows(), 2);
        assert_eq!(f.column(1), vec![2.0, 4.0]);
        assert_eq!(f.select_rows(&[1, 1]).row(1), &[3.0, 4.0]);
        assert!(FeatureMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(FeatureMatrix::from_rows(&[vec![f64::NAN]]).is_err());
    }
}
