use nalgebra::{DMatrix, DVector};

use super::{binary_classes, check_dim, Predictor};
use crate::dataio::ClassLabel;
use crate::error::{Error, Result};
use crate::fmt::g17;
use crate::linalg::{ridge_load, spd_inverse};
use crate::spatial::FeatureMatrix;

/// Two-class linear discriminant with a pooled within-class covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    class_ids: [ClassLabel; 2],
    class_means: [DVector<f64>; 2],
    pooled_cov_inv: DMatrix<f64>,
    priors: [f64; 2],
}

impl LdaModel {
    pub fn class_ids(&self) -> [ClassLabel; 2] {
        self.class_ids
    }

    pub fn class_means(&self) -> &[DVector<f64>; 2] {
        &self.class_means
    }

    pub fn pooled_cov_inv(&self) -> &DMatrix<f64> {
        &self.pooled_cov_inv
    }

    pub fn priors(&self) -> [f64; 2] {
        self.priors
    }

    /// `g_c(x) = xᵀΣ⁻¹x̄_c − ½x̄_cᵀΣ⁻¹x̄_c`, plus `ln π_c` when the priors differ.
    pub fn discriminants(&self, x: &[f64]) -> Result<[f64; 2]> {
        check_dim(self.n_features(), x)?;
        let x = DVector::from_column_slice(x);
        let unequal = self.priors[0] != self.priors[1];
        let g = |c: usize| {
            let sm = &self.pooled_cov_inv * &self.class_means[c];
            let mut g = x.dot(&sm) - 0.5 * self.class_means[c].dot(&sm);
            if unequal {
                g += self.priors[c].ln();
            }
            g
        };
        Ok([g(0), g(1)])
    }

    pub fn to_text(&self) -> String {
        let vec = |v: &DVector<f64>| v.iter().map(|&x| g17(x)).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        for c in 0..2 {
            out.push_str(&format!(
                "class {} prior {} mean: {}\n",
                self.class_ids[c],
                g17(self.priors[c]),
                vec(&self.class_means[c])
            ));
        }
        out.push_str("cov_inv:\n");
        for r in self.pooled_cov_inv.row_iter() {
            out.push_str(&r.iter().map(|&x| g17(x)).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
        out
    }
}

/// Fits class means and the count-weighted average of the per-class
/// covariances (1/n_c divisor), ridge-loaded by `ridge·trace/d`.
pub fn fit_lda(f: &FeatureMatrix, y: &[ClassLabel], ridge: f64) -> Result<LdaModel> {
    let class_ids = binary_classes(f, y)?;
    let d = f.n_cols();
    let n = f.n_rows();
    let mut means = [DVector::zeros(d), DVector::zeros(d)];
    let mut counts = [0usize; 2];
    for (row, &l) in f.rows().zip(y) {
        let c = usize::from(l == class_ids[1]);
        means[c] += DVector::from_column_slice(row);
        counts[c] += 1;
    }
    for c in 0..2 {
        means[c] /= counts[c] as f64;
    }
    let mut scatter = DMatrix::<f64>::zeros(d, d);
    for (row, &l) in f.rows().zip(y) {
        let c = usize::from(l == class_ids[1]);
        let dx = DVector::from_column_slice(row) - &means[c];
        scatter += &dx * dx.transpose();
    }
    let pooled = ridge_load(&(scatter / n as f64), ridge);
    let pooled_cov_inv = spd_inverse(&pooled)
        .map_err(|_| Error::numerical("pooled covariance is singular; increase lda_ridge"))?;
    let priors = [counts[0] as f64 / n as f64, counts[1] as f64 / n as f64];
    Ok(LdaModel { class_ids, class_means: means, pooled_cov_inv, priors })
}

impl Predictor for LdaModel {
    fn n_features(&self) -> usize {
        self.pooled_cov_inv.nrows()
    }

    /// Ties go to the lower class id.
    fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        let g = self.discriminants(x)?;
        Ok(if g[1] > g[0] { self.class_ids[1] } else { self.class_ids[0] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Hand, Sub};

    fn symmetric_set() -> (FeatureMatrix, Vec<ClassLabel>) {
        let rows = vec![
            vec![-2.0, -1.0],
            vec![0.0, 1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
            vec![2.0, -1.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
        ];
        let y = vec![Sub, Sub, Sub, Sub, Hand, Hand, Hand, Hand];
        (FeatureMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn pooled_covariance_by_hand() {
        let (f, y) = symmetric_set();
        let m = fit_lda(&f, &y, 0.0).unwrap();
        assert_eq!(m.class_means()[0].as_slice(), &[-1.0, 0.0]);
        assert_eq!(m.class_means()[1].as_slice(), &[1.0, 0.0]);
        // deviations: Sub (-1,-1) (1,1) (0,1) (0,-1), Hand (1,-1) (-1,1) (0,1) (0,-1)
        let sub = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 1.0]);
        let hand = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 1.0]);
        let pooled = (sub * 4.0 + hand * 4.0) / 8.0;
        let inv = pooled.try_inverse().unwrap();
        assert!((m.pooled_cov_inv() - inv).amax() < 1e-12);
    }

    #[test]
    fn boundary_at_zero() {
        let (f, y) = symmetric_set();
        let m = fit_lda(&f, &y, 1e-9).unwrap();
        assert_eq!(m.predict(&[-0.01, 0.3]).unwrap(), Sub);
        assert_eq!(m.predict(&[0.01, 0.3]).unwrap(), Hand);
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), Sub);
        assert_eq!(m.predict(&[-1.0, 0.0]).unwrap(), Sub);
        assert_eq!(m.predict(&[1.0, 0.0]).unwrap(), Hand);
    }

    #[test]
    fn duplicated_points_leave_the_model_unchanged() {
        let (f, y) = symmetric_set();
        let rows: Vec<Vec<f64>> = f.rows().chain(f.rows()).map(|r| r.to_vec()).collect();
        let yy: Vec<ClassLabel> = y.iter().chain(&y).copied().collect();
        let a = fit_lda(&f, &y, 1e-9).unwrap();
        let b = fit_lda(&FeatureMatrix::from_rows(&rows).unwrap(), &yy, 1e-9).unwrap();
        assert!((a.pooled_cov_inv() - b.pooled_cov_inv()).amax() < 1e-12);
        assert_eq!(a.class_means(), b.class_means());
    }

    #[test]
    fn unequal_priors_shift_the_boundary() {
        let (f, y) = symmetric_set();
        let idx = [0, 1, 2, 3, 4, 5, 6];
        let m = fit_lda(&f.select_rows(&idx), &y[..7], 1e-9).unwrap();
        assert!(m.priors()[0] > m.priors()[1]);
        let g = m.discriminants(&[0.0, 0.0]).unwrap();
        assert!(g[0] > g[1]);
    }

    #[test]
    fn singular_without_ridge() {
        let f = FeatureMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(fit_lda(&f, &[Sub, Hand], 0.0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let (f, y) = symmetric_set();
        assert!(fit_lda(&f, &y, 0.0).unwrap().predict(&[0.0]).is_err());
    }
}
