//! Binary classifiers over feature matrices: LDA with pooled covariance,
//! SMO-trained SVM (linear or RBF kernel) and brute-force KNN.

mod knn;
mod lda;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use knn::{fit_knn, KnnModel};
pub use lda::{fit_lda, LdaModel};
pub use svm::{fit_svm, rbf_kernel, SvmKernel, SvmModel, HARD_SWEEP_CAP};

use crate::dataio::ClassLabel;
use crate::error::{Error, Result};
use crate::spatial::FeatureMatrix;

/// Hyperparameters for all classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub svm_c: f64,
    pub svm_tol: f64,
    pub svm_max_passes: usize,
    /// `None` selects `1 / (d · var(X))` from the training features.
    pub rbf_gamma: Option<f64>,
    pub knn_k: usize,
    pub lda_ridge: f64,
    /// z-score features with training statistics before fitting.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            svm_c: 1.0,
            svm_tol: 1e-3,
            svm_max_passes: 5,
            rbf_gamma: None,
            knn_k: 1,
            lda_ridge: 1e-9,
            standardize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("svm_c", self.svm_c)?;
        positive("svm_tol", self.svm_tol)?;
        if let Some(g) = self.rbf_gamma {
            positive("rbf_gamma", g)?;
        }
        if self.svm_max_passes == 0 || self.knn_k == 0 {
            return Err(Error::invalid("svm_max_passes and knn_k must be at least 1"));
        }
        if !(self.lda_ridge.is_finite() && self.lda_ridge >= 0.0) {
            return Err(Error::invalid(format!("lda_ridge must be nonnegative, got {}", self.lda_ridge)));
        }
        Ok(())
    }
}

/// A fitted model mapping one feature vector to a class.
pub trait Predictor {
    fn n_features(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<ClassLabel>;

    fn predict_all(&self, f: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
        f.rows().take(f.n_rows()).map(|r| self.predict(r)).collect()
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::dims(format!("feature vector has {} entries, model expects {expected}", x.len())));
    }
    Ok(())
}

/// The two classes of a binary label vector, ascending.
pub(crate) fn binary_classes(f: &FeatureMatrix, y: &[ClassLabel]) -> Result<[ClassLabel; 2]> {
    if f.n_rows() != y.len() {
        return Err(Error::dims(format!("{} feature rows for {} labels", f.n_rows(), y.len())));
    }
    let mut classes = y.to_vec();
    classes.sort();
    classes.dedup();
    match classes[..] {
        [a, b] => Ok([a, b]),
        _ => Err(Error::invalid(format!("training needs exactly two classes, found {}", classes.len()))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    Lda,
    SvmLinear,
    SvmRbf,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] =
        [ClassifierKind::Lda, ClassifierKind::SvmLinear, ClassifierKind::SvmRbf, ClassifierKind::Knn];

    pub fn key(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "lda",
            ClassifierKind::SvmLinear => "svm-linear",
            ClassifierKind::SvmRbf => "svm-rbf",
            ClassifierKind::Knn => "knn",
        }
    }

    /// Row heading used in rendered tables.
    pub fn title(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "LDA",
            ClassifierKind::SvmLinear => "Linear SVM",
            ClassifierKind::SvmRbf => "RBF SVM",
            ClassifierKind::Knn => "KNN",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.key().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown classifier '{s}'")))
    }
}

/// Per-feature z-scoring with training means and standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(f: &FeatureMatrix) -> Result<Self> {
        let n = f.n_rows();
        if n == 0 {
            return Err(Error::invalid("cannot standardise an empty feature matrix"));
        }
        let (mut mean, mut scale) = (Vec::new(), Vec::new());
        for j in 0..f.n_cols() {
            let col = f.column(j);
            let mu = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
            mean.push(mu);
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.scale)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn apply_all(&self, f: &FeatureMatrix) -> Result<FeatureMatrix> {
        let rows: Vec<Vec<f64>> = f.rows().take(f.n_rows()).map(|r| self.apply(r)).collect();
        if rows.is_empty() {
            return FeatureMatrix::empty(f.n_cols());
        }
        FeatureMatrix::from_rows(&rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Lda(LdaModel),
    Svm(SvmModel),
    Knn(KnnModel),
}

/// A fitted classifier of any kind, with optional feature standardisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    scaler: Option<Standardizer>,
    model: Model,
}

impl Classifier {
    pub fn fit(kind: ClassifierKind, f: &FeatureMatrix, y: &[ClassLabel], cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let scaler = if cfg.standardize { Some(Standardizer::fit(f)?) } else { None };
        let scaled;
        let f = match &scaler {
            Some(s) => {
                scaled = s.apply_all(f)?;
                &scaled
            }
            None => f,
        };
        let model = match kind {
            ClassifierKind::Lda => Model::Lda(fit_lda(f, y, cfg.lda_ridge)?),
            ClassifierKind::SvmLinear => Model::Svm(fit_svm(f, y, cfg, SvmKernel::Linear)?),
            ClassifierKind::SvmRbf => {
                let gamma = match cfg.rbf_gamma {
                    Some(g) => g,
                    None => SvmKernel::auto_gamma(f)?,
                };
                Model::Svm(fit_svm(f, y, cfg, SvmKernel::Rbf { gamma })?)
            }
            ClassifierKind::Knn => Model::Knn(fit_knn(f, y, cfg.knn_k)?),
        };
        Ok(Classifier { scaler, model })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn inner(&self) -> &dyn Predictor {
        match &self.model {
            Model::Lda(m) => m,
            Model::Svm(m) => m,
            Model::Knn(m) => m,
        }
    }
}

impl Predictor for Classifier {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        check_dim(self.n_features(), x)?;
        match &self.scaler {
            Some(s) => self.inner().predict(&s.apply(x)),
            None => self.inner().predict(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (FeatureMatrix, Vec<ClassLabel>) {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![4.0, 0.0], vec![4.0, 1.0]];
        let y = vec![ClassLabel::Word, ClassLabel::Word, ClassLabel::Sub, ClassLabel::Sub];
        (FeatureMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn every_kind_fits_a_separable_set() {
        let (f, y) = toy();
        for kind in ClassifierKind::ALL {
            for standardize in [false, true] {
                let cfg = TrainConfig { standardize, svm_c: 10.0, ..TrainConfig::default() };
                let c = Classifier::fit(kind, &f, &y, &cfg).unwrap();
                assert_eq!(c.predict_all(&f).unwrap(), y, "{kind} standardize={standardize}");
                assert!(c.predict(&[1.0]).is_err());
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ClassifierKind::ALL {
            assert_eq!(kind.key().parse::<ClassifierKind>().unwrap(), kind);
        }
        assert!("svm".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { svm_c: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { knn_k: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { rbf_gamma: Some(-1.0), ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { lda_ridge: -1.0, ..TrainConfig::default() }.validate().is_err());
    }

    #[test]
    fn single_class_is_rejected() {
        let (f, _) = toy();
        let y = vec![ClassLabel::Word; 4];
        for kind in [ClassifierKind::Lda, ClassifierKind::SvmLinear, ClassifierKind::SvmRbf] {
            assert!(Classifier::fit(kind, &f, &y, &TrainConfig::default()).is_err());
        }
    }

    #[test]
    fn standardizer_zero_variance_column() {
        let f = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 4.0]]).unwrap();
        let s = Standardizer::fit(&f).unwrap();
        assert_eq!(s.apply(&[1.0, 3.0]), vec![0.0, 0.0]);
        assert_eq!(s.apply(&[2.0, 4.0]), vec![1.0, 1.0]);
    }
}
