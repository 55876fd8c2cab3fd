use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, ConfusionCounts};
use crate::classify::{Classifier, ClassifierKind, Predictor, TrainConfig};
use crate::dataio::{split_seed, stratified_split_labels, ClassLabel, EpochedDataset, SplitIndices};
use crate::dsp::{design_butterworth_bandpass, filter_dataset, make_filter_bank, BandSpec, FilterBank, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::spatial::{
    csp_from_covariances, features_from_covariance, fit_fbcsp_from_covariances, mean_class_covariances, solve_trcsp,
    transform_fbcsp_from_covariances, trial_covariance, CovMatrix, FbcspModel, FeatureMatrix, SpatialFilters,
    TrcspParams, DEFAULT_ALPHA, DEFAULT_K_SELECT, DEFAULT_M, DEFAULT_N_BINS,
};

/// Candidate Tikhonov weights for the inner selection.
pub const ALPHA_GRID: [f64; 5] = [0.0, 1e-4, 1e-3, 1e-2, 1e-1];
/// Inner random-subsampling repetitions used to pick α.
pub const INNER_REPS: u64 = 10;
const INNER_TRAIN_FRACTION: f64 = 0.7;

/// Band-pass applied to every trial before spatial filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preprocessing {
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
    pub zero_phase: bool,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing { low_hz: 8.0, high_hz: 30.0, order: DEFAULT_ORDER, zero_phase: true }
    }
}

impl Preprocessing {
    pub fn band(&self) -> BandSpec {
        BandSpec::new(self.low_hz, self.high_hz)
    }
}

/// Tikhonov weight: a fixed value, or `"auto"` for inner selection over
/// [`ALPHA_GRID`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphaRepr", into = "AlphaRepr")]
pub enum TrcspAlpha {
    Fixed(f64),
    Auto,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphaRepr {
    Value(f64),
    Name(String),
}

impl TryFrom<AlphaRepr> for TrcspAlpha {
    type Error = String;

    fn try_from(r: AlphaRepr) -> std::result::Result<Self, String> {
        match r {
            AlphaRepr::Value(v) => Ok(TrcspAlpha::Fixed(v)),
            AlphaRepr::Name(s) if s.eq_ignore_ascii_case("auto") => Ok(TrcspAlpha::Auto),
            AlphaRepr::Name(s) => Err(format!("alpha must be a number or \"auto\", got \"{s}\"")),
        }
    }
}

impl From<TrcspAlpha> for AlphaRepr {
    fn from(a: TrcspAlpha) -> Self {
        match a {
            TrcspAlpha::Fixed(v) => AlphaRepr::Value(v),
            TrcspAlpha::Auto => AlphaRepr::Name("auto".into()),
        }
    }
}

fn default_m() -> usize {
    DEFAULT_M
}
fn default_alpha() -> TrcspAlpha {
    TrcspAlpha::Fixed(DEFAULT_ALPHA)
}
fn default_bank_low() -> f64 {
    4.0
}
fn default_bank_high() -> f64 {
    40.0
}
fn default_bank_width() -> f64 {
    4.0
}
fn default_order() -> usize {
    DEFAULT_ORDER
}
fn default_k_select() -> usize {
    DEFAULT_K_SELECT
}
fn default_n_bins() -> usize {
    DEFAULT_N_BINS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExtractorSpec {
    Csp {
        #[serde(default = "default_m")]
        m: usize,
    },
    Trcsp {
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default = "default_alpha")]
        alpha: TrcspAlpha,
    },
    /// The filter bank replaces the band-pass preprocessing.
    Fbcsp {
        #[serde(default = "default_bank_low")]
        low_hz: f64,
        #[serde(default = "default_bank_high")]
        high_hz: f64,
        #[serde(default = "default_bank_width")]
        width_hz: f64,
        #[serde(default = "default_order")]
        order: usize,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default = "default_k_select")]
        k_select: usize,
        #[serde(default = "default_n_bins")]
        n_bins: usize,
    },
}

impl ExtractorSpec {
    pub fn csp() -> Self {
        ExtractorSpec::Csp { m: DEFAULT_M }
    }

    pub fn trcsp() -> Self {
        ExtractorSpec::Trcsp { m: DEFAULT_M, alpha: default_alpha() }
    }

    /// Nine 4 Hz bands over 4–40 Hz, two filter pairs per band, four features.
    pub fn fbcsp() -> Self {
        ExtractorSpec::Fbcsp {
            low_hz: 4.0,
            high_hz: 40.0,
            width_hz: 4.0,
            order: DEFAULT_ORDER,
            m: DEFAULT_M,
            k_select: DEFAULT_K_SELECT,
            n_bins: DEFAULT_N_BINS,
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            ExtractorSpec::Csp { .. } => "CSP",
            ExtractorSpec::Trcsp { .. } => "TRCSP",
            ExtractorSpec::Fbcsp { .. } => "FBCSP",
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            ExtractorSpec::Csp { m } | ExtractorSpec::Trcsp { m, .. } | ExtractorSpec::Fbcsp { m, .. } => m,
        }
    }
}

fn default_window() -> Option<[f64; 2]> {
    Some([4.0, 10.0])
}
mod window_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Range([f64; 2]),
        Name(String),
    }

    pub fn serialize<S: Serializer>(w: &Option<[f64; 2]>, s: S) -> Result<S::Ok, S::Error> {
        match w {
            Some(r) => Repr::Range(*r),
            None => Repr::Name("full".into()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<[f64; 2]>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Range(r) => Ok(Some(r)),
            Repr::Name(n) if n.eq_ignore_ascii_case("full") => Ok(None),
            Repr::Name(n) => Err(serde::de::Error::custom(format!(
                "window must be [start, end] in seconds or \"full\", got \"{n}\""
            ))),
        }
    }
}

fn default_true() -> bool {
    true
}

/// One complete pipeline: preprocessing, analysis window, feature
/// extractor and classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    #[serde(default)]
    pub preproc: Preprocessing,
    /// Seconds from trial onset; `None` keeps the whole trial and is
    /// written as `"full"`.
    #[serde(default = "default_window", with = "window_repr")]
    pub window: Option<[f64; 2]>,
    pub extractor: ExtractorSpec,
    pub classifier: ClassifierKind,
    #[serde(default)]
    pub train: TrainConfig,
    /// Trace-normalise trial covariances before averaging per class.
    #[serde(default = "default_true")]
    pub normalize_cov: bool,
}

impl PipelineSpec {
    pub fn new(extractor: ExtractorSpec, classifier: ClassifierKind) -> Self {
        PipelineSpec {
            preproc: Preprocessing::default(),
            window: default_window(),
            extractor,
            classifier,
            train: TrainConfig::default(),
            normalize_cov: true,
        }
    }

    pub fn with_window(mut self, window: Option<[f64; 2]>) -> Self {
        self.window = window;
        self
    }

    /// `CSP+KNN` style label.
    pub fn label(&self) -> String {
        format!("{}+{}", self.extractor.title(), self.classifier.title())
    }

    pub fn validate(&self, fs_hz: f64) -> Result<()> {
        self.train.validate()?;
        if self.extractor.m() == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        match self.extractor {
            ExtractorSpec::Fbcsp { low_hz, high_hz, width_hz, order, .. } => {
                make_filter_bank(low_hz, high_hz, width_hz, fs_hz, order)?;
            }
            ExtractorSpec::Trcsp { alpha: TrcspAlpha::Fixed(a), .. } if !(a.is_finite() && a >= 0.0) => {
                return Err(Error::invalid(format!("Tikhonov weight must be nonnegative, got {a}")));
            }
            _ => {
                self.preproc.band().validate(fs_hz)?;
                design_butterworth_bandpass(self.preproc.low_hz, self.preproc.high_hz, fs_hz, self.preproc.order)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for PipelineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Per-trial covariances of every band a pipeline needs, computed once
/// from filtered and cropped trials. Each trial is processed on its own,
/// so the cache carries no cross-trial information.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    labels: Vec<ClassLabel>,
    /// `covs[band][trial]`, un-normalised.
    covs: Vec<Vec<DMatrix<f64>>>,
    bank: Option<FilterBank>,
}

impl PreparedData {
    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn n_trials(&self) -> usize {
        self.labels.len()
    }

    pub fn n_bands(&self) -> usize {
        self.covs.len()
    }

    pub fn covariance(&self, band: usize, trial: usize) -> &DMatrix<f64> {
        &self.covs[band][trial]
    }

    /// Trials at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> PreparedData {
        PreparedData {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            covs: self.covs.iter().map(|band| indices.iter().map(|&i| band[i].clone()).collect()).collect(),
            bank: self.bank.clone(),
        }
    }

    fn band_subset(&self, band: usize, indices: &[usize]) -> Vec<DMatrix<f64>> {
        indices.iter().map(|&i| self.covs[band][i].clone()).collect()
    }
}

fn band_covariances(ds: &EpochedDataset, filter: &crate::dsp::IirFilter, pipe: &PipelineSpec) -> Result<Vec<DMatrix<f64>>> {
    let filtered = filter_dataset(ds, filter, pipe.preproc.zero_phase)?;
    let cropped = match pipe.window {
        Some([t0, t1]) => filtered.crop_window(t0, t1)?,
        None => filtered,
    };
    (0..cropped.n_trials())
        .into_par_iter()
        .map(|i| trial_covariance(&cropped.trial_matrix(i), false).map(CovMatrix::into_matrix))
        .collect()
}

/// Filters and crops every trial and caches its covariance per band.
pub fn prepare(ds: &EpochedDataset, pipe: &PipelineSpec) -> Result<PreparedData> {
    pipe.validate(ds.fs_hz()).map_err(|e| e.in_stage("configuration"))?;
    let fs = ds.fs_hz();
    let run = || -> Result<PreparedData> {
        match pipe.extractor {
            ExtractorSpec::Fbcsp { low_hz, high_hz, width_hz, order, .. } => {
                let bank = make_filter_bank(low_hz, high_hz, width_hz, fs, order)?;
                let covs = bank
                    .filters()
                    .par_iter()
                    .map(|f| band_covariances(ds, f, pipe))
                    .collect::<Result<Vec<_>>>()?;
                Ok(PreparedData { labels: ds.labels().to_vec(), covs, bank: Some(bank) })
            }
            _ => {
                let p = &pipe.preproc;
                let f = design_butterworth_bandpass(p.low_hz, p.high_hz, fs, p.order)?;
                let covs = vec![band_covariances(ds, &f, pipe)?];
                Ok(PreparedData { labels: ds.labels().to_vec(), covs, bank: None })
            }
        }
    };
    run().map_err(|e| e.in_stage("preprocessing"))
}

/// A fitted feature extractor.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedExtractor {
    Spatial { filters: SpatialFilters, alpha: Option<f64> },
    Fbcsp(FbcspModel),
}

impl FittedExtractor {
    /// Features of the prepared trials at `indices`.
    pub fn transform(&self, data: &PreparedData, indices: &[usize]) -> Result<FeatureMatrix> {
        match self {
            FittedExtractor::Spatial { filters, .. } => {
                let rows = indices
                    .iter()
                    .map(|&i| features_from_covariance(filters, data.covariance(0, i)))
                    .collect::<Result<Vec<_>>>()?;
                if rows.is_empty() {
                    return FeatureMatrix::empty(filters.n_filters());
                }
                FeatureMatrix::from_rows(&rows)
            }
            FittedExtractor::Fbcsp(model) => {
                let used = model.used_bands();
                let covs: Vec<Vec<DMatrix<f64>>> = (0..data.n_bands())
                    .map(|b| if used.contains(&b) { data.band_subset(b, indices) } else { Vec::new() })
                    .collect();
                transform_fbcsp_from_covariances(model, &covs, indices.len())
            }
        }
    }
}

fn inner_seed(train: &[usize]) -> u64 {
    train.iter().fold(0x005E_ED0F_A1FA_u64, |acc, &i| crate::dataio::splitmix64(acc ^ i as u64))
}

/// Chooses α on the training trials alone by inner random subsampling;
/// ties go to the earlier grid entry.
fn select_alpha(data: &PreparedData, train: &[usize], m: usize, pipe: &PipelineSpec) -> Result<f64> {
    let inner = data.subset(train);
    let seed = inner_seed(train);
    let mut best = (ALPHA_GRID[0], f64::NEG_INFINITY);
    for &alpha in &ALPHA_GRID {
        let mut total = 0.0;
        for r in 0..INNER_REPS {
            let split = stratified_split_labels(inner.labels(), INNER_TRAIN_FRACTION, split_seed(seed, r))?;
            let fitted = fit_spatial(&inner, &split.train, m, Some(alpha), pipe.normalize_cov)?;
            total += score(&fitted, &inner, &split, pipe)?;
        }
        let mean = total / INNER_REPS as f64;
        if mean > best.1 {
            best = (alpha, mean);
        }
    }
    Ok(best.0)
}

fn fit_spatial(data: &PreparedData, train: &[usize], m: usize, alpha: Option<f64>, normalize: bool) -> Result<FittedExtractor> {
    let covs = data.band_subset(0, train);
    let labels: Vec<ClassLabel> = train.iter().map(|&i| data.labels[i]).collect();
    let filters = match alpha {
        None => csp_from_covariances(&covs, &labels, m, normalize)?,
        Some(alpha) => {
            let (c1, c2) = mean_class_covariances(&covs, &labels, normalize)?;
            solve_trcsp(&c1, &c2, TrcspParams { alpha }, m)?
        }
    };
    Ok(FittedExtractor::Spatial { filters, alpha })
}

fn score(extractor: &FittedExtractor, data: &PreparedData, split: &SplitIndices, pipe: &PipelineSpec) -> Result<f64> {
    let train_f = extractor.transform(data, &split.train)?;
    let train_y: Vec<ClassLabel> = split.train.iter().map(|&i| data.labels[i]).collect();
    let clf = Classifier::fit(pipe.classifier, &train_f, &train_y, &pipe.train)?;
    test_accuracy(&clf, extractor, data, &split.test)
}

fn test_accuracy(clf: &dyn Predictor, extractor: &FittedExtractor, data: &PreparedData, test: &[usize]) -> Result<f64> {
    let test_f = extractor.transform(data, test)?;
    let truth: Vec<ClassLabel> = test.iter().map(|&i| data.labels[i]).collect();
    let predicted = clf.predict_all(&test_f)?;
    let positive = *data.labels.iter().min().ok_or_else(|| Error::invalid("no trials"))?;
    accuracy(ConfusionCounts::from_predictions(&truth, &predicted, positive)?)
}

/// Fits the feature extractor on the training trials only.
pub fn fit_extractor(data: &PreparedData, pipe: &PipelineSpec, train: &[usize]) -> Result<FittedExtractor> {
    let run = || match pipe.extractor {
        ExtractorSpec::Csp { m } => fit_spatial(data, train, m, None, pipe.normalize_cov),
        ExtractorSpec::Trcsp { m, alpha } => {
            let alpha = match alpha {
                TrcspAlpha::Fixed(a) => a,
                TrcspAlpha::Auto => select_alpha(data, train, m, pipe)?,
            };
            fit_spatial(data, train, m, Some(alpha), pipe.normalize_cov)
        }
        ExtractorSpec::Fbcsp { m, k_select, n_bins, .. } => {
            let bank = data.bank.as_ref().ok_or_else(|| Error::invalid("data was not prepared for a filter bank"))?;
            let covs: Vec<Vec<DMatrix<f64>>> = (0..data.n_bands()).map(|b| data.band_subset(b, train)).collect();
            let labels: Vec<ClassLabel> = train.iter().map(|&i| data.labels[i]).collect();
            let model = fit_fbcsp_from_covariances(bank, &covs, &labels, m, k_select, n_bins, pipe.normalize_cov)?;
            Ok(FittedExtractor::Fbcsp(model))
        }
    };
    run().map_err(|e| e.in_stage("feature extraction"))
}

/// Extractor and classifier fitted on one training split.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub extractor: FittedExtractor,
    pub classifier: Classifier,
}

impl FittedPipeline {
    pub fn fit(data: &PreparedData, pipe: &PipelineSpec, train: &[usize]) -> Result<Self> {
        let extractor = fit_extractor(data, pipe, train)?;
        let f = extractor.transform(data, train).map_err(|e| e.in_stage("feature extraction"))?;
        let y: Vec<ClassLabel> = train.iter().map(|&i| data.labels[i]).collect();
        let classifier = Classifier::fit(pipe.classifier, &f, &y, &pipe.train).map_err(|e| e.in_stage("classification"))?;
        Ok(FittedPipeline { extractor, classifier })
    }

    pub fn accuracy(&self, data: &PreparedData, test: &[usize]) -> Result<f64> {
        test_accuracy(&self.classifier, &self.extractor, data, test).map_err(|e| e.in_stage("classification"))
    }
}

fn check_split(data: &PreparedData, split: &SplitIndices) -> Result<()> {
    let n = data.n_trials();
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::invalid("split needs train and test trials"));
    }
    if let Some(&i) = split.train.iter().chain(&split.test).find(|&&i| i >= n) {
        return Err(Error::invalid(format!("split index {i} out of range for {n} trials")));
    }
    let classes: std::collections::BTreeSet<ClassLabel> = data.labels.iter().copied().collect();
    if classes.len() != 2 {
        return Err(Error::invalid(format!("evaluation needs a two-class dataset, found {} classes", classes.len())));
    }
    Ok(())
}

/// One repetition on prepared data: fit on `split.train`, score on `split.test`.
pub fn run_repetition_prepared(data: &PreparedData, pipe: &PipelineSpec, split: &SplitIndices) -> Result<f64> {
    check_split(data, split)?;
    FittedPipeline::fit(data, pipe, &split.train)?.accuracy(data, &split.test)
}

/// One repetition with the classifier replaced by `make_classifier`,
/// which sees only the training features and labels.
pub fn run_repetition_with<F>(data: &PreparedData, pipe: &PipelineSpec, split: &SplitIndices, make_classifier: F) -> Result<f64>
where
    F: FnOnce(&FeatureMatrix, &[ClassLabel]) -> Result<Box<dyn Predictor>>,
{
    check_split(data, split)?;
    let extractor = fit_extractor(data, pipe, &split.train)?;
    let f = extractor.transform(data, &split.train)?;
    let y: Vec<ClassLabel> = split.train.iter().map(|&i| data.labels[i]).collect();
    let clf = make_classifier(&f, &y)?;
    test_accuracy(clf.as_ref(), &extractor, data, &split.test)
}

/// One repetition of the full pipeline on a two-class dataset.
pub fn run_repetition(ds: &EpochedDataset, pipe: &PipelineSpec, split: &SplitIndices) -> Result<f64> {
    run_repetition_prepared(&prepare(ds, pipe)?, pipe, split)
}
