//! EEG mental-task binary classification toolkit.
//!
//! The crate is organised along the processing chain:
//!
//! ```text
//! .epo container ──► dataio ──► dsp (Butterworth band-pass, filter bank)
//!                                 │
//!                                 ▼
//!                  spatial (CSP / Tikhonov-regularised CSP / filter-bank CSP,
//!                           log-variance features, mutual-information selection)
//!                                 │
//!                                 ▼
//!                  classify (LDA, linear and RBF SVM, k-NN)
//!                                 │
//!                                 ▼
//!                  eval (stratified random subsampling, accuracy tables)
//! ```
//!
//! Every stage is a pure function of its inputs and an explicit seed, so
//! evaluation results are bit-reproducible regardless of thread count.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod dataio;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod fmt;
pub mod linalg;
pub mod spatial;

pub use classify::{ClassifierKind, KnnModel, LdaModel, Predictor, SvmKernel, SvmModel, TrainConfig};
pub use dataio::{ClassLabel, ClassPair, EpochedDataset, SplitIndices, SynthSpec};
pub use dsp::{BandSpec, FilterBank, IirFilter};
pub use error::{Error, Result};
pub use eval::{AccuracyResult, EvalConfig, ExtractorSpec, PipelineSpec, ResultsTable};
pub use spatial::{CovMatrix, FbcspModel, FeatureMatrix, SpatialFilters, TrcspParams};
