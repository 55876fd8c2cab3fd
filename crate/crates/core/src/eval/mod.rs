//! The evaluation protocol: repeated stratified random subsampling per
//! class pair, accuracy aggregation and result tables.

mod metrics;
mod pipeline;
mod table;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{accuracy, mean_std, AccuracyResult, ConfusionCounts};
pub use pipeline::{
    fit_extractor, prepare, run_repetition, run_repetition_prepared, run_repetition_with, ExtractorSpec,
    FittedExtractor, FittedPipeline, PipelineSpec, PreparedData, Preprocessing, TrcspAlpha, ALPHA_GRID, INNER_REPS,
};
pub use table::{parse_aggregate_csv, render_table, AggregateRecord, BestRow, PipelineInfo, ResultRow, ResultsTable, TableFormat};

use crate::dataio::{split_seed, stratified_split_labels, ClassLabel, ClassPair, EpochedDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_reps: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { n_reps: 100, train_fraction: 0.7, master_seed: 0 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 {
            return Err(Error::invalid("n_reps must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid(format!("train_fraction {} not in (0, 1)", self.train_fraction)));
        }
        Ok(())
    }

    /// Split seed of every repetition, in order.
    pub fn rep_seeds(&self) -> Vec<u64> {
        (0..self.n_reps as u64).map(|r| split_seed(self.master_seed, r)).collect()
    }
}

/// Runs `cfg.n_reps` repetitions on prepared data. Repetitions run in
/// parallel and are gathered in repetition order.
pub fn evaluate_prepared(data: &PreparedData, pipe: &PipelineSpec, cfg: &EvalConfig) -> Result<AccuracyResult> {
    cfg.validate()?;
    let per_rep = cfg
        .rep_seeds()
        .into_par_iter()
        .map(|seed| {
            let split = stratified_split_labels(data.labels(), cfg.train_fraction, seed)?;
            run_repetition_prepared(data, pipe, &split)
        })
        .collect::<Result<Vec<f64>>>()?;
    AccuracyResult::from_reps(per_rep)
}

/// Repeated random-subsampling accuracy of `pipe` on a two-class dataset.
pub fn evaluate(ds: &EpochedDataset, pipe: &PipelineSpec, cfg: &EvalConfig) -> Result<AccuracyResult> {
    cfg.validate()?;
    evaluate_prepared(&prepare(ds, pipe)?, pipe, cfg)
}

/// Evaluates `pairs` of a multi-class dataset, preparing every trial once.
pub fn evaluate_pairs(
    ds: &EpochedDataset,
    pairs: &[ClassPair],
    pipe: &PipelineSpec,
    cfg: &EvalConfig,
) -> Result<Vec<(ClassPair, AccuracyResult)>> {
    cfg.validate()?;
    let counts = ds.class_counts();
    for pair in pairs {
        for c in [pair.first(), pair.second()] {
            if !counts.contains_key(&c) {
                return Err(Error::invalid(format!("class {c} is absent from the dataset")));
            }
        }
    }
    let data = prepare(ds, pipe)?;
    pairs
        .iter()
        .map(|&pair| {
            let keep: Vec<usize> = (0..data.n_trials())
                .filter(|&i| data.labels()[i] == pair.first() || data.labels()[i] == pair.second())
                .collect();
            Ok((pair, evaluate_prepared(&data.subset(&keep), pipe, cfg)?))
        })
        .collect()
}

/// All ten pairs of a five-class dataset, in canonical order.
pub fn evaluate_all_pairs(ds5: &EpochedDataset, pipe: &PipelineSpec, cfg: &EvalConfig) -> Result<Vec<(ClassPair, AccuracyResult)>> {
    let present = ds5.classes();
    if let Some(missing) = ClassLabel::ALL.iter().find(|c| !present.contains(c)) {
        return Err(Error::invalid(format!("class {missing} is absent from the dataset")));
    }
    evaluate_pairs(ds5, &ClassPair::all(), pipe, cfg)
}
