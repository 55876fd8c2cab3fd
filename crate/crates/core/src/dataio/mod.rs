//! Epoched EEG datasets: labels, the `.epo` container, class-pair
//! selection, time-window cropping, stratified splits and a synthetic
//! generator with known ground truth.

mod container;
mod split;
mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use container::{read_dataset, write_dataset, decode_dataset, encode_dataset, MAGIC, VERSION};
pub use split::{split_seed, splitmix64, stratified_split, stratified_split_labels, SplitIndices};
pub use synth::{random_mixing, synth_classes, synth_two_class, SynthSpec};

/// One of the five mental tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ClassLabel {
    Word = 1,
    Sub = 2,
    Nav = 3,
    Hand = 4,
    Feet = 5,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Word,
        ClassLabel::Sub,
        ClassLabel::Nav,
        ClassLabel::Hand,
        ClassLabel::Feet,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(ClassLabel::Word),
            2 => Some(ClassLabel::Sub),
            3 => Some(ClassLabel::Nav),
            4 => Some(ClassLabel::Hand),
            5 => Some(ClassLabel::Feet),
            _ => None,
        }
    }

    /// Canonical upper-case name, e.g. `WORD`.
    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Word => "WORD",
            ClassLabel::Sub => "SUB",
            ClassLabel::Nav => "NAV",
            ClassLabel::Hand => "HAND",
            ClassLabel::Feet => "FEET",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        if let Ok(code) = upper.parse::<u8>() {
            return ClassLabel::from_code(code)
                .ok_or_else(|| Error::invalid(format!("class code {code} not in 1..5")));
        }
        ClassLabel::ALL
            .into_iter()
            .find(|c| c.name() == upper)
            .ok_or_else(|| Error::invalid(format!("unknown class label `{s}`")))
    }
}

impl TryFrom<String> for ClassLabel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ClassLabel> for String {
    fn from(c: ClassLabel) -> String {
        c.name().to_string()
    }
}

/// An unordered pair of distinct classes, stored lower code first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ClassPair {
    first: ClassLabel,
    second: ClassLabel,
}

impl ClassPair {
    pub fn new(a: ClassLabel, b: ClassLabel) -> Result<Self> {
        if a == b {
            return Err(Error::invalid(format!("class pair needs two distinct classes, got {a} twice")));
        }
        let (first, second) = if a < b { (a, b) } else { (b, a) };
        Ok(ClassPair { first, second })
    }

    pub fn first(self) -> ClassLabel {
        self.first
    }

    pub fn second(self) -> ClassLabel {
        self.second
    }

    /// All ten unordered pairs of the five tasks, in canonical order.
    pub fn all() -> Vec<ClassPair> {
        let mut out = Vec::with_capacity(10);
        for (i, &a) in ClassLabel::ALL.iter().enumerate() {
            for &b in &ClassLabel::ALL[i + 1..] {
                out.push(ClassPair { first: a, second: b });
            }
        }
        out
    }

    /// Machine key used in csv output, e.g. `WORD-FEET`.
    pub fn key(self) -> String {
        format!("{}-{}", self.first, self.second)
    }

    /// Human-readable name in the style of the result tables, e.g. `Word vs feet`.
    pub fn display_name(self) -> String {
        let a = self.first.name().to_ascii_lowercase();
        let b = self.second.name().to_ascii_lowercase();
        let mut chars = a.chars();
        let head = chars.next().map(|c| c.to_ascii_uppercase()).unwrap_or_default();
        format!("{head}{} vs {b}", chars.as_str())
    }
}

impl fmt::Display for ClassPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl FromStr for ClassPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['-', '/', ',']).map(str::trim).collect();
        match parts.as_slice() {
            [a, b] => ClassPair::new(a.parse()?, b.parse()?),
            _ => Err(Error::invalid(format!("class pair `{s}` must look like WORD-FEET"))),
        }
    }
}

impl TryFrom<String> for ClassPair {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ClassPair> for String {
    fn from(p: ClassPair) -> String {
        p.key()
    }
}

/// Trials × channels × samples of EEG, stored trial-major, channel-major,
/// sample-minor as `f32` (the container's sample type).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochedDataset {
    fs_hz: f64,
    channel_names: Vec<String>,
    labels: Vec<ClassLabel>,
    n_samples: usize,
    data: Vec<f32>,
}

impl EpochedDataset {
    pub fn new(
        fs_hz: f64,
        channel_names: Vec<String>,
        labels: Vec<ClassLabel>,
        n_samples: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if !(fs_hz.is_finite() && fs_hz > 0.0) {
            return Err(Error::invalid(format!("sampling rate must be positive, got {fs_hz}")));
        }
        if channel_names.is_empty() {
            return Err(Error::invalid("dataset needs at least one channel"));
        }
        if n_samples == 0 {
            return Err(Error::invalid("trials need at least one sample"));
        }
        if let Some(name) = channel_names.iter().find(|n| n.len() > u16::MAX as usize) {
            return Err(Error::invalid(format!("channel name of {} bytes is too long", name.len())));
        }
        let expected = labels.len() * channel_names.len() * n_samples;
        if data.len() != expected {
            return Err(Error::dims(format!(
                "{} trials x {} channels x {} samples needs {} values, got {}",
                labels.len(),
                channel_names.len(),
                n_samples,
                expected,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at flat index {pos}")));
        }
        Ok(EpochedDataset {
            fs_hz,
            channel_names,
            labels,
            n_samples,
            data,
        })
    }

    /// Default channel names `ch1..chN`.
    pub fn default_channel_names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("ch{i}")).collect()
    }

    pub fn n_trials(&self) -> usize {
        self.labels.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn trial_len(&self) -> usize {
        self.n_channels() * self.n_samples
    }

    /// All samples of trial `i`, channel-major.
    pub fn trial(&self, i: usize) -> &[f32] {
        let len = self.trial_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn channel(&self, trial: usize, channel: usize) -> &[f32] {
        let start = trial * self.trial_len() + channel * self.n_samples;
        &self.data[start..start + self.n_samples]
    }

    /// Trial `i` as an `n_channels × n_samples` matrix.
    pub fn trial_matrix(&self, i: usize) -> DMatrix<f64> {
        let trial = self.trial(i);
        DMatrix::from_fn(self.n_channels(), self.n_samples, |c, t| {
            trial[c * self.n_samples + t] as f64
        })
    }

    pub fn class_counts(&self) -> BTreeMap<ClassLabel, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    /// Distinct labels present, ascending by code.
    pub fn classes(&self) -> Vec<ClassLabel> {
        self.class_counts().into_keys().collect()
    }

    /// Trials at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let len = self.trial_len();
        let mut data = Vec::with_capacity(indices.len() * len);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n_trials() {
                return Err(Error::invalid(format!(
                    "trial index {i} out of range for {} trials",
                    self.n_trials()
                )));
            }
            data.extend_from_slice(self.trial(i));
            labels.push(self.labels[i]);
        }
        Ok(EpochedDataset {
            fs_hz: self.fs_hz,
            channel_names: self.channel_names.clone(),
            labels,
            n_samples: self.n_samples,
            data,
        })
    }

    /// Same samples with a replacement label vector.
    pub fn with_labels(&self, labels: Vec<ClassLabel>) -> Result<Self> {
        if labels.len() != self.n_trials() {
            return Err(Error::dims(format!(
                "{} labels for {} trials",
                labels.len(),
                self.n_trials()
            )));
        }
        Ok(EpochedDataset {
            labels,
            ..self.clone()
        })
    }

    /// Builds a dataset of the same shape by transforming every
    /// (trial, channel) sequence independently.
    pub fn map_channels<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[f32]) -> Result<Vec<f32>> + Sync,
    {
        use rayon::prelude::*;

        let n_samples = self.n_samples;
        let chunks: Vec<Vec<f32>> = self
            .data
            .par_chunks(n_samples)
            .map(|seq| {
                let out = f(seq)?;
                if out.len() != n_samples {
                    return Err(Error::dims("channel transform changed the sequence length"));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        EpochedDataset::new(
            self.fs_hz,
            self.channel_names.clone(),
            self.labels.clone(),
            n_samples,
            chunks.concat(),
        )
    }

    /// Keeps exactly the trials labelled `a` or `b`, in their original order.
    pub fn select_pair(&self, a: ClassLabel, b: ClassLabel) -> Result<Self> {
        if a == b {
            return Err(Error::invalid(format!("cannot select pair ({a}, {b}): classes must differ")));
        }
        let counts = self.class_counts();
        for c in [a, b] {
            if !counts.contains_key(&c) {
                return Err(Error::invalid(format!("class {c} is absent from the dataset")));
            }
        }
        let keep: Vec<usize> = (0..self.n_trials())
            .filter(|&i| self.labels[i] == a || self.labels[i] == b)
            .collect();
        self.subset(&keep)
    }

    /// Crops every trial to `[t_start_s, t_end_s)` relative to trial onset.
    pub fn crop_window(&self, t_start_s: f64, t_end_s: f64) -> Result<Self> {
        let duration = self.n_samples as f64 / self.fs_hz;
        if !(t_start_s.is_finite() && t_end_s.is_finite()) {
            return Err(Error::invalid("window bounds must be finite"));
        }
        if t_start_s >= t_end_s {
            return Err(Error::invalid(format!("empty window [{t_start_s}, {t_end_s}]")));
        }
        if t_start_s < 0.0 || t_end_s > duration + 1e-9 {
            return Err(Error::invalid(format!(
                "window [{t_start_s}, {t_end_s}] s lies outside the {duration} s trial"
            )));
        }
        // 1e-9 absorbs representation error in products like 0.1 * 250.
        let start = (t_start_s * self.fs_hz + 1e-9).floor() as usize;
        let len = ((t_end_s - t_start_s) * self.fs_hz + 1e-9).floor() as usize;
        if len == 0 {
            return Err(Error::invalid(format!("window [{t_start_s}, {t_end_s}] holds no samples")));
        }
        if start + len > self.n_samples {
            return Err(Error::invalid(format!(
                "window [{t_start_s}, {t_end_s}] s runs past the last sample"
            )));
        }
        let mut data = Vec::with_capacity(self.n_trials() * self.n_channels() * len);
        for seq in self.data.chunks(self.n_samples) {
            data.extend_from_slice(&seq[start..start + len]);
        }
        Ok(EpochedDataset {
            fs_hz: self.fs_hz,
            channel_names: self.channel_names.clone(),
            labels: self.labels.clone(),
            n_samples: len,
            data,
        })
    }
}
