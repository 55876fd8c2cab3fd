use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ClassLabel, EpochedDataset};
use crate::error::{Error, Result};

/// Trial indices of one train/test partition, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of repetition `rep` under `master`.
pub fn split_seed(master: u64, rep: u64) -> u64 {
    splitmix64(master ^ rep)
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Per class, `round(train_fraction × class_count)` trials drawn uniformly
/// at random go to train and the rest to test.
pub fn stratified_split(ds: &EpochedDataset, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    stratified_split_labels(ds.labels(), train_fraction, seed)
}

/// [`stratified_split`] over a bare label vector.
pub fn stratified_split_labels(labels: &[ClassLabel], train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_fraction} not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut classes = labels.to_vec();
    classes.sort();
    classes.dedup();
    for class in classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let count = members.len();
        if count < 2 {
            return Err(Error::invalid(format!("class {class} has {count} trial(s); a split needs at least 2")));
        }
        let n_train = round_half_up(train_fraction * count as f64);
        if n_train == 0 || n_train == count {
            return Err(Error::invalid(format!(
                "train fraction {train_fraction} leaves class {class} ({count} trials) without train or test trials"
            )));
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}
