use super::{check_dim, Predictor};
use crate::dataio::ClassLabel;
use crate::error::{Error, Result};
use crate::spatial::FeatureMatrix;

/// Lazy k-nearest-neighbour classifier under the Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    points: FeatureMatrix,
    labels: Vec<ClassLabel>,
    k: usize,
}

impl KnnModel {
    pub fn points(&self) -> &FeatureMatrix {
        &self.points
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices of the `k` nearest training points, nearest first; equal
    /// distances keep the lower training index first.
    pub fn neighbours(&self, x: &[f64]) -> Result<Vec<usize>> {
        check_dim(self.n_features(), x)?;
        let mut dist: Vec<(f64, usize)> = self
            .points
            .rows()
            .take(self.labels.len())
            .enumerate()
            .map(|(i, p)| (euclidean(x, p), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(dist.into_iter().take(self.k).map(|(_, i)| i).collect())
    }
}

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Stores the training set; `1 ≤ k ≤ N`.
pub fn fit_knn(f: &FeatureMatrix, y: &[ClassLabel], k: usize) -> Result<KnnModel> {
    if f.n_rows() != y.len() {
        return Err(Error::dims(format!("{} feature rows for {} labels", f.n_rows(), y.len())));
    }
    if k == 0 || k > y.len() {
        return Err(Error::invalid(format!("k = {k} outside 1..={}", y.len())));
    }
    Ok(KnnModel { points: f.clone(), labels: y.to_vec(), k })
}

impl Predictor for KnnModel {
    fn n_features(&self) -> usize {
        self.points.n_cols()
    }

    /// Majority vote of the `k` nearest; a tied vote goes to the label of
    /// the single nearest neighbour.
    fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        let nn = self.neighbours(x)?;
        let mut votes: Vec<(ClassLabel, usize)> = Vec::new();
        for &i in &nn {
            match votes.iter_mut().find(|(l, _)| *l == self.labels[i]) {
                Some((_, c)) => *c += 1,
                None => votes.push((self.labels[i], 1)),
            }
        }
        let top = votes.iter().map(|&(_, c)| c).max().unwrap_or(0);
        let leaders: Vec<ClassLabel> = votes.iter().filter(|&&(_, c)| c == top).map(|&(l, _)| l).collect();
        Ok(if leaders.len() == 1 { leaders[0] } else { self.labels[nn[0]] })
    }
}
