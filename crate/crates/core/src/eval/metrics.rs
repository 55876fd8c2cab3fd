use crate::dataio::ClassLabel;
use crate::error::{Error, Result};

/// Binary confusion counts with respect to a chosen positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(truth: &[ClassLabel], predicted: &[ClassLabel], positive: ClassLabel) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::dims(format!("{} true labels, {} predictions", truth.len(), predicted.len())));
        }
        let mut c = ConfusionCounts::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t == positive, p == positive) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// `(TP + TN) / (TP + TN + FP + FN)`.
pub fn accuracy(counts: ConfusionCounts) -> Result<f64> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::invalid("accuracy of an empty test set"));
    }
    Ok((counts.tp + counts.tn) as f64 / total as f64)
}

/// Accuracy of every repetition with the across-repetition mean and
/// population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyResult {
    pub per_rep: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl AccuracyResult {
    pub fn from_reps(per_rep: Vec<f64>) -> Result<Self> {
        if per_rep.is_empty() {
            return Err(Error::invalid("no repetitions"));
        }
        if per_rep.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("accuracies must lie in [0, 1]"));
        }
        let (mean, std) = mean_std(&per_rep);
        Ok(AccuracyResult { per_rep, mean, std })
    }
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Sub, Word};

    fn counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> ConfusionCounts {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    #[test]
    fn extremes() {
        assert_eq!(accuracy(counts(5, 5, 0, 0)).unwrap(), 1.0);
        assert_eq!(accuracy(counts(0, 0, 5, 5)).unwrap(), 0.0);
        assert!(accuracy(counts(0, 0, 0, 0)).is_err());
    }

    #[test]
    fn three_of_four() {
        let c = ConfusionCounts::from_predictions(&[Word, Word, Sub, Sub], &[Word, Sub, Sub, Sub], Word).unwrap();
        assert_eq!(c, counts(1, 2, 0, 1));
        assert_eq!(accuracy(c).unwrap(), 0.75);
        assert!(ConfusionCounts::from_predictions(&[Word], &[], Word).is_err());
    }

    #[test]
    fn result_statistics() {
        let r = AccuracyResult::from_reps(vec![0.5, 1.0]).unwrap();
        assert_eq!(r.mean, 0.75);
        assert_eq!(r.std, 0.25);
        let single = AccuracyResult::from_reps(vec![0.8]).unwrap();
        assert_eq!(single.std, 0.0);
        assert!(AccuracyResult::from_reps(vec![]).is_err());
        assert!(AccuracyResult::from_reps(vec![1.5]).is_err());
    }
}
