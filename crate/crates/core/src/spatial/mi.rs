use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Equal-frequency bin index for every sample; tied values share the bin
/// of the first of them in sorted order.
fn equal_frequency_bins(x: &[f64], n_bins: usize) -> Vec<usize> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(i.cmp(&j)));
    let mut bins = vec![0; n];
    let mut run_bin = 0;
    for (rank, &i) in order.iter().enumerate() {
        if rank == 0 || x[i] != x[order[rank - 1]] {
            run_bin = rank * n_bins / n;
        }
        bins[i] = run_bin;
    }
    bins
}

/// Mutual information in bits between a real feature, discretised into
/// `n_bins` equal-frequency bins, and a binary label.
pub fn mutual_information<L: Ord + Copy>(feature: &[f64], labels: &[L], n_bins: usize) -> Result<f64> {
    let n = feature.len();
    if labels.len() != n {
        return Err(Error::dims(format!("{n} feature values for {} labels", labels.len())));
    }
    if n_bins < 1 || n < 2 * n_bins {
        return Err(Error::invalid(format!("{n} samples are too few for {n_bins} bins")));
    }
    if feature.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature has non-finite values"));
    }
    let mut classes: Vec<L> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::invalid(format!("labels must be binary, found {} classes", classes.len())));
    }

    let bins = equal_frequency_bins(feature, n_bins);
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut px = vec![0usize; n_bins];
    let mut py = [0usize; 2];
    for (&b, l) in bins.iter().zip(labels) {
        let y = usize::from(*l == classes[1]);
        *joint.entry((b, y)).or_insert(0) += 1;
        px[b] += 1;
        py[y] += 1;
    }
    let nf = n as f64;
    let mi: f64 = joint
        .iter()
        .map(|(&(b, y), &count)| {
            let pxy = count as f64 / nf;
            pxy * (pxy * nf * nf / (px[b] as f64 * py[y] as f64)).log2()
        })
        .sum();
    Ok(mi.max(0.0))
}
