use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{features_from_covariance, mutual_information, solve_csp, trial_covariance, CovMatrix, FeatureMatrix, SpatialFilters};
use crate::dataio::{ClassLabel, EpochedDataset};
use crate::dsp::{filter_dataset, FilterBank};
use crate::error::{Error, Result};
use crate::fmt::g17;

/// Per-band CSP filters plus the mutual-information selection over the
/// pooled `bands × 2m` candidate features.
#[derive(Debug, Clone, PartialEq)]
pub struct FbcspModel {
    bank: FilterBank,
    per_band: Vec<SpatialFilters>,
    selected: Vec<(usize, usize)>,
    mi_scores: Vec<f64>,
    n_bins: usize,
}

impl FbcspModel {
    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn per_band(&self) -> &[SpatialFilters] {
        &self.per_band
    }

    /// `(band_index, feature_index)` pairs in selection order.
    pub fn selected(&self) -> &[(usize, usize)] {
        &self.selected
    }

    /// MI in bits of every candidate, band-major.
    pub fn mi_scores(&self) -> &[f64] {
        &self.mi_scores
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_channels(&self) -> usize {
        self.per_band[0].n_channels()
    }

    /// Bands that contribute at least one selected feature, ascending.
    pub fn used_bands(&self) -> Vec<usize> {
        let mut bands: Vec<usize> = self.selected.iter().map(|&(b, _)| b).collect();
        bands.sort_unstable();
        bands.dedup();
        bands
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, (band, w)) in self.bank.bands().iter().zip(&self.per_band).enumerate() {
            out.push_str(&format!("band {i}: {band}\n"));
            out.push_str(&w.to_text());
        }
        let sel: Vec<String> = self.selected.iter().map(|(b, f)| format!("{b}:{f}")).collect();
        out.push_str(&format!("selected: {}\n", sel.join(" ")));
        let mi: Vec<String> = self.mi_scores.iter().map(|&v| g17(v)).collect();
        out.push_str(&format!("mi: {}\n", mi.join(" ")));
        out
    }
}

fn binary_classes(labels: &[ClassLabel]) -> Result<(ClassLabel, ClassLabel)> {
    let mut classes = labels.to_vec();
    classes.sort();
    classes.dedup();
    match classes[..] {
        [a, b] => Ok((a, b)),
        _ => Err(Error::invalid(format!("expected two classes, found {}", classes.len()))),
    }
}

fn class_mean(covs: &[DMatrix<f64>], labels: &[ClassLabel], class: ClassLabel, normalize: bool) -> Result<CovMatrix> {
    let n = covs[0].nrows();
    let mut sum = DMatrix::<f64>::zeros(n, n);
    let mut count = 0usize;
    for (c, _) in covs.iter().zip(labels).filter(|(_, &l)| l == class) {
        if normalize {
            let tr = c.trace();
            if !(tr > 0.0) {
                return Err(Error::numerical("cannot trace-normalise a covariance with zero trace"));
            }
            sum += c / tr;
        } else {
            sum += c;
        }
        count += 1;
    }
    Ok(CovMatrix::from_symmetric(sum / count as f64))
}

/// CSP filters from per-trial un-normalised covariances of a binary set.
/// Class 1 is the lower class code.
pub fn csp_from_covariances(
    covs: &[DMatrix<f64>],
    labels: &[ClassLabel],
    m: usize,
    normalize: bool,
) -> Result<SpatialFilters> {
    let (c1, c2) = binary_classes(labels)?;
    solve_csp(&class_mean(covs, labels, c1, normalize)?, &class_mean(covs, labels, c2, normalize)?, m)
}

/// Class-mean covariances (lower class code first) from per-trial
/// un-normalised covariances.
pub fn mean_class_covariances(
    covs: &[DMatrix<f64>],
    labels: &[ClassLabel],
    normalize: bool,
) -> Result<(CovMatrix, CovMatrix)> {
    let (c1, c2) = binary_classes(labels)?;
    Ok((class_mean(covs, labels, c1, normalize)?, class_mean(covs, labels, c2, normalize)?))
}

fn band_covariances(ds: &EpochedDataset, bank: &FilterBank, bands: &[usize]) -> Result<Vec<Vec<DMatrix<f64>>>> {
    bands
        .par_iter()
        .map(|&b| {
            let filtered = filter_dataset(ds, &bank.filters()[b], true)?;
            (0..filtered.n_trials())
                .map(|i| trial_covariance(&filtered.trial_matrix(i), false).map(CovMatrix::into_matrix))
                .collect()
        })
        .collect()
}

/// Fits FBCSP on a training set: zero-phase filtering per band, CSP per
/// band on trace-normalised class covariances, MI scoring of all
/// candidates and selection of the `k_select` best.
pub fn fit_fbcsp(train: &EpochedDataset, bank: &FilterBank, m: usize, k_select: usize, n_bins: usize) -> Result<FbcspModel> {
    let all: Vec<usize> = (0..bank.len()).collect();
    let covs = band_covariances(train, bank, &all)?;
    fit_fbcsp_from_covariances(bank, &covs, train.labels(), m, k_select, n_bins, true)
}

/// As [`fit_fbcsp`], from un-normalised per-trial covariances already
/// computed per band (`covs[band][trial]`).
pub fn fit_fbcsp_from_covariances(
    bank: &FilterBank,
    covs: &[Vec<DMatrix<f64>>],
    labels: &[ClassLabel],
    m: usize,
    k_select: usize,
    n_bins: usize,
    normalize: bool,
) -> Result<FbcspModel> {
    if bank.is_empty() || covs.len() != bank.len() {
        return Err(Error::dims(format!("{} covariance sets for {} bands", covs.len(), bank.len())));
    }
    if covs.iter().any(|c| c.len() != labels.len()) || labels.is_empty() {
        return Err(Error::dims("every band needs one covariance per labelled trial"));
    }
    let n_candidates = bank.len() * 2 * m;
    if k_select == 0 || k_select > n_candidates {
        return Err(Error::invalid(format!("k_select = {k_select} outside 1..={n_candidates}")));
    }

    let per_band = covs
        .par_iter()
        .map(|band| csp_from_covariances(band, labels, m, normalize))
        .collect::<Result<Vec<_>>>()?;

    let band_features = per_band
        .par_iter()
        .zip(covs)
        .map(|(w, band)| band.iter().map(|c| features_from_covariance(w, c)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let mut mi_scores = Vec::with_capacity(n_candidates);
    for rows in &band_features {
        for j in 0..2 * m {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            mi_scores.push(mutual_information(&column, labels, n_bins)?);
        }
    }

    // candidates are band-major, so a stable sort keeps the lower
    // (band, feature) first among equal scores
    let mut order: Vec<usize> = (0..n_candidates).collect();
    order.sort_by(|&i, &j| mi_scores[j].total_cmp(&mi_scores[i]));
    let selected = order[..k_select].iter().map(|&c| (c / (2 * m), c % (2 * m))).collect();

    Ok(FbcspModel { bank: bank.clone(), per_band, selected, mi_scores, n_bins })
}

/// Selected features for every trial of `ds`, in `selected` order.
pub fn transform_fbcsp(model: &FbcspModel, ds: &EpochedDataset) -> Result<FeatureMatrix> {
    if ds.n_channels() != model.n_channels() {
        return Err(Error::dims(format!(
            "dataset has {} channels, model expects {}",
            ds.n_channels(),
            model.n_channels()
        )));
    }
    let used = model.used_bands();
    let partial = band_covariances(ds, &model.bank, &used)?;
    let mut covs: Vec<Vec<DMatrix<f64>>> = vec![Vec::new(); model.bank.len()];
    for (b, c) in used.into_iter().zip(partial) {
        covs[b] = c;
    }
    transform_fbcsp_from_covariances(model, &covs, ds.n_trials())
}

/// As [`transform_fbcsp`], from per-band per-trial covariances. Bands not
/// in the selection may be left empty.
pub fn transform_fbcsp_from_covariances(
    model: &FbcspModel,
    covs: &[Vec<DMatrix<f64>>],
    n_trials: usize,
) -> Result<FeatureMatrix> {
    if covs.len() != model.bank.len() {
        return Err(Error::dims(format!("{} covariance sets for {} bands", covs.len(), model.bank.len())));
    }
    let used = model.used_bands();
    for &b in &used {
        if covs[b].len() != n_trials {
            return Err(Error::dims(format!("band {b} has {} covariances for {n_trials} trials", covs[b].len())));
        }
    }
    let rows = (0..n_trials)
        .map(|t| {
            let mut per_band: Vec<Option<Vec<f64>>> = vec![None; model.bank.len()];
            for &b in &used {
                per_band[b] = Some(features_from_covariance(&model.per_band[b], &covs[b][t])?);
            }
            Ok(model
                .selected
                .iter()
                .map(|&(b, f)| per_band[b].as_ref().map(|v| v[f]).unwrap_or(f64::NAN))
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return FeatureMatrix::empty(model.selected.len());
    }
    FeatureMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{random_mixing, synth_two_class, SynthSpec};
    use crate::dsp::{design_butterworth_bandpass, make_filter_bank, BandSpec};
    use crate::spatial::{build_feature_set, class_mean_covariance};

    fn dataset(seed: u64) -> EpochedDataset {
        let spec = SynthSpec {
            n_trials_per_class: 20,
            n_channels: 6,
            n_samples: 512,
            fs_hz: 256.0,
            mixing: random_mixing(6, 4, seed),
            source_band: BandSpec::new(8.0, 12.0),
            variance_ratio: 10.0,
            noise_std: 0.1,
        };
        synth_two_class(&spec, (ClassLabel::Word, ClassLabel::Feet), seed).unwrap()
    }

    #[test]
    fn single_band_matches_plain_csp() {
        let ds = dataset(3);
        let bank = make_filter_bank(8.0, 30.0, 22.0, 256.0, 5).unwrap();
        let model = fit_fbcsp(&ds, &bank, 2, 4, 4).unwrap();
        let mut sel = model.selected().to_vec();
        sel.sort();
        assert_eq!(sel, vec![(0, 0), (0, 1), (0, 2), (0, 3)]);

        let f = design_butterworth_bandpass(8.0, 30.0, 256.0, 5).unwrap();
        let filtered = filter_dataset(&ds, &f, true).unwrap();
        let c1 = class_mean_covariance(&filtered, ClassLabel::Word, true).unwrap();
        let c2 = class_mean_covariance(&filtered, ClassLabel::Feet, true).unwrap();
        let w = solve_csp(&c1, &c2, 2).unwrap();
        assert!((model.per_band()[0].w() - w.w()).amax() < 1e-8);

        let direct = build_feature_set(&filtered, &w).unwrap();
        let feats = transform_fbcsp(&model, &ds).unwrap();
        for (k, &(_, j)) in model.selected().iter().enumerate() {
            for (a, b) in feats.column(k).iter().zip(direct.column(j)) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn k_select_bounds() {
        let ds = dataset(1);
        let bank = make_filter_bank(8.0, 16.0, 4.0, 256.0, 4).unwrap();
        assert!(fit_fbcsp(&ds, &bank, 1, 5, 4).is_err());
        assert!(fit_fbcsp(&ds, &bank, 1, 0, 4).is_err());
        assert!(fit_fbcsp(&ds, &bank, 1, 4, 4).is_ok());
    }

    #[test]
    fn selection_is_ordered_by_mi() {
        let ds = dataset(5);
        let bank = make_filter_bank(4.0, 16.0, 4.0, 256.0, 4).unwrap();
        let model = fit_fbcsp(&ds, &bank, 2, 4, 4).unwrap();
        let scores: Vec<f64> = model.selected().iter().map(|&(b, f)| model.mi_scores()[b * 4 + f]).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        let worst = *scores.last().unwrap();
        let unselected_max = (0..12)
            .filter(|c| !model.selected().contains(&(c / 4, c % 4)))
            .map(|c| model.mi_scores()[c])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(unselected_max <= worst);
        assert!(model.to_text().contains("selected: "));
    }

    #[test]
    fn channel_mismatch() {
        let ds = dataset(2);
        let bank = make_filter_bank(8.0, 16.0, 8.0, 256.0, 4).unwrap();
        let model = fit_fbcsp(&ds, &bank, 1, 2, 4).unwrap();
        assert!(transform_fbcsp(&model, &ds).is_ok());
        let other = EpochedDataset::new(
            256.0,
            EpochedDataset::default_channel_names(3),
            vec![ClassLabel::Word],
            512,
            vec![0.5; 3 * 512],
        )
        .unwrap();
        assert!(transform_fbcsp(&model, &other).is_err());
    }
}
