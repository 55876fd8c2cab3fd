//! Synthetic epochs with known ground truth.
//!
//! Each trial mixes `n_sources` band-limited Gaussian sources through a
//! fixed mixing matrix and adds white sensor noise. Class membership is
//! encoded purely in the variance of the sources, so the optimal spatial
//! filters are the rows of the mixing matrix's pseudo-inverse.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ClassLabel, EpochedDataset};
use crate::dsp::{apply_filter, design_butterworth_bandpass, BandSpec, IirFilter};
use crate::error::{Error, Result};

const SOURCE_FILTER_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_trials_per_class: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub fs_hz: f64,
    /// `n_channels × n_sources`, full column rank.
    pub mixing: DMatrix<f64>,
    pub source_band: BandSpec,
    /// Variance of an amplified source relative to its baseline.
    pub variance_ratio: f64,
    pub noise_std: f64,
}

impl SynthSpec {
    pub fn n_sources(&self) -> usize {
        self.mixing.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials_per_class == 0 || self.n_channels == 0 || self.n_samples == 0 {
            return Err(Error::invalid("synthetic trials, channels and samples must be positive"));
        }
        self.source_band.validate(self.fs_hz)?;
        if !(self.variance_ratio.is_finite() && self.variance_ratio > 0.0) {
            return Err(Error::invalid(format!("variance ratio must be positive, got {}", self.variance_ratio)));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::invalid(format!("noise std must be nonnegative, got {}", self.noise_std)));
        }
        if self.mixing.nrows() != self.n_channels {
            return Err(Error::dims(format!(
                "mixing has {} rows for {} channels",
                self.mixing.nrows(),
                self.n_channels
            )));
        }
        let n_sources = self.n_sources();
        if n_sources == 0 || n_sources > self.n_channels || self.mixing.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mixing must be finite with 1..=n_channels columns"));
        }
        let sv = self.mixing.clone().svd(false, false).singular_values;
        let max = sv.max();
        if sv.min() <= 1e-10 * max {
            return Err(Error::invalid("mixing matrix does not have full column rank"));
        }
        Ok(())
    }
}

/// A Gaussian `n_channels × n_sources` mixing matrix drawn from `seed`.
pub fn random_mixing(n_channels: usize, n_sources: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n_channels, n_sources, |_, _| StandardNormal.sample(&mut rng))
}

struct SourceModel {
    filter: IirFilter,
    burn_in: usize,
    /// 1 / std of unit white noise after filtering.
    gain: f64,
}

impl SourceModel {
    fn new(spec: &SynthSpec) -> Result<Self> {
        let band = spec.source_band;
        let filter = design_butterworth_bandpass(band.low_hz, band.high_hz, spec.fs_hz, SOURCE_FILTER_ORDER)?;
        // Impulse response energy gives the variance of filtered unit white
        // noise; the burn-in is where that response has decayed.
        let probe_len = 1 << 14;
        let mut impulse = vec![0.0; probe_len];
        impulse[0] = 1.0;
        let h = apply_filter(&filter, &impulse)?;
        let energy: f64 = h.iter().map(|v| v * v).sum();
        let mut tail = energy;
        let mut burn_in = probe_len;
        for (i, v) in h.iter().enumerate() {
            tail -= v * v;
            if tail < 1e-8 * energy {
                burn_in = i + 1;
                break;
            }
        }
        Ok(SourceModel {
            filter,
            burn_in,
            gain: 1.0 / energy.sqrt(),
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, n_samples: usize) -> Result<Vec<f64>> {
        let white: Vec<f64> = (0..self.burn_in + n_samples).map(|_| StandardNormal.sample(rng)).collect();
        let y = apply_filter(&self.filter, &white)?;
        Ok(y[self.burn_in..].iter().map(|v| v * self.gain).collect())
    }
}

/// Two-class generator: trials of `classes.0` carry source 0 with
/// `variance_ratio` times the variance it has in trials of `classes.1`.
/// All other sources have unit variance in both classes.
pub fn synth_two_class(spec: &SynthSpec, classes: (ClassLabel, ClassLabel), seed: u64) -> Result<EpochedDataset> {
    if classes.0 == classes.1 {
        return Err(Error::invalid("the two synthetic classes must differ"));
    }
    synth_classes(spec, &[classes.0, classes.1], seed)
}

/// Multi-class generator: the `j`-th class amplifies source `j` by
/// `variance_ratio`, except the last class which amplifies none. Trials
/// are interleaved class by class, `n_trials_per_class` of each.
pub fn synth_classes(spec: &SynthSpec, classes: &[ClassLabel], seed: u64) -> Result<EpochedDataset> {
    spec.validate()?;
    if classes.len() < 2 {
        return Err(Error::invalid("synthetic data needs at least two classes"));
    }
    if classes.len() - 1 > spec.n_sources() {
        return Err(Error::invalid(format!(
            "{} classes need at least {} sources, mixing has {}",
            classes.len(),
            classes.len() - 1,
            spec.n_sources()
        )));
    }
    let mut seen = classes.to_vec();
    seen.sort();
    seen.dedup();
    if seen.len() != classes.len() {
        return Err(Error::invalid("synthetic classes must be distinct"));
    }

    let model = SourceModel::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_ch, n_t, n_src) = (spec.n_channels, spec.n_samples, spec.n_sources());
    let amp = spec.variance_ratio.sqrt();

    let n_trials = spec.n_trials_per_class * classes.len();
    let mut labels = Vec::with_capacity(n_trials);
    let mut data = Vec::with_capacity(n_trials * n_ch * n_t);
    for _ in 0..spec.n_trials_per_class {
        for (j, &class) in classes.iter().enumerate() {
            let mut sources = DMatrix::<f64>::zeros(n_src, n_t);
            for s in 0..n_src {
                let scale = if s == j && j + 1 < classes.len() { amp } else { 1.0 };
                for (t, v) in model.draw(&mut rng, n_t)?.into_iter().enumerate() {
                    sources[(s, t)] = scale * v;
                }
            }
            let mixed = &spec.mixing * sources;
            for c in 0..n_ch {
                for t in 0..n_t {
                    let noise: f64 = if spec.noise_std > 0.0 {
                        spec.noise_std * Distribution::<f64>::sample(&StandardNormal, &mut rng)
                    } else {
                        0.0
                    };
                    data.push((mixed[(c, t)] + noise) as f32);
                }
            }
            labels.push(class);
        }
    }
    EpochedDataset::new(
        spec.fs_hz,
        EpochedDataset::default_channel_names(n_ch),
        labels,
        n_t,
        data,
    )
}
