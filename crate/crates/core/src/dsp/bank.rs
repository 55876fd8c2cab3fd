use super::{design_butterworth_bandpass, BandSpec, IirFilter};
use crate::error::{Error, Result};

/// Contiguous sub-bands, each with its own band-pass filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    bands: Vec<BandSpec>,
    filters: Vec<IirFilter>,
}

impl FilterBank {
    pub fn bands(&self) -> &[BandSpec] {
        &self.bands
    }

    pub fn filters(&self) -> &[IirFilter] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }
}

/// Splits `[low_hz, high_hz]` into bands of `width_hz`:
/// `[low, low+w], [low+w, low+2w], …`.
pub fn make_filter_bank(low_hz: f64, high_hz: f64, width_hz: f64, fs_hz: f64, order: usize) -> Result<FilterBank> {
    if !(width_hz.is_finite() && width_hz > 0.0) {
        return Err(Error::invalid(format!("band width must be positive, got {width_hz}")));
    }
    BandSpec::new(low_hz, high_hz).validate(fs_hz)?;
    let ratio = (high_hz - low_hz) / width_hz;
    let count = ratio.round();
    if count < 1.0 || (ratio - count).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "range {low_hz}-{high_hz} Hz is not a whole number of {width_hz} Hz bands"
        )));
    }
    let count = count as usize;
    let bands: Vec<BandSpec> = (0..count)
        .map(|i| {
            let lo = low_hz + i as f64 * width_hz;
            let hi = if i + 1 == count { high_hz } else { low_hz + (i + 1) as f64 * width_hz };
            BandSpec::new(lo, hi)
        })
        .collect();
    let filters = bands
        .iter()
        .map(|b| design_butterworth_bandpass(b.low_hz, b.high_hz, fs_hz, order))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterBank { bands, filters })
}
