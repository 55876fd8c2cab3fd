//! Butterworth band-pass design, IIR filtering and the FBCSP filter bank.

mod bank;
mod butterworth;
mod filtering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bank::{make_filter_bank, FilterBank};
pub use butterworth::{design_butterworth_bandpass, frequency_response, IirFilter, MAX_ORDER};
pub use filtering::{apply_filter, apply_filtfilt, filter_dataset};

/// Analog prototype order used when none is given.
pub const DEFAULT_ORDER: usize = 5;

/// A pass band in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandSpec {
    pub fn new(low_hz: f64, high_hz: f64) -> Self {
        BandSpec { low_hz, high_hz }
    }

    /// Checks `0 < low < high < fs/2`.
    pub fn validate(&self, fs_hz: f64) -> Result<()> {
        let BandSpec { low_hz, high_hz } = *self;
        if !(low_hz.is_finite() && high_hz.is_finite() && fs_hz.is_finite()) {
            return Err(Error::invalid("band edges and sampling rate must be finite"));
        }
        if !(0.0 < low_hz && low_hz < high_hz && high_hz < fs_hz / 2.0) {
            return Err(Error::invalid(format!(
                "band ({low_hz}, {high_hz}) Hz must satisfy 0 < low < high < {} Hz",
                fs_hz / 2.0
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for BandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{} Hz", self.low_hz, self.high_hz)
    }
}
