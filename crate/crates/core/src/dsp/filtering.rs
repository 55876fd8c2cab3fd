use nalgebra::{DMatrix, DVector};

use super::IirFilter;
use crate::dataio::EpochedDataset;
use crate::error::{Error, Result};

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::invalid(format!("non-finite input sample at index {i}"))),
        None => Ok(()),
    }
}

fn padded(f: &IirFilter) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let mut b = f.b().to_vec();
    let mut a = f.a().to_vec();
    b.resize(n, 0.0);
    a.resize(n, 0.0);
    (b, a)
}

/// Transposed direct-form II run of `y[n] = Σ b[k]x[n−k] − Σ a[k]y[n−k]`
/// starting from `state`.
fn run(b: &[f64], a: &[f64], x: &[f64], state: &mut [f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = Vec::with_capacity(x.len());
    for &xn in x {
        let yn = b[0] * xn + state.first().copied().unwrap_or(0.0);
        for k in 1..n {
            let next = if k < n - 1 { state[k] } else { 0.0 };
            state[k - 1] = b[k] * xn - a[k] * yn + next;
        }
        y.push(yn);
    }
    y
}

/// Causal filtering from zero initial conditions.
pub fn apply_filter(f: &IirFilter, x: &[f64]) -> Result<Vec<f64>> {
    check_finite(x)?;
    let (b, a) = padded(f);
    let mut state = vec![0.0; b.len() - 1];
    Ok(run(&b, &a, x, &mut state))
}

/// Steady-state initial conditions for a unit step input.
fn step_state(b: &[f64], a: &[f64]) -> Vec<f64> {
    let m = b.len() - 1;
    if m == 0 {
        return Vec::new();
    }
    // (I − Cᵀ) zi = b[1:] − a[1:]·b[0], C the companion matrix of a
    let lhs = DMatrix::from_fn(m, m, |i, j| {
        let ct = if j == 0 {
            -a[i + 1]
        } else if i + 1 == j {
            1.0
        } else {
            0.0
        };
        if i == j { 1.0 - ct } else { -ct }
    });
    let rhs = DVector::from_fn(m, |i, _| b[i + 1] - a[i + 1] * b[0]);
    match lhs.lu().solve(&rhs) {
        Some(zi) => zi.iter().copied().collect(),
        None => vec![0.0; m],
    }
}

/// Zero-phase forward-backward filtering.
///
/// The input is extended at both ends by odd reflection of
/// `3 × filter length` samples, filtered forwards and backwards with
/// step-response initial conditions, and trimmed back to its length.
pub fn apply_filtfilt(f: &IirFilter, x: &[f64]) -> Result<Vec<f64>> {
    check_finite(x)?;
    let pad = 3 * f.len();
    if x.len() <= pad {
        return Err(Error::invalid(format!(
            "zero-phase filtering needs more than {pad} samples, got {}",
            x.len()
        )));
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let (b, a) = padded(f);
    let zi = step_state(&b, &a);

    let mut state: Vec<f64> = zi.iter().map(|z| z * ext[0]).collect();
    let mut y = run(&b, &a, &ext, &mut state);
    y.reverse();
    let mut state: Vec<f64> = zi.iter().map(|z| z * y[0]).collect();
    let mut y = run(&b, &a, &y, &mut state);
    y.reverse();
    Ok(y[pad..pad + n].to_vec())
}

/// Filters every (trial, channel) sequence independently with fresh state.
pub fn filter_dataset(ds: &EpochedDataset, f: &IirFilter, zero_phase: bool) -> Result<EpochedDataset> {
    if (ds.fs_hz() - f.fs_hz()).abs() > 1e-9 * ds.fs_hz() {
        return Err(Error::invalid(format!(
            "filter designed for {} Hz applied to {} Hz data",
            f.fs_hz(),
            ds.fs_hz()
        )));
    }
    ds.map_channels(|seq| {
        let x: Vec<f64> = seq.iter().map(|&v| v as f64).collect();
        let y = if zero_phase { apply_filtfilt(f, &x)? } else { apply_filter(f, &x)? };
        Ok(y.into_iter().map(|v| v as f32).collect())
    })
}
