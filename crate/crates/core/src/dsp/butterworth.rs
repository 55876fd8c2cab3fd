use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::BandSpec;
use crate::error::{Error, Result};
use crate::fmt::g17;

pub const MAX_ORDER: usize = 10;

/// Rational transfer function `B(z)/A(z)` in powers of `z⁻¹`, with `a[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    b: Vec<f64>,
    a: Vec<f64>,
    order: usize,
    fs_hz: f64,
}

impl IirFilter {
    /// Builds a filter from raw coefficients. `a` is normalised so that
    /// `a[0] = 1`; the result must be stable.
    pub fn from_coefficients(b: Vec<f64>, a: Vec<f64>, fs_hz: f64) -> Result<Self> {
        if b.is_empty() || a.is_empty() {
            return Err(Error::invalid("filter coefficients must be non-empty"));
        }
        if !(fs_hz.is_finite() && fs_hz > 0.0) {
            return Err(Error::invalid(format!("sampling rate must be positive, got {fs_hz}")));
        }
        if b.iter().chain(&a).any(|c| !c.is_finite()) {
            return Err(Error::invalid("filter coefficients must be finite"));
        }
        let a0 = a[0];
        if a0 == 0.0 {
            return Err(Error::invalid("leading denominator coefficient is zero"));
        }
        let b: Vec<f64> = b.iter().map(|c| c / a0).collect();
        let a: Vec<f64> = a.iter().map(|c| c / a0).collect();
        let order = (b.len().max(a.len()) - 1) / 2;
        let filter = IirFilter { b, a, order, fs_hz };
        if let Some(p) = filter.poles().iter().find(|p| p.norm() >= 1.0) {
            return Err(Error::numerical(format!("unstable filter: pole {p} on or outside the unit circle")));
        }
        Ok(filter)
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Analog prototype order (the digital band-pass has order `2·order`).
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    /// Number of taps of the longer coefficient vector.
    pub fn len(&self) -> usize {
        self.b.len().max(self.a.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Roots of the denominator, from the eigenvalues of its companion matrix.
    pub fn poles(&self) -> Vec<Complex64> {
        let mut a = self.a.clone();
        while a.len() > 1 && *a.last().unwrap() == 0.0 {
            a.pop();
        }
        let n = a.len() - 1;
        if n == 0 {
            return Vec::new();
        }
        let companion = DMatrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -a[j + 1]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        companion.complex_eigenvalues().iter().copied().collect()
    }

    /// Debug export: `b: c0 c1 …` and `a: c0 c1 …` with 17 significant digits.
    pub fn to_text(&self) -> String {
        let line = |name: &str, c: &[f64]| {
            let body: Vec<String> = c.iter().map(|&v| g17(v)).collect();
            format!("{name}: {}\n", body.join(" "))
        };
        line("b", &self.b) + &line("a", &self.a)
    }
}

/// Evaluates `B(e^{jω})/A(e^{jω})` at `ω = 2π·freq/fs`, returning
/// magnitude and phase in radians.
pub fn frequency_response(f: &IirFilter, freq_hz: f64) -> Result<(f64, f64)> {
    let nyquist = f.fs_hz / 2.0;
    if !(0.0..=nyquist).contains(&freq_hz) {
        return Err(Error::invalid(format!("frequency {freq_hz} Hz outside [0, {nyquist}] Hz")));
    }
    let h = response_at(&f.b, &f.a, 2.0 * PI * freq_hz / f.fs_hz);
    Ok((h.norm(), h.arg()))
}

fn response_at(b: &[f64], a: &[f64], omega: f64) -> Complex64 {
    // z⁻¹ = e^{-jω}; Horner in z⁻¹
    let zinv = Complex64::from_polar(1.0, -omega);
    let eval = |c: &[f64]| {
        c.iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * zinv + ck)
    };
    eval(b) / eval(a)
}

/// Expands `Π (1 − r·z⁻¹)` into real coefficients of `z⁻¹`.
fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = c.clone();
        next.push(Complex64::new(0.0, 0.0));
        for k in 1..next.len() {
            next[k] -= r * c[k - 1];
        }
        c = next;
    }
    c.into_iter().map(|v| v.re).collect()
}

/// Digital Butterworth band-pass: analog prototype of the given order,
/// low-pass → band-pass transform, then the bilinear transform with both
/// edges pre-warped so the −3 dB points land on `low_hz` and `high_hz`.
pub fn design_butterworth_bandpass(low_hz: f64, high_hz: f64, fs_hz: f64, order: usize) -> Result<IirFilter> {
    BandSpec::new(low_hz, high_hz).validate(fs_hz)?;
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::invalid(format!("filter order {order} not in 1..={MAX_ORDER}")));
    }
    let fs2 = 2.0 * fs_hz;
    let warp = |f: f64| fs2 * (PI * f / fs_hz).tan();
    let (wl, wh) = (warp(low_hz), warp(high_hz));
    let bw = wh - wl;
    let w0_sq = wl * wh;

    // Left-half-plane poles of the normalised prototype.
    let prototype: Vec<Complex64> = (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect();

    // s → (s² + w0²)/(bw·s): each pole p splits into the roots of
    // s² − p·bw·s + w0² = 0; `order` zeros appear at s = 0.
    let mut analog_poles = Vec::with_capacity(2 * order);
    for p in &prototype {
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0_sq).sqrt();
        analog_poles.push((pb + disc) / 2.0);
        analog_poles.push((pb - disc) / 2.0);
    }
    let analog_gain = bw.powi(order as i32);

    let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);
    let poles: Vec<Complex64> = analog_poles.iter().map(|&s| bilinear(s)).collect();
    // zeros at s = 0 map to z = 1, zeros at infinity to z = −1
    let mut zeros = vec![Complex64::new(1.0, 0.0); order];
    zeros.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), order));

    let num: Complex64 = std::iter::repeat_n(Complex64::new(fs2, 0.0), order).product();
    let den: Complex64 = analog_poles.iter().map(|&s| fs2 - s).product();
    let gain = analog_gain * (num / den).re;

    if let Some(p) = poles.iter().find(|p| p.norm() >= 1.0) {
        return Err(Error::numerical(format!("designed pole {p} is not inside the unit circle")));
    }
    let b: Vec<f64> = poly_from_roots(&zeros).into_iter().map(|c| c * gain).collect();
    let a = poly_from_roots(&poles);
    Ok(IirFilter { b, a, order, fs_hz })
}
