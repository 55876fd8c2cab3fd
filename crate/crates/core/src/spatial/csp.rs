use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CovMatrix;
use crate::error::{Error, Result};
use crate::fmt::g17;
use crate::linalg::{ridge_load, whitened_pencil, whitening};

/// Relative ridge added to each covariance before factorisation.
pub const RIDGE_EPS: f64 = 1e-10;

/// Tikhonov weight α of the penalty `α·wᵀw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrcspParams {
    pub alpha: f64,
}

/// `n_channels × 2m` projection: `m` filters maximising the class-1 /
/// class-2 variance ratio followed by `m` filters minimising it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFilters {
    w: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    m: usize,
}

impl SpatialFilters {
    /// Builds filters from explicit columns; `w` must have `2m` columns.
    pub fn new(w: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        if w.ncols() == 0 || !w.ncols().is_multiple_of(2) || eigenvalues.len() != w.ncols() {
            return Err(Error::dims(format!(
                "need an even number of filter columns with one eigenvalue each, got {} and {}",
                w.ncols(),
                eigenvalues.len()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("spatial filters must be finite"));
        }
        let m = w.ncols() / 2;
        Ok(SpatialFilters { w, eigenvalues, m })
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_channels(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_filters(&self) -> usize {
        self.w.ncols()
    }

    /// Text dump: W row-major, then the eigenvalues.
    pub fn to_text(&self) -> String {
        let mut out = format!("W {}x{}\n", self.w.nrows(), self.w.ncols());
        for r in 0..self.w.nrows() {
            let row: Vec<String> = (0..self.w.ncols()).map(|c| g17(self.w[(r, c)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        let ev: Vec<String> = self.eigenvalues.iter().map(|&v| g17(v)).collect();
        out.push_str(&format!("eigenvalues: {}\n", ev.join(" ")));
        out
    }
}

/// Flips `w` so that its largest-magnitude entry is positive.
fn apply_sign_convention(mut w: DVector<f64>) -> DVector<f64> {
    let (mut best, mut idx) = (0.0, 0);
    for (i, v) in w.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            idx = i;
        }
    }
    if w[idx] < 0.0 {
        w.neg_mut();
    }
    w
}

fn check_operands(c1: &CovMatrix, c2: &CovMatrix, m: usize) -> Result<usize> {
    let n = c1.dim();
    if c2.dim() != n {
        return Err(Error::dims(format!("class covariances are {n}x{n} and {0}x{0}", c2.dim())));
    }
    if m == 0 || 2 * m > n {
        return Err(Error::invalid(format!("cannot extract 2m = {} filters from {n} channels", 2 * m)));
    }
    Ok(n)
}

fn rayleigh(w: &DVector<f64>, num: &DMatrix<f64>, den: &DMatrix<f64>) -> Result<f64> {
    let a = (w.transpose() * num * w)[(0, 0)];
    let b = (w.transpose() * den * w)[(0, 0)];
    if !(b > 0.0) || !a.is_finite() {
        return Err(Error::numerical("degenerate Rayleigh quotient"));
    }
    Ok(a / b)
}

fn assemble(columns: Vec<DVector<f64>>, eigenvalues: Vec<f64>) -> Result<SpatialFilters> {
    let w = DMatrix::from_columns(&columns);
    SpatialFilters::new(w, eigenvalues)
}

/// Solves `C1·w = λ·C2·w` and keeps the `m` largest-λ and `m` smallest-λ
/// eigenvectors (the latter in ascending λ order).
///
/// The pencil is reduced to a symmetric eigenproblem by whitening with
/// the composite `C1 + C2`; the pencils `(C1, C2)` and `(C1, C1 + C2)`
/// share eigenvectors, with `λ = μ / (1 − μ)`. Attached eigenvalues are
/// the Rayleigh quotients `wᵀC1w / wᵀC2w` of the ridge-loaded operands.
pub fn solve_csp(c1: &CovMatrix, c2: &CovMatrix, m: usize) -> Result<SpatialFilters> {
    let n = check_operands(c1, c2, m)?;
    let a = ridge_load(c1.matrix(), RIDGE_EPS);
    let b = ridge_load(c2.matrix(), RIDGE_EPS);
    let t = whitening(&(&a + &b))?;
    let (_, vecs) = whitened_pencil(&a, &t);

    let picks: Vec<usize> = (0..m).chain((n - m..n).rev()).collect();
    let mut columns = Vec::with_capacity(2 * m);
    let mut eigenvalues = Vec::with_capacity(2 * m);
    for k in picks {
        let w = apply_sign_convention(vecs.column(k).into_owned());
        eigenvalues.push(rayleigh(&w, &a, &b)?);
        columns.push(w);
    }
    assemble(columns, eigenvalues)
}

/// Tikhonov-regularised CSP with `K = I`: the `m` leading eigenvectors of
/// the pencil `(C1, C2 + αI)` followed by the `m` leading eigenvectors of
/// `(C2, C1 + αI)`. Both pencils are whitened by `C1 + C2 + αI`.
pub fn solve_trcsp(c1: &CovMatrix, c2: &CovMatrix, params: TrcspParams, m: usize) -> Result<SpatialFilters> {
    let n = check_operands(c1, c2, m)?;
    let alpha = params.alpha;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::invalid(format!("Tikhonov weight must be nonnegative, got {alpha}")));
    }
    let a = ridge_load(c1.matrix(), RIDGE_EPS);
    let b = ridge_load(c2.matrix(), RIDGE_EPS);
    let penalty = DMatrix::<f64>::identity(n, n) * alpha;
    let t = whitening(&(&a + &b + &penalty))?;
    let den1 = &b + &penalty;
    let den2 = &a + &penalty;

    let mut columns = Vec::with_capacity(2 * m);
    let mut eigenvalues = Vec::with_capacity(2 * m);
    for (num, den) in [(&a, &den1), (&b, &den2)] {
        let (_, vecs) = whitened_pencil(num, &t);
        for k in 0..m {
            let w = apply_sign_convention(vecs.column(k).into_owned());
            eigenvalues.push(rayleigh(&w, num, den)?);
            columns.push(w);
        }
    }
    assemble(columns, eigenvalues)
}
