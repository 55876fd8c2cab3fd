use serde::{Deserialize, Serialize};

use super::{binary_classes, check_dim, Predictor, TrainConfig};
use crate::dataio::ClassLabel;
use crate::error::{Error, Result};
use crate::fmt::g17;
use crate::spatial::FeatureMatrix;

/// Upper bound on SMO sweeps (one sweep = `N` pair updates).
pub const HARD_SWEEP_CAP: usize = 10_000;

/// Multipliers at or below this are not kept as support vectors.
const SV_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SvmKernel {
    Linear,
    Rbf { gamma: f64 },
}

impl SvmKernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            SvmKernel::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            SvmKernel::Rbf { gamma } => (-gamma * sq_dist(x, y)).exp(),
        }
    }

    /// `1 / (d · v̄)` with `v̄` the mean of the per-feature (column)
    /// variances; 1 when every feature is constant.
    pub fn auto_gamma(f: &FeatureMatrix) -> Result<f64> {
        let (n, d) = (f.n_rows(), f.n_cols());
        if n == 0 || d == 0 {
            return Err(Error::invalid("cannot derive gamma from an empty feature matrix"));
        }
        let mean_var = (0..d)
            .map(|j| {
                let col = f.column(j);
                let mean = col.iter().sum::<f64>() / n as f64;
                col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64
            })
            .sum::<f64>()
            / d as f64;
        Ok(if mean_var > 0.0 { 1.0 / (d as f64 * mean_var) } else { 1.0 })
    }
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(−γ·‖x − xi‖²)`.
pub fn rbf_kernel(x: &[f64], xi: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != xi.len() {
        return Err(Error::dims(format!("kernel arguments of length {} and {}", x.len(), xi.len())));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    Ok((-gamma * sq_dist(x, xi)).exp())
}

/// Soft-margin kernel SVM. Class `+1` is the lower class id.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    support_vectors: Vec<Vec<f64>>,
    sv_indices: Vec<usize>,
    alphas_signed: Vec<f64>,
    bias: f64,
    kernel: SvmKernel,
    class_ids: [ClassLabel; 2],
    c: f64,
    converged: bool,
    sweeps: usize,
}

impl SvmModel {
    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    /// Training-row index of each support vector.
    pub fn sv_indices(&self) -> &[usize] {
        &self.sv_indices
    }

    /// `α_i·c_i` per support vector.
    pub fn alphas_signed(&self) -> &[f64] {
        &self.alphas_signed
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> SvmKernel {
        self.kernel
    }

    /// `[class for +1, class for −1]`.
    pub fn class_ids(&self) -> [ClassLabel; 2] {
        self.class_ids
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// False when training stopped on a stall or the sweep cap before the
    /// optimality gap fell below `svm_tol`.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// `Σ α_i c_i k(x, x_i) + b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n_features(), x)?;
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.alphas_signed)
            .map(|(sv, a)| a * self.kernel.eval(x, sv))
            .sum();
        Ok(s + self.bias)
    }

    /// Largest KKT violation over a training set, measured on `c_i·f(x_i)`
    /// against the margin conditions for `α = 0`, `0 < α < C` and `α = C`.
    pub fn kkt_violation(&self, f: &FeatureMatrix, y: &[ClassLabel]) -> Result<f64> {
        let mut alpha = vec![0.0; f.n_rows()];
        for (&i, a) in self.sv_indices.iter().zip(&self.alphas_signed) {
            alpha[i] = a.abs();
        }
        let mut worst = 0.0f64;
        for (i, (row, &l)) in f.rows().zip(y).enumerate() {
            let ci = if l == self.class_ids[0] { 1.0 } else { -1.0 };
            let margin = ci * self.decision_value(row)?;
            let v = if alpha[i] <= SV_THRESHOLD {
                (1.0 - margin).max(0.0)
            } else if alpha[i] >= self.c - SV_THRESHOLD {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(v);
        }
        Ok(worst)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "kernel: {:?}\nbias: {}\nclasses: +1={} -1={}\n",
            self.kernel,
            g17(self.bias),
            self.class_ids[0],
            self.class_ids[1]
        );
        for (sv, a) in self.support_vectors.iter().zip(&self.alphas_signed) {
            let v: Vec<String> = sv.iter().map(|&x| g17(x)).collect();
            out.push_str(&format!("{} | {}\n", g17(*a), v.join(" ")));
        }
        out
    }
}

struct Smo<'a> {
    k: Vec<f64>,
    n: usize,
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
}

impl Smo<'_> {
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    fn in_up(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] < self.c) || (self.y[i] < 0.0 && self.alpha[i] > 0.0)
    }

    fn in_low(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] > 0.0) || (self.y[i] < 0.0 && self.alpha[i] < self.c)
    }

    /// Maximal violating pair `(i, j, m, M)` with `m = max_up −y·G` and
    /// `M = min_low −y·G`.
    fn select(&self) -> Option<(usize, usize, f64, f64)> {
        let mut best_up: Option<(usize, f64)> = None;
        let mut best_low: Option<(usize, f64)> = None;
        for t in 0..self.n {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && best_up.is_none_or(|(_, b)| v > b) {
                best_up = Some((t, v));
            }
            if self.in_low(t) && best_low.is_none_or(|(_, b)| v < b) {
                best_low = Some((t, v));
            }
        }
        let ((i, m), (j, big_m)) = (best_up?, best_low?);
        Some((i, j, m, big_m))
    }

    /// Moves along `α_i += y_i·t`, `α_j −= y_j·t`; returns the larger |Δα|.
    fn step(&mut self, i: usize, j: usize, gap: f64) -> f64 {
        let curvature = (self.kij(i, i) + self.kij(j, j) - 2.0 * self.kij(i, j)).max(1e-12);
        let mut t = gap / curvature;
        t = t.min(if self.y[i] > 0.0 { self.c - self.alpha[i] } else { self.alpha[i] });
        t = t.min(if self.y[j] > 0.0 { self.alpha[j] } else { self.c - self.alpha[j] });
        t = t.max(0.0);
        let old = (self.alpha[i], self.alpha[j]);
        self.alpha[i] = (self.alpha[i] + self.y[i] * t).clamp(0.0, self.c);
        self.alpha[j] = (self.alpha[j] - self.y[j] * t).clamp(0.0, self.c);
        for k in 0..self.n {
            self.grad[k] += self.y[k] * t * (self.kij(k, i) - self.kij(k, j));
        }
        (self.alpha[i] - old.0).abs().max((self.alpha[j] - old.1).abs())
    }

    fn bias(&self, m: f64, big_m: f64) -> f64 {
        let free: Vec<f64> = (0..self.n)
            .filter(|&t| self.alpha[t] > 0.0 && self.alpha[t] < self.c)
            .map(|t| -self.y[t] * self.grad[t])
            .collect();
        if free.is_empty() {
            (m + big_m) / 2.0
        } else {
            free.iter().sum::<f64>() / free.len() as f64
        }
    }
}

/// Trains the soft-margin dual by sequential minimal optimisation with
/// maximal-violating-pair selection.
///
/// Stops when the optimality gap `m − M` drops to `svm_tol`, after
/// `svm_max_passes` consecutive sweeps in which no multiplier moved by
/// more than `svm_tol`, or at [`HARD_SWEEP_CAP`] sweeps. Only the first
/// case sets [`SvmModel::converged`].
pub fn fit_svm(f: &FeatureMatrix, y: &[ClassLabel], cfg: &TrainConfig, kernel: SvmKernel) -> Result<SvmModel> {
    let class_ids = binary_classes(f, y)?;
    if !(cfg.svm_c.is_finite() && cfg.svm_c > 0.0) {
        return Err(Error::invalid(format!("svm_c must be positive, got {}", cfg.svm_c)));
    }
    if let SvmKernel::Rbf { gamma } = kernel {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
    }
    let n = f.n_rows();
    let signs: Vec<f64> = y.iter().map(|&l| if l == class_ids[0] { 1.0 } else { -1.0 }).collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(f.row(i), f.row(j));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let mut smo = Smo { k, n, y: &signs, c: cfg.svm_c, alpha: vec![0.0; n], grad: vec![-1.0; n] };

    let tol = cfg.svm_tol;
    let mut converged = false;
    let mut quiet_sweeps = 0;
    let mut sweeps = 0;
    let (mut m, mut big_m) = (0.0, 0.0);
    'outer: while sweeps < HARD_SWEEP_CAP {
        sweeps += 1;
        let mut largest = 0.0f64;
        for _ in 0..n {
            let Some((i, j, up, low)) = smo.select() else {
                converged = true;
                break 'outer;
            };
            (m, big_m) = (up, low);
            if m - big_m <= tol {
                converged = true;
                break 'outer;
            }
            largest = largest.max(smo.step(i, j, m - big_m));
        }
        if largest > tol {
            quiet_sweeps = 0;
        } else {
            quiet_sweeps += 1;
            if quiet_sweeps >= cfg.svm_max_passes {
                break;
            }
        }
    }
    let bias = smo.bias(m, big_m);

    let mut support_vectors = Vec::new();
    let mut sv_indices = Vec::new();
    let mut alphas_signed = Vec::new();
    for (t, (&a, &s)) in smo.alpha.iter().zip(&signs).enumerate() {
        if a > SV_THRESHOLD {
            support_vectors.push(f.row(t).to_vec());
            sv_indices.push(t);
            alphas_signed.push(a * s);
        }
    }
    if support_vectors.is_empty() {
        return Err(Error::numerical("SMO finished without support vectors"));
    }
    Ok(SvmModel {
        support_vectors,
        sv_indices,
        alphas_signed,
        bias,
        kernel,
        class_ids,
        c: cfg.svm_c,
        converged,
        sweeps,
    })
}

impl Predictor for SvmModel {
    fn n_features(&self) -> usize {
        self.support_vectors[0].len()
    }

    /// `sign(f(x))`, with `f(x) = 0` assigned to the `+1` class.
    fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        let v = self.decision_value(x)?;
        Ok(if v >= 0.0 { self.class_ids[0] } else { self.class_ids[1] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Nav, Word};

    fn cfg(c: f64) -> TrainConfig {
        TrainConfig { svm_c: c, ..TrainConfig::default() }
    }

    fn separable() -> (FeatureMatrix, Vec<ClassLabel>) {
        let f = FeatureMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![2.0, 0.0], vec![2.0, 1.0]]).unwrap();
        (f, vec![Word, Word, Nav, Nav])
    }

    fn xor() -> (FeatureMatrix, Vec<ClassLabel>) {
        let f = FeatureMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        (f, vec![Word, Word, Nav, Nav])
    }

    #[test]
    fn separable_linear() {
        let (f, y) = separable();
        let m = fit_svm(&f, &y, &cfg(10.0), SvmKernel::Linear).unwrap();
        assert!(m.converged());
        assert_eq!(m.predict_all(&f).unwrap(), y);
        assert!(m.kkt_violation(&f, &y).unwrap() <= 1e-3);
        // hard-margin solution: w = (−1, 0), b = 1
        let w0: f64 = m.support_vectors().iter().zip(m.alphas_signed()).map(|(sv, a)| a * sv[0]).sum();
        assert!((w0 + 1.0).abs() < 1e-2);
        assert!((m.bias() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn xor_rbf() {
        let (f, y) = xor();
        let m = fit_svm(&f, &y, &cfg(10.0), SvmKernel::Rbf { gamma: 1.0 }).unwrap();
        assert_eq!(m.predict_all(&f).unwrap(), y);
        assert!(m.kkt_violation(&f, &y).unwrap() <= 1e-3);
        assert!(fit_svm(&f, &y, &cfg(10.0), SvmKernel::Linear).unwrap().predict_all(&f).unwrap() != y);
    }

    #[test]
    fn dual_feasibility() {
        let (f, y) = xor();
        let c = 0.5;
        let m = fit_svm(&f, &y, &cfg(c), SvmKernel::Rbf { gamma: 0.3 }).unwrap();
        let sum: f64 = m.alphas_signed().iter().sum();
        assert!(sum.abs() <= 10.0 * 1e-3);
        for a in m.alphas_signed() {
            assert!(a.abs() > 0.0 && a.abs() <= c + 1e-12);
        }
    }

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.7).unwrap(), 1.0);
        assert!((rbf_kernel(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((rbf_kernel(&[0.0], &[1.0], 1.0).unwrap() - 0.3679).abs() < 1e-4);
        assert!(rbf_kernel(&[0.0], &[1.0, 0.0], 1.0).is_err());
        assert!(rbf_kernel(&[0.0], &[1.0], 0.0).is_err());
        let (a, b) = ([0.3, -1.2, 2.0], [1.1, 0.4, -0.5]);
        assert_eq!(rbf_kernel(&a, &b, 0.2).unwrap(), rbf_kernel(&b, &a, 0.2).unwrap());
    }

    #[test]
    fn zero_decision_maps_to_positive_class() {
        let (f, y) = separable();
        let m = fit_svm(&f, &y, &cfg(10.0), SvmKernel::Linear).unwrap();
        let mut probe = m.clone();
        probe.bias = 0.0;
        probe.alphas_signed.iter_mut().for_each(|a| *a = 0.0);
        assert_eq!(probe.predict(&[5.0, 5.0]).unwrap(), m.class_ids()[0]);
    }

    #[test]
    fn deterministic() {
        let (f, y) = xor();
        let a = fit_svm(&f, &y, &cfg(1.0), SvmKernel::Rbf { gamma: 2.0 }).unwrap();
        let b = fit_svm(&f, &y, &cfg(1.0), SvmKernel::Rbf { gamma: 2.0 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn auto_gamma() {
        let f = FeatureMatrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        // column variances 1 and 1, d = 2
        assert_eq!(SvmKernel::auto_gamma(&f).unwrap(), 0.5);
        // column variances 1 and 0: the offset between columns does not count
        let g = FeatureMatrix::from_rows(&[vec![0.0, 10.0], vec![2.0, 10.0]]).unwrap();
        assert_eq!(SvmKernel::auto_gamma(&g).unwrap(), 1.0);
        let flat = FeatureMatrix::from_rows(&[vec![3.0], vec![3.0]]).unwrap();
        assert_eq!(SvmKernel::auto_gamma(&flat).unwrap(), 1.0);
    }
}
