use bci_core::dataio::{random_mixing, synth_two_class, ClassLabel, EpochedDataset, SynthSpec};
use bci_core::dsp::BandSpec;
use bci_core::spatial::{
    build_feature_set, class_mean_covariance, log_variance_features, solve_csp, solve_trcsp, spatial_filter_trial,
    CovMatrix, SpatialFilters, TrcspParams,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> CovMatrix {
    let a = DMatrix::<f64>::from_fn(n, 2 * n, |_, _| rng.sample(StandardNormal));
    CovMatrix::new(&a * a.transpose() / (2 * n) as f64 + DMatrix::identity(n, n) * 0.01).unwrap()
}

fn quad(w: &DMatrix<f64>, c: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (w.column(i).transpose() * c * w.column(j))[(0, 0)]
}

#[test]
fn simultaneous_diagonalisation_and_rayleigh_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for n in [4, 9, 16, 30] {
        let (c1, c2) = (random_pd(n, &mut rng), random_pd(n, &mut rng));
        let f = solve_csp(&c1, &c2, n / 2).unwrap();
        let w = f.w();
        for i in 0..w.ncols() {
            let (a, b) = (quad(w, c1.matrix(), i, i), quad(w, c2.matrix(), i, i));
            assert!((a / b - f.eigenvalues()[i]).abs() <= 1e-8 * f.eigenvalues()[i].abs().max(1.0));
            for j in 0..w.ncols() {
                if i != j {
                    for c in [c1.matrix(), c2.matrix()] {
                        let scale = (quad(w, c, i, i) * quad(w, c, j, j)).sqrt();
                        assert!(quad(w, c, i, j).abs() <= 1e-8 * scale, "n={n} ({i},{j})");
                    }
                }
            }
        }
        let ev = f.eigenvalues();
        let m = n / 2;
        assert!(ev[..m].windows(2).all(|p| p[0] >= p[1]));
        assert!(ev[m..].windows(2).all(|p| p[0] <= p[1]));
    }
}

#[test]
fn pencil_scale_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let (c1, c2) = (random_pd(6, &mut rng), random_pd(6, &mut rng));
    let a = solve_csp(&c1, &c2, 2).unwrap();
    let b = solve_csp(&c1.scaled(7.5), &c2.scaled(7.5), 2).unwrap();
    for k in 0..4 {
        assert!((a.eigenvalues()[k] - b.eigenvalues()[k]).abs() < 1e-9 * a.eigenvalues()[k]);
        let (u, v) = (a.w().column(k).normalize(), b.w().column(k).normalize());
        assert!((u - v).amax() < 1e-8);
    }
}

#[test]
fn trcsp_without_penalty_is_csp() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..20 {
        let (c1, c2) = (random_pd(8, &mut rng), random_pd(8, &mut rng));
        let csp = solve_csp(&c1, &c2, 2).unwrap();
        let tr = solve_trcsp(&c1, &c2, TrcspParams { alpha: 0.0 }, 2).unwrap();
        // class-1 filters coincide; class-2 filters of (C2, C1) are CSP's
        // smallest-λ filters in the same ascending order
        for k in 0..4 {
            let (u, v) = (csp.w().column(k).normalize(), tr.w().column(k).normalize());
            assert!((u - v).amax() < 1e-8, "column {k}");
        }
    }
}

#[test]
fn trcsp_leading_eigenvalue_is_monotone_in_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..20 {
        let (c1, c2) = (random_pd(7, &mut rng), random_pd(7, &mut rng));
        let mut last = f64::INFINITY;
        for alpha in [0.0, 1e-3, 1e-2, 1e-1, 1.0] {
            let lmax = solve_trcsp(&c1, &c2, TrcspParams { alpha }, 1).unwrap().eigenvalues()[0];
            assert!(lmax <= last * (1.0 + 1e-12), "alpha {alpha}");
            last = lmax;
        }
    }
}

#[test]
fn spatial_filtering_matches_a_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let w = DMatrix::<f64>::from_fn(5, 4, |_, _| rng.sample(StandardNormal));
    let x = DMatrix::<f64>::from_fn(5, 33, |_, _| rng.sample(StandardNormal));
    let f = SpatialFilters::new(w.clone(), vec![1.0; 4]).unwrap();
    let z = spatial_filter_trial(&f, &x).unwrap();
    for i in 0..4 {
        for t in 0..33 {
            let mut s = 0.0;
            for c in 0..5 {
                s += w[(c, i)] * x[(c, t)];
            }
            assert!((z[(i, t)] - s).abs() < 1e-12);
        }
    }
}

#[test]
fn log_variance_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for _ in 0..100 {
        let rows = rng.random_range(2..9);
        let z = DMatrix::<f64>::from_fn(rows, 200, |r, _| (r + 1) as f64 * rng.sample::<f64, _>(StandardNormal));
        let f = log_variance_features(&z).unwrap();
        let total: f64 = f.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-10);
        let g = log_variance_features(&(&z * 3.7)).unwrap();
        for (a, b) in f.iter().zip(&g) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

fn small_dataset(seed: u64, n_channels: usize) -> EpochedDataset {
    let spec = SynthSpec {
        n_trials_per_class: 10,
        n_channels,
        n_samples: 256,
        fs_hz: 128.0,
        mixing: random_mixing(n_channels, n_channels, seed),
        source_band: BandSpec::new(8.0, 12.0),
        variance_ratio: 4.0,
        noise_std: 0.1,
    };
    synth_two_class(&spec, (ClassLabel::Sub, ClassLabel::Nav), seed).unwrap()
}

#[test]
fn feature_set_is_scale_invariant_and_row_aligned() {
    let ds = small_dataset(3, 4);
    let c1 = class_mean_covariance(&ds, ClassLabel::Sub, true).unwrap();
    let c2 = class_mean_covariance(&ds, ClassLabel::Nav, true).unwrap();
    let w = solve_csp(&c1, &c2, 1).unwrap();
    let f = build_feature_set(&ds, &w).unwrap();
    assert_eq!((f.n_rows(), f.n_cols()), (20, 2));
    let scaled = ds.map_channels(|x| Ok(x.iter().map(|v| v * 4.0).collect())).unwrap();
    let g = build_feature_set(&scaled, &w).unwrap();
    for (a, b) in f.values().iter().zip(g.values()) {
        assert!((a - b).abs() < 1e-6);
    }
    let dup = ds.subset(&[2, 2]).unwrap();
    let d = build_feature_set(&dup, &w).unwrap();
    assert_eq!(d.row(0), d.row(1));
    assert_eq!(d.row(0), f.row(2));
}

#[test]
fn class_mean_covariance_approaches_the_generator_covariance() {
    // noise-free, so the class covariance is A·diag(source variances)·Aᵀ
    let n_ch = 6;
    let mixing = random_mixing(n_ch, 3, 9);
    let spec = SynthSpec {
        n_trials_per_class: 40,
        n_channels: n_ch,
        n_samples: 1024,
        fs_hz: 256.0,
        mixing: mixing.clone(),
        source_band: BandSpec::new(8.0, 12.0),
        variance_ratio: 10.0,
        noise_std: 0.0,
    };
    let ds = synth_two_class(&spec, (ClassLabel::Word, ClassLabel::Hand), 17).unwrap();
    for (label, boost) in [(ClassLabel::Word, 10.0), (ClassLabel::Hand, 1.0)] {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[boost, 1.0, 1.0]));
        let expected = &mixing * d * mixing.transpose();
        let expected = &expected / expected.trace();
        let got = class_mean_covariance(&ds, label, true).unwrap();
        let rel = (got.matrix() - &expected).norm() / expected.norm();
        assert!(rel < 0.1, "{label}: {rel}");
    }
}

#[test]
fn equal_class_variance_gives_equal_covariances() {
    let spec = SynthSpec {
        n_trials_per_class: 100,
        n_channels: 4,
        n_samples: 512,
        fs_hz: 256.0,
        mixing: random_mixing(4, 4, 2),
        source_band: BandSpec::new(8.0, 12.0),
        variance_ratio: 1.0,
        noise_std: 0.0,
    };
    let ds = synth_two_class(&spec, (ClassLabel::Word, ClassLabel::Hand), 8).unwrap();
    let a = class_mean_covariance(&ds, ClassLabel::Word, false).unwrap();
    let b = class_mean_covariance(&ds, ClassLabel::Hand, false).unwrap();
    assert!((a.matrix() - b.matrix()).norm() / a.matrix().norm() < 0.1);
}
