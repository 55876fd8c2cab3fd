use bci_core::dataio::{
    decode_dataset, encode_dataset, random_mixing, read_dataset, synth_classes, synth_two_class, write_dataset,
    ClassLabel, SynthSpec,
};
use bci_core::dsp::BandSpec;

fn recording_shaped() -> SynthSpec {
    SynthSpec {
        n_trials_per_class: 40,
        n_channels: 30,
        n_samples: 1792,
        fs_hz: 256.0,
        mixing: random_mixing(30, 4, 1),
        source_band: BandSpec::new(8.0, 12.0),
        variance_ratio: 10.0,
        noise_std: 1.0,
    }
}

#[test]
fn full_size_dataset_round_trips_byte_for_byte() {
    let ds = synth_two_class(&recording_shaped(), (ClassLabel::Word, ClassLabel::Feet), 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.epo");
    write_dataset(&ds, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let header = 4 + 4 * 4 + 8 + ds.channel_names().iter().map(|n| 2 + n.len()).sum::<usize>() + 80;
    assert_eq!(bytes.len(), header + 80 * 30 * 1792 * 4);

    let back = read_dataset(&path).unwrap();
    assert_eq!(back, ds);
    assert_eq!((back.n_trials(), back.n_channels(), back.n_samples()), (80, 30, 1792));
    assert_eq!(encode_dataset(&back), bytes);
    for (a, b) in ds.data().iter().zip(back.data()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn generator_is_reproducible() {
    let spec = SynthSpec { n_trials_per_class: 4, n_samples: 256, ..recording_shaped() };
    let a = encode_dataset(&synth_classes(&spec, &ClassLabel::ALL, 3).unwrap());
    let b = encode_dataset(&synth_classes(&spec, &ClassLabel::ALL, 3).unwrap());
    assert_eq!(a, b);
    let c = encode_dataset(&synth_classes(&spec, &ClassLabel::ALL, 4).unwrap());
    assert_ne!(a, c);
}

#[test]
fn pair_selection_audit() {
    let spec = SynthSpec { n_trials_per_class: 16, n_samples: 64, n_channels: 4, mixing: random_mixing(4, 4, 2), ..recording_shaped() };
    let ds = synth_classes(&spec, &ClassLabel::ALL, 9).unwrap();
    let decoded = decode_dataset(&encode_dataset(&ds)).unwrap();
    let pair = decoded.select_pair(ClassLabel::Word, ClassLabel::Feet).unwrap();
    assert_eq!(pair.n_trials(), 32);
    let kept: Vec<usize> = (0..ds.n_trials())
        .filter(|&i| matches!(ds.labels()[i], ClassLabel::Word | ClassLabel::Feet))
        .collect();
    for (j, &i) in kept.iter().enumerate() {
        assert_eq!(pair.labels()[j], ds.labels()[i]);
        assert_eq!(pair.trial(j), ds.trial(i));
    }
}
