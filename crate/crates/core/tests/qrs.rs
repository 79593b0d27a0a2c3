use keed_core::qrs::{detect_rpeaks, QrsConfig};
use keed_core::synth::{gen_record, SynthParams};
use keed_core::TimeSeriesRecord;
use proptest::prelude::*;

/// (recall, precision, worst matched error in seconds), greedy one-to-one
/// matching within 0.1 s.
fn match_peaks(truth: &[usize], found: &[usize], fs: f64) -> (f64, f64, f64) {
    let window = (0.1 * fs) as usize;
    let mut used = vec![false; found.len()];
    let mut hits = 0;
    let mut worst = 0usize;
    for &t in truth {
        let best = found
            .iter()
            .enumerate()
            .filter(|(i, f)| !used[*i] && f.abs_diff(t) <= window)
            .min_by_key(|(_, f)| f.abs_diff(t));
        if let Some((i, f)) = best {
            used[i] = true;
            hits += 1;
            worst = worst.max(f.abs_diff(t));
        }
    }
    (
        hits as f64 / truth.len() as f64,
        hits as f64 / found.len().max(1) as f64,
        worst as f64 / fs,
    )
}

fn run(snr: Option<f64>, seed: u64) -> (f64, f64, f64) {
    let rec = gen_record(&SynthParams {
        n_beats: 100,
        noise_snr_db: snr,
        seed,
        ..Default::default()
    })
    .unwrap();
    let found = detect_rpeaks(&rec.record, &QrsConfig::default()).unwrap();
    match_peaks(&rec.r_peaks(), &found, rec.record.fs)
}

#[test]
fn clean_record_oracle() {
    for seed in [1, 2, 3] {
        let (recall, precision, err) = run(None, seed);
        assert!(recall >= 0.99 && precision >= 0.99, "seed {seed}: {recall} {precision}");
        assert!(err <= 0.01, "seed {seed}: {err}");
    }
}

#[test]
fn noisy_record_oracle() {
    for seed in [4, 5, 6] {
        let (recall, precision, err) = run(Some(10.0), seed);
        assert!(recall >= 0.95 && precision >= 0.95, "seed {seed}: {recall} {precision}");
        assert!(err <= 0.02, "seed {seed}: {err}");
    }
}

#[test]
fn other_sampling_rates() {
    for fs in [128.0, 360.0, 500.0] {
        let rec = gen_record(&SynthParams {
            n_beats: 40,
            fs,
            seed: 7,
            ..Default::default()
        })
        .unwrap();
        let found = detect_rpeaks(&rec.record, &QrsConfig::default()).unwrap();
        let (recall, precision, err) = match_peaks(&rec.r_peaks(), &found, fs);
        assert!(
            recall >= 0.99 && precision >= 0.99 && err <= 0.01,
            "fs {fs}: {recall} {precision} {err}"
        );
    }
}

#[test]
fn flat_record_has_no_peaks() {
    let rec = TimeSeriesRecord::new(vec![0.0; 2500], 250.0, "flat", "I").unwrap();
    assert!(detect_rpeaks(&rec, &QrsConfig::default()).unwrap().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn peaks_increase_and_respect_refractory(seed in 0u64..1000, snr in 5.0f64..40.0, rr in 0.45f64..1.3) {
        let rec = gen_record(&SynthParams { n_beats: 30, rr_mean: rr, noise_snr_db: Some(snr), seed, ..Default::default() }).unwrap();
        let cfg = QrsConfig::default();
        let found = detect_rpeaks(&rec.record, &cfg).unwrap();
        let gap = (cfg.refractory * rec.record.fs) as usize;
        prop_assert!(found.windows(2).all(|w| w[0] < w[1] && w[1] - w[0] >= gap));
        prop_assert!(found.iter().all(|&i| i < rec.record.len()));
    }

    #[test]
    fn amplitude_scale_invariant(seed in 0u64..1000, scale in 0.05f64..50.0) {
        let rec = gen_record(&SynthParams { n_beats: 20, noise_snr_db: Some(20.0), seed, ..Default::default() }).unwrap();
        let cfg = QrsConfig::default();
        let a = detect_rpeaks(&rec.record, &cfg).unwrap();
        let b = detect_rpeaks(&rec.record.scaled(scale), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}
