use keed_core::baseline::{
    delineate_wave_dwt, delineate_wave_peak, group_delay, swt_decompose, WaveDelineation, WtConfig, HIGHPASS, LOWPASS,
};
use keed_core::synth::{gen_record, SynthParams, SynthRecord};
use keed_core::{Result, TimeSeriesRecord, Wave};
use proptest::prelude::*;

type Method = fn(&TimeSeriesRecord, &[usize], Wave, &WtConfig) -> Result<Vec<WaveDelineation>>;

const METHODS: [(&str, Method); 2] = [("dwt", delineate_wave_dwt), ("peak", delineate_wave_peak)];

struct Stats {
    present: usize,
    total: usize,
    errors: Vec<f64>,
}

impl Stats {
    fn present_rate(&self) -> f64 {
        self.present as f64 / self.total as f64
    }
    fn mean_error(&self) -> f64 {
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }
}

fn score(rec: &SynthRecord, method: Method, wave: Wave) -> Stats {
    let out = method(&rec.record, &rec.r_peaks(), wave, &WtConfig::default()).unwrap();
    let mut s = Stats {
        present: 0,
        total: out.len(),
        errors: vec![],
    };
    for (i, d) in out.iter().enumerate() {
        let truth = match wave {
            Wave::P => rec.beats[i + 1].p,
            Wave::T => rec.beats[i].t,
        };
        if d.present {
            s.present += 1;
            assert!(d.onset <= d.peak && d.peak <= d.offset);
            if let Some(t) = truth {
                s.errors.push((d.peak as f64 - t.peak as f64).abs());
            }
        }
    }
    s
}

fn sinus(seed: u64, snr: Option<f64>) -> SynthRecord {
    gen_record(&SynthParams {
        seed,
        noise_snr_db: snr,
        ..Default::default()
    })
    .unwrap()
}

fn afib(seed: u64, snr: Option<f64>) -> SynthRecord {
    gen_record(&SynthParams {
        seed,
        rr_jitter: 0.25,
        p_dropout: vec![(0, 99)],
        noise_snr_db: snr,
        ..Default::default()
    })
    .unwrap()
}

/// Causal equivalent filter of the scale-`s` detail built by explicit convolution.
fn equivalent_filter(scale: usize) -> Vec<f64> {
    let dilate = |taps: &[f64], d: usize| {
        let mut out = vec![0.0; (taps.len() - 1) * d + 1];
        for (k, t) in taps.iter().enumerate() {
            out[k * d] = *t;
        }
        out
    };
    let conv = |a: &[f64], b: &[f64]| {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut f = vec![1.0];
    for j in 1..scale {
        f = conv(&f, &dilate(&LOWPASS, 1 << (j - 1)));
    }
    conv(&f, &dilate(&HIGHPASS, 1 << (scale - 1)))
}

#[test]
fn impulse_response_matches_cascade() {
    let n = 512;
    let m = 250;
    let mut x = vec![0.0; n];
    x[m] = 1.0;
    let details = swt_decompose(&x, 5).unwrap();
    for s in 1..=5 {
        let f = equivalent_filter(s);
        let shift = group_delay(s);
        for (i, &got) in details[s - 1].iter().enumerate() {
            let k = i as isize + shift as isize - m as isize;
            let expect = if (0..f.len() as isize).contains(&k) {
                f[k as usize]
            } else {
                0.0
            };
            assert!((got - expect).abs() < 1e-12, "scale {s} index {i}");
        }
    }
}

#[test]
fn ramp_detail_is_slope_times_dyadic() {
    let slope = 0.37;
    let x: Vec<f64> = (0..600).map(|i| slope * i as f64 - 4.0).collect();
    let details = swt_decompose(&x, 5).unwrap();
    for s in 1..=5 {
        for d in &details[s - 1][150..450] {
            assert!((d - slope * (1 << s) as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn detail_extremum_pair_brackets_gaussian_peak() {
    let c = 300.0;
    let x: Vec<f64> = (0..600)
        .map(|i| (-(i as f64 - c).powi(2) / (2.0 * 25.0)).exp())
        .collect();
    let w = &swt_decompose(&x, 5).unwrap()[3];
    let imax = (0..600).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    let imin = (0..600).min_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    assert!(imax < 300 && imin > 300);
    let zc = (imax..imin).find(|&i| w[i] > 0.0 && w[i + 1] <= 0.0).unwrap();
    assert!((zc as f64 - c).abs() <= 1.0, "zero crossing at {zc}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn swt_is_linear(
        x in prop::collection::vec(-5.0f64..5.0, 100..200),
        y in prop::collection::vec(-5.0f64..5.0, 200),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let y = &y[..x.len()];
        let mix: Vec<f64> = x.iter().zip(y).map(|(u, v)| a * u + b * v).collect();
        let dx = swt_decompose(&x, 5).unwrap();
        let dy = swt_decompose(y, 5).unwrap();
        let dm = swt_decompose(&mix, 5).unwrap();
        for s in 0..5 {
            for i in 0..x.len() {
                let expect = a * dx[s][i] + b * dy[s][i];
                prop_assert!((dm[s][i] - expect).abs() < 1e-9 * (1.0 + expect.abs()));
            }
        }
    }
}

#[test]
fn dwt_clean_sinus_presence_and_error() {
    for seed in [1, 2, 3] {
        for wave in [Wave::P, Wave::T] {
            let s = score(&sinus(seed, None), delineate_wave_dwt, wave);
            assert!(s.present_rate() >= 0.95, "{wave:?} presence {}", s.present_rate());
            assert!(s.mean_error() <= 5.0, "{wave:?} error {}", s.mean_error());
        }
    }
}

#[test]
fn dwt_rejects_fibrillatory_baseline() {
    for seed in [4, 5, 6] {
        let s = score(&afib(seed, Some(30.0)), delineate_wave_dwt, Wave::P);
        assert!(1.0 - s.present_rate() >= 0.9, "absence {}", 1.0 - s.present_rate());
    }
}

#[test]
fn peak_clean_sinus_presence() {
    let s = score(&sinus(7, None), delineate_wave_peak, Wave::P);
    assert!(s.present_rate() >= 0.95);
    assert!(s.mean_error() <= 5.0);
}

#[test]
fn peak_declares_noise_windows_absent_at_least_half_the_time() {
    let mut absent = 0.0;
    let seeds = [8, 9, 10, 11];
    for seed in seeds {
        absent += 1.0 - score(&afib(seed, Some(15.0)), delineate_wave_peak, Wave::P).present_rate();
    }
    assert!(absent / seeds.len() as f64 >= 0.5);
}

#[test]
fn amplitude_scale_does_not_change_decisions() {
    let rec = sinus(12, Some(20.0));
    let r = rec.r_peaks();
    let scaled = rec.record.scaled(7.5);
    for (name, m) in METHODS {
        for wave in [Wave::P, Wave::T] {
            let cfg = WtConfig::default();
            assert_eq!(
                m(&rec.record, &r, wave, &cfg).unwrap(),
                m(&scaled, &r, wave, &cfg).unwrap(),
                "{name}"
            );
        }
    }
}

#[test]
fn flat_signal_is_absent_everywhere() {
    let rec = TimeSeriesRecord::new(vec![0.3; 2000], 250.0, "flat", "I").unwrap();
    let r = [100, 300, 500, 700, 900];
    for (_, m) in METHODS {
        let out = m(&rec, &r, Wave::P, &WtConfig::default()).unwrap();
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|d| !d.present));
    }
}

#[test]
fn rejects_bad_peaks_and_config() {
    let rec = sinus(1, None);
    let cfg = WtConfig::default();
    assert!(delineate_wave_dwt(&rec.record, &[10], Wave::P, &cfg).is_err());
    assert!(delineate_wave_peak(&rec.record, &[300, 200], Wave::P, &cfg).is_err());
    let bad = WtConfig {
        p_search: (0.4, 0.9),
        ..cfg.clone()
    };
    assert!(delineate_wave_dwt(&rec.record, &rec.r_peaks(), Wave::P, &bad).is_err());
    let bad = WtConfig {
        presence_factor: 1.5,
        ..cfg
    };
    assert!(delineate_wave_peak(&rec.record, &rec.r_peaks(), Wave::P, &bad).is_err());
}
