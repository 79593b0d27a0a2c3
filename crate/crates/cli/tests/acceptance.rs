//! End-to-end acceptance checks, run without the test harness so the
//! PASS/FAIL line of every criterion is always shown. Exits non-zero if any
//! criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use keed_core::eval::{confusion, lambda_sweep, metrics, peak_error, score_wave, ConfusionCounts, WaveScore};
use keed_core::heatmap::{decode_resampled, make_target, DecodeConfig, ResampledFiducial};
use keed_core::io::{decode_212, encode_212, encode_annotations, read_wfdb_annotations, WfdbAnnotation};
use keed_core::net::{
    bce_loss, load_weights, save_weights, AdamConfig, HeatmapSet, Model, ModelConfig, Parameters, Trainer,
};
use keed_core::pipeline::{delineate_record, Delineator, DwtDelineator, KeedDelineator};
use keed_core::qrs::{detect_rpeaks, QrsConfig};
use keed_core::synth::{
    gen_corpus, gen_record, labelled_intervals, to_training_set, truth_of, CorpusParams, SynthParams, SynthRecord,
};
use keed_core::{KeypointKind, Wave, NUM_KEYPOINTS};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- 1

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let cfg = ModelConfig {
        width: 4,
        depth: 2,
        n_blocks: 1,
        length: 32,
        keypoints: 2,
        kernel_size: 3,
    };
    let model = Model::new(cfg).unwrap();
    let params = Parameters::init(&cfg, 101).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let batch: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..32).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let targets: Vec<HeatmapSet> = (0..2)
        .map(|_| HeatmapSet::from_vec(2, 32, (0..64).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap())
        .collect();
    let (_, grads) = model.loss_and_grad(&params, &batch, &targets).unwrap();
    let loss_at = |p: &Parameters| bce_loss(&model.forward(p, &batch).unwrap(), &targets).unwrap();

    let h = 1e-4;
    let mut order: Vec<usize> = (0..params.num_scalars()).collect();
    order.shuffle(&mut rng);
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
    let mut failures = Vec::new();
    for flat in order {
        if checked == 200 {
            break;
        }
        let (ti, ei) = params.locate(flat).unwrap();
        let mut plus = params.clone();
        plus.tensor_mut(ti).data[ei] += h;
        let mut minus = params.clone();
        minus.tensor_mut(ti).data[ei] -= h;
        // a ReLU or pooling switch between the two probes makes the loss non-smooth there
        if batch
            .iter()
            .any(|x| model.activation_signature(&plus, x) != model.activation_signature(&minus, x))
        {
            skipped += 1;
            continue;
        }
        let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
        let an = grads.tensor(ti).data[ei];
        let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
        worst = worst.max(rel);
        if rel >= 1e-4 {
            failures.push(format!("{}[{ei}] fd {fd:e} analytic {an:e}", params.names()[ti]));
        }
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{checked} parameters checked ({skipped} skipped at kinks), worst relative error {worst:.2e}, {secs:.1} s{}",
        failures.first().map(|f| format!(", e.g. {f}")).unwrap_or_default()
    );
    check(checked >= 200 && failures.is_empty() && secs < 60.0, detail)
}

// ---------------------------------------------------------------- 2

fn codecs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..10_000 {
        let n: usize = rng.gen_range(0..64);
        let samples: Vec<i16> = (0..n).map(|_| rng.gen_range(-2048..=2047)).collect();
        let bytes = encode_212(&samples).unwrap();
        if bytes.len() != (3 * n).div_ceil(2) || decode_212(&bytes, n).unwrap() != samples {
            return Err(format!("format 212 case {case} failed: {samples:?}"));
        }
    }
    const AUX: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789()+ ";
    for case in 0..10_000 {
        let mut t = 0u64;
        let anns: Vec<WfdbAnnotation> = (0..rng.gen_range(0..12))
            .map(|_| {
                // occasional large gaps exercise the SKIP encoding
                t += if rng.gen_bool(0.1) {
                    rng.gen_range(1024..3_000_000)
                } else {
                    rng.gen_range(0..1024)
                };
                WfdbAnnotation {
                    sample_index: t,
                    type_code: rng.gen_range(1..=49),
                    subtype: rng.gen(),
                    chan: rng.gen(),
                    num: rng.gen(),
                    aux: rng.gen_bool(0.3).then(|| {
                        (0..rng.gen_range(1..=40))
                            .map(|_| *AUX.choose(&mut rng).unwrap() as char)
                            .collect()
                    }),
                }
            })
            .collect();
        let bytes = encode_annotations(&anns).unwrap();
        if read_wfdb_annotations(&bytes).unwrap() != anns {
            return Err(format!("annotation case {case} failed: {anns:?}"));
        }
    }
    for (i, cfg) in [
        ModelConfig::default(),
        ModelConfig {
            width: 4,
            depth: 2,
            n_blocks: 1,
            length: 32,
            keypoints: 2,
            kernel_size: 3,
        },
    ]
    .into_iter()
    .enumerate()
    {
        let params = Parameters::init(&cfg, 7 + i as u64).unwrap();
        let bytes = save_weights(&params, &cfg).unwrap();
        let (loaded, cfg2) = load_weights(&bytes).unwrap();
        let bitwise = params.iter().zip(loaded.iter()).all(|((n1, a), (n2, b))| {
            n1 == n2 && a.shape == b.shape && a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits())
        });
        if cfg2 != cfg || !bitwise || save_weights(&loaded, &cfg2).unwrap() != bytes {
            return Err(format!("weights round trip differs for {cfg:?}"));
        }
    }
    Ok("10000 format-212 and 10000 annotation cases exact, weights bitwise equal".into())
}

// ---------------------------------------------------------------- 3

fn match_peaks(truth: &[usize], found: &[usize], fs: f64) -> (f64, f64, f64) {
    let window = (0.1 * fs) as usize;
    let mut used = vec![false; found.len()];
    let (mut hits, mut worst) = (0, 0usize);
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

fn detector() -> Outcome {
    let run = |snr: Option<f64>, seed: u64| {
        let rec = gen_record(&SynthParams {
            n_beats: 100,
            noise_snr_db: snr,
            seed,
            ..Default::default()
        })
        .unwrap();
        let found = detect_rpeaks(&rec.record, &QrsConfig::default()).unwrap();
        match_peaks(&rec.r_peaks(), &found, rec.record.fs)
    };
    let (cr, cp, ce) = run(None, 31);
    let (nr, np, ne) = run(Some(10.0), 32);
    check(
        cr >= 0.99 && cp >= 0.99 && ce <= 0.01 && nr >= 0.95 && np >= 0.95 && ne <= 0.02,
        format!("clean recall {cr:.3} precision {cp:.3} error {ce:.3} s; 10 dB recall {nr:.3} precision {np:.3} error {ne:.3} s"),
    )
}

// ---------------------------------------------------------------- 4, 5, 6

struct Trained {
    keed: KeedDelineator,
    clean: Vec<SynthRecord>,
    noisy: Vec<SynthRecord>,
    train_secs: f64,
}

fn train_model() -> Trained {
    let start = Instant::now();
    let cfg = ModelConfig::default();
    let decode = DecodeConfig::default();
    let train = gen_corpus(&CorpusParams {
        n_records: 100,
        seed: 1,
        id_prefix: "train".into(),
        ..Default::default()
    })
    .unwrap();
    let pairs = to_training_set(&train, cfg.length, &decode).unwrap();
    assert_eq!(pairs.len(), 2000);
    let mut trainer = Trainer::new(cfg, AdamConfig::default(), 64, 1).unwrap();
    for _ in 0..6 {
        trainer.epoch(&pairs).unwrap();
    }
    let eval = |seed, noisy_fraction, snr_db, prefix: &str| {
        gen_corpus(&CorpusParams {
            n_records: 25,
            seed,
            noisy_fraction,
            snr_db,
            id_prefix: prefix.into(),
            ..Default::default()
        })
        .unwrap()
    };
    Trained {
        keed: KeedDelineator::new(trainer.params, cfg, decode).unwrap(),
        clean: eval(2, 0.0, (15.0, 15.0), "clean"),
        noisy: eval(3, 1.0, (15.0, 15.0), "noisy"),
        train_secs: start.elapsed().as_secs_f64(),
    }
}

/// Full pipeline from detected R peaks, scored on P presence and P-peak location.
fn score(method: &dyn Delineator, records: &[SynthRecord]) -> WaveScore {
    let mut total = WaveScore::default();
    for rec in records {
        let pred = delineate_record(&rec.record, &QrsConfig::default(), method).unwrap();
        total.merge(&score_wave(&pred, &rec.truth_file(), Wave::P, ModelConfig::default().length).unwrap());
    }
    total
}

fn accuracy(c: &ConfusionCounts) -> f64 {
    metrics(c).unwrap().accuracy
}

fn learning(t: &Trained) -> Outcome {
    let start = Instant::now();
    let s = score(&t.keed, &t.clean);
    let scored = s.counts.total();
    let acc = accuracy(&s.counts);
    let err = s.mean_resampled_error().unwrap_or(f64::INFINITY);
    let secs = t.train_secs + start.elapsed().as_secs_f64();
    check(
        scored >= 480 && acc >= 0.95 && err <= 5.0 && secs <= 1800.0,
        format!("{scored} held-out intervals, accuracy {acc:.3}, P-peak error {err:.2} resampled samples, {secs:.0} s total"),
    )
}

fn baseline(t: &Trained) -> Outcome {
    let dwt = DwtDelineator::default();
    let clean = accuracy(&score(&dwt, &t.clean).counts);
    let dwt_noisy = accuracy(&score(&dwt, &t.noisy).counts);
    let keed_noisy = accuracy(&score(&t.keed, &t.noisy).counts);
    check(
        clean >= 0.90 && keed_noisy >= dwt_noisy,
        format!("DWT clean accuracy {clean:.3}; noisy accuracy KEED {keed_noisy:.3} vs DWT {dwt_noisy:.3}"),
    )
}

fn lambda_tradeoff(t: &Trained) -> Outcome {
    let cfg = *t.keed.config();
    let model = Model::new(cfg).unwrap();
    let mut inputs = Vec::new();
    let mut truths = Vec::new();
    for rec in t.clean.iter().chain(&t.noisy) {
        for (iv, truth) in labelled_intervals(&rec.record, &rec.beats, cfg.length).unwrap() {
            inputs.push(iv.values);
            truths.push(truth);
        }
    }
    let heatmaps = model.forward(t.keed.params(), &inputs).unwrap();
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let mut lines = Vec::new();
    for kind in KeypointKind::ALL {
        let truth: Vec<bool> = truths.iter().map(|tr| truth_of(tr, kind).present).collect();
        let pts = lambda_sweep(&heatmaps, &truth, kind, &grid).unwrap();
        for w in pts.windows(2) {
            let (a, b) = (&w[0].counts, &w[1].counts);
            if b.predicted_present() > a.predicted_present() || b.fp > a.fp || b.fn_ < a.fn_ {
                return Err(format!(
                    "{kind} not monotone between λ {} and {}",
                    w[0].lambda, w[1].lambda
                ));
            }
        }
        if kind == KeypointKind::PPeak {
            lines = pts
                .iter()
                .map(|p| format!("{:.1}:{}/{}", p.lambda, p.counts.fp, p.counts.fn_))
                .collect();
        }
    }
    Ok(format!(
        "{} intervals, all kinds monotone; PPeak fp/fn {}",
        inputs.len(),
        lines.join(" ")
    ))
}

// ---------------------------------------------------------------- 7

fn throughput(t: &Trained) -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let weights = tmp.path().join("keed.bin");
    std::fs::write(&weights, save_weights(t.keed.params(), t.keed.config()).unwrap()).unwrap();
    let out = common::keed(&[
        "bench",
        "--intervals",
        "1000",
        "--repeats",
        "2",
        "--format",
        "json",
        "--weights",
        common::p(&weights),
    ]);
    if !out.status.success() {
        return Err(format!(
            "bench exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let rows = v["report"]["rows"].as_array().ok_or("missing report rows")?;
    let columns = [
        "method",
        "accuracy_pct",
        "sensitivity_pct",
        "specificity_pct",
        "error_samples",
        "time_secs",
    ];
    let schema = rows.len() == 3 && rows.iter().all(|r| columns.iter().all(|c| r.get(c).is_some()));
    let timings = v["timings"].as_array().ok_or("missing timings")?;
    let mut ok = schema && timings.len() == 3;
    let mut parts = Vec::new();
    for tm in timings {
        let times: Vec<f64> = tm["times_secs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        ok &= tm["deterministic"] == true && tm["intervals"].as_u64() >= Some(1000) && times.iter().all(|&x| x > 0.0);
        parts.push(format!(
            "{} {:.3} s",
            tm["method"].as_str().unwrap_or("?"),
            tm["median_secs"].as_f64().unwrap_or(0.0)
        ));
    }
    check(
        ok,
        format!("{}; ratio vs KEED {}", parts.join(", "), v["time_ratio_vs_keed"]),
    )
}

// ---------------------------------------------------------------- 8

fn heatmap_codec() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = DecodeConfig::default();
    for case in 0..1000 {
        let fid: Vec<ResampledFiducial> = (0..NUM_KEYPOINTS)
            .map(|_| {
                if rng.gen_bool(0.7) {
                    ResampledFiducial::at(rng.gen_range(0..256))
                } else {
                    ResampledFiducial::ABSENT
                }
            })
            .collect();
        let decoded = decode_resampled(&make_target(&fid, 256, &cfg).unwrap(), &cfg);
        for (f, (present, idx, _)) in fid.iter().zip(decoded) {
            if f.present != present || (present && f.index != idx) {
                return Err(format!("case {case}: {fid:?}"));
            }
        }
    }
    Ok("1000 fiducial sets recovered exactly".into())
}

// ---------------------------------------------------------------- 9

fn metric_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..2000 {
        let n = rng.gen_range(1..300);
        // skewed probabilities hit the all-positive and all-negative corners
        let p_true = [0.0, 1.0, 0.5, rng.gen()][case % 4];
        let truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(p_true)).collect();
        let pred: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for (&t, &p) in truth.iter().zip(&pred) {
            match (t, p) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let c = confusion(&truth, &pred).unwrap();
        if (c.tp, c.fp, c.fn_, c.tn) != (tp, fp, fn_, tn) {
            return Err(format!("confusion case {case}"));
        }
        let m = metrics(&c).unwrap();
        let ratio = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
        let close = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (Some(x), Some(y)) => (x - y).abs() < 1e-12,
            (None, None) => true,
            _ => false,
        };
        if !close(Some(m.accuracy), ratio(tp + tn, n as u64))
            || !close(m.sensitivity, ratio(tp, tp + fn_))
            || !close(m.specificity, ratio(tn, tn + fp))
        {
            return Err(format!("metrics case {case}: {m:?}"));
        }
        let locs_t: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5000)).collect();
        let locs_p: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5000)).collect();
        let diffs: Vec<f64> = (0..n)
            .filter(|&i| truth[i] && pred[i])
            .map(|i| (locs_t[i] as f64 - locs_p[i] as f64).abs())
            .collect();
        let want = (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64);
        if !close(peak_error(&locs_t, &locs_p, &truth, &pred), want) {
            return Err(format!("peak_error case {case}"));
        }
    }
    let all_pos = metrics(&confusion(&[true, true], &[true, false]).unwrap()).unwrap();
    let all_neg = metrics(&confusion(&[false], &[false]).unwrap()).unwrap();
    let zero_rule = all_pos.specificity.is_none()
        && all_pos.sensitivity == Some(0.5)
        && all_neg.sensitivity.is_none()
        && all_neg.specificity == Some(1.0)
        && metrics(&ConfusionCounts::default()).is_err()
        && peak_error(&[1], &[2], &[true], &[false]).is_none();
    check(
        zero_rule,
        "2000 fuzzed cases match brute force; empty denominators yield undefined".into(),
    )
}

// ----------------------------------------------------------------

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(d) => println!("PASS {name}: {d} [{secs:.1} s]"),
        Err(d) => println!("FAIL {name}: {d} [{secs:.1} s]"),
    }
    outcome.is_ok()
}

fn main() {
    let mut results = vec![
        run("1 gradient correctness", gradient_check),
        run("2 codec exactness", codecs),
        run("3 detector oracle", detector),
    ];
    match catch_unwind(train_model) {
        Ok(t) => {
            results.push(run("4 end-to-end learning", || learning(&t)));
            results.push(run("5 baseline sanity", || baseline(&t)));
            results.push(run("6 lambda trade-off", || lambda_tradeoff(&t)));
            results.push(run("7 throughput report", || throughput(&t)));
        }
        Err(_) => {
            for name in [
                "4 end-to-end learning",
                "5 baseline sanity",
                "6 lambda trade-off",
                "7 throughput report",
            ] {
                results.push(run(name, || Err("training failed".into())));
            }
        }
    }
    results.push(run("8 heatmap codec", heatmap_codec));
    results.push(run("9 metric correctness", metric_correctness));
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
