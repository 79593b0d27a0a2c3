use std::collections::BTreeMap;
use std::path::PathBuf;

use keed_core::eval::{benchmark, score_wave, BenchResult, EvalReport, MethodReport, WaveScore};
use keed_core::synth::{gen_corpus, CorpusParams};
use keed_core::{TimeSeriesRecord, Wave};
use serde::Serialize;

use super::eval::{render, with_rpeaks, Scored};
use super::{build_method, emit, with_threads, ALL_METHODS};
use crate::config::{Format, RunConfig};
use crate::data::{labeled_only, load_dir};
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub report: EvalReport,
    pub timings: Vec<BenchResult>,
    /// Median time of each method divided by KEED's.
    pub time_ratio_vs_keed: BTreeMap<String, f64>,
    /// True when KEED ran with untrained weights (timing only).
    pub untrained_keed: bool,
}

fn synthetic_set(cfg: &RunConfig, intervals: usize) -> CliResult<Vec<Scored>> {
    let per_record = cfg.synth.beats_per_record.saturating_sub(1);
    if per_record == 0 {
        return Err(CliError::Usage("synth.beats_per_record must be at least 2".into()));
    }
    let params = CorpusParams {
        n_records: intervals.div_ceil(per_record).max(1),
        seed: cfg.seed,
        ..cfg.synth.clone()
    };
    Ok(gen_corpus(&params)?
        .into_iter()
        .map(|r| {
            let peaks = r.r_peaks();
            (r.record.clone(), r.truth_file(), peaks)
        })
        .collect())
}

pub fn run(cfg: &RunConfig, data: Option<PathBuf>, intervals: Option<usize>, repeats: Option<usize>) -> CliResult<()> {
    let repeats = repeats.unwrap_or(cfg.bench.repeats);
    if repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    let set: Vec<Scored> = match data.as_ref().or(cfg.data.dir.as_ref()) {
        Some(dir) => with_rpeaks(labeled_only(load_dir(dir, &cfg.data)?, dir)?, cfg, true)?,
        None => synthetic_set(cfg, intervals.unwrap_or(cfg.bench.intervals))?,
    };
    let inputs: Vec<(TimeSeriesRecord, Vec<usize>)> = set.iter().map(|(rec, _, r)| (rec.clone(), r.clone())).collect();

    let mut out = BenchReport {
        report: EvalReport::default(),
        timings: Vec::new(),
        time_ratio_vs_keed: BTreeMap::new(),
        untrained_keed: cfg.output.weights.is_none(),
    };
    with_threads(cfg.threads, || -> CliResult<()> {
        for m in ALL_METHODS {
            let delineator = build_method(m, cfg, true)?;
            let (timing, results) = benchmark(delineator.as_ref(), &inputs, repeats)?;
            let mut score = WaveScore {
                counts: Default::default(),
                peak_pairs: Vec::new(),
                resampled_pairs: Vec::new(),
                excluded: 0,
            };
            for (res, (_, truth, _)) in results.iter().zip(&set) {
                score.merge(&score_wave(res, truth, Wave::P, cfg.model.length)?);
            }
            out.report.rows.push(MethodReport::from_score(
                delineator.name(),
                &score,
                Some(timing.median_secs),
            ));
            out.timings.push(timing);
        }
        Ok(())
    })??;
    let keed = out.timings.iter().find(|t| t.method == "KEED").map(|t| t.median_secs);
    if let Some(k) = keed.filter(|&k| k > 0.0) {
        for t in &out.timings {
            out.time_ratio_vs_keed.insert(t.method.clone(), t.median_secs / k);
        }
    }
    let text = match cfg.output.format {
        Format::Json => serde_json::to_string_pretty(&out).map_err(|e| CliError::Data(e.to_string()))? + "\n",
        Format::Table => {
            let mut s = render(&out.report, Format::Table)?;
            for t in &out.timings {
                s.push_str(&format!(
                    "{}: {} intervals, median {:.4} s over {} repeats, {:.0} intervals/s, ratio to KEED {:.2}\n",
                    t.method,
                    t.intervals,
                    t.median_secs,
                    t.repeats,
                    t.intervals_per_sec,
                    out.time_ratio_vs_keed.get(&t.method).copied().unwrap_or(f64::NAN)
                ));
            }
            s
        }
        Format::Csv => render(&out.report, Format::Csv)?,
    };
    emit(cfg, &text)
}
