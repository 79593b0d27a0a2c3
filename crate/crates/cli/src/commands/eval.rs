use std::path::PathBuf;
use std::time::Instant;

use keed_core::eval::{
    align_intervals, interval_truths, lambda_sweep, score_wave, sweep_csv, EvalReport, MethodReport, WaveScore,
};
use keed_core::net::HeatmapSet;
use keed_core::pipeline::{Delineator, KeedDelineator};
use keed_core::qrs::detect_rpeaks;
use keed_core::synth::TruthFile;
use keed_core::{TimeSeriesRecord, Wave};

use super::{build_method, emit, load_keed, require_dir, with_threads, Method, ALL_METHODS};
use crate::config::{Format, RunConfig};
use crate::data::{labeled_only, load_dir};
use crate::error::{write, CliResult};

/// λ grid of the presence trade-off curve.
pub const SWEEP_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub struct EvalArgs {
    pub data: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub wave: Wave,
    pub truth_rpeaks: bool,
    pub sweep_csv: Option<PathBuf>,
}

pub type Scored = (TimeSeriesRecord, TruthFile, Vec<usize>);

/// R peaks for each labelled record, from the truth or the detector.
pub fn with_rpeaks(
    records: Vec<(TimeSeriesRecord, TruthFile)>,
    cfg: &RunConfig,
    use_truth: bool,
) -> CliResult<Vec<Scored>> {
    records
        .into_iter()
        .map(|(rec, truth)| {
            let r = if use_truth {
                truth.r_peaks()
            } else {
                detect_rpeaks(&rec, &cfg.qrs)?
            };
            Ok((rec, truth, r))
        })
        .collect()
}

/// Delineates every record with `method`, returning the pooled score and
/// the wall time spent delineating.
pub fn score_method(method: &dyn Delineator, set: &[Scored], wave: Wave, length: usize) -> CliResult<(WaveScore, f64)> {
    let mut total = WaveScore {
        counts: Default::default(),
        peak_pairs: Vec::new(),
        resampled_pairs: Vec::new(),
        excluded: 0,
    };
    let mut secs = 0.0;
    for (rec, truth, r) in set {
        let start = Instant::now();
        let out = method.delineate(rec, r)?;
        secs += start.elapsed().as_secs_f64();
        total.merge(&score_wave(&out, truth, wave, length)?);
    }
    Ok((total, secs))
}

/// Truth-aligned heatmaps of the wave's peak channel, cached once.
pub fn sweep(keed: &KeedDelineator, set: &[Scored], wave: Wave) -> CliResult<String> {
    let mut maps: Vec<HeatmapSet> = Vec::new();
    let mut flags = Vec::new();
    for (rec, truth, r) in set {
        let (intervals, heatmaps) = keed.heatmaps(rec, r)?;
        let skeleton = keed.decode(rec, &intervals, &heatmaps)?;
        let truths = interval_truths(truth, wave);
        let tol = (keed_core::eval::R_TOLERANCE_SECS * truth.fs).round() as usize;
        for (i, t) in align_intervals(&skeleton, &truths, tol).pairs {
            maps.push(heatmaps[i].clone());
            flags.push(truths[t].present);
        }
    }
    Ok(sweep_csv(&lambda_sweep(&maps, &flags, wave.peak(), &SWEEP_GRID)?))
}

pub fn render(report: &EvalReport, format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Json => report.to_json()? + "\n",
        Format::Table => report.to_table(),
        Format::Csv => report.to_csv(),
    })
}

pub fn run(cfg: &RunConfig, args: EvalArgs) -> CliResult<()> {
    let dir = require_dir(args.data.as_ref().or(cfg.data.dir.as_ref()), "eval")?;
    let methods = if args.methods.is_empty() {
        ALL_METHODS
            .into_iter()
            .filter(|m| *m != Method::Keed || cfg.output.weights.is_some())
            .collect()
    } else {
        args.methods.clone()
    };
    let set = with_rpeaks(labeled_only(load_dir(&dir, &cfg.data)?, &dir)?, cfg, args.truth_rpeaks)?;
    let mut report = EvalReport::default();
    with_threads(cfg.threads, || -> CliResult<()> {
        for m in &methods {
            let delineator = build_method(*m, cfg, false)?;
            let (score, secs) = score_method(delineator.as_ref(), &set, args.wave, cfg.model.length)?;
            report
                .rows
                .push(MethodReport::from_score(delineator.name(), &score, Some(secs)));
        }
        if let Some(path) = &args.sweep_csv {
            let keed = load_keed(cfg, false)?;
            write(path, sweep(&keed, &set, args.wave)?)?;
        }
        Ok(())
    })??;
    emit(cfg, &render(&report, cfg.output.format)?)
}
