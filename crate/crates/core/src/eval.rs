//! Presence confusion counts, peak error, λ sweeps and wall-clock timing.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::heatmap::channel_peak;
use crate::net::HeatmapSet;
use crate::pipeline::Delineator;
use crate::synth::TruthFile;
use crate::types::{DelineationResult, KeypointKind, TimeSeriesRecord, Wave};

/// Positive class is "wave present".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn predicted_present(&self) -> u64 {
        self.tp + self.fp
    }

    pub fn record(&mut self, truth: bool, pred: bool) {
        match (truth, pred) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

/// Ratios in [0, 1]; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

pub fn confusion(truth: &[bool], pred: &[bool]) -> Result<ConfusionCounts> {
    if truth.len() != pred.len() {
        return invalid(format!(
            "truth has {} intervals, prediction {}",
            truth.len(),
            pred.len()
        ));
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in truth.iter().zip(pred) {
        c.record(t, p);
    }
    Ok(c)
}

pub fn metrics(c: &ConfusionCounts) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return invalid("no intervals were scored");
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    Ok(Metrics {
        accuracy: (c.tp + c.tn) as f64 / total as f64,
        sensitivity: ratio(c.tp, c.tp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
    })
}

/// Mean |pred − truth| over intervals where both say present.
pub fn peak_error(truth: &[usize], pred: &[usize], truth_present: &[bool], pred_present: &[bool]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..truth
        .len()
        .min(pred.len())
        .min(truth_present.len())
        .min(pred_present.len())
    {
        if truth_present[i] && pred_present[i] {
            sum += (pred[i] as f64 - truth[i] as f64).abs();
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub counts: ConfusionCounts,
}

/// Re-thresholds cached heatmaps for channel `kind` at every λ. Thresholds
/// above 1 are allowed and mark everything absent.
pub fn lambda_sweep(
    heatmaps: &[HeatmapSet],
    truth: &[bool],
    kind: KeypointKind,
    lambdas: &[f64],
) -> Result<Vec<SweepPoint>> {
    if heatmaps.len() != truth.len() {
        return invalid(format!("{} heatmaps vs {} truth flags", heatmaps.len(), truth.len()));
    }
    let k = kind.ordinal();
    if let Some(h) = heatmaps.iter().find(|h| h.channels <= k) {
        return invalid(format!("heatmap has {} channels, need channel {k}", h.channels));
    }
    let confidences: Vec<f64> = heatmaps.iter().map(|h| channel_peak(h.channel(k)).1).collect();
    lambdas
        .iter()
        .map(|&lambda| {
            if lambda.is_nan() {
                return invalid("lambda is NaN");
            }
            let pred: Vec<bool> = confidences.iter().map(|&c| c >= lambda).collect();
            Ok(SweepPoint {
                lambda,
                counts: confusion(truth, &pred)?,
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("lambda,tp,fp,fn,tn\n");
    for p in points {
        let c = p.counts;
        let _ = writeln!(out, "{},{},{},{},{}", p.lambda, c.tp, c.fp, c.fn_, c.tn);
    }
    out
}

/// Truth presence and peak of one wave in one R-R interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalTruth {
    pub r_start: usize,
    pub r_end: usize,
    pub present: bool,
    pub peak: usize,
}

/// Truth per annotated R-R interval. A wave belongs to the interval that
/// contains its peak; if several do, P takes the latest and T the earliest.
pub fn interval_truths(truth: &TruthFile, wave: Wave) -> Vec<IntervalTruth> {
    let peaks: Vec<usize> = truth
        .beats
        .iter()
        .filter_map(|b| b.wave(wave))
        .map(|w| w.peak)
        .collect();
    truth
        .beats
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].r, w[1].r);
            let mut inside = peaks.iter().copied().filter(|&p| a < p && p < b);
            let hit = match wave {
                Wave::P => inside.next_back(),
                Wave::T => inside.next(),
            };
            IntervalTruth {
                r_start: a,
                r_end: b,
                present: hit.is_some(),
                peak: hit.unwrap_or(a),
            }
        })
        .collect()
}

/// Predicted intervals matched to truth intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    /// (prediction index, truth index)
    pub pairs: Vec<(usize, usize)>,
    /// Predicted intervals whose R peaks are farther than the tolerance from
    /// every truth interval.
    pub excluded: usize,
}

/// Matches each predicted interval to the truth interval whose bounding R
/// peaks are both within `tolerance` samples.
pub fn align_intervals(pred: &DelineationResult, truth: &[IntervalTruth], tolerance: usize) -> Alignment {
    let mut pairs = Vec::new();
    let mut excluded = 0;
    let mut j = 0;
    for (i, iv) in pred.intervals.iter().enumerate() {
        while j < truth.len() && truth[j].r_start + tolerance < iv.r_start {
            j += 1;
        }
        let found = (j..truth.len())
            .take_while(|&t| truth[t].r_start <= iv.r_start + tolerance)
            .find(|&t| {
                truth[t].r_end.abs_diff(iv.r_end) <= tolerance && truth[t].r_start.abs_diff(iv.r_start) <= tolerance
            });
        match found {
            Some(t) => pairs.push((i, t)),
            None => excluded += 1,
        }
    }
    Alignment { pairs, excluded }
}

/// Presence counts and peak error of one wave for one record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WaveScore {
    pub counts: ConfusionCounts,
    /// (truth peak, predicted peak) for co-present intervals, original samples.
    pub peak_pairs: Vec<(usize, usize)>,
    /// The same pairs mapped into each interval's resampled coordinates.
    pub resampled_pairs: Vec<(usize, usize)>,
    pub excluded: usize,
}

impl WaveScore {
    pub fn merge(&mut self, other: &Self) {
        self.counts.merge(&other.counts);
        self.peak_pairs.extend_from_slice(&other.peak_pairs);
        self.resampled_pairs.extend_from_slice(&other.resampled_pairs);
        self.excluded += other.excluded;
    }

    pub fn mean_error(&self) -> Option<f64> {
        mean_abs(&self.peak_pairs)
    }

    pub fn mean_resampled_error(&self) -> Option<f64> {
        mean_abs(&self.resampled_pairs)
    }
}

fn mean_abs(pairs: &[(usize, usize)]) -> Option<f64> {
    (!pairs.is_empty()).then(|| pairs.iter().map(|&(t, p)| t.abs_diff(p) as f64).sum::<f64>() / pairs.len() as f64)
}

/// Tolerance on R-peak disagreement before an interval is left unscored.
pub const R_TOLERANCE_SECS: f64 = 0.15;

pub fn score_wave(pred: &DelineationResult, truth: &TruthFile, wave: Wave, length: usize) -> Result<WaveScore> {
    let truths = interval_truths(truth, wave);
    let tol = (R_TOLERANCE_SECS * truth.fs).round() as usize;
    let alignment = align_intervals(pred, &truths, tol);
    let mut score = WaveScore {
        counts: ConfusionCounts::default(),
        peak_pairs: Vec::new(),
        resampled_pairs: Vec::new(),
        excluded: alignment.excluded,
    };
    for (i, t) in alignment.pairs {
        let iv = &pred.intervals[i];
        let p = iv.get(wave.peak());
        let t = truths[t];
        score.counts.record(t.present, p.present);
        if t.present && p.present {
            score.peak_pairs.push((t.peak, p.location));
            let map = |x: usize| {
                crate::segment::map_to_resampled(iv.r_start, iv.r_end, length, x.clamp(iv.r_start, iv.r_end))
            };
            score.resampled_pairs.push((map(t.peak)?, map(p.location)?));
        }
    }
    Ok(score)
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub accuracy_pct: Option<f64>,
    pub sensitivity_pct: Option<f64>,
    pub specificity_pct: Option<f64>,
    pub error_samples: Option<f64>,
    pub time_secs: Option<f64>,
    pub counts: ConfusionCounts,
    pub excluded: usize,
}

impl MethodReport {
    pub fn from_score(method: &str, score: &WaveScore, time_secs: Option<f64>) -> Self {
        let m = metrics(&score.counts).ok();
        let pct = |v: Option<f64>| v.map(|x| 100.0 * x);
        Self {
            method: method.to_string(),
            accuracy_pct: pct(m.map(|m| m.accuracy)),
            sensitivity_pct: pct(m.and_then(|m| m.sensitivity)),
            specificity_pct: pct(m.and_then(|m| m.specificity)),
            error_samples: score.mean_error(),
            time_secs,
            counts: score.counts,
            excluded: score.excluded,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<MethodReport>,
}

pub const TABLE_COLUMNS: [&str; 6] = [
    "Method",
    "Accuracy (%)",
    "Sensitivity (%)",
    "Specificity (%)",
    "Error (Samples)",
    "Time (s)",
];

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn cells(&self) -> Vec<[String; 6]> {
        let fmt = |v: Option<f64>, digits: usize| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"));
        self.rows
            .iter()
            .map(|r| {
                [
                    r.method.clone(),
                    fmt(r.accuracy_pct, 1),
                    fmt(r.sensitivity_pct, 1),
                    fmt(r.specificity_pct, 1),
                    fmt(r.error_samples, 2),
                    fmt(r.time_secs, 4),
                ]
            })
            .collect()
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let cells = self.cells();
        let mut widths = TABLE_COLUMNS.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            parts.join(" | ").trim_end().to_string() + "\n"
        };
        let header: Vec<String> = TABLE_COLUMNS.iter().map(|s| s.to_string()).collect();
        let mut out = line(&header);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        out.push_str(&rule.join("-|-"));
        out.push('\n');
        for row in &cells {
            out.push_str(&line(row));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,accuracy_pct,sensitivity_pct,specificity_pct,error_samples,time_secs\n");
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.method,
                f(r.accuracy_pct),
                f(r.sensitivity_pct),
                f(r.specificity_pct),
                f(r.error_samples),
                f(r.time_secs)
            );
        }
        out
    }
}

/// Timing of one method over a set of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub method: String,
    pub repeats: usize,
    pub intervals: usize,
    /// Wall time of each repeat in seconds.
    pub times_secs: Vec<f64>,
    pub median_secs: f64,
    pub intervals_per_sec: f64,
    /// Whether every repeat produced identical output.
    pub deterministic: bool,
}

/// Times `method` from R peaks to results over every record, `repeats` times.
pub fn benchmark(
    method: &dyn Delineator,
    records: &[(TimeSeriesRecord, Vec<usize>)],
    repeats: usize,
) -> Result<(BenchResult, Vec<DelineationResult>)> {
    if repeats == 0 {
        return invalid("repeats must be at least 1");
    }
    let mut times = Vec::with_capacity(repeats);
    let mut first: Option<Vec<DelineationResult>> = None;
    let mut deterministic = true;
    for _ in 0..repeats {
        let start = Instant::now();
        let out = records
            .iter()
            .map(|(rec, r)| method.delineate(rec, r))
            .collect::<Result<Vec<_>>>()?;
        times.push(start.elapsed().as_secs_f64());
        match &first {
            None => first = Some(out),
            Some(f) => deterministic &= *f == out,
        }
    }
    let outputs = first.unwrap_or_default();
    let intervals = outputs.iter().map(|o| o.intervals.len()).sum();
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    Ok((
        BenchResult {
            method: method.name().to_string(),
            repeats,
            intervals,
            times_secs: times,
            median_secs: median,
            intervals_per_sec: if median > 0.0 {
                intervals as f64 / median
            } else {
                f64::INFINITY
            },
            deterministic,
        },
        outputs,
    ))
}
