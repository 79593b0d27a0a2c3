//! Pan-Tompkins R-peak detection at arbitrary sampling rates.
//!
//! Band-pass → five-point derivative → squaring → moving-window
//! integration, followed by dual adaptive thresholds with search-back and
//! T-wave rejection. All filters are zero-phase so the integrator peaks line
//! up with the QRS complex without delay bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::filter::{bandpass, median, moving_average};
use crate::types::TimeSeriesRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QrsConfig {
    pub band_low: f64,
    pub band_high: f64,
    /// Seconds.
    pub integration_window: f64,
    /// Seconds.
    pub refractory: f64,
    /// Seconds.
    pub twave_window: f64,
    pub searchback: bool,
}

impl Default for QrsConfig {
    fn default() -> Self {
        Self {
            band_low: 5.0,
            band_high: 15.0,
            integration_window: 0.150,
            refractory: 0.200,
            twave_window: 0.360,
            searchback: true,
        }
    }
}

impl QrsConfig {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(0.0 < self.band_low && self.band_low < self.band_high && self.band_high < fs / 2.0) {
            return invalid(format!(
                "band {}-{} Hz invalid at fs {fs}",
                self.band_low, self.band_high
            ));
        }
        if !(self.integration_window > 0.0 && self.refractory > 0.0 && self.twave_window > 0.0) {
            return invalid("QRS windows must be positive");
        }
        Ok(())
    }
}

const EDGE_SECS: f64 = 0.2;
const REFINE_SECS: f64 = 0.05;
const REFINE_BAND: (f64, f64) = (0.5, 40.0);
const UPDATE: f64 = 0.125;
const SEARCHBACK_UPDATE: f64 = 0.25;
const SEARCHBACK_RR: f64 = 1.66;
const RR_HISTORY: usize = 8;

struct Candidate {
    index: usize,
    value: f64,
}

struct Detector<'a> {
    cfg: &'a QrsConfig,
    slope: &'a [f64],
    slope_half: usize,
    refractory: usize,
    twave: usize,
    spki: f64,
    npki: f64,
    peaks: Vec<usize>,
    peak_slopes: Vec<f64>,
}

impl Detector<'_> {
    fn threshold(&self) -> f64 {
        self.npki + 0.25 * (self.spki - self.npki)
    }

    fn rr_average(&self) -> Option<f64> {
        if self.peaks.len() < 2 {
            return None;
        }
        let rr: Vec<usize> = self.peaks.windows(2).map(|w| w[1] - w[0]).collect();
        let recent = &rr[rr.len().saturating_sub(RR_HISTORY)..];
        Some(recent.iter().sum::<usize>() as f64 / recent.len() as f64)
    }

    fn max_slope(&self, index: usize) -> f64 {
        let lo = index.saturating_sub(self.slope_half);
        let hi = (index + self.slope_half + 1).min(self.slope.len());
        self.slope[lo..hi].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn accept(&mut self, index: usize, value: f64, update: f64) {
        self.spki = update * value + (1.0 - update) * self.spki;
        self.peaks.push(index);
        self.peak_slopes.push(self.max_slope(index));
    }

    /// Looks back for a missed beat before `until` with the halved threshold.
    fn search_back(&mut self, candidates: &[Candidate], until: usize) {
        loop {
            let (Some(&last), Some(rr)) = (self.peaks.last(), self.rr_average()) else {
                return;
            };
            if (until - last) as f64 <= SEARCHBACK_RR * rr {
                return;
            }
            let thr2 = 0.5 * self.threshold();
            let best = candidates
                .iter()
                .filter(|c| c.index >= last + self.refractory && c.index < until && c.value > thr2)
                .max_by(|a, b| a.value.total_cmp(&b.value));
            match best {
                Some(c) => self.accept(c.index, c.value, SEARCHBACK_UPDATE),
                None => return,
            }
        }
    }

    fn process(&mut self, c: &Candidate, candidates: &[Candidate]) {
        if self.cfg.searchback {
            self.search_back(candidates, c.index);
        }
        let last = self.peaks.last().copied();
        if let Some(last) = last {
            if c.index < last + self.refractory {
                return;
            }
        }
        if c.value > self.threshold() {
            if let (Some(last), Some(&prev_slope)) = (last, self.peak_slopes.last()) {
                if c.index < last + self.twave && self.max_slope(c.index) < 0.5 * prev_slope {
                    self.npki = UPDATE * c.value + (1.0 - UPDATE) * self.npki;
                    return;
                }
            }
            self.accept(c.index, c.value, UPDATE);
        } else {
            self.npki = UPDATE * c.value + (1.0 - UPDATE) * self.npki;
        }
    }
}

/// Detects R peaks and returns strictly increasing sample indices.
pub fn detect_rpeaks(record: &TimeSeriesRecord, cfg: &QrsConfig) -> Result<Vec<usize>> {
    let fs = record.fs;
    if fs < 100.0 {
        return invalid(format!("sampling rate {fs} Hz is below 100 Hz"));
    }
    let n = record.len();
    if (n as f64) < 2.0 * fs {
        return invalid(format!("record of {n} samples is shorter than 2 s"));
    }
    cfg.validate(fs)?;

    let filtered = bandpass(&record.samples, cfg.band_low, cfg.band_high, fs);
    let derivative = five_point_derivative(&filtered, fs);
    let squared: Vec<f64> = derivative.iter().map(|d| d * d).collect();
    let window = ((cfg.integration_window * fs).round() as usize).max(1);
    let integrated = moving_average(&squared, window);

    let edge = (EDGE_SECS * fs).ceil() as usize;
    let hi = n.saturating_sub(edge);
    let refractory = (cfg.refractory * fs).round() as usize;
    // one candidate per refractory neighbourhood: noise ripples riding on a
    // QRS bump never outrank the bump's own maximum
    let candidates: Vec<Candidate> = (edge.max(1)..hi.min(n - 1))
        .filter(|&i| integrated[i] > integrated[i - 1] && integrated[i] >= integrated[i + 1])
        .filter(|&i| {
            let lo = i.saturating_sub(refractory);
            let up = (i + refractory + 1).min(n);
            (lo..up).all(|j| integrated[j] < integrated[i] || (integrated[j] == integrated[i] && j >= i))
        })
        .map(|i| Candidate {
            index: i,
            value: integrated[i],
        })
        .collect();

    let learn = &integrated[..(2.0 * fs) as usize];
    let learn_max = learn.iter().fold(0.0f64, |m, &v| m.max(v));
    if learn_max <= 0.0 || candidates.is_empty() {
        return Ok(Vec::new());
    }
    let mut det = Detector {
        cfg,
        slope: &derivative,
        slope_half: window / 2,
        refractory,
        twave: (cfg.twave_window * fs).round() as usize,
        spki: learn_max / 3.0,
        npki: 0.5 * learn.iter().sum::<f64>() / learn.len() as f64,
        peaks: Vec::new(),
        peak_slopes: Vec::new(),
    };
    for c in &candidates {
        det.process(c, &candidates);
    }
    if cfg.searchback {
        det.search_back(&candidates, hi);
    }
    let mut coarse = det.peaks;
    coarse.sort_unstable();

    // Refine to the largest deviation from the local median of a broadband
    // copy, then re-impose the refractory gap.
    let broad = bandpass(&record.samples, REFINE_BAND.0, REFINE_BAND.1.min(0.45 * fs), fs);
    let reach = (REFINE_SECS * fs).round() as usize;
    let mut refined: Vec<usize> = Vec::with_capacity(coarse.len());
    for p in coarse {
        let lo = p.saturating_sub(reach).max(edge);
        let up = (p + reach + 1).min(hi);
        if lo >= up {
            continue;
        }
        let med = median(&broad[lo..up]);
        let dev = |i: usize| (broad[i] - med).abs();
        let best = (lo..up)
            .max_by(|&a, &b| dev(a).total_cmp(&dev(b)).then(b.cmp(&a)))
            .unwrap_or(p);
        match refined.last() {
            Some(&prev) if best <= prev || best - prev < refractory => {
                if best != prev && dev(best) > (broad[prev] - med).abs() {
                    refined.pop();
                    refined.push(best);
                }
            }
            _ => refined.push(best),
        }
    }
    Ok(refined)
}

/// Zero-phase five-point derivative `[1, 2, 0, -2, -1] / 8`, scaled by `fs`.
fn five_point_derivative(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    let at = |i: isize| x[i.clamp(0, n as isize - 1) as usize];
    (0..n as isize)
        .map(|i| (2.0 * at(i + 1) + at(i + 2) - at(i - 2) - 2.0 * at(i - 1)) * fs / 8.0)
        .collect()
}
