//! Synthetic ECG built from Gaussian bumps, with exact fiducial truth.
//!
//! Each beat is the sum of P, Q, R, S and T Gaussians whose centers sit at
//! integer sample positions, so wave peaks coincide with annotated indices.
//! Onset and offset are defined at ±2.5 widths from the center. During
//! P-absent episodes the P bump is replaced by low-amplitude fibrillatory
//! activity.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::heatmap::{make_target, DecodeConfig, ResampledFiducial};
use crate::io::write_csv_record;
use crate::net::TrainingPair;
use crate::segment::{make_interval, map_to_resampled, BeatInterval};
use crate::types::{FiducialAnnotation, KeypointKind, TimeSeriesRecord, Wave, NUM_KEYPOINTS};

/// Onset/offset distance from the wave center, in widths.
pub const EDGE_WIDTHS: f64 = 2.5;
const LEAD_IN_SECS: f64 = 1.0;
const TAIL_SECS: f64 = 1.0;
const FWAVE_FRACTION: f64 = 0.15;
const TAPER_SECS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveShape {
    /// mV.
    pub amplitude: f64,
    /// Center relative to the R peak, as a fraction of the R-R interval.
    pub center: f64,
    /// Gaussian standard deviation in seconds.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatTemplate {
    pub p: WaveShape,
    pub q: WaveShape,
    pub r: WaveShape,
    pub s: WaveShape,
    pub t: WaveShape,
    /// Seconds.
    pub rr: f64,
    pub p_present: bool,
    pub t_present: bool,
}

impl Default for BeatTemplate {
    fn default() -> Self {
        Self {
            p: WaveShape {
                amplitude: 0.15,
                center: -0.20,
                width: 0.020,
            },
            q: WaveShape {
                amplitude: -0.10,
                center: -0.03,
                width: 0.010,
            },
            r: WaveShape {
                amplitude: 1.00,
                center: 0.0,
                width: 0.010,
            },
            s: WaveShape {
                amplitude: -0.20,
                center: 0.03,
                width: 0.010,
            },
            t: WaveShape {
                amplitude: 0.30,
                center: 0.35,
                width: 0.040,
            },
            rr: 0.8,
            p_present: true,
            t_present: true,
        }
    }
}

impl BeatTemplate {
    fn waves(&self) -> [&WaveShape; 5] {
        [&self.p, &self.q, &self.r, &self.s, &self.t]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.waves();
        if w.iter().any(|s| !(s.width > 0.0)) || !(self.rr > 0.0) {
            return invalid("template widths and rr must be positive");
        }
        if w.iter()
            .enumerate()
            .any(|(i, s)| i != 2 && s.amplitude.abs() >= self.r.amplitude)
        {
            return invalid("R amplitude must dominate every other wave");
        }
        if !w.windows(2).all(|p| p[0].center < p[1].center) {
            return invalid("wave centers must be ordered P < Q < R < S < T");
        }
        Ok(())
    }

    /// Copy with amplitudes, widths and centers scaled by independent factors
    /// drawn from `1 ± spread`.
    pub fn perturbed(&self, rng: &mut impl Rng, spread: f64) -> Self {
        let mut f = |v: f64| v * (1.0 + rng.gen_range(-spread..=spread));
        let mut out = self.clone();
        for s in [&mut out.p, &mut out.q, &mut out.r, &mut out.s, &mut out.t] {
            s.amplitude = f(s.amplitude);
            s.width = f(s.width);
        }
        out.p.center = f(out.p.center);
        out.t.center = f(out.t.center);
        out.rr = f(out.rr);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub n_beats: usize,
    pub fs: f64,
    /// Mean R-R in seconds; overrides `template.rr`.
    pub rr_mean: f64,
    /// Uniform relative jitter on each R-R.
    pub rr_jitter: f64,
    /// Inclusive beat ranges during which P waves are absent.
    pub p_dropout: Vec<(usize, usize)>,
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
    pub template: BeatTemplate,
    pub record_id: String,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_beats: 100,
            fs: 250.0,
            rr_mean: 0.8,
            rr_jitter: 0.1,
            p_dropout: Vec::new(),
            noise_snr_db: None,
            seed: 0,
            template: BeatTemplate::default(),
            record_id: "synth".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveTruth {
    pub on: usize,
    pub peak: usize,
    pub off: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatTruth {
    pub r: usize,
    pub p: Option<WaveTruth>,
    pub t: Option<WaveTruth>,
}

impl BeatTruth {
    pub fn wave(&self, wave: Wave) -> Option<WaveTruth> {
        match wave {
            Wave::P => self.p,
            Wave::T => self.t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Episode {
    Normal,
    PAbsent,
}

/// Truth sidecar written next to an exported record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub record_id: String,
    pub fs: f64,
    pub beats: Vec<BeatTruth>,
}

impl TruthFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn r_peaks(&self) -> Vec<usize> {
        self.beats.iter().map(|b| b.r).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecord {
    pub record: TimeSeriesRecord,
    pub beats: Vec<BeatTruth>,
    pub episodes: Vec<Episode>,
    /// Per-beat (center sample, amplitude, width in samples) of every bump,
    /// P included only when present.
    pub bumps: Vec<(usize, f64, f64)>,
}

impl SynthRecord {
    pub fn r_peaks(&self) -> Vec<usize> {
        self.beats.iter().map(|b| b.r).collect()
    }

    /// Fiducials sorted by sample index; absent waves appear with
    /// `present = false` at their beat's R index.
    pub fn truth(&self) -> Vec<FiducialAnnotation> {
        let mut out = Vec::new();
        for b in &self.beats {
            for wave in [Wave::P, Wave::T] {
                let kinds = wave.kinds();
                match b.wave(wave) {
                    Some(w) => {
                        for (kind, idx) in kinds.into_iter().zip([w.on, w.peak, w.off]) {
                            out.push(FiducialAnnotation {
                                kind,
                                sample_index: idx,
                                present: true,
                            });
                        }
                    }
                    None => {
                        for kind in kinds {
                            out.push(FiducialAnnotation {
                                kind,
                                sample_index: b.r,
                                present: false,
                            });
                        }
                    }
                }
            }
        }
        out.sort_by_key(|f| (f.sample_index, f.kind));
        out
    }

    pub fn truth_file(&self) -> TruthFile {
        TruthFile {
            record_id: self.record.record_id.clone(),
            fs: self.record.fs,
            beats: self.beats.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        write_csv_record(&self.record)
    }
}

fn gaussian(n: f64, center: f64, width: f64) -> f64 {
    let d = (n - center) / width;
    (-0.5 * d * d).exp()
}

fn wave_truth(center: usize, width_samples: f64) -> Option<WaveTruth> {
    let half = (EDGE_WIDTHS * width_samples).round() as usize;
    Some(WaveTruth {
        on: center.checked_sub(half)?,
        peak: center,
        off: center + half,
    })
}

/// Generates a record from `params`; fully determined by `params.seed`.
pub fn gen_record(params: &SynthParams) -> Result<SynthRecord> {
    let fs = params.fs;
    if params.n_beats < 2 {
        return invalid("need at least 2 beats");
    }
    if fs < 100.0 {
        return invalid(format!("sampling rate {fs} below 100 Hz"));
    }
    if !(params.rr_mean > 0.0) || !(0.0..0.5).contains(&params.rr_jitter) {
        return invalid("rr_mean must be positive and rr_jitter in [0, 0.5)");
    }
    for &(a, b) in &params.p_dropout {
        if a > b || b >= params.n_beats {
            return invalid(format!("P dropout range {a}..={b} outside 0..{}", params.n_beats));
        }
    }
    let tpl = &params.template;
    tpl.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // R positions
    let mut rr = Vec::with_capacity(params.n_beats);
    for _ in 0..params.n_beats {
        let j = if params.rr_jitter > 0.0 {
            rng.gen_range(-params.rr_jitter..=params.rr_jitter)
        } else {
            0.0
        };
        rr.push(params.rr_mean * (1.0 + j));
    }
    let mut r_idx = Vec::with_capacity(params.n_beats);
    let mut pos = (LEAD_IN_SECS * fs).round() as usize;
    for (i, &interval) in rr.iter().enumerate() {
        if i > 0 {
            pos += (interval * fs).round() as usize;
        }
        r_idx.push(pos);
    }
    let n = pos + (TAIL_SECS.max(rr[params.n_beats - 1]) * fs).round() as usize;

    let episodes: Vec<Episode> = (0..params.n_beats)
        .map(|i| {
            let absent = !tpl.p_present || params.p_dropout.iter().any(|&(a, b)| (a..=b).contains(&i));
            if absent {
                Episode::PAbsent
            } else {
                Episode::Normal
            }
        })
        .collect();

    let mut beats = Vec::with_capacity(params.n_beats);
    let mut bumps = Vec::new();
    let place = |r: usize, shape: &WaveShape, rr_s: f64| -> Option<usize> {
        let c = r as f64 + (shape.center * rr_s * fs).round();
        (c >= 0.0 && (c as usize) < n).then_some(c as usize)
    };
    for (i, &r) in r_idx.iter().enumerate() {
        // offsets scale with the R-R interval that precedes the beat
        let rr_s = rr[i];
        let mut wave_at = |shape: &WaveShape, keep: bool| -> Result<Option<WaveTruth>> {
            let c = place(r, shape, rr_s).ok_or_else(|| crate::Error::InvalidInput("wave outside record".into()))?;
            let w = shape.width * fs;
            if keep {
                bumps.push((c, shape.amplitude, w));
            }
            Ok(wave_truth(c, w))
        };
        let p = wave_at(&tpl.p, episodes[i] == Episode::Normal)?;
        wave_at(&tpl.q, true)?;
        wave_at(&tpl.r, true)?;
        wave_at(&tpl.s, true)?;
        let t = wave_at(&tpl.t, tpl.t_present)?;
        let p = if episodes[i] == Episode::Normal { p } else { None };
        let t = if tpl.t_present { t } else { None };
        for w in p.iter().chain(t.iter()) {
            if w.off >= n {
                return invalid("wave extends past the end of the record");
            }
        }
        if p.is_none() && episodes[i] == Episode::Normal {
            return invalid("P wave starts before the record");
        }
        beats.push(BeatTruth { r, p, t });
    }

    let mut samples = vec![0.0; n];
    for &(c, amp, w) in &bumps {
        let reach = (10.0 * w).ceil() as usize;
        let lo = c.saturating_sub(reach);
        let hi = (c + reach + 1).min(n);
        for (k, s) in samples[lo..hi].iter_mut().enumerate() {
            *s += amp * gaussian((lo + k) as f64, c as f64, w);
        }
    }

    // fibrillatory activity over each contiguous P-absent run
    let mut i = 0;
    while i < params.n_beats {
        if episodes[i] != Episode::PAbsent {
            i += 1;
            continue;
        }
        let start = i;
        while i < params.n_beats && episodes[i] == Episode::PAbsent {
            i += 1;
        }
        let lo = if start == 0 { 0 } else { r_idx[start - 1] };
        let hi = r_idx[i - 1];
        let amp = FWAVE_FRACTION * tpl.p.amplitude.abs() / 3.0;
        let comps: Vec<(f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(4.0..9.0), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let taper = (TAPER_SECS * fs).max(1.0);
        for k in lo..hi {
            let t = k as f64 / fs;
            let edge = ((k - lo) as f64).min((hi - k) as f64);
            let env = if edge < taper {
                0.5 - 0.5 * (PI * edge / taper).cos()
            } else {
                1.0
            };
            let v: f64 = comps.iter().map(|&(f, ph)| (2.0 * PI * f * t + ph).sin()).sum();
            samples[k] += env * amp * v;
        }
    }

    if let Some(snr) = params.noise_snr_db {
        let power = samples.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let std = (power / 10f64.powf(snr / 10.0)).sqrt();
        let normal = Normal::new(0.0, std).map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
        for s in &mut samples {
            *s += normal.sample(&mut rng);
        }
    }

    Ok(SynthRecord {
        record: TimeSeriesRecord::new(samples, fs, params.record_id.clone(), "synth")?,
        beats,
        episodes,
        bumps,
    })
}

/// Recipe for a seeded set of records with varied morphology, rate and noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusParams {
    pub n_records: usize,
    pub beats_per_record: usize,
    pub fs: f64,
    /// Fraction of records whose P waves are replaced by fibrillatory activity.
    pub p_absent_fraction: f64,
    /// Fraction of records with additive noise.
    pub noisy_fraction: f64,
    /// SNR range (dB) for noisy records.
    pub snr_db: (f64, f64),
    /// Relative spread applied to every template parameter.
    pub template_spread: f64,
    /// Range of mean R-R intervals in seconds.
    pub rr_range: (f64, f64),
    pub seed: u64,
    pub id_prefix: String,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            n_records: 10,
            beats_per_record: 21,
            fs: 250.0,
            p_absent_fraction: 0.25,
            noisy_fraction: 0.5,
            snr_db: (15.0, 30.0),
            template_spread: 0.15,
            rr_range: (0.6, 1.1),
            seed: 0,
            id_prefix: "synth".into(),
        }
    }
}

const SINUS_JITTER: f64 = 0.1;
const FIBRILLATION_JITTER: f64 = 0.25;

/// Generates `n_records` records. P-absent records are spread evenly so the
/// absent share of intervals matches `p_absent_fraction` as closely as the
/// record count allows.
pub fn gen_corpus(p: &CorpusParams) -> Result<Vec<SynthRecord>> {
    let unit = |f: f64| (0.0..=1.0).contains(&f);
    if !unit(p.p_absent_fraction) || !unit(p.noisy_fraction) {
        return invalid("corpus fractions must lie in [0, 1]");
    }
    if !(p.rr_range.0 > 0.0 && p.rr_range.0 <= p.rr_range.1) || p.snr_db.0 > p.snr_db.1 {
        return invalid("corpus ranges must be increasing");
    }
    if !(0.0..0.5).contains(&p.template_spread) {
        return invalid("template spread must lie in [0, 0.5)");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let base = BeatTemplate::default();
    (0..p.n_records)
        .map(|i| {
            let f = p.p_absent_fraction;
            let absent = ((i + 1) as f64 * f).floor() > (i as f64 * f).floor();
            let noisy = rng.gen_bool(p.noisy_fraction);
            let snr = rng.gen_range(p.snr_db.0..=p.snr_db.1);
            let template = base.perturbed(&mut rng, p.template_spread);
            let params = SynthParams {
                n_beats: p.beats_per_record,
                fs: p.fs,
                rr_mean: rng.gen_range(p.rr_range.0..=p.rr_range.1),
                rr_jitter: if absent { FIBRILLATION_JITTER } else { SINUS_JITTER },
                p_dropout: if absent {
                    vec![(0, p.beats_per_record - 1)]
                } else {
                    Vec::new()
                },
                noise_snr_db: noisy.then_some(snr),
                seed: rng.gen(),
                template,
                record_id: format!("{}{:04}", p.id_prefix, i),
            };
            gen_record(&params)
        })
        .collect()
}

/// Resampled-coordinate truth for the interval between beats `i` and `i + 1`:
/// T keypoints from beat `i`, P keypoints from beat `i + 1`.
pub fn interval_truth(beats: &[BeatTruth], i: usize, length: usize) -> Result<[ResampledFiducial; NUM_KEYPOINTS]> {
    let (a, b) = (&beats[i], &beats[i + 1]);
    let mut out = [ResampledFiducial::ABSENT; NUM_KEYPOINTS];
    for (wave, source) in [(Wave::P, b.p), (Wave::T, a.t)] {
        if let Some(w) = source {
            for (kind, idx) in wave.kinds().into_iter().zip([w.on, w.peak, w.off]) {
                out[kind.ordinal()] = ResampledFiducial::at(map_to_resampled(a.r, b.r, length, idx)?);
            }
        }
    }
    Ok(out)
}

/// Intervals cut at the ground-truth R peaks with their resampled truth.
pub fn labelled_intervals(
    record: &TimeSeriesRecord,
    beats: &[BeatTruth],
    length: usize,
) -> Result<Vec<(BeatInterval, [ResampledFiducial; NUM_KEYPOINTS])>> {
    (0..beats.len().saturating_sub(1))
        .map(|i| {
            let iv = make_interval(&record.samples, beats[i].r, beats[i + 1].r, length)?;
            Ok((iv, interval_truth(beats, i, length)?))
        })
        .collect()
}

/// Input/target pairs for every interval of every record.
pub fn to_training_set(records: &[SynthRecord], length: usize, cfg: &DecodeConfig) -> Result<Vec<TrainingPair>> {
    let mut out = Vec::new();
    for rec in records {
        for (iv, truth) in labelled_intervals(&rec.record, &rec.beats, length)? {
            out.push(TrainingPair {
                input: iv.values,
                target: make_target(&truth, length, cfg)?,
            });
        }
    }
    Ok(out)
}

/// Present flag and resampled index of `kind` in a truth array.
pub fn truth_of(truth: &[ResampledFiducial; NUM_KEYPOINTS], kind: KeypointKind) -> ResampledFiducial {
    truth[kind.ordinal()]
}
