//! End-to-end delineation: R peaks in, per-interval keypoints out.

use std::collections::BTreeMap;

use crate::baseline::{delineate_wave_dwt, delineate_wave_peak, WaveDelineation, WtConfig};
use crate::error::{Error, Result};
use crate::heatmap::{decode_keypoints, DecodeConfig};
use crate::net::{load_weights, HeatmapSet, Model, ModelConfig, Parameters};
use crate::qrs::{detect_rpeaks, QrsConfig};
use crate::segment::{split_intervals, BeatInterval};
use crate::types::{DelineationResult, IntervalDelineation, KeypointPrediction, TimeSeriesRecord, Wave};

/// Intervals are pushed through the network in batches of this size.
const INFERENCE_CHUNK: usize = 64;

/// A method that turns a record plus its R peaks into keypoints.
pub trait Delineator: Send + Sync {
    fn name(&self) -> &str;

    /// Fewer than two R peaks yields a result with no intervals.
    fn delineate(&self, record: &TimeSeriesRecord, rpeaks: &[usize]) -> Result<DelineationResult>;
}

/// Detects R peaks and runs `method` on the record.
pub fn delineate_record(
    record: &TimeSeriesRecord,
    qrs: &QrsConfig,
    method: &dyn Delineator,
) -> Result<DelineationResult> {
    let rpeaks = detect_rpeaks(record, qrs)?;
    method.delineate(record, &rpeaks)
}

fn empty(record: &TimeSeriesRecord) -> DelineationResult {
    DelineationResult {
        record_id: record.record_id.clone(),
        fs: record.fs,
        intervals: Vec::new(),
    }
}

/// The heatmap network with its λ decoder.
pub struct KeedDelineator {
    model: Model,
    params: Parameters,
    decode: DecodeConfig,
}

impl KeedDelineator {
    pub fn new(params: Parameters, cfg: ModelConfig, decode: DecodeConfig) -> Result<Self> {
        decode.validate()?;
        let model = Model::new(cfg)?;
        if !params.same_layout(&Parameters::zeros(&cfg)?) {
            return Err(Error::Shape("parameters do not match the model configuration".into()));
        }
        Ok(Self { model, params, decode })
    }

    pub fn from_weights(bytes: &[u8], decode: DecodeConfig) -> Result<Self> {
        let (params, cfg) = load_weights(bytes)?;
        Self::new(params, cfg, decode)
    }

    pub fn config(&self) -> &ModelConfig {
        self.model.config()
    }

    pub fn decode_config(&self) -> &DecodeConfig {
        &self.decode
    }

    pub fn set_decode_config(&mut self, decode: DecodeConfig) -> Result<()> {
        decode.validate()?;
        self.decode = decode;
        Ok(())
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    /// Segmented intervals and their heatmaps, for callers that re-decode at
    /// several thresholds without re-running the network.
    pub fn heatmaps(
        &self,
        record: &TimeSeriesRecord,
        rpeaks: &[usize],
    ) -> Result<(Vec<BeatInterval>, Vec<HeatmapSet>)> {
        if rpeaks.len() < 2 {
            return Ok((Vec::new(), Vec::new()));
        }
        let intervals = split_intervals(record, rpeaks, self.model.config().length)?;
        let inputs: Vec<Vec<f64>> = intervals.iter().map(|iv| iv.values.clone()).collect();
        let mut maps = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(INFERENCE_CHUNK) {
            maps.extend(self.model.forward(&self.params, chunk)?);
        }
        Ok((intervals, maps))
    }

    pub fn decode(
        &self,
        record: &TimeSeriesRecord,
        intervals: &[BeatInterval],
        heatmaps: &[HeatmapSet],
    ) -> Result<DelineationResult> {
        let intervals = intervals
            .iter()
            .zip(heatmaps)
            .map(|(iv, h)| decode_keypoints(h, iv, &self.decode))
            .collect::<Result<Vec<_>>>()?;
        Ok(DelineationResult {
            record_id: record.record_id.clone(),
            fs: record.fs,
            intervals,
        })
    }
}

impl Delineator for KeedDelineator {
    fn name(&self) -> &str {
        "KEED"
    }

    fn delineate(&self, record: &TimeSeriesRecord, rpeaks: &[usize]) -> Result<DelineationResult> {
        let (intervals, maps) = self.heatmaps(record, rpeaks)?;
        self.decode(record, &intervals, &maps)
    }
}

type WaveFn = fn(&TimeSeriesRecord, &[usize], Wave, &WtConfig) -> Result<Vec<WaveDelineation>>;

fn baseline_result(
    record: &TimeSeriesRecord,
    rpeaks: &[usize],
    cfg: &WtConfig,
    wave_fn: WaveFn,
) -> Result<DelineationResult> {
    if rpeaks.len() < 2 {
        return Ok(empty(record));
    }
    let p = wave_fn(record, rpeaks, Wave::P, cfg)?;
    let t = wave_fn(record, rpeaks, Wave::T, cfg)?;
    let intervals = rpeaks
        .windows(2)
        .zip(p.iter().zip(&t))
        .map(|(r, (p, t))| {
            let mut keypoints = BTreeMap::new();
            for (wave, d) in [(Wave::P, p), (Wave::T, t)] {
                for (kind, loc) in wave.kinds().into_iter().zip([d.onset, d.peak, d.offset]) {
                    let pred = if d.present {
                        KeypointPrediction {
                            present: true,
                            location: loc,
                            confidence: 1.0,
                        }
                    } else {
                        KeypointPrediction::absent()
                    };
                    keypoints.insert(kind, pred);
                }
            }
            IntervalDelineation {
                r_start: r[0],
                r_end: r[1],
                keypoints,
            }
        })
        .collect();
    Ok(DelineationResult {
        record_id: record.record_id.clone(),
        fs: record.fs,
        intervals,
    })
}

/// Wavelet modulus-maxima baseline.
#[derive(Debug, Clone, Default)]
pub struct DwtDelineator {
    pub cfg: WtConfig,
}

impl Delineator for DwtDelineator {
    fn name(&self) -> &str {
        "DWT"
    }

    fn delineate(&self, record: &TimeSeriesRecord, rpeaks: &[usize]) -> Result<DelineationResult> {
        baseline_result(record, rpeaks, &self.cfg, delineate_wave_dwt)
    }
}

/// Windowed peak-search baseline.
#[derive(Debug, Clone, Default)]
pub struct PeakDelineator {
    pub cfg: WtConfig,
}

impl Delineator for PeakDelineator {
    fn name(&self) -> &str {
        "Peak"
    }

    fn delineate(&self, record: &TimeSeriesRecord, rpeaks: &[usize]) -> Result<DelineationResult> {
        baseline_result(record, rpeaks, &self.cfg, delineate_wave_peak)
    }
}
