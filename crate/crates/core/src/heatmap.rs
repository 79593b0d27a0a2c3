//! Gaussian target heatmaps and λ-thresholded keypoint decoding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::net::HeatmapSet;
use crate::segment::BeatInterval;
use crate::types::{IntervalDelineation, KeypointKind, KeypointPrediction};

pub const DEFAULT_LAMBDA: f64 = 0.4;
pub const DEFAULT_SIGMA: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    /// Presence threshold on the channel maximum.
    pub lambda: f64,
    /// Target Gaussian width in resampled samples.
    pub sigma: f64,
    /// Optional per-kind thresholds overriding `lambda`.
    pub lambda_overrides: BTreeMap<KeypointKind, f64>,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            sigma: DEFAULT_SIGMA,
            lambda_overrides: BTreeMap::new(),
        }
    }
}

impl DecodeConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |l: f64| (0.0..=1.0).contains(&l);
        if !in_unit(self.lambda) || !self.lambda_overrides.values().all(|&l| in_unit(l)) {
            return invalid(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return invalid(format!("sigma {} must be positive", self.sigma));
        }
        Ok(())
    }

    pub fn lambda_for(&self, kind: KeypointKind) -> f64 {
        self.lambda_overrides.get(&kind).copied().unwrap_or(self.lambda)
    }
}

/// Ground truth for one keypoint in resampled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResampledFiducial {
    pub present: bool,
    pub index: usize,
}

impl ResampledFiducial {
    pub const ABSENT: Self = Self {
        present: false,
        index: 0,
    };

    pub fn at(index: usize) -> Self {
        Self { present: true, index }
    }
}

/// Builds K × L targets: a unit-peak Gaussian at each present keypoint,
/// zeros for absent ones. `fiducials` is indexed by channel.
pub fn make_target(fiducials: &[ResampledFiducial], length: usize, cfg: &DecodeConfig) -> Result<HeatmapSet> {
    cfg.validate()?;
    let mut out = HeatmapSet::zeros(fiducials.len(), length);
    let denom = 2.0 * cfg.sigma * cfg.sigma;
    for (k, f) in fiducials.iter().enumerate() {
        if !f.present {
            continue;
        }
        if f.index >= length {
            return invalid(format!("keypoint index {} outside [0, {length})", f.index));
        }
        let c = f.index as f64;
        for (j, v) in out.channel_mut(k).iter_mut().enumerate() {
            let d = j as f64 - c;
            *v = (-(d * d) / denom).exp();
        }
    }
    Ok(out)
}

/// Maximum and lowest-index argmax of a channel.
pub fn channel_peak(channel: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in channel.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Presence, resampled argmax and confidence for every channel at the given
/// thresholds, without coordinate mapping.
pub fn decode_resampled(heatmaps: &HeatmapSet, cfg: &DecodeConfig) -> Vec<(bool, usize, f64)> {
    (0..heatmaps.channels)
        .map(|k| {
            let (idx, conf) = channel_peak(heatmaps.channel(k));
            let lambda = KeypointKind::from_ordinal(k)
                .map(|kind| cfg.lambda_for(kind))
                .unwrap_or(cfg.lambda);
            (conf >= lambda, idx, conf)
        })
        .collect()
}

/// Decodes one interval's heatmaps into original-coordinate keypoints.
pub fn decode_keypoints(
    heatmaps: &HeatmapSet,
    interval: &BeatInterval,
    cfg: &DecodeConfig,
) -> Result<IntervalDelineation> {
    if heatmaps.length != interval.len() {
        return Err(Error::Shape(format!(
            "heatmap length {} vs interval length {}",
            heatmaps.length,
            interval.len()
        )));
    }
    if heatmaps.data.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return invalid("heatmap entries must lie in [0, 1]");
    }
    let mut keypoints = BTreeMap::new();
    for (k, (present, idx, confidence)) in decode_resampled(heatmaps, cfg).into_iter().enumerate() {
        let Some(kind) = KeypointKind::from_ordinal(k) else {
            continue;
        };
        keypoints.insert(
            kind,
            KeypointPrediction {
                present,
                location: interval.map_to_original(idx)?,
                confidence,
            },
        );
    }
    Ok(IntervalDelineation {
        r_start: interval.r_start,
        r_end: interval.r_end,
        keypoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval() -> BeatInterval {
        BeatInterval {
            r_start: 1000,
            r_end: 1200,
            values: vec![0.0; 256],
        }
    }

    #[test]
    fn target_closed_form() {
        let mut f = vec![ResampledFiducial::ABSENT; 6];
        f[1] = ResampledFiducial::at(100);
        let t = make_target(&f, 256, &DecodeConfig::default()).unwrap();
        let ch = t.channel(1);
        assert_eq!(ch[100], 1.0);
        assert!((ch[97] - (-0.5f64).exp()).abs() < 1e-12);
        assert!((ch[103] - 0.606531).abs() < 1e-6);
        assert_eq!(t.channel(0).iter().sum::<f64>(), 0.0);
        f[2] = ResampledFiducial::at(256);
        assert!(make_target(&f, 256, &DecodeConfig::default()).is_err());
    }

    #[test]
    fn decode_examples() {
        let mut h = HeatmapSet::zeros(6, 256);
        h.channel_mut(1)[100] = 0.7;
        h.channel_mut(4)[50] = 0.3;
        h.channel_mut(5)[40] = 0.9;
        h.channel_mut(5)[90] = 0.9;
        let iv = interval();
        let d = decode_keypoints(&h, &iv, &DecodeConfig::default()).unwrap();
        let p = d.get(KeypointKind::PPeak);
        assert!(p.present);
        assert_eq!(p.confidence, 0.7);
        assert_eq!(p.location, iv.map_to_original(100).unwrap());
        assert!(!d.get(KeypointKind::TPeak).present);
        assert_eq!(d.get(KeypointKind::TOff).location, iv.map_to_original(40).unwrap());
    }

    #[test]
    fn per_kind_override() {
        let mut h = HeatmapSet::zeros(6, 256);
        h.channel_mut(1)[10] = 0.5;
        let mut cfg = DecodeConfig::default();
        cfg.lambda_overrides.insert(KeypointKind::PPeak, 0.6);
        let d = decode_keypoints(&h, &interval(), &cfg).unwrap();
        assert!(!d.get(KeypointKind::PPeak).present);
    }

    #[test]
    fn decode_rejects_bad_input() {
        let h = HeatmapSet::zeros(6, 128);
        assert!(decode_keypoints(&h, &interval(), &DecodeConfig::default()).is_err());
        let mut h = HeatmapSet::zeros(6, 256);
        h.data[0] = 1.5;
        assert!(decode_keypoints(&h, &interval(), &DecodeConfig::default()).is_err());
        assert!(DecodeConfig::with_lambda(1.2).validate().is_err());
    }
}
