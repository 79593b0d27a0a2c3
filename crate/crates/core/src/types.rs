//! Domain types shared by every stage of the pipeline.
//!
//! Locations are always integer sample indices into the original record;
//! times in seconds are derived as `index / fs` when needed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A sampled single-lead ECG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub record_id: String,
    pub lead: String,
}

impl TimeSeriesRecord {
    pub fn new(samples: Vec<f64>, fs: f64, record_id: impl Into<String>, lead: impl Into<String>) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return invalid(format!("sampling rate must be positive, got {fs}"));
        }
        if samples.is_empty() {
            return invalid("record has no samples");
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite sample at index {i}"));
        }
        Ok(Self {
            samples,
            fs,
            record_id: record_id.into(),
            lead: lead.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// The six fiducial points predicted per R-R interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeypointKind {
    POn,
    PPeak,
    POff,
    TOn,
    TPeak,
    TOff,
}

/// Number of keypoint kinds (heatmap channels).
pub const NUM_KEYPOINTS: usize = 6;

impl KeypointKind {
    pub const ALL: [KeypointKind; NUM_KEYPOINTS] = [
        KeypointKind::POn,
        KeypointKind::PPeak,
        KeypointKind::POff,
        KeypointKind::TOn,
        KeypointKind::TPeak,
        KeypointKind::TOff,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            KeypointKind::POn => "POn",
            KeypointKind::PPeak => "PPeak",
            KeypointKind::POff => "POff",
            KeypointKind::TOn => "TOn",
            KeypointKind::TPeak => "TPeak",
            KeypointKind::TOff => "TOff",
        }
    }

    pub fn wave(self) -> Wave {
        match self {
            KeypointKind::POn | KeypointKind::PPeak | KeypointKind::POff => Wave::P,
            _ => Wave::T,
        }
    }
}

impl fmt::Display for KeypointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KeypointKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown keypoint kind `{s}`")))
    }
}

/// The two delineated waves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wave {
    P,
    T,
}

impl Wave {
    /// Onset, peak and offset kinds of this wave.
    pub fn kinds(self) -> [KeypointKind; 3] {
        match self {
            Wave::P => [KeypointKind::POn, KeypointKind::PPeak, KeypointKind::POff],
            Wave::T => [KeypointKind::TOn, KeypointKind::TPeak, KeypointKind::TOff],
        }
    }

    pub fn peak(self) -> KeypointKind {
        self.kinds()[1]
    }
}

impl FromStr for Wave {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "P" => Ok(Wave::P),
            "T" => Ok(Wave::T),
            _ => Err(Error::Parse(format!("unknown wave `{s}`"))),
        }
    }
}

/// A single annotated fiducial in original-signal coordinates.
///
/// When `present` is false, `sample_index` carries no meaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiducialAnnotation {
    pub kind: KeypointKind,
    pub sample_index: usize,
    pub present: bool,
}

/// Prediction for one keypoint inside one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeypointPrediction {
    pub present: bool,
    pub location: usize,
    pub confidence: f64,
}

impl KeypointPrediction {
    pub fn absent() -> Self {
        Self {
            present: false,
            location: 0,
            confidence: 0.0,
        }
    }
}

/// Delineation of one R-R interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDelineation {
    pub r_start: usize,
    pub r_end: usize,
    pub keypoints: BTreeMap<KeypointKind, KeypointPrediction>,
}

impl IntervalDelineation {
    pub fn get(&self, kind: KeypointKind) -> KeypointPrediction {
        self.keypoints
            .get(&kind)
            .copied()
            .unwrap_or_else(KeypointPrediction::absent)
    }

    pub fn is_present(&self, kind: KeypointKind) -> bool {
        self.get(kind).present
    }
}

/// Per-interval keypoints for a whole record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelineationResult {
    pub record_id: String,
    pub fs: f64,
    pub intervals: Vec<IntervalDelineation>,
}

impl DelineationResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Counts intervals in which `kind` is predicted present.
    pub fn present_count(&self, kind: KeypointKind) -> usize {
        self.intervals.iter().filter(|iv| iv.is_present(kind)).count()
    }

    /// Checks the structural invariants: confidences in [0,1] and present
    /// locations inside their interval bounds.
    pub fn validate(&self) -> Result<()> {
        for iv in &self.intervals {
            if iv.r_end <= iv.r_start {
                return invalid(format!("interval [{}, {}] is empty", iv.r_start, iv.r_end));
            }
            for (kind, kp) in &iv.keypoints {
                if !(0.0..=1.0).contains(&kp.confidence) {
                    return invalid(format!("{kind} confidence {} outside [0,1]", kp.confidence));
                }
                if kp.present && (kp.location < iv.r_start || kp.location > iv.r_end) {
                    return invalid(format!(
                        "{kind} location {} outside [{}, {}]",
                        kp.location, iv.r_start, iv.r_end
                    ));
                }
            }
        }
        Ok(())
    }
}
