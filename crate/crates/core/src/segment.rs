//! R-R interval extraction and the resampled-coordinate mapping.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::TimeSeriesRecord;

/// Fixed model input length.
pub const DEFAULT_LENGTH: usize = 256;

/// One R-to-R segment, both ends inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatInterval {
    pub r_start: usize,
    pub r_end: usize,
    /// Resampled, z-scored samples of length L.
    pub values: Vec<f64>,
}

impl BeatInterval {
    pub fn raw_len(&self) -> usize {
        self.r_end - self.r_start + 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Maps a resampled index back to an original sample index.
    pub fn map_to_original(&self, resampled_index: usize) -> Result<usize> {
        map_to_original(self.r_start, self.r_end, self.len(), resampled_index)
    }

    /// Inverse of [`Self::map_to_original`], rounded to the nearest grid point.
    pub fn map_to_resampled(&self, original_index: usize) -> Result<usize> {
        map_to_resampled(self.r_start, self.r_end, self.len(), original_index)
    }
}

/// `r_start + round(j · (raw_len − 1)/(L − 1))`.
pub fn map_to_original(r_start: usize, r_end: usize, length: usize, index: usize) -> Result<usize> {
    if length < 2 || index >= length {
        return invalid(format!("resampled index {index} outside [0, {length})"));
    }
    if r_end <= r_start {
        return invalid(format!("empty interval [{r_start}, {r_end}]"));
    }
    let span = (r_end - r_start) as f64;
    let offset = (index as f64 * span / (length - 1) as f64).round() as usize;
    Ok(r_start + offset.min(r_end - r_start))
}

pub fn map_to_resampled(r_start: usize, r_end: usize, length: usize, original: usize) -> Result<usize> {
    if original < r_start || original > r_end || r_end <= r_start || length < 2 {
        return invalid(format!("sample {original} outside interval [{r_start}, {r_end}]"));
    }
    let pos = (original - r_start) as f64 * (length - 1) as f64 / (r_end - r_start) as f64;
    Ok((pos.round() as usize).min(length - 1))
}

/// Linear interpolation onto `length` uniformly spaced points spanning the
/// whole segment; both endpoints are reproduced exactly.
pub fn resample_to_length(segment: &[f64], length: usize) -> Result<Vec<f64>> {
    let n = segment.len();
    if n < 2 || length < 2 {
        return invalid(format!("cannot resample {n} samples to length {length}"));
    }
    if n == length {
        return Ok(segment.to_vec());
    }
    let scale = (n - 1) as f64 / (length - 1) as f64;
    let mut out = Vec::with_capacity(length);
    for j in 0..length {
        let pos = j as f64 * scale;
        let i = (pos.floor() as usize).min(n - 2);
        let frac = pos - i as f64;
        out.push(segment[i] + frac * (segment[i + 1] - segment[i]));
    }
    out[length - 1] = segment[n - 1];
    Ok(out)
}

/// Z-score; a (near-)constant input maps to all zeros.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    if values.is_empty() {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var < 1e-12 {
        return vec![0.0; values.len()];
    }
    let inv = 1.0 / var.sqrt();
    values.iter().map(|v| (v - mean) * inv).collect()
}

/// Builds one interval from original samples `[r_start, r_end]`.
pub fn make_interval(samples: &[f64], r_start: usize, r_end: usize, length: usize) -> Result<BeatInterval> {
    if r_end <= r_start || r_end >= samples.len() {
        return invalid(format!(
            "interval [{r_start}, {r_end}] invalid for {} samples",
            samples.len()
        ));
    }
    let resampled = resample_to_length(&samples[r_start..=r_end], length)?;
    Ok(BeatInterval {
        r_start,
        r_end,
        values: normalize(&resampled),
    })
}

/// Splits a record at consecutive R peaks. Samples before the first and after
/// the last peak are discarded.
pub fn split_intervals(record: &TimeSeriesRecord, rpeaks: &[usize], length: usize) -> Result<Vec<BeatInterval>> {
    if rpeaks.len() < 2 {
        return invalid(format!("need at least 2 R peaks, got {}", rpeaks.len()));
    }
    rpeaks
        .windows(2)
        .map(|w| make_interval(&record.samples, w[0], w[1], length))
        .collect()
}
