//! Wavelet modulus-maxima and peak-search delineators used as comparison
//! baselines.
//!
//! Every threshold and search window here is hand-tuned configuration.

mod dwt;
mod peak;
mod swt;

use serde::{Deserialize, Serialize};

pub use dwt::delineate_wave_dwt;
pub use peak::delineate_wave_peak;
pub use swt::{group_delay, swt_decompose, HIGHPASS, LOWPASS};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WtConfig {
    pub n_scales: usize,
    /// Scale (1-based) at which P and T waves are analysed.
    pub analysis_scale: usize,
    /// Fraction of the R-R interval searched for the P wave of the closing beat.
    pub p_search: (f64, f64),
    /// Fraction of the R-R interval searched for the T wave of the opening beat.
    pub t_search: (f64, f64),
    pub presence_factor: f64,
    pub onset_factor: f64,
    pub offset_factor: f64,
    /// Band used by the peak-search method, Hz.
    pub peak_band: (f64, f64),
}

impl Default for WtConfig {
    fn default() -> Self {
        Self {
            n_scales: 5,
            analysis_scale: 4,
            p_search: (0.55, 0.95),
            t_search: (0.05, 0.55),
            presence_factor: 0.25,
            onset_factor: 0.05,
            offset_factor: 0.10,
            peak_band: (0.5, 20.0),
        }
    }
}

impl WtConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |(a, b): (f64, f64)| 0.0 < a && a < b && b < 1.0;
        if !frac(self.p_search) || !frac(self.t_search) {
            return invalid("search windows must satisfy 0 < start < end < 1");
        }
        let (p, t) = (self.p_search, self.t_search);
        if p.0 < t.1 && t.0 < p.1 {
            return invalid("P and T search windows overlap");
        }
        let unit = |f: f64| 0.0 < f && f < 1.0;
        if !unit(self.presence_factor) || !unit(self.onset_factor) || !unit(self.offset_factor) {
            return invalid("presence, onset and offset factors must lie in (0, 1)");
        }
        if self.analysis_scale == 0 || self.analysis_scale > self.n_scales {
            return invalid("analysis scale must be within 1..=n_scales");
        }
        if !(0.0 < self.peak_band.0 && self.peak_band.0 < self.peak_band.1) {
            return invalid("peak band must be increasing and positive");
        }
        Ok(())
    }

    pub fn window(&self, wave: crate::types::Wave) -> (f64, f64) {
        match wave {
            crate::types::Wave::P => self.p_search,
            crate::types::Wave::T => self.t_search,
        }
    }
}

/// One wave's delineation inside one R-R interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveDelineation {
    pub present: bool,
    pub onset: usize,
    pub peak: usize,
    pub offset: usize,
}

impl WaveDelineation {
    pub const ABSENT: Self = Self {
        present: false,
        onset: 0,
        peak: 0,
        offset: 0,
    };
}

/// Absolute sample bounds of a search window inside `[a, b]`.
pub(crate) fn search_bounds(a: usize, b: usize, window: (f64, f64)) -> (usize, usize) {
    let rr = (b - a) as f64;
    let lo = a + (window.0 * rr).round() as usize;
    let hi = (a + (window.1 * rr).round() as usize).min(b);
    (lo, hi.max(lo))
}

pub(crate) fn check_peaks(rpeaks: &[usize], n: usize) -> Result<()> {
    if rpeaks.len() < 2 {
        return invalid(format!("need at least 2 R peaks, got {}", rpeaks.len()));
    }
    if !rpeaks.windows(2).all(|w| w[0] < w[1]) || rpeaks[rpeaks.len() - 1] >= n {
        return invalid("R peaks must be strictly increasing and inside the record");
    }
    Ok(())
}
