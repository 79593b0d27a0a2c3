use super::{check_peaks, search_bounds, swt_decompose, WaveDelineation, WtConfig};
use crate::error::Result;
use crate::filter::rms;
use crate::types::{TimeSeriesRecord, Wave};

/// Modulus-maxima delineation of one wave kind in every R-R interval.
///
/// Within the search window of the analysis-scale detail, the largest
/// modulus maximum and its larger adjacent opposite-sign neighbour form the
/// candidate pair. The wave is present
/// when both exceed `presence_factor` × the detail's RMS over the whole R-R
/// interval; the peak is the zero crossing between them, and onset/offset
/// are where the detail falls below `onset_factor`/`offset_factor` of the
/// flanking extremum.
pub fn delineate_wave_dwt(
    record: &TimeSeriesRecord,
    rpeaks: &[usize],
    wave: Wave,
    cfg: &WtConfig,
) -> Result<Vec<WaveDelineation>> {
    cfg.validate()?;
    check_peaks(rpeaks, record.len())?;
    let details = swt_decompose(&record.samples, cfg.n_scales)?;
    let w = &details[cfg.analysis_scale - 1];
    Ok(rpeaks
        .windows(2)
        .map(|pair| delineate_interval(w, pair[0], pair[1], cfg.window(wave), cfg))
        .collect())
}

fn delineate_interval(w: &[f64], a: usize, b: usize, window: (f64, f64), cfg: &WtConfig) -> WaveDelineation {
    let (lo, hi) = search_bounds(a, b, window);
    if hi <= lo + 2 {
        return WaveDelineation::ABSENT;
    }
    // modulus maxima: strict interior local maxima of |w| inside the window,
    // so lobes of a neighbouring QRS that are cut by the window edge never count
    let maxima: Vec<usize> = (lo + 1..hi)
        .filter(|&i| {
            let m = w[i].abs();
            m > 0.0 && m >= w[i - 1].abs() && m > w[i + 1].abs()
        })
        .collect();
    let Some(&main) = maxima.iter().max_by(|&&i, &&j| w[i].abs().total_cmp(&w[j].abs())) else {
        return WaveDelineation::ABSENT;
    };
    let opposite = |i: &&usize| w[**i].signum() != w[main].signum();
    let before = maxima.iter().rev().filter(|&&i| i < main).find(opposite);
    let after = maxima.iter().filter(|&&i| i > main).find(opposite);
    let partner = match (before, after) {
        (Some(&b), Some(&a)) => {
            if w[b].abs() >= w[a].abs() {
                b
            } else {
                a
            }
        }
        (Some(&b), None) => b,
        (None, Some(&a)) => a,
        (None, None) => return WaveDelineation::ABSENT,
    };
    let eps = cfg.presence_factor * rms(&w[a..=b]);
    if w[main].abs() <= eps || w[partner].abs() <= eps {
        return WaveDelineation::ABSENT;
    }
    let (imax, imin) = (main, partner);
    let (first, second) = (imax.min(imin), imax.max(imin));
    let sign = w[first].signum();
    let mut peak = second;
    for j in first + 1..=second {
        if w[j].signum() != sign {
            peak = if w[j].abs() < w[j - 1].abs() { j } else { j - 1 };
            break;
        }
    }

    let onset_level = cfg.onset_factor * w[first].abs();
    let mut onset = first;
    while onset > a && w[onset].abs() >= onset_level {
        onset -= 1;
    }
    let offset_level = cfg.offset_factor * w[second].abs();
    let mut offset = second;
    while offset < b && w[offset].abs() >= offset_level {
        offset += 1;
    }
    WaveDelineation {
        present: true,
        onset,
        peak,
        offset,
    }
}
