use super::{check_peaks, search_bounds, WaveDelineation, WtConfig};
use crate::error::Result;
use crate::filter::{bandpass, median, std_dev};
use crate::types::{TimeSeriesRecord, Wave};

/// Windowed extremum search on the band-limited signal.
///
/// The peak is the sample farthest from the window median; it must be
/// interior to the window and deviate by more than `presence_factor` × the
/// signal's standard deviation over the R-R interval. Onset and offset are
/// the nearest slope-sign changes on either side.
pub fn delineate_wave_peak(
    record: &TimeSeriesRecord,
    rpeaks: &[usize],
    wave: Wave,
    cfg: &WtConfig,
) -> Result<Vec<WaveDelineation>> {
    cfg.validate()?;
    check_peaks(rpeaks, record.len())?;
    let high = cfg.peak_band.1.min(0.45 * record.fs);
    let x = bandpass(&record.samples, cfg.peak_band.0, high, record.fs);
    Ok(rpeaks
        .windows(2)
        .map(|pair| delineate_interval(&x, pair[0], pair[1], cfg.window(wave), cfg))
        .collect())
}

fn delineate_interval(x: &[f64], a: usize, b: usize, window: (f64, f64), cfg: &WtConfig) -> WaveDelineation {
    let (lo, hi) = search_bounds(a, b, window);
    if hi <= lo + 2 {
        return WaveDelineation::ABSENT;
    }
    let win = &x[lo..=hi];
    let med = median(win);
    let (offset_in_win, dev) =
        win.iter()
            .enumerate()
            .map(|(i, v)| (i, (v - med).abs()))
            .fold(
                (0, f64::NEG_INFINITY),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    let peak = lo + offset_in_win;
    if peak == lo || peak == hi {
        return WaveDelineation::ABSENT;
    }
    if !(dev > cfg.presence_factor * std_dev(&x[a..=b])) {
        return WaveDelineation::ABSENT;
    }
    // walk downhill (relative to the peak's polarity) until the slope flips
    let up = x[peak] >= med;
    let higher = |i: usize, j: usize| if up { x[i] > x[j] } else { x[i] < x[j] };
    let mut onset = peak;
    while onset > a && higher(onset, onset - 1) {
        onset -= 1;
    }
    let mut offset = peak;
    while offset < b && higher(offset, offset + 1) {
        offset += 1;
    }
    WaveDelineation {
        present: true,
        onset,
        peak,
        offset,
    }
}
