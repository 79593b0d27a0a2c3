//! Second-order IIR sections and zero-phase filtering.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// Butterworth (Q = 1/√2) low-pass.
    pub fn lowpass(cutoff: f64, fs: f64) -> Self {
        let (cos, alpha) = Self::prewarp(cutoff, fs);
        let b1 = 1.0 - cos;
        Self::normalized([b1 / 2.0, b1, b1 / 2.0], [1.0 + alpha, -2.0 * cos, 1.0 - alpha])
    }

    /// Butterworth (Q = 1/√2) high-pass.
    pub fn highpass(cutoff: f64, fs: f64) -> Self {
        let (cos, alpha) = Self::prewarp(cutoff, fs);
        let b1 = 1.0 + cos;
        Self::normalized([b1 / 2.0, -b1, b1 / 2.0], [1.0 + alpha, -2.0 * cos, 1.0 - alpha])
    }

    fn prewarp(cutoff: f64, fs: f64) -> (f64, f64) {
        let w0 = 2.0 * PI * cutoff / fs;
        (w0.cos(), w0.sin() / std::f64::consts::SQRT_2)
    }

    fn normalized(b: [f64; 3], a: [f64; 3]) -> Self {
        Self {
            b: [b[0] / a[0], b[1] / a[0], b[2] / a[0]],
            a: [a[1] / a[0], a[2] / a[0]],
        }
    }

    /// Direct form II transposed, zero initial state.
    pub fn apply(&self, x: &mut [f64]) {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + z1;
            z1 = self.b[1] * input - self.a[0] * y + z2;
            z2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }
}

/// Forward-backward filtering through a cascade of sections, with odd
/// reflection padding at both ends to settle transients.
pub fn filtfilt(sections: &[Biquad], x: &[f64], pad: usize) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = x.len();
    let pad = pad.min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    for s in sections {
        s.apply(&mut ext);
    }
    ext.reverse();
    for s in sections {
        s.apply(&mut ext);
    }
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Zero-phase band-pass made of one high-pass and one low-pass section.
pub fn bandpass(x: &[f64], low: f64, high: f64, fs: f64) -> Vec<f64> {
    let sections = [Biquad::highpass(low, fs), Biquad::lowpass(high, fs)];
    let pad = (6.0 * fs / low).ceil() as usize;
    filtfilt(&sections, x, pad)
}

/// Centered moving average over `width` samples; values beyond the edges
/// count as zero.
pub fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let width = width.max(1);
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    let half = width / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + width - half).min(n);
            (prefix[hi] - prefix[lo]) / width as f64
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowpass_passes_dc() {
        let y = filtfilt(&[Biquad::lowpass(15.0, 250.0)], &[1.0; 500], 100);
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn highpass_blocks_dc() {
        let y = bandpass(&[3.0; 2000], 5.0, 15.0, 250.0);
        assert!(y.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn bandpass_attenuates_out_of_band() {
        let fs = 250.0;
        let tone = |f: f64| -> Vec<f64> { (0..2500).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect() };
        let gain = |f: f64| rms(&bandpass(&tone(f), 5.0, 15.0, fs)[500..2000]) / rms(&tone(f)[500..2000]);
        assert!(gain(9.0) > 0.7);
        assert!(gain(0.5) < 0.05);
        assert!(gain(60.0) < 0.1);
    }

    #[test]
    fn moving_average_of_constant() {
        let y = moving_average(&[2.0; 10], 4);
        assert!((y[5] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn summary_stats() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((std_dev(&[0.0, 2.0]) - 1.0).abs() < 1e-12);
        assert!((rms(&[3.0, 4.0]) - (12.5f64).sqrt()).abs() < 1e-12);
    }
}
