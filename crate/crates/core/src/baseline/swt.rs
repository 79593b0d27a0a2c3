//! Undecimated (à trous) quadratic-spline wavelet transform.
//!
//! Low-pass `[1, 3, 3, 1] / 8`, high-pass `[2, -2]`, both dilated by
//! `2^(s-1)` at scale `s`. Each detail is shifted back by the integer part of
//! its cascade's group delay so wave extrema line up with zero crossings.

use crate::error::{invalid, Result};

pub const LOWPASS: [f64; 4] = [0.125, 0.375, 0.375, 0.125];
pub const HIGHPASS: [f64; 2] = [2.0, -2.0];

/// Integer group delay of the scale-`s` detail cascade (1-based scale).
pub fn group_delay(scale: usize) -> usize {
    // high-pass delay 0.5·2^(s-1) plus low-pass delay 1.5·2^(j-1) for j < s;
    // the sum is always k + 0.5, truncated to k
    let d = 1usize << (scale - 1);
    let lows: usize = (1..scale).map(|j| 3 * (1usize << (j - 1))).sum();
    (d + lows) / 2
}

/// Half-sample symmetric index into `0..n`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let mut k = i.rem_euclid(period);
    if k >= n as isize {
        k = period - 1 - k;
    }
    k as usize
}

/// Detail coefficients at scales `1..=n_scales`, each the input length.
pub fn swt_decompose(signal: &[f64], n_scales: usize) -> Result<Vec<Vec<f64>>> {
    let n = signal.len();
    if n_scales == 0 || n_scales > 16 {
        return invalid(format!("n_scales {n_scales} outside 1..=16"));
    }
    if n <= 1 << n_scales {
        return invalid(format!("signal of {n} samples too short for {n_scales} scales"));
    }
    let pad = 4 * (1usize << n_scales) + 8;
    let total = n + 2 * pad;
    let mut approx: Vec<f64> = (0..total)
        .map(|k| signal[reflect(k as isize - pad as isize, n)])
        .collect();
    let mut details = Vec::with_capacity(n_scales);
    for s in 1..=n_scales {
        let d = 1usize << (s - 1);
        let mut detail = vec![0.0; total];
        let mut next = approx.clone();
        for k in 0..total {
            if k >= d {
                detail[k] = HIGHPASS[0] * approx[k] + HIGHPASS[1] * approx[k - d];
            }
            if k >= 3 * d {
                next[k] = LOWPASS[0] * approx[k]
                    + LOWPASS[1] * approx[k - d]
                    + LOWPASS[2] * approx[k - 2 * d]
                    + LOWPASS[3] * approx[k - 3 * d];
            }
        }
        let shift = pad + group_delay(s);
        details.push(detail[shift..shift + n].to_vec());
        approx = next;
    }
    Ok(details)
}
