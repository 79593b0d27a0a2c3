//! Per-sample 1D layer kernels with explicit backward passes.
//!
//! Feature maps are `channels × length`, row-major.

const NORM_EPS: f64 = 1e-5;

fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: (&[f64], isize, isize),
    b: (&[f64], isize, isize),
    beta: f64,
    c: (&mut [f64], isize, isize),
) {
    debug_assert!(a.0.len() >= m * k && b.0.len() >= k * n && c.0.len() >= m * n);
    // SAFETY: slice lengths cover every index addressed by the given
    // dimensions and strides (checked above in debug builds, guaranteed by
    // the callers' shapes).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            beta,
            c.0.as_mut_ptr(),
            c.1,
            c.2,
        );
    }
}

fn im2col(x: &[f64], channels: usize, n: usize, k: usize) -> Vec<f64> {
    let pad = (k / 2) as isize;
    let mut col = vec![0.0; channels * k * n];
    for c in 0..channels {
        let row = &x[c * n..(c + 1) * n];
        for t in 0..k {
            let shift = t as isize - pad;
            let dst = &mut col[(c * k + t) * n..(c * k + t + 1) * n];
            let lo = (-shift).max(0) as usize;
            let hi = (n as isize - shift).min(n as isize) as usize;
            if lo < hi {
                let src_lo = (lo as isize + shift) as usize;
                dst[lo..hi].copy_from_slice(&row[src_lo..src_lo + (hi - lo)]);
            }
        }
    }
    col
}

fn col2im(col: &[f64], channels: usize, n: usize, k: usize) -> Vec<f64> {
    let pad = (k / 2) as isize;
    let mut x = vec![0.0; channels * n];
    for c in 0..channels {
        let row = &mut x[c * n..(c + 1) * n];
        for t in 0..k {
            let shift = t as isize - pad;
            let src = &col[(c * k + t) * n..(c * k + t + 1) * n];
            let lo = (-shift).max(0) as usize;
            let hi = (n as isize - shift).min(n as isize) as usize;
            if lo < hi {
                let dst_lo = (lo as isize + shift) as usize;
                for (d, s) in row[dst_lo..dst_lo + (hi - lo)].iter_mut().zip(&src[lo..hi]) {
                    *d += s;
                }
            }
        }
    }
    x
}

/// Same-padded convolution; `w` is `out × in × k`.
pub fn conv_forward(x: &[f64], c_in: usize, n: usize, w: &[f64], b: &[f64], c_out: usize, k: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(c_out * n);
    for &bias in b {
        y.extend(std::iter::repeat_n(bias, n));
    }
    let owned;
    let col: &[f64] = if k == 1 {
        x
    } else {
        owned = im2col(x, c_in, n, k);
        &owned
    };
    let ck = c_in * k;
    gemm(
        c_out,
        ck,
        n,
        (w, ck as isize, 1),
        (col, n as isize, 1),
        1.0,
        (&mut y, n as isize, 1),
    );
    y
}

/// Accumulates weight and bias gradients and returns the input gradient.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward(
    x: &[f64],
    c_in: usize,
    n: usize,
    w: &[f64],
    c_out: usize,
    k: usize,
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    for (o, g) in db.iter_mut().enumerate() {
        *g += dy[o * n..(o + 1) * n].iter().sum::<f64>();
    }
    let owned;
    let col: &[f64] = if k == 1 {
        x
    } else {
        owned = im2col(x, c_in, n, k);
        &owned
    };
    let ck = c_in * k;
    // dW += dY · colᵀ
    gemm(
        c_out,
        n,
        ck,
        (dy, n as isize, 1),
        (col, 1, n as isize),
        1.0,
        (dw, ck as isize, 1),
    );
    // dcol = Wᵀ · dY
    let mut dcol = vec![0.0; ck * n];
    gemm(
        ck,
        c_out,
        n,
        (w, 1, ck as isize),
        (dy, n as isize, 1),
        0.0,
        (&mut dcol, n as isize, 1),
    );
    if k == 1 {
        dcol
    } else {
        col2im(&dcol, c_in, n, k)
    }
}

/// Saved statistics of a per-channel length-axis normalization.
pub struct NormCache {
    pub xhat: Vec<f64>,
    pub inv_std: Vec<f64>,
}

pub fn norm_forward(x: &[f64], channels: usize, n: usize, scale: &[f64], shift: &[f64]) -> (Vec<f64>, NormCache) {
    let mut y = vec![0.0; channels * n];
    let mut xhat = vec![0.0; channels * n];
    let mut inv_std = vec![0.0; channels];
    let nf = n as f64;
    for c in 0..channels {
        let row = &x[c * n..(c + 1) * n];
        let mean = row.iter().sum::<f64>() / nf;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        let inv = 1.0 / (var + NORM_EPS).sqrt();
        inv_std[c] = inv;
        for j in 0..n {
            let h = (row[j] - mean) * inv;
            xhat[c * n + j] = h;
            y[c * n + j] = scale[c] * h + shift[c];
        }
    }
    (y, NormCache { xhat, inv_std })
}

pub fn norm_backward(
    cache: &NormCache,
    channels: usize,
    n: usize,
    scale: &[f64],
    dy: &[f64],
    dscale: &mut [f64],
    dshift: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; channels * n];
    let nf = n as f64;
    for c in 0..channels {
        let g = &dy[c * n..(c + 1) * n];
        let h = &cache.xhat[c * n..(c + 1) * n];
        let mut sum_g = 0.0;
        let mut sum_gh = 0.0;
        for j in 0..n {
            sum_g += g[j];
            sum_gh += g[j] * h[j];
        }
        dscale[c] += sum_gh;
        dshift[c] += sum_g;
        let k = scale[c] * cache.inv_std[c] / nf;
        for j in 0..n {
            dx[c * n + j] = k * (nf * g[j] - sum_g - h[j] * sum_gh);
        }
    }
    dx
}

pub fn relu(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes gradient entries where the ReLU output was not positive.
pub fn relu_backward(out: &[f64], dy: &mut [f64]) {
    for (g, o) in dy.iter_mut().zip(out) {
        if *o <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Stride-2 max-pool; returns the pooled map and the winning positions.
pub fn maxpool_forward(x: &[f64], channels: usize, n: usize) -> (Vec<f64>, Vec<u32>) {
    let half = n / 2;
    let mut y = Vec::with_capacity(channels * half);
    let mut arg = Vec::with_capacity(channels * half);
    for c in 0..channels {
        for j in 0..half {
            let i = c * n + 2 * j;
            if x[i + 1] > x[i] {
                y.push(x[i + 1]);
                arg.push((i + 1) as u32);
            } else {
                y.push(x[i]);
                arg.push(i as u32);
            }
        }
    }
    (y, arg)
}

pub fn maxpool_backward(arg: &[u32], input_len: usize, dy: &[f64]) -> Vec<f64> {
    let mut dx = vec![0.0; input_len];
    for (&i, &g) in arg.iter().zip(dy) {
        dx[i as usize] += g;
    }
    dx
}

/// Nearest-neighbour ×2 upsampling.
pub fn upsample_forward(x: &[f64]) -> Vec<f64> {
    x.iter().flat_map(|&v| [v, v]).collect()
}

pub fn upsample_backward(dy: &[f64]) -> Vec<f64> {
    dy.chunks_exact(2).map(|p| p[0] + p[1]).collect()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
