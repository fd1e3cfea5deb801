//! Brute-force reference implementations used only by tests.
//!
//! Everything here is written as the literal summation formula with explicit
//! bounds checks and no tiling, so it shares no code path with the kernels
//! it checks.

use crate::tensor::FrameTensor;
use num_complex::Complex64;

pub fn conv1d(x: &FrameTensor, w: &FrameTensor, bias: Option<&[f32]>, padding: usize, dilation: usize) -> FrameTensor {
    let (c_in, t) = (x.shape()[0], x.shape()[1]);
    let (c_out, k) = (w.shape()[0], w.shape()[2]);
    let t_out = t + 2 * padding - dilation * (k - 1);
    let mut y = FrameTensor::zeros(&[c_out, t_out]);
    for c in 0..c_out {
        for to in 0..t_out {
            let mut s = bias.map_or(0.0, |b| b[c] as f64);
            for i in 0..c_in {
                for kk in 0..k {
                    let src = to as i64 + (kk * dilation) as i64 - padding as i64;
                    if src >= 0 && (src as usize) < t {
                        s += w.data()[(c * c_in + i) * k + kk] as f64 * x.at(i, src as usize) as f64;
                    }
                }
            }
            y.data_mut()[c * t_out + to] = s as f32;
        }
    }
    y
}

/// Depthwise convolution expressed as a grouped convolution with one
/// input channel per group.
pub fn depthwise_conv1d(x: &FrameTensor, w: &FrameTensor, bias: Option<&[f32]>, padding: usize) -> FrameTensor {
    let c = x.shape()[0];
    let k = w.len() / c;
    let rows: Vec<FrameTensor> = (0..c)
        .map(|ch| {
            let xi = x.slice_rows(ch, ch + 1);
            let wi = FrameTensor::new(vec![1, 1, k], w.data()[ch * k..(ch + 1) * k].to_vec()).unwrap();
            let bi = bias.map(|b| vec![b[ch]]);
            conv1d(&xi, &wi, bi.as_deref(), padding, 1)
        })
        .collect();
    let refs: Vec<&FrameTensor> = rows.iter().collect();
    FrameTensor::concat_rows(&refs).unwrap()
}

/// Transposed convolution in gather form: every output frame sums the
/// input frames whose scattered kernel taps land on it.
pub fn conv_transpose1d(x: &FrameTensor, w: &FrameTensor, bias: Option<&[f32]>, stride: usize, padding: usize) -> FrameTensor {
    let (c_in, t) = (x.shape()[0], x.shape()[1]);
    let (c_out, k) = (w.shape()[1], w.shape()[2]);
    let t_out = (t - 1) * stride + k - 2 * padding;
    let mut y = FrameTensor::zeros(&[c_out, t_out]);
    for o in 0..c_out {
        for u in 0..t_out {
            let mut s = bias.map_or(0.0, |b| b[o] as f64);
            for i in 0..c_in {
                for ti in 0..t {
                    for kk in 0..k {
                        if ti * stride + kk == u + padding {
                            s += w.data()[(i * c_out + o) * k + kk] as f64 * x.at(i, ti) as f64;
                        }
                    }
                }
            }
            y.data_mut()[o * t_out + u] = s as f32;
        }
    }
    y
}

pub fn pointwise(x: &FrameTensor, w: &FrameTensor, bias: Option<&[f32]>) -> FrameTensor {
    let (o, i) = (w.shape()[0], w.shape()[1]);
    let w3 = FrameTensor::new(vec![o, i, 1], w.data().to_vec()).unwrap();
    conv1d(x, &w3, bias, 0, 1)
}

pub fn layer_norm(x: &[f32], gamma: &[f32], beta: &[f32], eps: f32) -> Vec<f32> {
    let n = x.len() as f64;
    let mean: f64 = x.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var: f64 = x.iter().map(|&v| (v as f64 - mean) * (v as f64 - mean)).sum::<f64>() / n;
    (0..x.len())
        .map(|i| ((x[i] as f64 - mean) / (var + eps as f64).sqrt() * gamma[i] as f64 + beta[i] as f64) as f32)
        .collect()
}

/// Column-by-column layer norm over channels.
pub fn layer_norm_channels(x: &FrameTensor, gamma: &[f32], beta: &[f32], eps: f32) -> FrameTensor {
    let (c, t) = (x.shape()[0], x.shape()[1]);
    let mut y = FrameTensor::zeros(&[c, t]);
    for j in 0..t {
        let col: Vec<f32> = (0..c).map(|ch| x.at(ch, j)).collect();
        for (ch, v) in layer_norm(&col, gamma, beta, eps).into_iter().enumerate() {
            y.data_mut()[ch * t + j] = v;
        }
    }
    y
}

/// Standard normal CDF by composite Simpson quadrature of the density.
pub fn normal_cdf(x: f64) -> f64 {
    if x.abs() > 12.0 {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let n = 4000;
    let h = x / n as f64;
    let pdf = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(i as f64 * h);
    }
    0.5 + s * h / 3.0
}

pub fn gelu(x: f32) -> f32 {
    (x as f64 * normal_cdf(x as f64)) as f32
}

pub fn gated_tanh(a: f32, b: f32) -> f32 {
    let (a, b) = (a as f64, b as f64);
    (a.tanh() / (1.0 + (-b).exp())) as f32
}

pub fn leaky_relu(x: f32, slope: f32) -> f32 {
    if x < 0.0 {
        x * slope
    } else {
        x
    }
}

/// Multi-head self-attention with every head computed in explicit loops.
#[allow(clippy::too_many_arguments)]
pub fn attention(
    x: &FrameTensor,
    wq: &FrameTensor,
    bq: &[f32],
    wk: &FrameTensor,
    bk: &[f32],
    wv: &FrameTensor,
    bv: &[f32],
    wo: &FrameTensor,
    bo: &[f32],
    heads: usize,
    mask: Option<&[bool]>,
) -> FrameTensor {
    let (d, t) = (x.shape()[0], x.shape()[1]);
    let q = pointwise(x, wq, Some(bq));
    let k = pointwise(x, wk, Some(bk));
    let v = pointwise(x, wv, Some(bv));
    let dk = d / heads;
    let mut ctx = FrameTensor::zeros(&[d, t]);
    for h in 0..heads {
        for i in 0..t {
            let mut scores = vec![None; t];
            for (j, s) in scores.iter_mut().enumerate() {
                if mask.is_none_or(|m| m[i * t + j]) {
                    let mut dot = 0.0f64;
                    for c in h * dk..(h + 1) * dk {
                        dot += q.at(c, i) as f64 * k.at(c, j) as f64;
                    }
                    *s = Some(dot / (dk as f64).sqrt());
                }
            }
            let max = scores.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = scores.iter().map(|s| s.map_or(0.0, |v| (v - max).exp())).collect();
            let z: f64 = e.iter().sum();
            for c in h * dk..(h + 1) * dk {
                let mut s = 0.0f64;
                for j in 0..t {
                    s += e[j] / z * v.at(c, j) as f64;
                }
                ctx.data_mut()[c * t + i] = s as f32;
            }
        }
    }
    pointwise(&ctx, wo, Some(bo))
}

/// Direct O(n²) DFT of a real frame, returning bins `0..=n/2`.
pub fn dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let ang = -2.0 * std::f64::consts::PI * (k * j % n) as f64 / n as f64;
                    Complex64::new(v * ang.cos(), v * ang.sin())
                })
                .sum()
        })
        .collect()
}
