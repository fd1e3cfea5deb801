//! Numeric kernels the network modules are assembled from.
//!
//! All kernels are pure functions over `FrameTensor`s laid out channels ×
//! frames. Convolutions and attention accumulate in `f64` and store `f32`, so
//! results are bit-reproducible for identical inputs.

use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

/// Default epsilon for every layer norm in the engine.
pub const LAYER_NORM_EPS: f32 = 1e-6;

/// Default Leaky ReLU slope.
pub const LEAKY_SLOPE: f32 = 0.1;

// Output frames processed per pass; keeps the f64 accumulator in L1.

fn check_bias(op: &'static str, bias: Option<&[f32]>, n: usize) -> Result<()> {
    match bias {
        Some(b) if b.len() != n => {
            Err(Error::shape(op, format!("bias has {} entries, expected {n}", b.len())))
        }
        _ => Ok(()),
    }
}

fn output_frames(op: &'static str, t: usize, padding: usize, span: usize) -> Result<usize> {
    let padded = t + 2 * padding;
    if padded <= span {
        return Err(Error::shape(
            op,
            format!("{t} frames with padding {padding} are shorter than the kernel span {}", span + 1),
        ));
    }
    Ok(padded - span)
}

/// 1-D cross-correlation with zero padding.
///
/// `weight` is `[c_out, c_in, k]`; `x` is `[c_in, t]`. Output frames are
/// `t + 2·padding − dilation·(k−1)`.
pub fn conv1d(
    x: &FrameTensor,
    weight: &FrameTensor,
    bias: Option<&[f32]>,
    padding: usize,
    dilation: usize,
) -> Result<FrameTensor> {
    const OP: &str = "conv1d";
    let (c_in, t) = x.dims2(OP)?;
    let (c_out, wc_in, k) = match weight.shape() {
        [o, i, k] => (*o, *i, *k),
        s => return Err(Error::shape(OP, format!("weight must be [c_out, c_in, k], got {s:?}"))),
    };
    if wc_in != c_in {
        return Err(Error::shape(
            OP,
            format!("weight expects {wc_in} input channels but x has {c_in}"),
        ));
    }
    if k == 0 || dilation == 0 {
        return Err(Error::invalid(OP, "kernel size and dilation must be at least 1"));
    }
    check_bias(OP, bias, c_out)?;
    let t_out = output_frames(OP, t, padding, dilation * (k - 1))?;
    conv1d_validated(x, weight.data(), c_out, k, bias, padding, dilation, t_out)
}

#[allow(clippy::too_many_arguments)]
fn conv1d_validated(
    x: &FrameTensor,
    w: &[f32],
    c_out: usize,
    k: usize,
    bias: Option<&[f32]>,
    padding: usize,
    dilation: usize,
    t_out: usize,
) -> Result<FrameTensor> {
    let (c_in, t) = (x.channels(), x.frames());
    let span = dilation * (k - 1);

    // Zero-pad so every output column and row falls in a full block.
    let t_blocks = t_out.div_ceil(COLS) * COLS;
    let c_blocks = c_out.div_ceil(WIDE_ROWS) * WIDE_ROWS;
    let tp = t_blocks + span;
    let padded;
    let xd = if padding == 0 && tp == t {
        x.data()
    } else {
        let mut buf = vec![0.0f32; c_in * tp];
        for (dst, src) in buf.chunks_exact_mut(tp).zip(x.data().chunks_exact(t)) {
            let n = t.min(tp - padding);
            dst[padding..padding + n].copy_from_slice(&src[..n]);
        }
        padded = buf;
        &padded
    };
    let geom = ConvGeometry { c_in, c_out, t: tp, k, dilation, t_out: t_blocks };
    let mut out = vec![0.0f32; c_blocks * t_blocks];
    conv_blocked(xd, w, bias, &geom, &mut out);
    if t_blocks != t_out || c_blocks != c_out {
        let mut cropped = Vec::with_capacity(c_out * t_out);
        for row in out.chunks_exact(t_blocks).take(c_out) {
            cropped.extend_from_slice(&row[..t_out]);
        }
        out = cropped;
    }
    FrameTensor::new(vec![c_out, t_out], out)
}

/// Convolution over an already padded input: `t` is the padded length and
/// `t_out` a multiple of `COLS`.
struct ConvGeometry {
    c_in: usize,
    c_out: usize,
    t: usize,
    k: usize,
    dilation: usize,
    t_out: usize,
}

const ROWS: usize = 6;
// Row block of the AVX-512 kernel; output buffers are padded to it.
const WIDE_ROWS: usize = 12;
const COLS: usize = 16;
// Taps accumulated in f32 before folding into the f64 totals.
const CHUNK_TAPS: usize = 64;

/// Weights for output rows `c0..c0+R` laid out tap-major, zero for rows
/// past `c_out`.
fn pack_rows<const R: usize>(w: &[f32], g: &ConvGeometry, c0: usize, packed: &mut [f32]) {
    let per_row = g.c_in * g.k;
    for (j, p) in packed.chunks_exact_mut(R).enumerate() {
        for (r, v) in p.iter_mut().enumerate() {
            *v = if c0 + r < g.c_out { w[(c0 + r) * per_row + j] } else { 0.0 };
        }
    }
}

/// Input windows copied per output tile so each tile reads contiguously.
fn pack_panels(xd: &[f32], g: &ConvGeometry, width: usize) -> Vec<f32> {
    let tiles = g.t_out / COLS;
    let mut panels = Vec::with_capacity(tiles * g.c_in * width);
    for tile in 0..tiles {
        for row in xd.chunks_exact(g.t) {
            panels.extend_from_slice(&row[tile * COLS..tile * COLS + width]);
        }
    }
    panels
}

fn row_bias<const R: usize>(bias: Option<&[f32]>, g: &ConvGeometry, c0: usize) -> [f64; R] {
    std::array::from_fn(|r| match bias {
        Some(b) if c0 + r < g.c_out => b[c0 + r] as f64,
        _ => 0.0,
    })
}

/// Output is `[c_out rounded up to WIDE_ROWS, t_out]`.
fn conv_blocked(xd: &[f32], w: &[f32], bias: Option<&[f32]>, g: &ConvGeometry, out: &mut [f32]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the required CPU features were detected at runtime.
            unsafe { conv_blocked_avx512(xd, w, bias, g, out) };
            return;
        }
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
            // SAFETY: as above.
            unsafe { conv_blocked_avx2(xd, w, bias, g, out) };
            return;
        }
    }
    conv_blocked_portable(xd, w, bias, g, out);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn conv_blocked_avx512(xd: &[f32], w: &[f32], bias: Option<&[f32]>, g: &ConvGeometry, out: &mut [f32]) {
    use std::arch::x86_64::*;
    const R: usize = WIDE_ROWS;
    let k = g.k;
    let width = COLS + (k - 1) * g.dilation;
    let panels = pack_panels(xd, g, width);
    let offsets: Vec<usize> = (0..g.c_in).flat_map(|c| (0..k).map(move |j| c * width + j * g.dilation)).collect();
    let chunk = (CHUNK_TAPS / k).max(1) * k;
    let mut packed = vec![0.0f32; g.c_in * k * R];
    for c0 in (0..g.c_out).step_by(R) {
        pack_rows::<R>(w, g, c0, &mut packed);
        let b = row_bias::<R>(bias, g, c0);
        for (tile, panel) in panels.chunks_exact(g.c_in * width).enumerate() {
            let mut total: [[f64; COLS]; R] = std::array::from_fn(|r| [b[r]; COLS]);
            for (offs, ws) in offsets.chunks(chunk).zip(packed.chunks(chunk * R)) {
                let mut acc = [_mm512_setzero_ps(); R];
                for (&o, wr) in offs.iter().zip(ws.chunks_exact(R)) {
                    let xv = _mm512_loadu_ps(panel[o..o + COLS].as_ptr());
                    for r in 0..R {
                        acc[r] = _mm512_fmadd_ps(_mm512_set1_ps(wr[r]), xv, acc[r]);
                    }
                }
                for (row, a) in total.iter_mut().zip(acc) {
                    let lo = _mm512_cvtps_pd(_mm512_castps512_ps256(a));
                    let hi = _mm512_cvtps_pd(_mm256_castpd_ps(_mm512_extractf64x4_pd::<1>(_mm512_castps_pd(a))));
                    let (first, second) = row.split_at_mut(8);
                    _mm512_storeu_pd(first.as_mut_ptr(), _mm512_add_pd(_mm512_loadu_pd(first.as_ptr()), lo));
                    _mm512_storeu_pd(second.as_mut_ptr(), _mm512_add_pd(_mm512_loadu_pd(second.as_ptr()), hi));
                }
            }
            let t0 = tile * COLS;
            for (r, row) in total.iter().enumerate() {
                let base = (c0 + r) * g.t_out + t0;
                for (d, &a) in out[base..base + COLS].iter_mut().zip(row) {
                    *d = a as f32;
                }
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn conv_blocked_avx2(xd: &[f32], w: &[f32], bias: Option<&[f32]>, g: &ConvGeometry, out: &mut [f32]) {
    use std::arch::x86_64::*;
    let k = g.k;
    let width = COLS + (k - 1) * g.dilation;
    let panels = pack_panels(xd, g, width);
    let offsets: Vec<usize> = (0..g.c_in).flat_map(|c| (0..k).map(move |j| c * width + j * g.dilation)).collect();
    let chunk = (CHUNK_TAPS / k).max(1) * k;
    let mut packed = vec![0.0f32; g.c_in * k * ROWS];
    for c0 in (0..g.c_out).step_by(ROWS) {
        pack_rows::<ROWS>(w, g, c0, &mut packed);
        let b = row_bias::<ROWS>(bias, g, c0);
        for (tile, panel) in panels.chunks_exact(g.c_in * width).enumerate() {
            let mut total: [[f64; COLS]; ROWS] = std::array::from_fn(|r| [b[r]; COLS]);
            for (offs, ws) in offsets.chunks(chunk).zip(packed.chunks(chunk * ROWS)) {
                let mut lo = [_mm256_setzero_ps(); ROWS];
                let mut hi = [_mm256_setzero_ps(); ROWS];
                for (&o, w6) in offs.iter().zip(ws.chunks_exact(ROWS)) {
                    let xv = &panel[o..o + COLS];
                    let xl = _mm256_loadu_ps(xv.as_ptr());
                    let xh = _mm256_loadu_ps(xv[8..].as_ptr());
                    for r in 0..ROWS {
                        let wv = _mm256_set1_ps(w6[r]);
                        lo[r] = _mm256_fmadd_ps(wv, xl, lo[r]);
                        hi[r] = _mm256_fmadd_ps(wv, xh, hi[r]);
                    }
                }
                for r in 0..ROWS {
                    let row = &mut total[r];
                    let parts = [
                        _mm256_castps256_ps128(lo[r]),
                        _mm256_extractf128_ps::<1>(lo[r]),
                        _mm256_castps256_ps128(hi[r]),
                        _mm256_extractf128_ps::<1>(hi[r]),
                    ];
                    for (q, part) in parts.into_iter().enumerate() {
                        let acc = _mm256_loadu_pd(row[4 * q..].as_ptr());
                        _mm256_storeu_pd(row[4 * q..].as_mut_ptr(), _mm256_add_pd(acc, _mm256_cvtps_pd(part)));
                    }
                }
            }
            let t0 = tile * COLS;
            for (r, row) in total.iter().enumerate() {
                let base = (c0 + r) * g.t_out + t0;
                for (d, &a) in out[base..base + COLS].iter_mut().zip(row) {
                    *d = a as f32;
                }
            }
        }
    }
}

fn conv_blocked_portable(xd: &[f32], w: &[f32], bias: Option<&[f32]>, g: &ConvGeometry, out: &mut [f32]) {
    let k = g.k;
    let mut packed = vec![0.0f32; g.c_in * k * ROWS];
    for c0 in (0..g.c_out).step_by(ROWS) {
        pack_rows::<ROWS>(w, g, c0, &mut packed);
        let b = row_bias::<ROWS>(bias, g, c0);
        for t0 in (0..g.t_out).step_by(COLS) {
            let mut total: [[f64; COLS]; ROWS] = std::array::from_fn(|r| [b[r]; COLS]);
            for (xr, wi) in xd.chunks_exact(g.t).zip(packed.chunks_exact(k * ROWS)) {
                let mut s = t0;
                for w4 in wi.chunks_exact(ROWS) {
                    let xv: &[f32; COLS] = xr[s..s + COLS].try_into().unwrap();
                    for (row, &wv) in total.iter_mut().zip(w4) {
                        for (a, &xq) in row.iter_mut().zip(xv) {
                            *a += wv as f64 * xq as f64;
                        }
                    }
                    s += g.dilation;
                }
            }
            for (r, row) in total.iter().enumerate() {
                let base = (c0 + r) * g.t_out + t0;
                for (d, &a) in out[base..base + COLS].iter_mut().zip(row) {
                    *d = a as f32;
                }
            }
        }
    }
}

/// Pointwise (kernel-size 1) convolution, i.e. a per-frame linear layer.
///
/// Accepts weights shaped `[c_out, c_in]` or `[c_out, c_in, 1]`.
pub fn pointwise(x: &FrameTensor, weight: &FrameTensor, bias: Option<&[f32]>) -> Result<FrameTensor> {
    const OP: &str = "pointwise";
    let (c_in, t) = x.dims2(OP)?;
    let (c_out, wc_in) = match weight.shape() {
        [o, i] | [o, i, 1] => (*o, *i),
        s => return Err(Error::shape(OP, format!("weight must be [c_out, c_in(, 1)], got {s:?}"))),
    };
    if wc_in != c_in {
        return Err(Error::shape(
            OP,
            format!("weight expects {wc_in} input channels but x has {c_in}"),
        ));
    }
    check_bias(OP, bias, c_out)?;
    conv1d_validated(x, weight.data(), c_out, 1, bias, 0, 1, t)
}

/// Per-channel convolution: `y[c,t] = bias[c] + Σ_k w[c,k]·x[c, t+k−padding]`.
pub fn depthwise_conv1d(
    x: &FrameTensor,
    weight: &FrameTensor,
    bias: Option<&[f32]>,
    padding: usize,
) -> Result<FrameTensor> {
    const OP: &str = "depthwise_conv1d";
    let (c, t) = x.dims2(OP)?;
    let (wc, k) = match weight.shape() {
        [wc, k] | [wc, 1, k] => (*wc, *k),
        s => return Err(Error::shape(OP, format!("weight must be [c, k], got {s:?}"))),
    };
    if wc != c {
        return Err(Error::shape(OP, format!("weight has {wc} channels but x has {c}")));
    }
    if k == 0 {
        return Err(Error::invalid(OP, "kernel size must be at least 1"));
    }
    check_bias(OP, bias, c)?;
    let t_out = output_frames(OP, t, padding, k - 1)?;
    let w = weight.data();
    let mut out = vec![0.0f32; c * t_out];
    let mut acc = vec![0.0f64; t_out];
    for ch in 0..c {
        let xr = x.row(ch);
        acc.fill(bias.map_or(0.0, |b| b[ch] as f64));
        for (kk, &wv) in w[ch * k..(ch + 1) * k].iter().enumerate() {
            let start = kk as isize - padding as isize;
            let j_lo = (-start).clamp(0, t_out as isize) as usize;
            let j_hi = (t as isize - start).clamp(0, t_out as isize) as usize;
            if j_lo >= j_hi {
                continue;
            }
            let src = &xr[(start + j_lo as isize) as usize..(start + j_hi as isize) as usize];
            let wv = wv as f64;
            for (a, &xv) in acc[j_lo..j_hi].iter_mut().zip(src) {
                *a += wv * xv as f64;
            }
        }
        for (d, &a) in out[ch * t_out..(ch + 1) * t_out].iter_mut().zip(&acc) {
            *d = a as f32;
        }
    }
    FrameTensor::new(vec![c, t_out], out)
}

/// Transposed 1-D convolution (fractionally strided), weight `[c_in, c_out, k]`.
///
/// Output frames are `(t−1)·stride − 2·padding + k`.
pub fn conv_transpose1d(
    x: &FrameTensor,
    weight: &FrameTensor,
    bias: Option<&[f32]>,
    stride: usize,
    padding: usize,
) -> Result<FrameTensor> {
    const OP: &str = "conv_transpose1d";
    let (c_in, t) = x.dims2(OP)?;
    let (wc_in, c_out, k) = match weight.shape() {
        [i, o, k] => (*i, *o, *k),
        s => return Err(Error::shape(OP, format!("weight must be [c_in, c_out, k], got {s:?}"))),
    };
    if wc_in != c_in {
        return Err(Error::shape(
            OP,
            format!("weight expects {wc_in} input channels but x has {c_in}"),
        ));
    }
    if stride == 0 || k == 0 || t == 0 {
        return Err(Error::invalid(OP, "stride, kernel size and frame count must be positive"));
    }
    check_bias(OP, bias, c_out)?;
    let full = (t - 1) * stride + k;
    if full <= 2 * padding {
        return Err(Error::shape(OP, "padding removes every output frame"));
    }
    let t_out = full - 2 * padding;
    let w = weight.data();
    let mut out = vec![0.0f32; c_out * t_out];
    for o in 0..c_out {
        out[o * t_out..(o + 1) * t_out].fill(bias.map_or(0.0, |b| b[o]));
    }
    // Polyphase split: output u with u + padding = q·stride + ph only sees
    // taps ph, ph + stride, ..., so each phase is an ordinary correlation.
    for ph in 0..stride.min(k) {
        let taps = (k - ph).div_ceil(stride);
        let mut wp = vec![0.0f32; c_out * c_in * taps];
        for o in 0..c_out {
            for i in 0..c_in {
                for j in 0..taps {
                    wp[(o * c_in + i) * taps + j] = w[(i * c_out + o) * k + ph + (taps - 1 - j) * stride];
                }
            }
        }
        let wp = FrameTensor::new(vec![c_out, c_in, taps], wp)?;
        let y = conv1d(x, &wp, None, taps - 1, 1)?;
        let q_len = y.frames();
        for o in 0..c_out {
            let yr = &y.data()[o * q_len..(o + 1) * q_len];
            let dst = &mut out[o * t_out..(o + 1) * t_out];
            for (q, &v) in yr.iter().enumerate() {
                let u = q * stride + ph;
                if u >= padding && u - padding < t_out {
                    dst[u - padding] += v;
                }
            }
        }
    }
    FrameTensor::new(vec![c_out, t_out], out)
}

/// Layer normalization of a single vector with population variance.
pub fn layer_norm(x: &[f32], gamma: &[f32], beta: &[f32], eps: f32) -> Result<Vec<f32>> {
    const OP: &str = "layer_norm";
    if x.is_empty() {
        return Err(Error::Empty(OP));
    }
    if gamma.len() != x.len() || beta.len() != x.len() {
        return Err(Error::shape(OP, "gamma/beta length differs from input"));
    }
    let n = x.len() as f64;
    let mean = x.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = x.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps as f64).sqrt();
    Ok(x.iter()
        .zip(gamma.iter().zip(beta))
        .map(|(&v, (&g, &b))| ((v as f64 - mean) * inv * g as f64 + b as f64) as f32)
        .collect())
}

/// Layer norm applied to every frame of a `[c, t]` tensor across its channels.
pub fn layer_norm_channels(
    x: &FrameTensor,
    gamma: &[f32],
    beta: &[f32],
    eps: f32,
) -> Result<FrameTensor> {
    const OP: &str = "layer_norm_channels";
    let (c, t) = x.dims2(OP)?;
    if c == 0 {
        return Err(Error::Empty(OP));
    }
    if gamma.len() != c || beta.len() != c {
        return Err(Error::shape(OP, format!("gamma/beta must have {c} entries")));
    }
    let mut mean = vec![0.0f64; t];
    for ch in 0..c {
        for (m, &v) in mean.iter_mut().zip(x.row(ch)) {
            *m += v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= c as f64);
    let mut var = vec![0.0f64; t];
    for ch in 0..c {
        for ((s, &v), &m) in var.iter_mut().zip(x.row(ch)).zip(&mean) {
            *s += (v as f64 - m).powi(2);
        }
    }
    let inv: Vec<f64> = var.iter().map(|s| 1.0 / (s / c as f64 + eps as f64).sqrt()).collect();
    let mut out = FrameTensor::zeros(&[c, t]);
    for ch in 0..c {
        let (g, b) = (gamma[ch] as f64, beta[ch] as f64);
        let src = x.row(ch);
        for (j, d) in out.row_mut(ch).iter_mut().enumerate() {
            *d = ((src[j] as f64 - mean[j]) * inv[j] * g + b) as f32;
        }
    }
    Ok(out)
}

/// Exact GELU, `x·Φ(x)` with the erf-based normal CDF.
pub fn gelu(x: f32) -> f32 {
    let x = x as f64;
    (0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))) as f32
}

/// WaveNet gate `tanh(a)·σ(b)` over paired slices.
pub fn gated_tanh(a: &[f32], b: &[f32]) -> Result<Vec<f32>> {
    if a.len() != b.len() {
        return Err(Error::shape("gated_tanh", format!("{} filter vs {} gate values", a.len(), b.len())));
    }
    let mut out = vec![0.0f32; a.len()];
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the required CPU features were detected at runtime.
            unsafe { gate_avx512(a, b, &mut out) };
            return Ok(out);
        }
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
            // SAFETY: as above.
            unsafe { gate_avx2(a, b, &mut out) };
            return Ok(out);
        }
    }
    gate_into(a, b, &mut out);
    Ok(out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn gate_avx512(a: &[f32], b: &[f32], out: &mut [f32]) {
    gate_into(a, b, out);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn gate_avx2(a: &[f32], b: &[f32], out: &mut [f32]) {
    gate_into(a, b, out);
}

#[inline(always)]
fn gate_into(a: &[f32], b: &[f32], out: &mut [f32]) {
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        let tanh = 2.0 / (1.0 + exp_approx(-2.0 * x)) - 1.0;
        *o = tanh / (1.0 + exp_approx(-y));
    }
}

/// Branch-free `exp` with about 2 ulp error on `[−87, 88]`, clamped outside.
#[inline(always)]
fn exp_approx(x: f32) -> f32 {
    const ROUND: f32 = 12_582_912.0;
    let x = x.clamp(-87.0, 88.0);
    let n = (x * std::f32::consts::LOG2_E + ROUND) - ROUND;
    let r = x - n * 0.693_359_4 + n * 2.121_944_4e-4;
    let p = ((((1.987_569_1e-4 * r + 1.398_199_9e-3) * r + 8.333_452e-3) * r + 4.166_579_6e-2) * r + 1.666_666_5e-1) * r
        + 0.5;
    let poly = p * r * r + r + 1.0;
    poly * f32::from_bits(((n as i32 + 127) as u32) << 23)
}

pub fn leaky_relu(x: f32, slope: f32) -> f32 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn relu(x: f32) -> f32 {
    x.max(0.0)
}

/// Projection weights of one multi-head attention sublayer.
///
/// Each weight is `[d, d]` (or `[d, d, 1]`) and maps channels to channels.
#[derive(Clone, Copy, Debug)]
pub struct AttentionParams<'a> {
    pub q_weight: &'a FrameTensor,
    pub q_bias: &'a [f32],
    pub k_weight: &'a FrameTensor,
    pub k_bias: &'a [f32],
    pub v_weight: &'a FrameTensor,
    pub v_bias: &'a [f32],
    pub out_weight: &'a FrameTensor,
    pub out_bias: &'a [f32],
}

/// Scaled dot-product self-attention over the frames of `x` (`[d, t]`).
///
/// `mask`, when given, is a row-major `t × t` table where `mask[q·t + k]` is
/// true when query `q` may attend to key `k`.
pub fn multi_head_attention(
    x: &FrameTensor,
    params: &AttentionParams<'_>,
    heads: usize,
    mask: Option<&[bool]>,
) -> Result<FrameTensor> {
    const OP: &str = "multi_head_attention";
    let (d, t) = x.dims2(OP)?;
    if heads == 0 || d % heads != 0 {
        return Err(Error::invalid(OP, format!("{d} channels not divisible into {heads} heads")));
    }
    if let Some(m) = mask {
        if m.len() != t * t {
            return Err(Error::shape(OP, format!("mask has {} entries, expected {}", m.len(), t * t)));
        }
        if let Some(row) = (0..t).find(|&r| !m[r * t..(r + 1) * t].iter().any(|&b| b)) {
            return Err(Error::FullyMasked { row });
        }
    }
    let q = pointwise(x, params.q_weight, Some(params.q_bias))?;
    let k = pointwise(x, params.k_weight, Some(params.k_bias))?;
    let v = pointwise(x, params.v_weight, Some(params.v_bias))?;
    let dk = d / heads;
    let scale = 1.0 / (dk as f64).sqrt();

    // frame-major copies so each head's q/k/v vector is contiguous
    let to_frame_major = |m: &FrameTensor| -> Vec<f64> {
        let mut out = vec![0.0f64; d * t];
        for c in 0..d {
            for (j, &v) in m.row(c).iter().enumerate() {
                out[j * d + c] = v as f64;
            }
        }
        out
    };
    let (qf, kf, vf) = (to_frame_major(&q), to_frame_major(&k), to_frame_major(&v));

    let mut ctx = FrameTensor::zeros(&[d, t]);
    let mut logits = vec![0.0f64; t];
    let mut acc = vec![0.0f64; dk];
    for h in 0..heads {
        let lo = h * dk;
        for qi in 0..t {
            let qv = &qf[qi * d + lo..qi * d + lo + dk];
            let mut max = f64::NEG_INFINITY;
            for (ki, l) in logits.iter_mut().enumerate() {
                if mask.is_some_and(|m| !m[qi * t + ki]) {
                    *l = f64::NEG_INFINITY;
                    continue;
                }
                let kv = &kf[ki * d + lo..ki * d + lo + dk];
                *l = qv.iter().zip(kv).map(|(a, b)| a * b).sum::<f64>() * scale;
                max = max.max(*l);
            }
            let mut denom = 0.0;
            for l in logits.iter_mut() {
                *l = if l.is_finite() { (*l - max).exp() } else { 0.0 };
                denom += *l;
            }
            acc.fill(0.0);
            for (ki, &p) in logits.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let vv = &vf[ki * d + lo..ki * d + lo + dk];
                for (a, &b) in acc.iter_mut().zip(vv) {
                    *a += p * b;
                }
            }
            for (j, &a) in acc.iter().enumerate() {
                ctx.data_mut()[(lo + j) * t + qi] = (a / denom) as f32;
            }
        }
    }
    pointwise(&ctx, params.out_weight, Some(params.out_bias))
}
