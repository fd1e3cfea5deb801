//! Closed-form multiply-accumulate counts per pipeline stage.

use serde::Serialize;

use super::config::{ModelConfig, ReferenceDecoderConfig};

/// Frames per token assumed when only an acoustic frame count is given.
pub const FRAMES_PER_TOKEN: usize = 5;

/// MACs of a stride-1 convolution producing `t_out` frames.
pub fn conv1d_macs(c_out: usize, c_in: usize, k: usize, t_out: usize) -> u64 {
    (c_out * c_in * k) as u64 * t_out as u64
}

/// MACs of a transposed convolution over `t_in` input frames.
pub fn conv_transpose1d_macs(c_in: usize, c_out: usize, k: usize, t_in: usize) -> u64 {
    (c_in * c_out * k) as u64 * t_in as u64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MacEstimate {
    pub frames: usize,
    pub tokens: usize,
    pub encoder: u64,
    pub duration: u64,
    pub flow: u64,
    pub convnext_decoder: u64,
    pub istft: u64,
    pub reference_decoder: u64,
    pub convnext_samples: usize,
    pub reference_samples: usize,
}

impl MacEstimate {
    /// ConvNeXt stack plus iSTFT.
    pub fn istft_decoder_total(&self) -> u64 {
        self.convnext_decoder + self.istft
    }

    pub fn istft_decoder_per_sample(&self) -> f64 {
        self.istft_decoder_total() as f64 / self.convnext_samples.max(1) as f64
    }

    pub fn reference_per_sample(&self) -> f64 {
        self.reference_decoder as f64 / self.reference_samples.max(1) as f64
    }
}

pub fn encoder_macs(cfg: &ModelConfig, tokens: usize) -> u64 {
    let (d, t) = (cfg.hidden, tokens);
    let per_layer = 4 * conv1d_macs(d, d, 1, t)
        + 2 * (t * t * d) as u64
        + conv1d_macs(cfg.ffn_dim, d, cfg.ffn_kernel, t)
        + conv1d_macs(d, cfg.ffn_dim, cfg.ffn_kernel, t);
    per_layer * cfg.encoder_layers() as u64 + conv1d_macs(2 * cfg.latent, d, 1, t)
}

pub fn duration_macs(cfg: &ModelConfig, tokens: usize) -> u64 {
    let d = cfg.hidden;
    2 * conv1d_macs(d, d, cfg.duration_kernel, tokens) + conv1d_macs(1, d, 1, tokens)
}

pub fn flow_macs(cfg: &ModelConfig, frames: usize) -> u64 {
    let (h, half) = (cfg.flow_hidden, cfg.latent / 2);
    let wn: u64 = (0..cfg.flow_wavenet_layers)
        .map(|l| {
            let rs = if l + 1 < cfg.flow_wavenet_layers { 2 * h } else { h };
            conv1d_macs(2 * h, h, cfg.flow_kernel, frames) + conv1d_macs(rs, h, 1, frames)
        })
        .sum();
    let step = conv1d_macs(h, half, 1, frames) + wn + conv1d_macs(half, h, 1, frames);
    step * cfg.flow_steps() as u64
}

pub fn convnext_decoder_macs(cfg: &ModelConfig, frames: usize) -> u64 {
    let (c, mid) = (cfg.dec_channels, cfg.dec_mid);
    let block = (c * cfg.dec_kernel * frames) as u64 + 2 * conv1d_macs(mid, c, 1, frames);
    conv1d_macs(c, cfg.latent, cfg.dec_kernel, frames)
        + block * cfg.num_decoder_blocks as u64
        + conv1d_macs(2 * cfg.bins(), c, 1, frames)
}

/// Inverse real FFT via a half-size complex FFT (4 real MACs per butterfly),
/// plus unpacking, windowing and envelope accumulation.
pub fn istft_macs(cfg: &ModelConfig, frames: usize) -> u64 {
    let n = cfg.n_fft as u64;
    let log_half = (cfg.n_fft / 2).max(1).trailing_zeros() as u64;
    let per_frame = n * log_half + 4 * n;
    per_frame * frames as u64
}

pub fn reference_decoder_macs(latent: usize, r: &ReferenceDecoderConfig, frames: usize) -> u64 {
    let mut total = conv1d_macs(r.initial_channels, latent, 7, frames);
    let mut t = frames;
    let mut c_in = r.initial_channels;
    for (i, (&rate, &k)) in r.upsample_rates.iter().zip(&r.upsample_kernels).enumerate() {
        let c_out = r.stage_channels(i);
        total += conv_transpose1d_macs(c_in, c_out, k, t);
        t *= rate;
        for (&rk, dils) in r.resblock_kernels.iter().zip(&r.resblock_dilations) {
            total += 2 * dils.len() as u64 * conv1d_macs(c_out, c_out, rk, t);
        }
        c_in = c_out;
    }
    total + conv1d_macs(1, c_in, 7, t)
}

/// Per-stage MACs for `frames` latent frames (`frames ≥ 2`). Text-side stages
/// assume `ceil(frames / FRAMES_PER_TOKEN)` tokens.
pub fn estimate_macs(cfg: &ModelConfig, frames: usize) -> MacEstimate {
    let tokens = frames.div_ceil(FRAMES_PER_TOKEN).max(1);
    MacEstimate {
        frames,
        tokens,
        encoder: encoder_macs(cfg, tokens),
        duration: duration_macs(cfg, tokens),
        flow: flow_macs(cfg, frames),
        convnext_decoder: convnext_decoder_macs(cfg, frames),
        istft: istft_macs(cfg, frames),
        reference_decoder: reference_decoder_macs(cfg.latent, &cfg.reference, frames),
        convnext_samples: frames.saturating_sub(1) * cfg.hop,
        reference_samples: frames * cfg.reference.upsample_factor(),
    }
}
