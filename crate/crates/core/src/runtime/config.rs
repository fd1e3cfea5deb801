use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{StftConfig, DEFAULT_SAMPLE_RATE};

/// Which waveform generator turns latent frames into audio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    /// ConvNeXt stack predicting Fourier coefficients, followed by iSTFT.
    ConvNextIstft,
    /// HiFi-GAN-shaped transposed-convolution upsampler.
    TransposedConv,
}

/// Shape of the transposed-convolution reference decoder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceDecoderConfig {
    pub initial_channels: usize,
    pub upsample_rates: Vec<usize>,
    pub upsample_kernels: Vec<usize>,
    pub resblock_kernels: Vec<usize>,
    pub resblock_dilations: Vec<Vec<usize>>,
}

impl Default for ReferenceDecoderConfig {
    fn default() -> Self {
        Self {
            initial_channels: 512,
            upsample_rates: vec![8, 8, 2, 2],
            upsample_kernels: vec![16, 16, 4, 4],
            resblock_kernels: vec![3, 7, 11],
            resblock_dilations: vec![vec![1, 3, 5]; 3],
        }
    }
}

impl ReferenceDecoderConfig {
    pub fn upsample_factor(&self) -> usize {
        self.upsample_rates.iter().product()
    }

    /// Channel width after upsampling stage `i` (halved each stage).
    pub fn stage_channels(&self, i: usize) -> usize {
        self.initial_channels >> (i + 1)
    }
}

/// Every architecture hyperparameter of the synthesis model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    /// Text-encoder parameter groups and layers per group.
    pub g1: usize,
    pub m1: usize,
    /// Flow WaveNet groups and coupling steps per group.
    pub g2: usize,
    pub m2: usize,
    pub hidden: usize,
    pub latent: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub ffn_kernel: usize,
    pub flow_hidden: usize,
    pub flow_wavenet_layers: usize,
    pub flow_kernel: usize,
    pub flow_dilation_rate: usize,
    pub duration_kernel: usize,
    pub decoder: DecoderKind,
    pub dec_channels: usize,
    pub dec_mid: usize,
    pub num_decoder_blocks: usize,
    pub dec_kernel: usize,
    pub reference: ReferenceDecoderConfig,
    pub n_fft: usize,
    pub hop: usize,
    pub vocab_size: usize,
    pub sample_rate: u32,
}

pub const PRESET_NAMES: [&str; 3] = ["vits-base-shaped", "fly-tts", "mini-fly-tts"];

impl ModelConfig {
    fn base(name: &str) -> Self {
        Self {
            name: name.to_string(),
            g1: 2,
            m1: 3,
            g2: 2,
            m2: 2,
            hidden: 192,
            latent: 192,
            heads: 2,
            ffn_dim: 768,
            ffn_kernel: 3,
            flow_hidden: 192,
            flow_wavenet_layers: 4,
            flow_kernel: 5,
            flow_dilation_rate: 1,
            duration_kernel: 3,
            decoder: DecoderKind::ConvNextIstft,
            dec_channels: 512,
            dec_mid: 1536,
            num_decoder_blocks: 6,
            dec_kernel: 7,
            reference: ReferenceDecoderConfig::default(),
            n_fft: 1024,
            hop: 256,
            vocab_size: 256,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }

    pub fn fly_tts() -> Self {
        Self::base("fly-tts")
    }

    pub fn mini_fly_tts() -> Self {
        Self { g1: 1, m1: 6, g2: 1, m2: 4, num_decoder_blocks: 4, ..Self::base("mini-fly-tts") }
    }

    pub fn vits_base_shaped() -> Self {
        Self {
            g1: 6,
            m1: 1,
            g2: 4,
            m2: 1,
            decoder: DecoderKind::TransposedConv,
            ..Self::base("vits-base-shaped")
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fly-tts" => Ok(Self::fly_tts()),
            "mini-fly-tts" => Ok(Self::mini_fly_tts()),
            "vits-base-shaped" => Ok(Self::vits_base_shaped()),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn encoder_layers(&self) -> usize {
        self.g1 * self.m1
    }

    pub fn flow_steps(&self) -> usize {
        self.g2 * self.m2
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn stft(&self) -> Result<StftConfig> {
        StftConfig::hann(self.n_fft, self.hop)
    }

    /// Samples emitted per latent frame count by the configured decoder.
    pub fn output_samples(&self, frames: usize) -> usize {
        match self.decoder {
            DecoderKind::ConvNextIstft => frames.saturating_sub(1) * self.hop,
            DecoderKind::TransposedConv => frames * self.reference.upsample_factor(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigMismatch(format!("{}: {msg}", self.name)));
        let positive = [
            ("g1", self.g1),
            ("m1", self.m1),
            ("g2", self.g2),
            ("m2", self.m2),
            ("hidden", self.hidden),
            ("latent", self.latent),
            ("heads", self.heads),
            ("ffn_dim", self.ffn_dim),
            ("ffn_kernel", self.ffn_kernel),
            ("flow_hidden", self.flow_hidden),
            ("flow_wavenet_layers", self.flow_wavenet_layers),
            ("flow_kernel", self.flow_kernel),
            ("flow_dilation_rate", self.flow_dilation_rate),
            ("duration_kernel", self.duration_kernel),
            ("dec_channels", self.dec_channels),
            ("dec_mid", self.dec_mid),
            ("num_decoder_blocks", self.num_decoder_blocks),
            ("dec_kernel", self.dec_kernel),
            ("n_fft", self.n_fft),
            ("hop", self.hop),
            ("vocab_size", self.vocab_size),
            ("sample_rate", self.sample_rate as usize),
        ];
        if let Some((field, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{field} must be positive"));
        }
        if !self.n_fft.is_power_of_two() {
            return bad(format!("n_fft {} is not a power of two", self.n_fft));
        }
        if self.hop > self.n_fft / 2 {
            return bad(format!("hop {} exceeds n_fft/2", self.hop));
        }
        if !self.hidden.is_multiple_of(self.heads) {
            return bad(format!("hidden {} not divisible by {} heads", self.hidden, self.heads));
        }
        if !self.latent.is_multiple_of(2) {
            return bad(format!("latent {} must be even", self.latent));
        }
        for (name, k) in [
            ("ffn_kernel", self.ffn_kernel),
            ("flow_kernel", self.flow_kernel),
            ("duration_kernel", self.duration_kernel),
            ("dec_kernel", self.dec_kernel),
        ] {
            if k % 2 == 0 {
                return bad(format!("{name} {k} must be odd for same-length padding"));
            }
        }
        if self.decoder == DecoderKind::TransposedConv {
            let r = &self.reference;
            if r.upsample_rates.len() != r.upsample_kernels.len()
                || r.resblock_kernels.len() != r.resblock_dilations.len()
                || r.upsample_rates.is_empty()
            {
                return bad("reference decoder lists have inconsistent lengths".into());
            }
            if r.initial_channels >> r.upsample_rates.len() == 0 {
                return bad("reference decoder runs out of channels".into());
            }
            if r.upsample_rates.iter().zip(&r.upsample_kernels).any(|(s, k)| k < s || (k - s) % 2 != 0) {
                return bad("upsample kernel must exceed its stride by an even amount".into());
            }
            if r.upsample_factor() != self.hop {
                return bad(format!(
                    "reference upsampling ×{} does not match hop {}",
                    r.upsample_factor(),
                    self.hop
                ));
            }
        }
        Ok(())
    }
}
