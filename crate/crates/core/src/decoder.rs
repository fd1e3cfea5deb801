//! ConvNeXt decoder predicting Fourier magnitude and phase, then iSTFT.
//!
//! Every stage keeps the latent frame rate; the only upsampling happens in
//! the overlap-add of the inverse STFT.

use crate::error::{Error, Result};
use crate::nnkit::{self, LAYER_NORM_EPS};
use crate::runtime::init::ParamInit;
use crate::runtime::{ModelConfig, WeightStore};
use crate::spectral::{self, SpectralFrames, Waveform};
use crate::tensor::FrameTensor;

/// Upper clip on predicted log-magnitudes, `ln 100`.
pub const LOG_MAGNITUDE_CLIP: f32 = 4.605_170_2;

#[derive(Clone, Copy, Debug)]
pub struct ConvNextParams<'a> {
    pub dw_weight: &'a FrameTensor,
    pub dw_bias: &'a [f32],
    pub norm_gamma: &'a [f32],
    pub norm_beta: &'a [f32],
    pub pw1_weight: &'a FrameTensor,
    pub pw1_bias: &'a [f32],
    pub pw2_weight: &'a FrameTensor,
    pub pw2_bias: &'a [f32],
    pub layer_scale: &'a [f32],
}

impl<'a> ConvNextParams<'a> {
    pub fn from_store(store: &'a WeightStore, block: usize) -> Result<Self> {
        let get = |s: &str| store.get(&format!("dec.blocks.{block}.{s}"));
        Ok(Self {
            dw_weight: get("dw.weight")?,
            dw_bias: get("dw.bias")?.data(),
            norm_gamma: get("norm.gamma")?.data(),
            norm_beta: get("norm.beta")?.data(),
            pw1_weight: get("pw1.weight")?,
            pw1_bias: get("pw1.bias")?.data(),
            pw2_weight: get("pw2.weight")?,
            pw2_bias: get("pw2.bias")?.data(),
            layer_scale: get("scale")?.data(),
        })
    }
}

pub fn init_params(init: &mut ParamInit, cfg: &ModelConfig) {
    let (c, mid, k) = (cfg.dec_channels, cfg.dec_mid, cfg.dec_kernel);
    let mut p = init.conv("dec.embed", c, cfg.latent, k);
    p.extend(init.norm("dec.embed_norm", c));
    for b in 0..cfg.num_decoder_blocks {
        let pre = format!("dec.blocks.{b}");
        p.push((format!("{pre}.dw.weight"), init.uniform(&[c, k], k)));
        p.push((format!("{pre}.dw.bias"), init.uniform(&[c], k)));
        p.extend(init.norm(&format!("{pre}.norm"), c));
        p.push((format!("{pre}.pw1.weight"), init.uniform(&[mid, c], c)));
        p.push((format!("{pre}.pw1.bias"), init.uniform(&[mid], c)));
        p.push((format!("{pre}.pw2.weight"), init.uniform(&[c, mid], mid)));
        p.push((format!("{pre}.pw2.bias"), init.uniform(&[c], mid)));
        p.push((
            format!("{pre}.scale"),
            FrameTensor::filled(&[c], 1.0 / cfg.num_decoder_blocks as f32),
        ));
    }
    p.extend(init.norm("dec.final_norm", c));
    p.push(("dec.head.weight".into(), init.uniform(&[2 * cfg.bins(), c], c)));
    p.push(("dec.head.bias".into(), init.uniform(&[2 * cfg.bins()], c)));
    init.put(p);
}

/// Input convolution plus layer norm; maps `latent` to `dec_channels`.
pub fn embed_frames(z: &FrameTensor, store: &WeightStore) -> Result<FrameTensor> {
    let w = store.get("dec.embed.weight")?;
    let pad = w.shape().get(2).copied().unwrap_or(1) / 2;
    let h = nnkit::conv1d(z, w, Some(store.get("dec.embed.bias")?.data()), pad, 1)?;
    nnkit::layer_norm_channels(
        &h,
        store.get("dec.embed_norm.gamma")?.data(),
        store.get("dec.embed_norm.beta")?.data(),
        LAYER_NORM_EPS,
    )
}

/// `h + scale ⊙ pw2(gelu(pw1(norm(dw(h)))))`.
pub fn convnext_block(h: &FrameTensor, p: &ConvNextParams<'_>) -> Result<FrameTensor> {
    let (c, _) = h.dims2("convnext_block")?;
    if p.layer_scale.len() != c {
        return Err(Error::shape("convnext_block", format!("layer scale has {} entries for {c} channels", p.layer_scale.len())));
    }
    let k = p.dw_weight.shape().last().copied().unwrap_or(1);
    let r = nnkit::depthwise_conv1d(h, p.dw_weight, Some(p.dw_bias), k / 2)?;
    let r = nnkit::layer_norm_channels(&r, p.norm_gamma, p.norm_beta, LAYER_NORM_EPS)?;
    let mut r = nnkit::pointwise(&r, p.pw1_weight, Some(p.pw1_bias))?;
    r.map_inplace(nnkit::gelu);
    let r = nnkit::pointwise(&r, p.pw2_weight, Some(p.pw2_bias))?;
    if r.shape() != h.shape() {
        return Err(Error::shape("convnext_block", format!("branch {:?} vs input {:?}", r.shape(), h.shape())));
    }
    let mut out = h.clone();
    let t = h.frames();
    for (ch, &s) in p.layer_scale.iter().enumerate() {
        let dst = &mut out.data_mut()[ch * t..(ch + 1) * t];
        for (o, &b) in dst.iter_mut().zip(r.row(ch)) {
            *o += s * b;
        }
    }
    Ok(out)
}

/// Splits `2N` projected channels into clipped exp-magnitudes and raw phases.
pub fn spectral_from_projection(proj: &FrameTensor, bins: usize) -> Result<SpectralFrames> {
    let (c, _) = proj.dims2("fourier_head")?;
    if c != 2 * bins {
        return Err(Error::shape("fourier_head", format!("{c} channels, expected {}", 2 * bins)));
    }
    let magnitude = proj.slice_rows(0, bins).map(|l| l.min(LOG_MAGNITUDE_CLIP).exp());
    let phase = proj.slice_rows(bins, 2 * bins);
    SpectralFrames::new(magnitude, phase)
}

pub fn fourier_head(h: &FrameTensor, store: &WeightStore, cfg: &ModelConfig) -> Result<SpectralFrames> {
    let h = nnkit::layer_norm_channels(
        h,
        store.get("dec.final_norm.gamma")?.data(),
        store.get("dec.final_norm.beta")?.data(),
        LAYER_NORM_EPS,
    )?;
    let proj = nnkit::pointwise(&h, store.get("dec.head.weight")?, Some(store.get("dec.head.bias")?.data()))?;
    spectral_from_projection(&proj, cfg.bins())
}

/// Latent frames to Fourier coefficients (no synthesis).
pub fn decode_spectrum(z: &FrameTensor, store: &WeightStore, cfg: &ModelConfig) -> Result<SpectralFrames> {
    let (_, t) = z.dims2("decode")?;
    if t == 0 {
        return Err(Error::Empty("decode"));
    }
    let mut h = embed_frames(z, store)?;
    for b in 0..cfg.num_decoder_blocks {
        h = convnext_block(&h, &ConvNextParams::from_store(store, b)?)?;
    }
    fourier_head(&h, store, cfg)
}

/// Full decoder: `(T−1)·hop` samples for `T` latent frames.
pub fn decode(z: &FrameTensor, store: &WeightStore, cfg: &ModelConfig) -> Result<Waveform> {
    let spec = decode_spectrum(z, store, cfg)?;
    spectral::istft(&spec, &cfg.stft()?, cfg.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_magnitude_is_clipped() {
        let mut proj = FrameTensor::zeros(&[4, 2]);
        proj.data_mut()[1] = LOG_MAGNITUDE_CLIP + 10.0;
        let s = spectral_from_projection(&proj, 2).unwrap();
        assert_eq!(s.magnitude.data()[0], 1.0);
        assert!((s.magnitude.data()[1] - 100.0).abs() < 1e-3);
        assert!(spectral_from_projection(&proj, 3).is_err());
    }

    #[test]
    fn zero_frames_rejected() {
        let cfg = ModelConfig::mini_fly_tts();
        let store = WeightStore::new();
        assert!(matches!(decode(&FrameTensor::zeros(&[192, 0]), &store, &cfg), Err(Error::Empty(_))));
    }
}
