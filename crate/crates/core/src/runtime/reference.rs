//! HiFi-GAN-shaped transposed-convolution decoder, kept as the speed baseline.
//!
//! conv_pre → [LeakyReLU → ConvTranspose → mean of multi-receptive-field
//! residual blocks] per stage → LeakyReLU → conv_post → tanh.

use crate::error::{Error, Result};
use crate::nnkit::{self, LEAKY_SLOPE};
use crate::spectral::Waveform;
use crate::tensor::FrameTensor;

use super::config::ModelConfig;
use super::init::ParamInit;
use super::weights::WeightStore;

// Slope of the activation before conv_post.
const FINAL_SLOPE: f32 = 0.01;

pub fn init_params(init: &mut ParamInit, cfg: &ModelConfig) {
    let r = &cfg.reference;
    let mut p = init.conv("ref.conv_pre", r.initial_channels, cfg.latent, 7);
    for (i, (&rate, &k)) in r.upsample_rates.iter().zip(&r.upsample_kernels).enumerate() {
        let (c_in, c_out) = (r.initial_channels >> i, r.stage_channels(i));
        // transposed weights are [c_in, c_out, k]; fan-in per output tap is c_in·k/stride
        let fan_in = c_in * k / rate;
        p.push((format!("ref.ups.{i}.weight"), init.uniform(&[c_in, c_out, k], fan_in)));
        p.push((format!("ref.ups.{i}.bias"), init.uniform(&[c_out], fan_in)));
        for (j, (&rk, dils)) in r.resblock_kernels.iter().zip(&r.resblock_dilations).enumerate() {
            for l in 0..dils.len() {
                p.extend(init.conv(&format!("ref.resblocks.{i}.{j}.convs1.{l}"), c_out, c_out, rk));
                p.extend(init.conv(&format!("ref.resblocks.{i}.{j}.convs2.{l}"), c_out, c_out, rk));
            }
        }
    }
    let last = r.stage_channels(r.upsample_rates.len() - 1);
    p.push(("ref.conv_post.weight".into(), init.uniform(&[1, last, 7], last * 7)));
    init.put(p);
}

fn leaky(x: &FrameTensor, slope: f32) -> FrameTensor {
    x.map(|v| nnkit::leaky_relu(v, slope))
}

fn resblock(x: &FrameTensor, store: &WeightStore, prefix: &str, dilations: &[usize]) -> Result<FrameTensor> {
    let mut x = x.clone();
    for (l, &d) in dilations.iter().enumerate() {
        let w1 = store.get(&format!("{prefix}.convs1.{l}.weight"))?;
        let k = w1.shape()[2];
        let xt = leaky(&x, LEAKY_SLOPE);
        let xt = nnkit::conv1d(&xt, w1, Some(store.get(&format!("{prefix}.convs1.{l}.bias"))?.data()), d * (k - 1) / 2, d)?;
        let xt = leaky(&xt, LEAKY_SLOPE);
        let w2 = store.get(&format!("{prefix}.convs2.{l}.weight"))?;
        let xt = nnkit::conv1d(&xt, w2, Some(store.get(&format!("{prefix}.convs2.{l}.bias"))?.data()), (k - 1) / 2, 1)?;
        x.add_assign(&xt)?;
    }
    Ok(x)
}

/// Produces `T·∏rates` samples for `T` latent frames.
pub fn reference_decode(z: &FrameTensor, store: &WeightStore, cfg: &ModelConfig) -> Result<Waveform> {
    let (c, t) = z.dims2("reference_decode")?;
    if c != cfg.latent {
        return Err(Error::ConfigMismatch(format!("latent has {c} channels, config says {}", cfg.latent)));
    }
    if t == 0 {
        return Err(Error::Empty("reference_decode"));
    }
    let r = &cfg.reference;
    let mut x = nnkit::conv1d(z, store.get("ref.conv_pre.weight")?, Some(store.get("ref.conv_pre.bias")?.data()), 3, 1)?;
    for (i, (&rate, &k)) in r.upsample_rates.iter().zip(&r.upsample_kernels).enumerate() {
        let up = leaky(&x, LEAKY_SLOPE);
        x = nnkit::conv_transpose1d(
            &up,
            store.get(&format!("ref.ups.{i}.weight"))?,
            Some(store.get(&format!("ref.ups.{i}.bias"))?.data()),
            rate,
            (k - rate) / 2,
        )?;
        let mut sum: Option<FrameTensor> = None;
        for (j, dils) in r.resblock_dilations.iter().enumerate() {
            let y = resblock(&x, store, &format!("ref.resblocks.{i}.{j}"), dils)?;
            match &mut sum {
                Some(s) => s.add_assign(&y)?,
                None => sum = Some(y),
            }
        }
        if let Some(s) = sum {
            x = s.scale(1.0 / r.resblock_dilations.len() as f32);
        }
    }
    let x = leaky(&x, FINAL_SLOPE);
    let y = nnkit::conv1d(&x, store.get("ref.conv_post.weight")?, None, 3, 1)?;
    let samples = y.into_data().into_iter().map(f32::tanh).collect();
    Ok(Waveform::new(samples, cfg.sample_rate))
}
