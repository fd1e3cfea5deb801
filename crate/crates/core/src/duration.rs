//! Deterministic duration prediction and length regulation.

use crate::error::{Error, Result};
use crate::nnkit::{self, LAYER_NORM_EPS};
use crate::runtime::init::ParamInit;
use crate::runtime::{ModelConfig, WeightStore};
use crate::tensor::FrameTensor;

/// Initial bias of the duration projection: `ln 5`, about 58 ms per token
/// at 22.05 kHz with hop 256, so untrained models produce speech-length audio.
pub const INITIAL_LOG_DURATION: f32 = 1.609_438;

/// Frames allotted to each token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DurationSeq {
    frames_per_token: Vec<usize>,
}

impl DurationSeq {
    pub fn new(frames_per_token: Vec<usize>) -> Result<Self> {
        if frames_per_token.contains(&0) {
            return Err(Error::invalid("DurationSeq", "every token needs at least one frame"));
        }
        Ok(Self { frames_per_token })
    }

    pub fn frames_per_token(&self) -> &[usize] {
        &self.frames_per_token
    }

    pub fn len(&self) -> usize {
        self.frames_per_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames_per_token.is_empty()
    }

    pub fn total_frames(&self) -> usize {
        self.frames_per_token.iter().sum()
    }
}

pub fn init_params(init: &mut ParamInit, cfg: &ModelConfig) {
    let d = cfg.hidden;
    let mut p = init.conv("dp.conv1", d, d, cfg.duration_kernel);
    p.extend(init.norm("dp.norm1", d));
    p.extend(init.conv("dp.conv2", d, d, cfg.duration_kernel));
    p.extend(init.norm("dp.norm2", d));
    let mut proj = init.conv("dp.proj", 1, d, 1);
    proj[1].1 = FrameTensor::filled(&[1], INITIAL_LOG_DURATION);
    p.extend(proj);
    init.put(p);
}

/// conv → ReLU → norm, twice, then a scalar projection per token.
pub fn predict_log_durations(hidden: &FrameTensor, store: &WeightStore) -> Result<Vec<f32>> {
    let mut h = hidden.clone();
    for i in 1..=2 {
        let w = store.get(&format!("dp.conv{i}.weight"))?;
        let pad = w.shape().get(2).copied().unwrap_or(1) / 2;
        h = nnkit::conv1d(&h, w, Some(store.get(&format!("dp.conv{i}.bias"))?.data()), pad, 1)?;
        h.map_inplace(nnkit::relu);
        h = nnkit::layer_norm_channels(
            &h,
            store.get(&format!("dp.norm{i}.gamma"))?.data(),
            store.get(&format!("dp.norm{i}.beta"))?.data(),
            LAYER_NORM_EPS,
        )?;
    }
    let out = nnkit::pointwise(&h, store.get("dp.proj.weight")?, Some(store.get("dp.proj.bias")?.data()))?;
    Ok(out.into_data())
}

/// `d_i = max(1, ceil(exp(logd_i)·length_scale))`, computed in `f32`.
pub fn durations_to_frames(log_durations: &[f32], length_scale: f32) -> Result<DurationSeq> {
    if !(length_scale > 0.0 && length_scale.is_finite()) {
        return Err(Error::invalid("durations_to_frames", format!("length_scale {length_scale} must be positive")));
    }
    let frames = log_durations
        .iter()
        .enumerate()
        .map(|(i, &ld)| {
            if !ld.is_finite() {
                return Err(Error::invalid("durations_to_frames", format!("log-duration {i} is {ld}")));
            }
            let d = (ld.exp() * length_scale).ceil();
            // saturating cast keeps huge predictions finite
            Ok((d as usize).max(1))
        })
        .collect::<Result<_>>()?;
    DurationSeq::new(frames)
}

/// Repeats column `i` of each tensor `d_i` times.
pub fn regulate(
    mean: &FrameTensor,
    logstd: &FrameTensor,
    durations: &DurationSeq,
) -> Result<(FrameTensor, FrameTensor)> {
    Ok((expand(mean, durations)?, expand(logstd, durations)?))
}

pub fn expand(x: &FrameTensor, durations: &DurationSeq) -> Result<FrameTensor> {
    let (c, t) = x.dims2("regulate")?;
    if durations.len() != t {
        return Err(Error::shape("regulate", format!("{} durations for {t} tokens", durations.len())));
    }
    let total = durations.total_frames();
    let mut out = Vec::with_capacity(c * total);
    for ch in 0..c {
        for (&v, &d) in x.row(ch).iter().zip(durations.frames_per_token()) {
            out.extend(std::iter::repeat_n(v, d));
        }
    }
    FrameTensor::new(vec![c, total], out)
}
