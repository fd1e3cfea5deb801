//! Training objectives as pure functions, plus the discriminator's
//! convolutional prediction head over externally supplied features.

use crate::error::{Error, Result};
use crate::nnkit::{self, LEAKY_SLOPE};
use crate::runtime::init::ParamInit;
use crate::runtime::WeightStore;
use crate::tensor::FrameTensor;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianParams {
    pub mean: FrameTensor,
    pub logstd: FrameTensor,
}

impl GaussianParams {
    pub fn new(mean: FrameTensor, logstd: FrameTensor) -> Result<Self> {
        if mean.shape() != logstd.shape() {
            return Err(Error::shape(
                "GaussianParams",
                format!("mean {:?} vs logstd {:?}", mean.shape(), logstd.shape()),
            ));
        }
        Ok(Self { mean, logstd })
    }

    pub fn scalar(mean: f32, logstd: f32) -> Self {
        Self { mean: FrameTensor::from_vec(vec![mean]), logstd: FrameTensor::from_vec(vec![logstd]) }
    }
}

/// Per-frame discriminator outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSeq(pub Vec<f32>);

impl ScoreSeq {
    pub fn filled(len: usize, v: f32) -> Self {
        Self(vec![v; len])
    }
}

fn mean_of(op: &'static str, xs: impl ExactSizeIterator<Item = f64>) -> Result<f64> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::Empty(op));
    }
    Ok(xs.sum::<f64>() / n as f64)
}

/// Mean over elements of `KL(q ‖ p)` for diagonal Gaussians.
pub fn gaussian_kl(q: &GaussianParams, p: &GaussianParams) -> Result<f64> {
    if q.mean.shape() != p.mean.shape() || q.logstd.shape() != p.logstd.shape() || q.mean.shape() != q.logstd.shape() {
        return Err(Error::shape("gaussian_kl", format!("q {:?} vs p {:?}", q.mean.shape(), p.mean.shape())));
    }
    let terms = (0..q.mean.len()).map(|i| {
        let (mq, lq) = (q.mean.data()[i] as f64, q.logstd.data()[i] as f64);
        let (mp, lp) = (p.mean.data()[i] as f64, p.logstd.data()[i] as f64);
        lp - lq + ((2.0 * lq).exp() + (mq - mp).powi(2)) / (2.0 * (2.0 * lp).exp()) - 0.5
    });
    mean_of("gaussian_kl", terms)
}

/// `log_likelihood − kl`; the KL term must be non-negative.
pub fn elbo_lower_bound(log_likelihood: f64, kl: f64) -> Result<f64> {
    if kl < 0.0 || kl.is_nan() {
        return Err(Error::invalid("elbo_lower_bound", format!("KL term {kl} is negative")));
    }
    Ok(log_likelihood - kl)
}

/// `mean((real − 1)²) + mean(fake²)`.
pub fn lsgan_discriminator_loss(real: &ScoreSeq, fake: &ScoreSeq) -> Result<f64> {
    let r = mean_of("lsgan_discriminator_loss", real.0.iter().map(|&s| (s as f64 - 1.0).powi(2)))?;
    let f = mean_of("lsgan_discriminator_loss", fake.0.iter().map(|&s| (s as f64).powi(2)))?;
    Ok(r + f)
}

/// `mean((fake − 1)²)`.
pub fn lsgan_generator_loss(fake: &ScoreSeq) -> Result<f64> {
    mean_of("lsgan_generator_loss", fake.0.iter().map(|&s| (s as f64 - 1.0).powi(2)))
}

pub const HEAD_LAYERS: usize = 3;
pub const HEAD_HIDDEN: usize = 256;

/// Prediction head weights for `feature_dim`-channel inputs.
pub fn init_prediction_head(feature_dim: usize, hidden: usize, seed: u64) -> WeightStore {
    let mut init = ParamInit::new(seed);
    let mut c_in = feature_dim;
    for l in 0..HEAD_LAYERS {
        let p = init.conv(&format!("head.convs.{l}"), hidden, c_in, 3);
        init.put(p);
        c_in = hidden;
    }
    let p = init.conv("head.proj", 1, hidden, 1);
    init.put(p);
    init.finish()
}

/// Three same-length convs with Leaky ReLU, then a 1-channel projection;
/// one score per feature frame.
pub fn prediction_head(features: &FrameTensor, store: &WeightStore) -> Result<ScoreSeq> {
    let mut h = features.clone();
    for l in 0..HEAD_LAYERS {
        let w = store.get(&format!("head.convs.{l}.weight"))?;
        h = nnkit::conv1d(&h, w, Some(store.get(&format!("head.convs.{l}.bias"))?.data()), 1, 1)?;
        h.map_inplace(|v| nnkit::leaky_relu(v, LEAKY_SLOPE));
    }
    let out = nnkit::pointwise(&h, store.get("head.proj.weight")?, Some(store.get("head.proj.bias")?.data()))?;
    Ok(ScoreSeq(out.into_data()))
}
