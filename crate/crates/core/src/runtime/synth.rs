use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::{Duration, Instant};

use crate::decoder;
use crate::duration::{self, DurationSeq};
use crate::error::{Error, Result};
use crate::prior_flow::{self, Direction, FlowPlan};
use crate::spectral::{self, Waveform};
use crate::tensor::FrameTensor;
use crate::text_encoder::{self, SharingPlan, TokenSeq};

use super::config::{DecoderKind, ModelConfig};
use super::reference;
use super::weights::WeightStore;

pub const DEFAULT_NOISE_SCALE: f32 = 0.667;
pub const DEFAULT_LENGTH_SCALE: f32 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthesisOptions {
    pub noise_scale: f32,
    pub length_scale: f32,
    pub seed: u64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { noise_scale: DEFAULT_NOISE_SCALE, length_scale: DEFAULT_LENGTH_SCALE, seed: 0 }
    }
}

/// Wall time spent in each pipeline stage of one call.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub encoder: Duration,
    /// Duration prediction, length regulation and prior sampling.
    pub duration: Duration,
    pub flow: Duration,
    pub decoder: Duration,
    pub istft: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.encoder + self.duration + self.flow + self.decoder + self.istft
    }
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub waveform: Waveform,
    pub durations: DurationSeq,
    pub timings: StageTimings,
}

/// A validated (store, config) pair ready for repeated synthesis.
#[derive(Clone, Copy, Debug)]
pub struct Synthesizer<'a> {
    store: &'a WeightStore,
    config: &'a ModelConfig,
    encoder_plan: SharingPlan,
    flow_plan: FlowPlan,
}

fn expect_shape(store: &WeightStore, slot: &str, shape: &[usize]) -> Result<()> {
    let t = store.get(slot)?;
    if t.shape() != shape {
        return Err(Error::ConfigMismatch(format!("{slot} has shape {:?}, config implies {shape:?}", t.shape())));
    }
    Ok(())
}

/// Checks that `store` was built for `config`: embedded config (if any),
/// sharing layout and the tensor shapes at each module boundary.
pub fn check_store(store: &WeightStore, config: &ModelConfig) -> Result<()> {
    config.validate()?;
    if let Some(embedded) = super::config_from_store(store)? {
        if &embedded != config {
            return Err(Error::ConfigMismatch(format!(
                "weights were built for '{}', not '{}'",
                embedded.name, config.name
            )));
        }
    }
    store.check_aliases()?;
    let (d, dz) = (config.hidden, config.latent);
    expect_shape(store, "enc.emb.weight", &[config.vocab_size, d])?;
    expect_shape(store, "enc.proj.weight", &[2 * dz, d, 1])?;
    expect_shape(store, "dp.proj.weight", &[1, d, 1])?;
    expect_shape(store, "flow.steps.0.pre.weight", &[config.flow_hidden, dz / 2, 1])?;
    let encoder_sets = text_encoder::distinct_layer_storages(store, config);
    if encoder_sets != config.g1 {
        return Err(Error::ConfigMismatch(format!("{encoder_sets} encoder parameter sets, config has g1={}", config.g1)));
    }
    let flow_sets = prior_flow::distinct_wavenet_storages(store, config);
    if flow_sets != config.g2 {
        return Err(Error::ConfigMismatch(format!("{flow_sets} flow WaveNet sets, config has g2={}", config.g2)));
    }
    match config.decoder {
        DecoderKind::ConvNextIstft => {
            expect_shape(store, "dec.embed.weight", &[config.dec_channels, dz, config.dec_kernel])?;
            expect_shape(store, "dec.head.weight", &[2 * config.bins(), config.dec_channels])?;
            let last = config.num_decoder_blocks - 1;
            store.get(&format!("dec.blocks.{last}.scale"))?;
            if store.contains(&format!("dec.blocks.{}.scale", config.num_decoder_blocks)) {
                return Err(Error::ConfigMismatch("store has more decoder blocks than config".into()));
            }
        }
        DecoderKind::TransposedConv => {
            expect_shape(store, "ref.conv_pre.weight", &[config.reference.initial_channels, dz, 7])?;
        }
    }
    Ok(())
}

/// Samples `mean + noise_scale·exp(logstd)·ε` with ε ~ N(0, 1) drawn from a
/// ChaCha8 stream in row-major order.
pub fn sample_prior(mean: &FrameTensor, logstd: &FrameTensor, noise_scale: f32, seed: u64) -> Result<FrameTensor> {
    if mean.shape() != logstd.shape() {
        return Err(Error::shape("sample_prior", "mean and logstd differ in shape"));
    }
    if noise_scale == 0.0 {
        return Ok(mean.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = mean
        .data()
        .iter()
        .zip(logstd.data())
        .map(|(&m, &l)| {
            let eps: f32 = StandardNormal.sample(&mut rng);
            m + noise_scale * l.exp() * eps
        })
        .collect();
    FrameTensor::new(mean.shape().to_vec(), data)
}

impl<'a> Synthesizer<'a> {
    pub fn new(store: &'a WeightStore, config: &'a ModelConfig) -> Result<Self> {
        check_store(store, config)?;
        Ok(Self {
            store,
            config,
            encoder_plan: text_encoder::encoder_plan(config)?,
            flow_plan: FlowPlan::from_config(config)?,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        self.config
    }

    /// Text to frame-level latents `z` (before the decoder).
    pub fn latents(&self, tokens: &TokenSeq, opts: &SynthesisOptions, timings: &mut StageTimings) -> Result<(FrameTensor, DurationSeq)> {
        let (store, cfg) = (self.store, self.config);
        let clock = Instant::now();
        let enc = text_encoder::encode_text(tokens, store, &self.encoder_plan, cfg)?;
        timings.encoder = clock.elapsed();

        let clock = Instant::now();
        let logd = duration::predict_log_durations(&enc.hidden, store)?;
        let durations = duration::durations_to_frames(&logd, opts.length_scale)?;
        let (mean, logstd) = duration::regulate(&enc.prior_mean, &enc.prior_logstd, &durations)?;
        let z_p = sample_prior(&mean, &logstd, opts.noise_scale, opts.seed)?;
        timings.duration = clock.elapsed();

        let clock = Instant::now();
        let z = prior_flow::flow_apply(&z_p, &self.flow_plan, store, cfg, Direction::Inverse)?;
        timings.flow = clock.elapsed();
        Ok((z, durations))
    }

    pub fn synthesize(&self, tokens: &TokenSeq, opts: &SynthesisOptions) -> Result<Synthesis> {
        let mut timings = StageTimings::default();
        let (z, durations) = self.latents(tokens, opts, &mut timings)?;
        let cfg = self.config;
        let waveform = match cfg.decoder {
            DecoderKind::ConvNextIstft => {
                if z.frames() < 2 {
                    return Err(Error::invalid("synthesize", "a single frame yields no audio; raise length_scale"));
                }
                let clock = Instant::now();
                let spec = decoder::decode_spectrum(&z, self.store, cfg)?;
                timings.decoder = clock.elapsed();
                let clock = Instant::now();
                let w = spectral::istft(&spec, &cfg.stft()?, cfg.sample_rate)?;
                timings.istft = clock.elapsed();
                w
            }
            DecoderKind::TransposedConv => {
                let clock = Instant::now();
                let w = reference::reference_decode(&z, self.store, cfg)?;
                timings.decoder = clock.elapsed();
                w
            }
        };
        debug_assert_eq!(waveform.len(), cfg.output_samples(durations.total_frames()));
        Ok(Synthesis { waveform, durations, timings })
    }
}

/// Text to waveform in one call.
pub fn synthesize(
    tokens: &TokenSeq,
    store: &WeightStore,
    config: &ModelConfig,
    noise_scale: f32,
    length_scale: f32,
    seed: u64,
) -> Result<Waveform> {
    let opts = SynthesisOptions { noise_scale, length_scale, seed };
    Ok(Synthesizer::new(store, config)?.synthesize(tokens, &opts)?.waveform)
}
