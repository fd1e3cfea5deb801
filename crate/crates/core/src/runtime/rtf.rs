//! Real-time-factor measurement.
//!
//! Runs are single-threaded and timed with the monotonic clock; warmup runs
//! are discarded. RTF is mean wall time over synthesized audio duration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::decoder;
use crate::error::{Error, Result};
use crate::tensor::FrameTensor;
use crate::text_encoder::TokenSeq;

use super::config::{DecoderKind, ModelConfig};
use super::init::init_weights;
use super::reference;
use super::synth::{StageTimings, SynthesisOptions, Synthesizer};
use super::weights::WeightStore;

/// Reference CPU RTFs measured on a Core i9-10920X, printed for context only.
pub const REFERENCE_POINTS: [(&str, f64); 2] = [("VITS-base CPU", 0.1221), ("FLY-TTS CPU", 0.0139)];

pub const DEFAULT_WARMUPS: usize = 3;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StageSeconds {
    pub encoder: f64,
    pub duration: f64,
    pub flow: f64,
    pub decoder: f64,
    pub istft: f64,
}

impl StageSeconds {
    fn mean_of(timings: &[StageTimings]) -> Self {
        let n = timings.len().max(1) as f64;
        let avg = |f: fn(&StageTimings) -> Duration| timings.iter().map(|t| f(t).as_secs_f64()).sum::<f64>() / n;
        Self {
            encoder: avg(|t| t.encoder),
            duration: avg(|t| t.duration),
            flow: avg(|t| t.flow),
            decoder: avg(|t| t.decoder),
            istft: avg(|t| t.istft),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub available_parallelism: usize,
    pub threads_used: usize,
    pub optimized_build: bool,
}

impl Environment {
    pub fn capture() -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            threads_used: 1,
            optimized_build: !cfg!(debug_assertions),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RtfReport {
    pub model: String,
    pub tokens: usize,
    pub samples: usize,
    pub audio_seconds: f64,
    /// Mean wall time per run.
    pub wall_seconds: f64,
    pub median_wall_seconds: f64,
    pub rtf: f64,
    pub median_rtf: f64,
    pub repeats: usize,
    pub warmups: usize,
    pub stages: StageSeconds,
    pub environment: Environment,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl RtfReport {
    /// Aggregates per-run wall times for `samples` of audio at `sample_rate`.
    pub fn from_runs(model: &str, tokens: usize, samples: usize, sample_rate: u32, walls: &[f64], warmups: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::invalid("measure_rtf", "synthesis produced no audio"));
        }
        if walls.is_empty() {
            return Err(Error::invalid("measure_rtf", "need at least one timed run"));
        }
        let audio_seconds = samples as f64 / sample_rate as f64;
        let wall = walls.iter().sum::<f64>() / walls.len() as f64;
        let med = median(walls);
        Ok(Self {
            model: model.to_string(),
            tokens,
            samples,
            audio_seconds,
            wall_seconds: wall,
            median_wall_seconds: med,
            rtf: wall / audio_seconds,
            median_rtf: med / audio_seconds,
            repeats: walls.len(),
            warmups,
            stages: StageSeconds::default(),
            environment: Environment::capture(),
        })
    }

    /// Line-oriented `key: value` rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model: {}", self.model);
        for (name, rtf) in REFERENCE_POINTS {
            let _ = writeln!(s, "reference_rtf[{name}]: {rtf}");
        }
        let _ = writeln!(s, "tokens: {}", self.tokens);
        let _ = writeln!(s, "samples: {}", self.samples);
        let _ = writeln!(s, "audio_seconds: {:.6}", self.audio_seconds);
        let _ = writeln!(s, "repeats: {}", self.repeats);
        let _ = writeln!(s, "warmups: {}", self.warmups);
        let _ = writeln!(s, "wall_seconds_mean: {:.6}", self.wall_seconds);
        let _ = writeln!(s, "wall_seconds_median: {:.6}", self.median_wall_seconds);
        let _ = writeln!(s, "rtf_mean: {:.6}", self.rtf);
        let _ = writeln!(s, "rtf_median: {:.6}", self.median_rtf);
        let st = &self.stages;
        for (name, v) in [
            ("encoder", st.encoder),
            ("duration", st.duration),
            ("flow", st.flow),
            ("decoder", st.decoder),
            ("istft", st.istft),
        ] {
            let _ = writeln!(s, "stage_seconds[{name}]: {v:.6}");
        }
        let e = &self.environment;
        let _ = writeln!(
            s,
            "environment: os={} arch={} cpus={} threads={} optimized={}",
            e.os, e.arch, e.available_parallelism, e.threads_used, e.optimized_build
        );
        s
    }
}

/// Times `warmups + repeats` synthesis calls and reports on the last `repeats`.
pub fn measure_rtf(
    config: &ModelConfig,
    store: &WeightStore,
    tokens: &TokenSeq,
    repeats: usize,
    warmups: usize,
    opts: &SynthesisOptions,
) -> Result<RtfReport> {
    if repeats == 0 {
        return Err(Error::invalid("measure_rtf", "repeats must be at least 1"));
    }
    let synth = Synthesizer::new(store, config)?;
    for _ in 0..warmups {
        synth.synthesize(tokens, opts)?;
    }
    let mut walls = Vec::with_capacity(repeats);
    let mut stages = Vec::with_capacity(repeats);
    let mut samples = 0;
    for _ in 0..repeats {
        let clock = Instant::now();
        let out = synth.synthesize(tokens, opts)?;
        walls.push(clock.elapsed().as_secs_f64());
        stages.push(out.timings);
        samples = out.waveform.len();
    }
    let mut report = RtfReport::from_runs(&config.name, tokens.len(), samples, config.sample_rate, &walls, warmups)?;
    report.stages = StageSeconds::mean_of(&stages);
    Ok(report)
}

/// Decoder-only wall-clock comparison at a fixed latent length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecoderComparison {
    pub frames: usize,
    pub repeats: usize,
    pub istft_decoder_seconds: f64,
    pub reference_decoder_seconds: f64,
    pub speedup: f64,
}

impl DecoderComparison {
    pub fn to_text(&self) -> String {
        format!(
            "decoder_frames: {}\ndecoder_repeats: {}\nistft_decoder_seconds: {:.6}\nreference_decoder_seconds: {:.6}\ndecoder_speedup: {:.3}\n",
            self.frames, self.repeats, self.istft_decoder_seconds, self.reference_decoder_seconds, self.speedup
        )
    }
}

/// Random latent of `frames` frames, seeded.
pub fn random_latent(channels: usize, frames: usize, seed: u64) -> FrameTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..channels * frames).map(|_| StandardNormal.sample(&mut rng)).collect();
    FrameTensor::new(vec![channels, frames], data).expect("sized")
}

fn best_of(repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let clock = Instant::now();
        f()?;
        best = best.min(clock.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Times the ConvNeXt+iSTFT decoder of `config` against a freshly
/// initialized transposed-convolution decoder of the same latent width.
/// Each side reports its fastest of `repeats` runs.
pub fn compare_decoders(config: &ModelConfig, store: &WeightStore, frames: usize, repeats: usize, seed: u64) -> Result<DecoderComparison> {
    if config.decoder != DecoderKind::ConvNextIstft {
        return Err(Error::ConfigMismatch(format!("'{}' has no iSTFT decoder to compare", config.name)));
    }
    let ref_cfg = ModelConfig { latent: config.latent, ..ModelConfig::vits_base_shaped() };
    let ref_store = init_weights(&ref_cfg, seed)?;
    let z = random_latent(config.latent, frames, seed);
    let istft = best_of(repeats, || decoder::decode(&z, store, config).map(drop))?;
    let reference = best_of(repeats, || reference::reference_decode(&z, &ref_store, &ref_cfg).map(drop))?;
    Ok(DecoderComparison {
        frames,
        repeats: repeats.max(1),
        istft_decoder_seconds: istft,
        reference_decoder_seconds: reference,
        speedup: reference / istft,
    })
}
