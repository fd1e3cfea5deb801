//! `flytts` command-line interface.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or format error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use flytts_core::runtime::{
    self, format, macs, params, rtf, synth::SynthesisOptions, tokens::parse_token_ids, wav, ModelConfig,
};
use flytts_core::{TokenSeq, WeightStore};

#[derive(Parser)]
#[command(name = "flytts", version, about = "Lightweight iSTFT text-to-speech inference and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a randomly initialized weight file for a preset.
    Init {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize a 16-bit mono WAV file.
    Synth {
        #[arg(long)]
        weights: PathBuf,
        /// Preset the weights must match; defaults to the config stored in the file.
        #[arg(long)]
        config_preset: Option<String>,
        #[command(flatten)]
        input: TokenInput,
        #[arg(long, default_value_t = runtime::synth::DEFAULT_NOISE_SCALE)]
        noise_scale: f32,
        #[arg(long, default_value_t = runtime::synth::DEFAULT_LENGTH_SCALE)]
        length_scale: f32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count distinct parameters in a weight file.
    Params {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        breakdown: bool,
        #[arg(long)]
        json: bool,
    },
    /// Measure the real-time factor of a weight file.
    Bench {
        #[arg(long)]
        weights: PathBuf,
        #[command(flatten)]
        input: TokenInput,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = rtf::DEFAULT_WARMUPS)]
        warmups: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also time the transposed-convolution reference decoder.
        #[arg(long)]
        compare_reference: bool,
        /// Latent frames used for the decoder comparison.
        #[arg(long, default_value_t = 400)]
        frames: usize,
        /// Write the structured report as JSON to this path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Estimate multiply-accumulates per stage.
    Macs {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        frames: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TokenInput {
    /// File of integer token ids (whitespace or comma separated).
    #[arg(long)]
    tokens: Option<PathBuf>,
    /// Inline text, tokenized as UTF-8 bytes.
    #[arg(long)]
    text: Option<String>,
}

impl TokenInput {
    fn load(&self, vocab: usize) -> Result<TokenSeq> {
        let seq = match (&self.tokens, &self.text) {
            (Some(path), _) => {
                let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                TokenSeq::new(parse_token_ids(&raw)?, vocab)?
            }
            (None, Some(text)) => TokenSeq::from_bytes(text, vocab)?,
            (None, None) => bail!(UsageError("one of --tokens or --text is required".into())),
        };
        Ok(seq)
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn load_store(path: &Path) -> Result<WeightStore> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    format::load_weights(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn resolve_config(store: &WeightStore, preset: Option<&str>) -> Result<ModelConfig> {
    match (preset, runtime::config_from_store(store)?) {
        (Some(name), _) => Ok(ModelConfig::preset(name).map_err(|e| UsageError(e.to_string()))?),
        (None, Some(cfg)) => Ok(cfg),
        (None, None) => bail!(UsageError("weight file has no embedded config; pass --config-preset".into())),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Init { preset, seed, out } => {
            let cfg = ModelConfig::preset(&preset).map_err(|e| UsageError(e.to_string()))?;
            let store = runtime::init_weights(&cfg, seed)?;
            format::save_to_path(&store, &out)?;
            println!(
                "wrote {} ({}, {} parameters, {} storages, {} slots)",
                out.display(),
                cfg.name,
                store.count_parameters()?,
                store.num_storages(),
                store.num_slots()
            );
        }
        Command::Synth { weights, config_preset, input, noise_scale, length_scale, seed, out } => {
            let store = load_store(&weights)?;
            let cfg = resolve_config(&store, config_preset.as_deref())?;
            let tokens = input.load(cfg.vocab_size)?;
            if !(noise_scale >= 0.0 && length_scale > 0.0) {
                bail!(UsageError("noise-scale must be ≥ 0 and length-scale > 0".into()));
            }
            let synth = runtime::Synthesizer::new(&store, &cfg)?;
            let result = synth.synthesize(&tokens, &SynthesisOptions { noise_scale, length_scale, seed })?;
            wav::write_wav(&out, &result.waveform)?;
            println!(
                "wrote {} ({} samples, {:.3} s, {} frames for {} tokens)",
                out.display(),
                result.waveform.len(),
                result.waveform.duration_seconds(),
                result.durations.total_frames(),
                tokens.len()
            );
        }
        Command::Params { weights, breakdown, json } => {
            let store = load_store(&weights)?;
            let b = params::breakdown(&store)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&b)?);
            } else {
                if breakdown {
                    println!("text_encoder: {} ({})", b.text_encoder, params::format_millions(b.text_encoder));
                    println!("  encoder_layers: {}", b.encoder_layers);
                    println!("duration: {} ({})", b.duration, params::format_millions(b.duration));
                    println!("flow: {} ({})", b.flow, params::format_millions(b.flow));
                    println!("  flow_wavenet: {}", b.flow_wavenet);
                    println!("decoder: {} ({})", b.decoder, params::format_millions(b.decoder));
                }
                println!("total: {} ({})", b.total, params::format_millions(b.total));
            }
        }
        Command::Bench { weights, input, repeats, warmups, seed, compare_reference, frames, json } => {
            if repeats == 0 {
                bail!(UsageError("--repeats must be at least 1".into()));
            }
            let store = load_store(&weights)?;
            let cfg = resolve_config(&store, None)?;
            let tokens = input.load(cfg.vocab_size)?;
            let opts = SynthesisOptions { seed, ..SynthesisOptions::default() };
            let report = rtf::measure_rtf(&cfg, &store, &tokens, repeats, warmups, &opts)?;
            print!("{}", report.to_text());
            let comparison = if compare_reference {
                if frames < 2 {
                    bail!(UsageError("--frames must be at least 2".into()));
                }
                let c = rtf::compare_decoders(&cfg, &store, frames, repeats, seed)?;
                print!("{}", c.to_text());
                Some(c)
            } else {
                None
            };
            if let Some(path) = json {
                let doc = serde_json::json!({ "rtf": report, "decoder_comparison": comparison });
                std::fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
            }
        }
        Command::Macs { preset, frames, json } => {
            let cfg = ModelConfig::preset(&preset).map_err(|e| UsageError(e.to_string()))?;
            if frames < 2 {
                bail!(UsageError("--frames must be at least 2".into()));
            }
            let e = macs::estimate_macs(&cfg, frames);
            if json {
                println!("{}", serde_json::to_string_pretty(&e)?);
            } else {
                println!("preset: {}", cfg.name);
                println!("frames: {} (tokens assumed: {})", e.frames, e.tokens);
                println!("encoder: {}", e.encoder);
                println!("duration: {}", e.duration);
                println!("flow: {}", e.flow);
                println!("convnext_decoder: {}", e.convnext_decoder);
                println!("istft: {}", e.istft);
                println!("reference_decoder: {}", e.reference_decoder);
                println!("istft_decoder_macs_per_sample: {:.1}", e.istft_decoder_per_sample());
                println!("reference_decoder_macs_per_sample: {:.1}", e.reference_per_sample());
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        return 2;
    }
    match err.chain().find_map(|e| e.downcast_ref::<flytts_core::Error>()) {
        Some(core) if !core.is_data_error() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
