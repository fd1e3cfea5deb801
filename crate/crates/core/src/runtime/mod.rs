//! Model assembly: configuration, weights and their file format, parameter
//! and MAC accounting, the reference decoder, synthesis and benchmarking.

pub mod config;
pub mod format;
pub mod init;
pub mod macs;
pub mod params;
pub mod reference;
pub mod rtf;
pub mod synth;
pub mod tokens;
pub mod wav;
pub mod weights;

pub use config::{DecoderKind, ModelConfig, ReferenceDecoderConfig, PRESET_NAMES};
pub use format::{load_weights, save_weights};
pub use init::{init_weights, ParamInit};
pub use macs::{estimate_macs, MacEstimate};
pub use params::{breakdown, count_parameters, ParamBreakdown};
pub use reference::reference_decode;
pub use rtf::{compare_decoders, measure_rtf, DecoderComparison, RtfReport};
pub use synth::{synthesize, Synthesis, SynthesisOptions, Synthesizer};
pub use weights::WeightStore;

use crate::error::{Error, Result};

const CONFIG_KEY: &str = "config";

pub fn preset_config(name: &str) -> Result<ModelConfig> {
    ModelConfig::preset(name)
}

/// Records `config` in the store metadata so weight files are self-describing.
pub fn embed_config(store: &mut WeightStore, config: &ModelConfig) {
    let json = serde_json::to_string(config).expect("config serializes");
    store.set_metadata(CONFIG_KEY, json);
}

/// The config recorded in the store, if any.
pub fn config_from_store(store: &WeightStore) -> Result<Option<ModelConfig>> {
    store
        .metadata()
        .get(CONFIG_KEY)
        .map(|s| serde_json::from_str(s).map_err(|e| Error::Format(format!("embedded config: {e}"))))
        .transpose()
}
