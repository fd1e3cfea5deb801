//! Shared fixtures for the criterion benches.

use flytts_core::runtime::rtf::random_latent;
use flytts_core::runtime::{init_weights, ModelConfig};
use flytts_core::{FrameTensor, WeightStore};

pub const SEED: u64 = 17;

/// A preset with freshly initialized weights.
pub struct Fixture {
    pub config: ModelConfig,
    pub store: WeightStore,
}

impl Fixture {
    pub fn preset(name: &str) -> Self {
        let config = ModelConfig::preset(name).expect("known preset");
        let store = init_weights(&config, SEED).expect("preset initializes");
        Self { config, store }
    }

    pub fn weight(&self, name: &str) -> &FrameTensor {
        self.store.get(name).expect("weight present")
    }

    pub fn latent(&self, frames: usize) -> FrameTensor {
        random_latent(self.config.latent, frames, SEED)
    }
}

/// Standard-normal activations shaped `[channels, frames]`.
pub fn activations(channels: usize, frames: usize) -> FrameTensor {
    random_latent(channels, frames, SEED ^ 1)
}
