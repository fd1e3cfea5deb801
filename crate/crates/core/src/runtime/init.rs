//! Deterministic parameter initialization.
//!
//! One ChaCha8 stream seeded from the user seed fills every tensor in a fixed
//! declaration order. Weights draw from `U(−1/√fan_in, 1/√fan_in)`, biases
//! likewise, norm gains start at one and norm shifts at zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::tensor::FrameTensor;

use super::config::{DecoderKind, ModelConfig};
use super::weights::WeightStore;

pub struct ParamInit {
    rng: ChaCha8Rng,
    store: WeightStore,
}

impl ParamInit {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), store: WeightStore::new() }
    }

    pub fn uniform(&mut self, shape: &[usize], fan_in: usize) -> FrameTensor {
        let bound = 1.0 / (fan_in.max(1) as f32).sqrt();
        let n: usize = shape.iter().product();
        let mut bits = vec![0u32; n];
        self.rng.fill(bits.as_mut_slice());
        // 24 random mantissa bits mapped onto [−bound, bound)
        let step = 2.0 * bound / (1u32 << 24) as f32;
        let data = bits.into_iter().map(|u| (u >> 8) as f32 * step - bound).collect();
        FrameTensor::new(shape.to_vec(), data).expect("shape product matches")
    }

    /// `{name}.weight` shaped `[c_out, c_in, k]` plus `{name}.bias`.
    pub fn conv(&mut self, name: &str, c_out: usize, c_in: usize, k: usize) -> Vec<(String, FrameTensor)> {
        let fan_in = c_in * k;
        let w = self.uniform(&[c_out, c_in, k], fan_in);
        let b = self.uniform(&[c_out], fan_in);
        vec![(format!("{name}.weight"), w), (format!("{name}.bias"), b)]
    }

    pub fn norm(&mut self, name: &str, c: usize) -> Vec<(String, FrameTensor)> {
        vec![
            (format!("{name}.gamma"), FrameTensor::filled(&[c], 1.0)),
            (format!("{name}.beta"), FrameTensor::zeros(&[c])),
        ]
    }

    pub fn put(&mut self, params: Vec<(String, FrameTensor)>) {
        for (name, t) in params {
            self.store.insert(name, t);
        }
    }

    /// Stores `params` under `storage_prefix` and points the matching suffix of
    /// every slot prefix at them.
    pub fn put_shared(
        &mut self,
        storage_prefix: &str,
        slot_prefixes: &[String],
        params: Vec<(String, FrameTensor)>,
    ) -> Result<()> {
        for (suffix, t) in params {
            let storage = format!("{storage_prefix}.{suffix}");
            self.store.insert_storage(storage.clone(), t);
            for slot in slot_prefixes {
                self.store.alias(format!("{slot}.{suffix}"), &storage)?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> WeightStore {
        self.store
    }
}

/// Builds a complete store for `config` with its sharing layout realized as
/// aliases. The config is embedded in the store metadata.
pub fn init_weights(config: &ModelConfig, seed: u64) -> Result<WeightStore> {
    config.validate()?;
    let mut init = ParamInit::new(seed);
    crate::text_encoder::init_params(&mut init, config)?;
    crate::duration::init_params(&mut init, config);
    crate::prior_flow::init_params(&mut init, config)?;
    match config.decoder {
        DecoderKind::ConvNextIstft => crate::decoder::init_params(&mut init, config),
        DecoderKind::TransposedConv => super::reference::init_params(&mut init, config),
    }
    let mut store = init.finish();
    super::embed_config(&mut store, config);
    Ok(store)
}
