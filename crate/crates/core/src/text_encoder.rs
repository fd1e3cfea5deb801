//! Transformer text encoder with sequential grouped parameter sharing.
//!
//! `g·m` pre-norm transformer layers run in sequence; layer `i` reads its
//! parameters through slots `enc.layers.{i}.*`, which alias the storage of
//! parameter set `i / m`. Embedding, final norm and the prior projection are
//! never shared.

use crate::error::{Error, Result};
use crate::nnkit::{self, AttentionParams, LAYER_NORM_EPS};
use crate::runtime::init::ParamInit;
use crate::runtime::{ModelConfig, WeightStore};
use crate::tensor::FrameTensor;

/// Validated phoneme/token ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSeq {
    ids: Vec<usize>,
}

impl TokenSeq {
    pub fn new(ids: Vec<usize>, vocab_size: usize) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Empty("token sequence"));
        }
        if let Some((pos, &id)) = ids.iter().enumerate().find(|(_, &id)| id >= vocab_size) {
            return Err(Error::VocabOverflow { id, pos, vocab: vocab_size });
        }
        Ok(Self { ids })
    }

    /// Byte-level tokens: one id per UTF-8 byte.
    pub fn from_bytes(text: &str, vocab_size: usize) -> Result<Self> {
        Self::new(text.bytes().map(usize::from).collect(), vocab_size)
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedText {
    pub hidden: FrameTensor,
    pub prior_mean: FrameTensor,
    pub prior_logstd: FrameTensor,
}

/// `groups` parameter sets, each reused by `layers_per_group` consecutive layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SharingPlan {
    groups: usize,
    layers_per_group: usize,
}

impl SharingPlan {
    pub fn new(groups: usize, layers_per_group: usize) -> Result<Self> {
        if groups == 0 || layers_per_group == 0 {
            return Err(Error::invalid("SharingPlan", "groups and layers per group must be positive"));
        }
        Ok(Self { groups, layers_per_group })
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn layers_per_group(&self) -> usize {
        self.layers_per_group
    }

    pub fn total_layers(&self) -> usize {
        self.groups * self.layers_per_group
    }

    /// Parameter set serving `layer`.
    pub fn group_index(&self, layer: usize) -> Result<usize> {
        if layer >= self.total_layers() {
            return Err(Error::invalid(
                "group_index",
                format!("layer {layer} outside 0..{}", self.total_layers()),
            ));
        }
        Ok(layer / self.layers_per_group)
    }
}

pub fn encoder_plan(config: &ModelConfig) -> Result<SharingPlan> {
    SharingPlan::new(config.g1, config.m1)
}

const LAYER_PREFIX: &str = "enc.layers";

fn layer_slot(i: usize) -> String {
    format!("{LAYER_PREFIX}.{i}")
}

pub fn init_params(init: &mut ParamInit, cfg: &ModelConfig) -> Result<()> {
    let d = cfg.hidden;
    let emb = init.uniform(&[cfg.vocab_size, d], d);
    init.put(vec![("enc.emb.weight".into(), emb)]);
    let plan = encoder_plan(cfg)?;
    for g in 0..plan.groups() {
        let mut p = init.norm("attn_norm", d);
        for proj in ["q", "k", "v", "o"] {
            p.extend(init.conv(&format!("attn.{proj}"), d, d, 1));
        }
        p.extend(init.norm("ffn_norm", d));
        p.extend(init.conv("ffn.conv1", cfg.ffn_dim, d, cfg.ffn_kernel));
        p.extend(init.conv("ffn.conv2", d, cfg.ffn_dim, cfg.ffn_kernel));
        let slots: Vec<String> = (g * plan.layers_per_group()..(g + 1) * plan.layers_per_group())
            .map(layer_slot)
            .collect();
        init.put_shared(&format!("enc.groups.{g}"), &slots, p)?;
    }
    let norm = init.norm("enc.norm", d);
    init.put(norm);
    let proj = init.conv("enc.proj", 2 * cfg.latent, d, 1);
    init.put(proj);
    Ok(())
}

/// Number of distinct transformer parameter sets behind the layer slots.
pub fn distinct_layer_storages(store: &WeightStore, cfg: &ModelConfig) -> usize {
    store.distinct_parameter_sets(LAYER_PREFIX, cfg.encoder_layers(), "")
}

/// Checks that the store's aliasing realizes `plan`: layers of one group share
/// every storage and there are exactly `groups` distinct sets.
fn check_layout(store: &WeightStore, plan: &SharingPlan) -> Result<()> {
    for i in 0..plan.total_layers() {
        let leader = plan.group_index(i)? * plan.layers_per_group();
        if i != leader
            && store.storages_under(&format!("{}.", layer_slot(i)))
                != store.storages_under(&format!("{}.", layer_slot(leader)))
        {
            return Err(Error::ConfigMismatch(format!(
                "encoder layer {i} does not share parameters with layer {leader}"
            )));
        }
    }
    let distinct = store.distinct_parameter_sets(LAYER_PREFIX, plan.total_layers(), "");
    if distinct != plan.groups() {
        return Err(Error::ConfigMismatch(format!(
            "encoder has {distinct} parameter sets, plan needs {}",
            plan.groups()
        )));
    }
    Ok(())
}

fn vec_of<'a>(store: &'a WeightStore, name: &str) -> Result<&'a [f32]> {
    Ok(store.get(name)?.data())
}

/// Sinusoidal absolute positions, `[d, t]`.
pub fn positional_encoding(d: usize, t: usize) -> FrameTensor {
    let mut pe = FrameTensor::zeros(&[d, t]);
    for c in 0..d {
        let i = (c / 2) as f64;
        let freq = 1.0 / 10_000f64.powf(2.0 * i / d as f64);
        for (pos, v) in pe.row_mut(c).iter_mut().enumerate() {
            let a = pos as f64 * freq;
            *v = if c % 2 == 0 { a.sin() } else { a.cos() } as f32;
        }
    }
    pe
}

/// Embedding lookup scaled by `√d` plus positions.
pub fn embed_tokens(tokens: &TokenSeq, store: &WeightStore, cfg: &ModelConfig) -> Result<FrameTensor> {
    let emb = store.get("enc.emb.weight")?;
    let d = cfg.hidden;
    if emb.shape() != [cfg.vocab_size, d] {
        return Err(Error::ConfigMismatch(format!(
            "embedding shape {:?}, expected [{}, {d}]",
            emb.shape(),
            cfg.vocab_size
        )));
    }
    let t = tokens.len();
    let scale = (d as f32).sqrt();
    let mut h = positional_encoding(d, t);
    for (pos, &id) in tokens.ids().iter().enumerate() {
        if id >= cfg.vocab_size {
            return Err(Error::VocabOverflow { id, pos, vocab: cfg.vocab_size });
        }
        let row = &emb.data()[id * d..(id + 1) * d];
        for (c, &e) in row.iter().enumerate() {
            h.data_mut()[c * t + pos] += e * scale;
        }
    }
    Ok(h)
}

/// One pre-norm transformer layer read through slot prefix `enc.layers.{i}`.
pub fn encoder_layer(store: &WeightStore, cfg: &ModelConfig, layer: usize, h: &FrameTensor) -> Result<FrameTensor> {
    let p = layer_slot(layer);
    let get = |s: &str| store.get(&format!("{p}.{s}"));
    let a = nnkit::layer_norm_channels(
        h,
        vec_of(store, &format!("{p}.attn_norm.gamma"))?,
        vec_of(store, &format!("{p}.attn_norm.beta"))?,
        LAYER_NORM_EPS,
    )?;
    let attn = AttentionParams {
        q_weight: get("attn.q.weight")?,
        q_bias: get("attn.q.bias")?.data(),
        k_weight: get("attn.k.weight")?,
        k_bias: get("attn.k.bias")?.data(),
        v_weight: get("attn.v.weight")?,
        v_bias: get("attn.v.bias")?.data(),
        out_weight: get("attn.o.weight")?,
        out_bias: get("attn.o.bias")?.data(),
    };
    let mut h = h.add(&nnkit::multi_head_attention(&a, &attn, cfg.heads, None)?)?;

    let f = nnkit::layer_norm_channels(
        &h,
        get("ffn_norm.gamma")?.data(),
        get("ffn_norm.beta")?.data(),
        LAYER_NORM_EPS,
    )?;
    let pad = cfg.ffn_kernel / 2;
    let mut f = nnkit::conv1d(&f, get("ffn.conv1.weight")?, Some(get("ffn.conv1.bias")?.data()), pad, 1)?;
    f.map_inplace(nnkit::relu);
    let f = nnkit::conv1d(&f, get("ffn.conv2.weight")?, Some(get("ffn.conv2.bias")?.data()), pad, 1)?;
    h.add_assign(&f)?;
    Ok(h)
}

/// Runs the encoder and projects to the prior mean and log-std.
pub fn encode_text(tokens: &TokenSeq, store: &WeightStore, plan: &SharingPlan, cfg: &ModelConfig) -> Result<EncodedText> {
    check_layout(store, plan)?;
    let mut h = embed_tokens(tokens, store, cfg)?;
    for layer in 0..plan.total_layers() {
        h = encoder_layer(store, cfg, layer, &h)?;
    }
    let hidden = nnkit::layer_norm_channels(
        &h,
        vec_of(store, "enc.norm.gamma")?,
        vec_of(store, "enc.norm.beta")?,
        LAYER_NORM_EPS,
    )?;
    let stats = nnkit::pointwise(&hidden, store.get("enc.proj.weight")?, Some(vec_of(store, "enc.proj.bias")?))?;
    if stats.channels() != 2 * cfg.latent {
        return Err(Error::ConfigMismatch(format!(
            "prior projection yields {} channels, expected {}",
            stats.channels(),
            2 * cfg.latent
        )));
    }
    Ok(EncodedText {
        prior_mean: stats.slice_rows(0, cfg.latent),
        prior_logstd: stats.slice_rows(cfg.latent, 2 * cfg.latent),
        hidden,
    })
}
