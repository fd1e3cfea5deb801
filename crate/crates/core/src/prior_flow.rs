//! Mean-only coupling flow with WaveNet projections shared per group.
//!
//! Step `k` owns its pre and post 1×1 convolutions. Its WaveNet projection
//! (`flow.steps.{k}.wn.*`) aliases the storage of group `k / m₂`. Each
//! coupling is followed by a channel flip.

use crate::error::{Error, Result};
use crate::nnkit;
use crate::runtime::init::ParamInit;
use crate::runtime::{ModelConfig, WeightStore};
use crate::tensor::FrameTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `groups·steps_per_group` coupling steps; WaveNet shared within a group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowPlan {
    groups: usize,
    steps_per_group: usize,
}

impl FlowPlan {
    pub fn new(groups: usize, steps_per_group: usize) -> Result<Self> {
        if groups == 0 || steps_per_group == 0 {
            return Err(Error::invalid("FlowPlan", "groups and steps per group must be positive"));
        }
        Ok(Self { groups, steps_per_group })
    }

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        Self::new(cfg.g2, cfg.m2)
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn steps_per_group(&self) -> usize {
        self.steps_per_group
    }

    pub fn steps(&self) -> usize {
        self.groups * self.steps_per_group
    }

    pub fn group_of(&self, step: usize) -> usize {
        step / self.steps_per_group
    }
}

const STEP_PREFIX: &str = "flow.steps";

fn step_slot(k: usize) -> String {
    format!("{STEP_PREFIX}.{k}")
}

/// Gated-activation WaveNet stack with a non-causal dilated conv per layer.
#[derive(Clone, Debug)]
pub struct WaveNetParams<'a> {
    pub in_weights: Vec<&'a FrameTensor>,
    pub in_biases: Vec<&'a [f32]>,
    pub res_skip_weights: Vec<&'a FrameTensor>,
    pub res_skip_biases: Vec<&'a [f32]>,
    pub dilation_rate: usize,
}

#[derive(Clone, Debug)]
pub struct CouplingParams<'a> {
    pub pre_weight: &'a FrameTensor,
    pub pre_bias: &'a [f32],
    pub wavenet: WaveNetParams<'a>,
    pub post_weight: &'a FrameTensor,
    pub post_bias: &'a [f32],
}

impl<'a> CouplingParams<'a> {
    pub fn from_store(store: &'a WeightStore, cfg: &ModelConfig, step: usize) -> Result<Self> {
        let p = step_slot(step);
        let get = |s: String| store.get(&format!("{p}.{s}"));
        let layers = cfg.flow_wavenet_layers;
        let mut wn = WaveNetParams {
            in_weights: Vec::with_capacity(layers),
            in_biases: Vec::with_capacity(layers),
            res_skip_weights: Vec::with_capacity(layers),
            res_skip_biases: Vec::with_capacity(layers),
            dilation_rate: cfg.flow_dilation_rate,
        };
        for l in 0..layers {
            wn.in_weights.push(get(format!("wn.in.{l}.weight"))?);
            wn.in_biases.push(get(format!("wn.in.{l}.bias"))?.data());
            wn.res_skip_weights.push(get(format!("wn.res_skip.{l}.weight"))?);
            wn.res_skip_biases.push(get(format!("wn.res_skip.{l}.bias"))?.data());
        }
        Ok(Self {
            pre_weight: get("pre.weight".into())?,
            pre_bias: get("pre.bias".into())?.data(),
            wavenet: wn,
            post_weight: get("post.weight".into())?,
            post_bias: get("post.bias".into())?.data(),
        })
    }
}

pub fn init_params(init: &mut ParamInit, cfg: &ModelConfig) -> Result<()> {
    let half = cfg.latent / 2;
    let h = cfg.flow_hidden;
    let plan = FlowPlan::from_config(cfg)?;
    for g in 0..plan.groups() {
        let mut wn = Vec::new();
        for l in 0..cfg.flow_wavenet_layers {
            wn.extend(init.conv(&format!("wn.in.{l}"), 2 * h, h, cfg.flow_kernel));
            let rs_out = if l + 1 < cfg.flow_wavenet_layers { 2 * h } else { h };
            wn.extend(init.conv(&format!("wn.res_skip.{l}"), rs_out, h, 1));
        }
        let slots: Vec<String> = (g * plan.steps_per_group()..(g + 1) * plan.steps_per_group())
            .map(step_slot)
            .collect();
        init.put_shared(&format!("flow.groups.{g}"), &slots, wn)?;
    }
    for k in 0..plan.steps() {
        let p = step_slot(k);
        let mut own = init.conv(&format!("{p}.pre"), h, half, 1);
        own.extend(init.conv(&format!("{p}.post"), half, h, 1));
        init.put(own);
    }
    Ok(())
}

/// Distinct WaveNet parameter sets across all flow steps.
pub fn distinct_wavenet_storages(store: &WeightStore, cfg: &ModelConfig) -> usize {
    store.distinct_parameter_sets(STEP_PREFIX, cfg.flow_steps(), "wn.")
}

/// Distinct storages behind the per-step pre/post convolutions.
pub fn distinct_pre_post_storages(store: &WeightStore, cfg: &ModelConfig) -> usize {
    (0..cfg.flow_steps())
        .flat_map(|k| {
            let p = step_slot(k);
            let mut s = store.storages_under(&format!("{p}.pre."));
            s.extend(store.storages_under(&format!("{p}.post.")));
            s
        })
        .filter(|name| name.ends_with(".weight"))
        .collect::<std::collections::BTreeSet<_>>()
        .len()
}

pub fn wavenet(x: &FrameTensor, p: &WaveNetParams<'_>) -> Result<FrameTensor> {
    let (h, t) = x.dims2("wavenet")?;
    let layers = p.in_weights.len();
    let mut state = x.clone();
    let mut output = FrameTensor::zeros(&[h, t]);
    let mut dilation = 1;
    for l in 0..layers {
        let k = p.in_weights[l].shape()[2];
        let pad = dilation * (k - 1) / 2;
        let x_in = nnkit::conv1d(&state, p.in_weights[l], Some(p.in_biases[l]), pad, dilation)?;
        if x_in.channels() != 2 * h {
            return Err(Error::shape("wavenet", format!("gate conv emits {} channels, need {}", x_in.channels(), 2 * h)));
        }
        let (filter, gate) = x_in.data().split_at(h * t);
        let acts = FrameTensor::new(vec![h, t], nnkit::gated_tanh(filter, gate)?)?;
        let rs = nnkit::pointwise(&acts, p.res_skip_weights[l], Some(p.res_skip_biases[l]))?;
        if l + 1 < layers {
            state.add_assign(&rs.slice_rows(0, h))?;
            output.add_assign(&rs.slice_rows(h, 2 * h))?;
        } else {
            output.add_assign(&rs)?;
        }
        dilation *= p.dilation_rate;
    }
    Ok(output)
}

/// Shift predicted from the conditioning half: `post(WaveNet(pre(x_a)))`.
fn coupling_shift(x_a: &FrameTensor, params: &CouplingParams<'_>) -> Result<FrameTensor> {
    let h = nnkit::pointwise(x_a, params.pre_weight, Some(params.pre_bias))?;
    let h = wavenet(&h, &params.wavenet)?;
    nnkit::pointwise(&h, params.post_weight, Some(params.post_bias))
}

/// Mean-only coupling: the first half passes through, the second half is
/// translated by a shift computed from the first. Its Jacobian is unit
/// triangular, so the log-determinant is zero.
pub fn coupling_step(x: &FrameTensor, params: &CouplingParams<'_>, direction: Direction) -> Result<FrameTensor> {
    let (c, _) = x.dims2("coupling_step")?;
    if c % 2 != 0 {
        return Err(Error::shape("coupling_step", format!("{c} channels cannot be split in half")));
    }
    let half = c / 2;
    let x_a = x.slice_rows(0, half);
    let mut x_b = x.slice_rows(half, c);
    let shift = coupling_shift(&x_a, params)?;
    if shift.shape() != x_b.shape() {
        return Err(Error::shape("coupling_step", format!("shift {:?} vs half {:?}", shift.shape(), x_b.shape())));
    }
    match direction {
        Direction::Forward => x_b.add_assign(&shift)?,
        Direction::Inverse => x_b.data_mut().iter_mut().zip(shift.data()).for_each(|(b, s)| *b -= s),
    }
    FrameTensor::concat_rows(&[&x_a, &x_b])
}

/// Reverses channel order.
pub fn flip(x: &FrameTensor) -> FrameTensor {
    let c = x.channels();
    let rows: Vec<FrameTensor> = (0..c).rev().map(|i| x.slice_rows(i, i + 1)).collect();
    let refs: Vec<&FrameTensor> = rows.iter().collect();
    FrameTensor::concat_rows(&refs).expect("rows share frame count")
}

fn check_layout(store: &WeightStore, plan: &FlowPlan) -> Result<()> {
    for k in 0..plan.steps() {
        let leader = plan.group_of(k) * plan.steps_per_group();
        if store.storages_under(&format!("{}.wn.", step_slot(k)))
            != store.storages_under(&format!("{}.wn.", step_slot(leader)))
        {
            return Err(Error::ConfigMismatch(format!(
                "flow step {k} does not share its WaveNet with step {leader}"
            )));
        }
    }
    let distinct = store.distinct_parameter_sets(STEP_PREFIX, plan.steps(), "wn.");
    if distinct != plan.groups() {
        return Err(Error::ConfigMismatch(format!(
            "flow has {distinct} WaveNet sets, plan needs {}",
            plan.groups()
        )));
    }
    Ok(())
}

/// Applies all coupling steps. Forward runs step 0 first, flipping after each
/// coupling; inverse undoes them in reverse order. Inference uses the inverse
/// direction to map prior samples to decoder latents.
pub fn flow_apply(
    z: &FrameTensor,
    plan: &FlowPlan,
    store: &WeightStore,
    cfg: &ModelConfig,
    direction: Direction,
) -> Result<FrameTensor> {
    check_layout(store, plan)?;
    let params: Vec<CouplingParams<'_>> = (0..plan.steps())
        .map(|k| CouplingParams::from_store(store, cfg, k))
        .collect::<Result<_>>()?;
    let mut x = z.clone();
    match direction {
        Direction::Forward => {
            for p in &params {
                x = flip(&coupling_step(&x, p, Direction::Forward)?);
            }
        }
        Direction::Inverse => {
            for p in params.iter().rev() {
                x = coupling_step(&flip(&x), p, Direction::Inverse)?;
            }
        }
    }
    Ok(x)
}
