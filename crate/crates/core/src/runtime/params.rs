use serde::Serialize;

use crate::error::Result;

use super::weights::WeightStore;

/// Distinct-parameter totals per module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParamBreakdown {
    pub text_encoder: usize,
    pub encoder_layers: usize,
    pub duration: usize,
    pub flow: usize,
    pub flow_wavenet: usize,
    pub decoder: usize,
    pub total: usize,
}

pub fn count_parameters(store: &WeightStore) -> Result<usize> {
    store.count_parameters()
}

pub fn breakdown(store: &WeightStore) -> Result<ParamBreakdown> {
    let total = store.count_parameters()?;
    let wavenet = store
        .slots()
        .filter(|(slot, _)| slot.starts_with("flow.steps.") && slot.contains(".wn."))
        .map(|(_, storage)| storage)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .filter_map(|s| store.storage(s))
        .map(|t| t.len())
        .sum();
    Ok(ParamBreakdown {
        text_encoder: store.count_parameters_under("enc."),
        encoder_layers: store.count_parameters_under("enc.layers."),
        duration: store.count_parameters_under("dp."),
        flow: store.count_parameters_under("flow."),
        flow_wavenet: wavenet,
        decoder: store.count_parameters_under("dec.") + store.count_parameters_under("ref."),
        total,
    })
}

pub fn format_millions(n: usize) -> String {
    format!("{:.2} M", n as f64 / 1e6)
}
