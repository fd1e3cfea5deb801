use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

/// Named tensor container with explicit storage sharing.
///
/// Tensors live in named storage cells. Layers look parameters up by slot
/// name, and every slot resolves to exactly one storage, so many slots can
/// alias the same cell. Parameter counts sum over storages, never slots.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightStore {
    storages: BTreeMap<String, FrameTensor>,
    slots: BTreeMap<String, String>,
    metadata: BTreeMap<String, String>,
}

impl WeightStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a storage cell and a slot of the same name pointing at it.
    pub fn insert(&mut self, name: impl Into<String>, tensor: FrameTensor) {
        let name = name.into();
        self.slots.insert(name.clone(), name.clone());
        self.storages.insert(name, tensor);
    }

    /// Adds a storage cell without any slot.
    pub fn insert_storage(&mut self, name: impl Into<String>, tensor: FrameTensor) {
        self.storages.insert(name.into(), tensor);
    }

    /// Points `slot` at an existing storage cell.
    pub fn alias(&mut self, slot: impl Into<String>, storage: &str) -> Result<()> {
        let slot = slot.into();
        if !self.storages.contains_key(storage) {
            return Err(Error::DanglingAlias { slot, storage: storage.to_string() });
        }
        self.slots.insert(slot, storage.to_string());
        Ok(())
    }

    /// Inserts a slot mapping without checking the storage exists. Used by the
    /// file loader, which validates the whole table afterwards.
    pub(crate) fn alias_unchecked(&mut self, slot: String, storage: String) {
        self.slots.insert(slot, storage);
    }

    pub fn resolve(&self, slot: &str) -> Result<&str> {
        self.slots.get(slot).map(String::as_str).ok_or_else(|| Error::MissingTensor(slot.to_string()))
    }

    pub fn get(&self, slot: &str) -> Result<&FrameTensor> {
        let storage = self.resolve(slot)?;
        self.storages.get(storage).ok_or_else(|| Error::DanglingAlias {
            slot: slot.to_string(),
            storage: storage.to_string(),
        })
    }

    pub fn contains(&self, slot: &str) -> bool {
        self.slots.contains_key(slot)
    }

    pub fn storage(&self, name: &str) -> Option<&FrameTensor> {
        self.storages.get(name)
    }

    pub fn storage_mut(&mut self, name: &str) -> Option<&mut FrameTensor> {
        self.storages.get_mut(name)
    }

    pub fn storages(&self) -> impl Iterator<Item = (&str, &FrameTensor)> {
        self.storages.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn slots(&self) -> impl Iterator<Item = (&str, &str)> {
        self.slots.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn num_storages(&self) -> usize {
        self.storages.len()
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    /// Fails on the first slot whose storage is missing.
    pub fn check_aliases(&self) -> Result<()> {
        match self.slots.iter().find(|(_, s)| !self.storages.contains_key(*s)) {
            Some((slot, storage)) => Err(Error::DanglingAlias { slot: slot.clone(), storage: storage.clone() }),
            None => Ok(()),
        }
    }

    /// Storage cells reached from slots starting with `prefix`.
    pub fn storages_under(&self, prefix: &str) -> BTreeSet<&str> {
        self.slots
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(_, v)| v.as_str())
            .collect()
    }

    /// Number of distinct parameter sets among slot groups `"{prefix}.{i}.{sub}"`
    /// for `i < count`. Two groups are the same set when they resolve to the
    /// same storages.
    pub fn distinct_parameter_sets(&self, prefix: &str, count: usize, sub: &str) -> usize {
        (0..count)
            .map(|i| self.storages_under(&format!("{prefix}.{i}.{sub}")))
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Total elements over distinct storages; aliases count once.
    pub fn count_parameters(&self) -> Result<usize> {
        self.check_aliases()?;
        Ok(self.storages.values().map(FrameTensor::len).sum())
    }

    /// Elements over the distinct storages reached from slots under `prefix`.
    pub fn count_parameters_under(&self, prefix: &str) -> usize {
        self.storages_under(prefix)
            .into_iter()
            .filter_map(|s| self.storages.get(s))
            .map(FrameTensor::len)
            .sum()
    }
}
