//! Binary weight container.
//!
//! ```text
//! "FLYW" | u32 version | u64 header_len | header (JSON) | f32 LE payload | u32 crc32
//! ```
//!
//! The header lists storages in name order (with dtype and shape) and the
//! slot → storage-index alias table. The CRC covers every preceding byte.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

use super::weights::WeightStore;

pub const MAGIC: &[u8; 4] = b"FLYW";
pub const VERSION: u32 = 1;

const PREAMBLE: usize = 4 + 4 + 8;

#[derive(Serialize, Deserialize)]
struct StorageEntry {
    name: String,
    dtype: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct AliasEntry {
    slot: String,
    storage: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    metadata: BTreeMap<String, String>,
    storages: Vec<StorageEntry>,
    aliases: Vec<AliasEntry>,
}

pub fn save_weights(store: &WeightStore) -> Result<Vec<u8>> {
    store.check_aliases()?;
    let names: Vec<&str> = store.storages().map(|(n, _)| n).collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let header = Header {
        metadata: store.metadata().clone(),
        storages: store
            .storages()
            .map(|(name, t)| StorageEntry { name: name.to_string(), dtype: "f32".into(), shape: t.shape().to_vec() })
            .collect(),
        aliases: store
            .slots()
            .map(|(slot, storage)| AliasEntry { slot: slot.to_string(), storage: index[storage] })
            .collect(),
    };
    let header = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    let payload_len: usize = store.storages().map(|(_, t)| t.len() * 4).sum();
    let mut out = Vec::with_capacity(PREAMBLE + header.len() + payload_len + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, t) in store.storages() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn load_weights(bytes: &[u8]) -> Result<WeightStore> {
    if bytes.len() < PREAMBLE + 4 {
        return Err(Error::Format(format!("truncated: {} bytes", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, not a weight file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}, expected {VERSION}")));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let header_end = usize::try_from(header_len)
        .ok()
        .and_then(|n| n.checked_add(PREAMBLE))
        .filter(|&end| end <= bytes.len() - 4)
        .ok_or_else(|| Error::Format("truncated header".into()))?;

    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let header: Header = serde_json::from_slice(&bytes[PREAMBLE..header_end])
        .map_err(|e| Error::Format(format!("header: {e}")))?;
    let mut store = WeightStore::new();
    let mut payload = &body[header_end..];
    for entry in &header.storages {
        if entry.dtype != "f32" {
            return Err(Error::Format(format!("{}: unsupported dtype {}", entry.name, entry.dtype)));
        }
        let n = entry
            .shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format(format!("{}: shape overflows", entry.name)))?;
        let nbytes = n.checked_mul(4).filter(|&b| b <= payload.len()).ok_or_else(|| {
            Error::Format(format!("truncated payload at '{}'", entry.name))
        })?;
        let data = payload[..nbytes]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        payload = &payload[nbytes..];
        store.insert_storage(entry.name.clone(), FrameTensor::new(entry.shape.clone(), data)?);
    }
    if !payload.is_empty() {
        return Err(Error::Format(format!("{} trailing payload bytes", payload.len())));
    }
    for alias in header.aliases {
        let storage = header
            .storages
            .get(alias.storage)
            .ok_or_else(|| Error::Format(format!("slot '{}' points at storage #{}", alias.slot, alias.storage)))?;
        store.alias_unchecked(alias.slot, storage.name.clone());
    }
    for (k, v) in header.metadata {
        store.set_metadata(k, v);
    }
    store.check_aliases()?;
    Ok(store)
}

pub fn save_to_path(store: &WeightStore, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, save_weights(store)?)?;
    Ok(())
}

pub fn load_from_path(path: &std::path::Path) -> Result<WeightStore> {
    load_weights(&std::fs::read(path)?)
}
