//! Model bundle directories.
//!
//! ```text
//! <dir>/manifest.json       format tag, version, schema, config, per-table state
//! <dir>/metadata.json       the schema as a metadata document
//! <dir>/generator-<i>.bin   generator parameters of the i-th table (name order)
//! ```
//!
//! Parameter blobs start with an 8-byte magic tag and a little-endian `u64`
//! count, followed by that many little-endian `f64` values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use relgen_core::gan::ModelBundle;
use serde::{Deserialize, Serialize};

use crate::dataio::{write_metadata, METADATA_FILE};
use crate::error::{Error, Result};

pub const BUNDLE_FORMAT: &str = "relgen-bundle";
pub const BUNDLE_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
const BLOB_MAGIC: &[u8; 8] = b"RGPARAM1";

#[derive(Debug, Serialize, Deserialize)]
struct BlobRef {
    file: String,
    count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    parameters: BTreeMap<String, BlobRef>,
    model: ModelBundle,
}

#[derive(Deserialize)]
struct VersionProbe {
    format: Option<String>,
    version: Option<u32>,
}

pub fn encode_params(params: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + params.len() * 8);
    out.extend_from_slice(BLOB_MAGIC);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_params(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() < 16 || &bytes[..8] != BLOB_MAGIC {
        return Err(Error::Format("parameter blob has an unknown layout".to_string()));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() != count.saturating_mul(8) {
        return Err(Error::Format(format!("parameter blob holds {} bytes for {count} values", body.len())));
    }
    Ok(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

pub fn save_bundle(bundle: &ModelBundle, dir: &Path) -> Result<()> {
    bundle.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut parameters = BTreeMap::new();
    for (i, (name, model)) in bundle.tables.iter().enumerate() {
        let file = format!("generator-{i}.bin");
        let path = dir.join(&file);
        fs::write(&path, encode_params(&model.params)).map_err(|e| Error::io(&path, e))?;
        parameters.insert(name.clone(), BlobRef { file, count: model.params.len() });
    }
    let manifest =
        Manifest { format: BUNDLE_FORMAT.to_string(), version: BUNDLE_VERSION, parameters, model: bundle.clone() };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    write_metadata(&bundle.schema, &dir.join(METADATA_FILE))
}

pub fn load_bundle(dir: &Path) -> Result<ModelBundle> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let probe: VersionProbe = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if probe.format.as_deref() != Some(BUNDLE_FORMAT) {
        return Err(Error::Format(format!("{} is not a model bundle manifest", path.display())));
    }
    let version = probe.version.ok_or_else(|| Error::Format("bundle manifest has no version".to_string()))?;
    if version != BUNDLE_VERSION {
        return Err(Error::Version { what: "bundle", found: version, expected: BUNDLE_VERSION });
    }
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    let mut bundle = manifest.model;
    for (name, model) in bundle.tables.iter_mut() {
        let blob = manifest
            .parameters
            .get(name)
            .ok_or_else(|| Error::Format(format!("no parameter blob for table `{name}`")))?;
        let blob_path = dir.join(&blob.file);
        let bytes = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
        let params = decode_params(&bytes)?;
        if params.len() != blob.count {
            return Err(Error::Format(format!("parameter count mismatch for table `{name}`")));
        }
        model.params = params;
    }
    bundle.validate()?;
    Ok(bundle)
}
