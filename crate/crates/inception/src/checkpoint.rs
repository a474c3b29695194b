//! Model checkpoints.
//!
//! A checkpoint is the line `inception-pc checkpoint 1`, a one-line JSON
//! header, and then the parameters as little-endian `f64` values in the
//! model's flat order: one block per unit in region order, leaf tables
//! `[s][value]` and layer weights `[s][u][j]`, complex entries as `(re, im)`.
//! The header stores the SHA-256 of that blob.

use std::path::Path;

use inception_core::engine::{build_quadtree, Mode, TensorizedModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{read_file, write_file, Error, Result};

const MAGIC: &[u8] = b"inception-pc checkpoint 1\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionDoc {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub mode: String,
    pub height: usize,
    pub width: usize,
    pub n_s: usize,
    pub k_u: usize,
    pub cardinality: u32,
    pub seed: u64,
    pub num_params: usize,
    pub regions: Vec<RegionDoc>,
    pub sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn regions(model: &TensorizedModel) -> Vec<RegionDoc> {
    model
        .rg
        .regions
        .iter()
        .map(|r| RegionDoc { top: r.top, left: r.left, height: r.height, width: r.width, children: r.children.clone() })
        .collect()
}

pub fn encode(model: &TensorizedModel) -> Result<Vec<u8>> {
    let blob: Vec<u8> = model.params.iter().flat_map(|p| p.to_le_bytes()).collect();
    let header = Header {
        mode: model.mode.name().to_string(),
        height: model.rg.height,
        width: model.rg.width,
        n_s: model.n_s,
        k_u: model.k_u,
        cardinality: model.cardinality,
        seed: model.seed,
        num_params: model.num_params(),
        regions: regions(model),
        sha256: hex(&Sha256::digest(&blob)),
    };
    let mut out = MAGIC.to_vec();
    out.extend(serde_json::to_vec(&header).map_err(|e| Error::format("checkpoint header", e))?);
    out.push(b'\n');
    out.extend(blob);
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<TensorizedModel> {
    let bad = |m: String| Error::format("checkpoint", m);
    let rest = bytes.strip_prefix(MAGIC).ok_or_else(|| bad("missing checkpoint signature".into()))?;
    let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header terminator".into()))?;
    let header: Header = serde_json::from_slice(&rest[..end]).map_err(|e| bad(format!("header: {e}")))?;
    let blob = &rest[end + 1..];
    if blob.len() != header.num_params * 8 {
        return Err(bad(format!("expected {} parameter bytes, found {}", header.num_params * 8, blob.len())));
    }
    let digest = hex(&Sha256::digest(blob));
    if digest != header.sha256 {
        return Err(bad(format!("checksum mismatch: header {}, blob {digest}", header.sha256)));
    }
    let mode = Mode::parse(&header.mode).ok_or_else(|| bad(format!("unknown mode {:?}", header.mode)))?;
    let rg = build_quadtree(header.height, header.width)?;
    let params = blob.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let model = TensorizedModel::from_parts(rg, mode, header.n_s, header.k_u, header.cardinality, header.seed, params)?;
    if regions(&model) != header.regions {
        return Err(bad("region graph does not match the quad-tree of the stored shape".into()));
    }
    Ok(model)
}

pub fn save(path: &Path, model: &TensorizedModel) -> Result<()> {
    write_file(path, &encode(model)?)
}

pub fn load(path: &Path) -> Result<TensorizedModel> {
    decode(&read_file(path)?).map_err(|e| match e {
        Error::Format { message, .. } => Error::Format { what: path.display().to_string(), message },
        other => other,
    })
}
