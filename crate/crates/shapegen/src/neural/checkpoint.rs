//! `.sgnet` checkpoint files.
//!
//! Layout: 4-byte magic `SGNT`, little-endian u32 header length, a JSON
//! header (kind, mesh names, architecture, parameter count), then the
//! parameter vector as little-endian f64. Writing is deterministic: the
//! same network serializes to identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encoding::SdfArch;
use super::sdfnet::SdfNet;
use super::warpnet::{WarpArch, WarpNet};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SGNT";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Header {
    Sdf { version: u32, source_mesh: String, arch: SdfArch, param_count: u64 },
    Warp {
        version: u32,
        source_mesh: String,
        target_mesh: String,
        arch: WarpArch,
        param_count: u64,
    },
}

/// A loaded checkpoint: either kind of network.
#[derive(Debug, Clone)]
pub enum Checkpoint {
    Sdf(SdfNet),
    Warp(WarpNet),
}

impl Checkpoint {
    pub fn into_sdf(self) -> Result<SdfNet> {
        match self {
            Checkpoint::Sdf(net) => Ok(net),
            Checkpoint::Warp(_) => {
                Err(Error::validation("expected an SDF checkpoint, found a warp"))
            }
        }
    }

    pub fn into_warp(self) -> Result<WarpNet> {
        match self {
            Checkpoint::Warp(net) => Ok(net),
            Checkpoint::Sdf(_) => {
                Err(Error::validation("expected a warp checkpoint, found an SDF"))
            }
        }
    }
}

fn encode(header: &Header, params: &[f64]) -> Result<Vec<u8>> {
    let header_json = serde_json::to_vec(header)
        .map_err(|e| Error::validation(format!("cannot encode checkpoint header: {e}")))?;
    let mut out = Vec::with_capacity(8 + header_json.len() + params.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

/// Serialize a network to `.sgnet` bytes.
pub fn net_to_bytes(net: &Checkpoint) -> Result<Vec<u8>> {
    match net {
        Checkpoint::Sdf(n) => encode(
            &Header::Sdf {
                version: VERSION,
                source_mesh: n.source_mesh.clone(),
                arch: n.arch.clone(),
                param_count: n.params().len() as u64,
            },
            n.params(),
        ),
        Checkpoint::Warp(n) => encode(
            &Header::Warp {
                version: VERSION,
                source_mesh: n.source_mesh.clone(),
                target_mesh: n.target_mesh.clone(),
                arch: n.arch.clone(),
                param_count: n.params().len() as u64,
            },
            n.params(),
        ),
    }
}

/// Write a network checkpoint.
pub fn save_net(net: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = net_to_bytes(net)?;
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))
}

/// Parse `.sgnet` bytes.
pub fn net_from_bytes(data: &[u8], path: &Path) -> Result<Checkpoint> {
    let bad = |reason: String| Error::format("sgnet", path.to_path_buf(), reason);
    if data.len() < 8 || &data[0..4] != MAGIC {
        return Err(bad("missing SGNT magic".to_string()));
    }
    let header_len = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize;
    let blob_start = 8 + header_len;
    if data.len() < blob_start {
        return Err(bad("truncated header".to_string()));
    }
    let header: Header = serde_json::from_slice(&data[8..blob_start])
        .map_err(|e| bad(format!("malformed header JSON: {e}")))?;
    let blob = &data[blob_start..];
    if blob.len() % 8 != 0 {
        return Err(bad("parameter blob is not a whole number of f64 values".to_string()));
    }
    let params: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    match header {
        Header::Sdf { version, source_mesh, arch, param_count } => {
            if version != VERSION {
                return Err(bad(format!("unsupported version {version}")));
            }
            if params.len() as u64 != param_count {
                return Err(bad(format!(
                    "blob has {} parameters, header declares {param_count}",
                    params.len()
                )));
            }
            Ok(Checkpoint::Sdf(SdfNet::from_parts(arch, source_mesh, params)?))
        }
        Header::Warp { version, source_mesh, target_mesh, arch, param_count } => {
            if version != VERSION {
                return Err(bad(format!("unsupported version {version}")));
            }
            if params.len() as u64 != param_count {
                return Err(bad(format!(
                    "blob has {} parameters, header declares {param_count}",
                    params.len()
                )));
            }
            Ok(Checkpoint::Warp(WarpNet::from_parts(arch, source_mesh, target_mesh, params)?))
        }
    }
}

/// Read a network checkpoint.
pub fn load_net(path: &Path) -> Result<Checkpoint> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    net_from_bytes(&data, path)
}

impl SdfNet {
    pub fn save(&self, path: &Path) -> Result<()> {
        save_net(&Checkpoint::Sdf(self.clone()), path)
    }
}

impl WarpNet {
    pub fn save(&self, path: &Path) -> Result<()> {
        save_net(&Checkpoint::Warp(self.clone()), path)
    }
}
