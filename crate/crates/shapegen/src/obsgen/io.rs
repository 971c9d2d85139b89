//! Observation files and generated-episode persistence.
//!
//! Observations are stored in a minimal binary format (`.sgpc`): the
//! magic bytes `SGPC`, a little-endian u32 point count, then count ×
//! 3 × f32 little-endian coordinates. A generated episode directory
//! holds one observation file per frame plus a `generated.json` manifest
//! recording the source episode, the target shape, the generation
//! config, the corrected action track, and the file list. Point clouds
//! can also be exported as ASCII PLY for inspection in standard viewers.

use std::io::Write as _;
use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::alignment::RetargetPlan;
use crate::error::{Error, Result};
use crate::se3::Se3;

use super::ObsGenConfig;

const SGPC_MAGIC: &[u8; 4] = b"SGPC";

/// Write bytes to `path` atomically (temp file + rename), so a crashed
/// or concurrent run never leaves a half-written observation behind.
/// Write `bytes` to `path` atomically (temp file in the same directory,
/// then rename), so readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Save a point cloud as an `.sgpc` observation file. Coordinates are
/// narrowed to f32, matching what policies consume.
pub fn save_sgpc(points: &[Point3<f64>], path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + points.len() * 12);
    bytes.extend_from_slice(SGPC_MAGIC);
    let count = u32::try_from(points.len())
        .map_err(|_| Error::validation(format!("{} points exceed the u32 count", points.len())))?;
    bytes.extend_from_slice(&count.to_le_bytes());
    for p in points {
        for c in [p.x, p.y, p.z] {
            bytes.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    write_atomic(path, &bytes)
}

/// Load an `.sgpc` observation file (f32 coordinates widen exactly to
/// f64).
pub fn load_sgpc(path: &Path) -> Result<Vec<Point3<f64>>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 || &bytes[..4] != SGPC_MAGIC {
        return Err(Error::format("SGPC", path, "missing SGPC magic"));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let expected = 8 + count * 12;
    if bytes.len() != expected {
        return Err(Error::format(
            "SGPC",
            path,
            format!("{} bytes for {count} points, expected {expected}", bytes.len()),
        ));
    }
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let at = |j: usize| {
            let o = 8 + i * 12 + j * 4;
            f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as f64
        };
        points.push(Point3::new(at(0), at(1), at(2)));
    }
    Ok(points)
}

/// Export a point cloud as ASCII PLY (positions only), for viewing in
/// standard mesh tools.
pub fn export_ply(points: &[Point3<f64>], path: &Path) -> Result<()> {
    let mut text = String::new();
    text.push_str("ply\nformat ascii 1.0\n");
    text.push_str(&format!("element vertex {}\n", points.len()));
    text.push_str("property float x\nproperty float y\nproperty float z\nend_header\n");
    for p in points {
        text.push_str(&format!("{} {} {}\n", p.x as f32, p.y as f32, p.z as f32));
    }
    write_atomic(path, text.as_bytes())
}

/// Parse an ASCII PLY written by [`export_ply`] back into points.
pub fn load_ply_points(path: &Path) -> Result<Vec<Point3<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("ply") {
        return Err(Error::format("PLY", path, "missing 'ply' magic"));
    }
    let mut count: Option<usize> = None;
    for line in lines.by_ref() {
        if line == "end_header" {
            break;
        }
        if let Some(rest) = line.strip_prefix("element vertex ") {
            count = Some(rest.trim().parse().map_err(|_| {
                Error::format("PLY", path, format!("bad vertex count '{rest}'"))
            })?);
        } else if line.starts_with("element ") {
            return Err(Error::format("PLY", path, format!("unsupported element '{line}'")));
        }
    }
    let count = count.ok_or_else(|| Error::format("PLY", path, "no vertex element"))?;
    let mut points = Vec::with_capacity(count);
    for line in lines.take(count) {
        let mut cols = line.split_whitespace().map(str::parse::<f64>);
        let mut next = || {
            cols.next()
                .and_then(|r| r.ok())
                .ok_or_else(|| Error::format("PLY", path, format!("bad vertex line '{line}'")))
        };
        points.push(Point3::new(next()?, next()?, next()?));
    }
    if points.len() != count {
        return Err(Error::format(
            "PLY",
            path,
            format!("{} vertex records, header said {count}", points.len()),
        ));
    }
    Ok(points)
}

/// Manifest of a generated episode directory (`generated.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedManifest {
    /// Format version; currently 1.
    pub version: u32,
    /// Identifier of the source demonstration episode.
    pub source_episode: String,
    /// Library shape substituted in (the plan's target id).
    pub target_shape: String,
    /// Frame count.
    pub length: usize,
    /// Generation configuration used.
    pub config: ObsGenConfig,
    /// Corrected end-effector action track (one per frame).
    pub actions: Vec<Se3>,
    /// Per-frame observation files, relative to the episode directory.
    pub observations: Vec<String>,
}

/// Write a generated episode: one `.sgpc` observation per frame under
/// `obs/`, plus the `generated.json` manifest with the corrected action
/// track.
pub fn write_generated_episode(
    source_episode: &str,
    plan: &RetargetPlan,
    config: &ObsGenConfig,
    observations: &[Vec<Point3<f64>>],
    dir: &Path,
) -> Result<GeneratedManifest> {
    if observations.len() != plan.actions.len() {
        return Err(Error::validation(format!(
            "{} observation frames for {} actions",
            observations.len(),
            plan.actions.len()
        )));
    }
    let obs_dir = dir.join("obs");
    std::fs::create_dir_all(&obs_dir).map_err(|e| Error::io(&obs_dir, e))?;
    let mut files = Vec::with_capacity(observations.len());
    for (t, cloud) in observations.iter().enumerate() {
        let rel = format!("obs/frame_{t:04}.sgpc");
        save_sgpc(cloud, &dir.join(&rel))?;
        files.push(rel);
    }
    let manifest = GeneratedManifest {
        version: 1,
        source_episode: source_episode.to_owned(),
        target_shape: plan.target_id.clone(),
        length: observations.len(),
        config: *config,
        actions: plan.actions.clone(),
        observations: files,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::format("JSON", dir.join("generated.json"), e.to_string()))?;
    write_atomic(&dir.join("generated.json"), json.as_bytes())?;
    Ok(manifest)
}

/// Load a generated episode's manifest and all its observation clouds.
pub fn load_generated_episode(dir: &Path) -> Result<(GeneratedManifest, Vec<Vec<Point3<f64>>>)> {
    let path = dir.join("generated.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: GeneratedManifest =
        serde_json::from_str(&text).map_err(|e| Error::format("JSON", &path, e.to_string()))?;
    if manifest.version != 1 {
        return Err(Error::format(
            "JSON",
            &path,
            format!("unsupported manifest version {}", manifest.version),
        ));
    }
    if manifest.observations.len() != manifest.length || manifest.actions.len() != manifest.length {
        return Err(Error::format(
            "JSON",
            &path,
            format!(
                "manifest length {} does not match {} observations / {} actions",
                manifest.length,
                manifest.observations.len(),
                manifest.actions.len()
            ),
        ));
    }
    let clouds = manifest
        .observations
        .iter()
        .map(|rel| load_sgpc(&dir.join(rel)))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, clouds))
}
