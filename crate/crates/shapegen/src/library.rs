//! Shape libraries: a template hub with warps to every entry.
//!
//! A library holds one template shape `S₀` and any number of entries
//! `S_j`, each stored with its unit-cube-normalized mesh, a fitted SDF
//! network, and a warp `W₀ⱼ` trained from the template's narrow-band
//! samples onto the entry's SDF. Adding an entry trains exactly one SDF
//! fit and one warp — cost independent of library size.
//!
//! A newly scanned shape `S_a` is *plugged* by fitting its SDF and
//! training a single bridge warp `W_a0` onto the template. Any entry is
//! then reachable by composition with surface refinement snapped in
//! between:
//!
//! ```text
//! W_aj(x) = refine(W₀ⱼ(refine(W_a0(x), S₀)), S_j)
//! ```
//!
//! where [`refine_to_surface`] walks along the (normalized) SDF gradient
//! with a backtracking line search until |f| ≤ tol, leaving points outside
//! its capture radius untouched.
//!
//! On disk a library is a directory: `manifest.json` (category, template,
//! entry list, configs, SHA-256 of every artifact), `meshes/*.ply`
//! (normalized), `nets/*.sgnet`, and `plugged/<scan>/` subdirectories for
//! plugged scans. Saving is deterministic; loading verifies hashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{
    load_mesh, sample_training_grid, save_ply, GridSpec, SdfSampleSet, TriangleMesh, UnitCubeMap,
};
use crate::neural::{
    fit_sdf, load_net, train_warp, FitReport, SdfNet, TrainConfig, WarpNet, WarpReport,
};

/// Surface-refinement parameters (gradient line search).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineParams {
    /// Stop once |f| falls at or below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Backtracking halvings tried per iteration.
    pub max_halvings: usize,
    /// Points with |f| above this are returned unchanged (off-surface
    /// inputs such as hovering keypoints are deliberately not snapped).
    pub capture_radius: f64,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams { tolerance: 1e-3, max_iterations: 32, max_halvings: 8, capture_radius: 0.2 }
    }
}

/// How a refinement call ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineOutcome {
    /// Reached |f| ≤ tolerance.
    Converged,
    /// Initial |f| exceeded the capture radius; point returned unchanged.
    OutsideCapture,
    /// Iteration or line-search budget exhausted above tolerance.
    Stalled,
}

/// Walk `p` toward the zero set of `net`, reporting how the walk ended.
///
/// Each iteration takes the descent direction `−sgn(f)·∇f/‖∇f‖` with
/// initial step `|f(p)|`, halving the step (up to `max_halvings` times)
/// until the candidate strictly decreases |f|. Stops when |f| ≤ tolerance,
/// when no halving helps, when the gradient vanishes, or after
/// `max_iterations`. |f| never increases along accepted steps.
pub fn refine_to_surface_checked(
    net: &SdfNet,
    p: &Point3<f64>,
    params: &RefineParams,
) -> (Point3<f64>, RefineOutcome) {
    let mut cur = *p;
    let mut f_cur = net.eval(&cur);
    if f_cur.abs() > params.capture_radius {
        return (cur, RefineOutcome::OutsideCapture);
    }
    for _ in 0..params.max_iterations {
        if f_cur.abs() <= params.tolerance {
            break;
        }
        let (f, g) = net.eval_grad(&cur);
        f_cur = f;
        if f_cur.abs() <= params.tolerance {
            break;
        }
        let gnorm = g.norm();
        if gnorm < 1e-12 {
            break;
        }
        let dir = -(g / gnorm) * f_cur.signum();
        let mut step = f_cur.abs();
        let mut accepted = false;
        for _ in 0..=params.max_halvings {
            let cand = cur + dir * step;
            let f_cand = net.eval(&cand);
            if f_cand.abs() < f_cur.abs() {
                cur = cand;
                f_cur = f_cand;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let outcome = if f_cur.abs() <= params.tolerance {
        RefineOutcome::Converged
    } else {
        RefineOutcome::Stalled
    };
    (cur, outcome)
}

/// [`refine_to_surface_checked`] without the outcome report.
pub fn refine_to_surface(net: &SdfNet, p: &Point3<f64>, params: &RefineParams) -> Point3<f64> {
    refine_to_surface_checked(net, p, params).0
}

/// Sampling and training settings a library is built with. Fitting and
/// warping get separate configs: SDF regression tolerates a higher
/// learning rate than warp training, which balances three loss terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LibraryConfig {
    pub grid: GridSpec,
    pub fit: TrainConfig,
    pub warp: TrainConfig,
}

impl Default for LibraryConfig {
    fn default() -> Self {
        LibraryConfig {
            grid: GridSpec::with_resolution(64),
            fit: TrainConfig {
                batch_size: 1024,
                epochs: 8,
                learning_rate: 1e-2,
                ..Default::default()
            },
            warp: TrainConfig {
                batch_size: 1024,
                epochs: 8,
                learning_rate: 3e-3,
                ..Default::default()
            },
        }
    }
}

/// One library entry: normalized mesh, its SDF network, and the warp from
/// the template onto it.
#[derive(Debug, Clone)]
pub struct ShapeEntry {
    pub mesh: TriangleMesh,
    pub sdf: SdfNet,
    pub warp_from_template: WarpNet,
}

/// Reports from [`ShapeLibrary::add_shape`].
#[derive(Debug, Clone)]
pub struct AddReport {
    pub fit: FitReport,
    pub warp: WarpReport,
}

/// A shape library for one object category.
#[derive(Debug, Clone)]
pub struct ShapeLibrary {
    pub category: String,
    pub template_id: String,
    pub template_mesh: TriangleMesh,
    pub template_sdf: SdfNet,
    pub config: LibraryConfig,
    entries: BTreeMap<String, ShapeEntry>,
    /// Template narrow-band samples, cached so every `add_shape` reuses
    /// them. Derived data: recomputed (deterministically) when absent.
    template_samples: Option<SdfSampleSet>,
}

/// A scanned shape plugged into a library: its normalization map, SDF
/// network, and the bridge warp onto the library template.
#[derive(Debug, Clone)]
pub struct PluggedLibrary {
    pub category: String,
    pub template_id: String,
    pub scan_id: String,
    /// The scanned mesh in its original (metric) frame.
    pub scan_mesh: TriangleMesh,
    /// Map from the scan's metric frame to the normalized shape cube.
    pub scan_map: UnitCubeMap,
    pub scan_sdf: SdfNet,
    /// Bridge warp `W_a0` (scan → template, normalized frames).
    pub bridge: WarpNet,
}

impl ShapeLibrary {
    /// Create a library around a template mesh. The mesh is normalized to
    /// the unit cube, its SDF sampled and fit. Entry-free until
    /// [`Self::add_shape`].
    pub fn init(
        category: impl Into<String>,
        template: &TriangleMesh,
        config: &LibraryConfig,
    ) -> Result<ShapeLibrary> {
        let category = category.into();
        if category.is_empty() {
            return Err(Error::validation("library category must be non-empty"));
        }
        let (mesh, _map) = template.normalize_to_unit_cube()?;
        let samples = sample_training_grid(&mesh, &config.grid)?;
        let (sdf, _report) = fit_sdf(&samples, &config.fit)?;
        Ok(ShapeLibrary {
            category,
            template_id: mesh.name.clone(),
            template_mesh: mesh,
            template_sdf: sdf,
            config: config.clone(),
            entries: BTreeMap::new(),
            template_samples: Some(samples),
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &ShapeEntry)> {
        self.entries.iter()
    }

    pub fn entry(&self, id: &str) -> Option<&ShapeEntry> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All shape ids reachable as warp targets: the template plus entries.
    pub fn target_ids(&self) -> Vec<String> {
        let mut ids = vec![self.template_id.clone()];
        ids.extend(self.entries.keys().cloned());
        ids
    }

    fn template_samples(&mut self) -> Result<&SdfSampleSet> {
        if self.template_samples.is_none() {
            self.template_samples =
                Some(sample_training_grid(&self.template_mesh, &self.config.grid)?);
        }
        Ok(self.template_samples.as_ref().unwrap())
    }

    /// Add one entry: normalize its mesh, fit its SDF, and train the warp
    /// `W₀ⱼ` from the cached template samples onto it. Exactly one fit and
    /// one warp training regardless of how many entries already exist.
    pub fn add_shape(&mut self, mesh: &TriangleMesh) -> Result<AddReport> {
        let (normalized, _map) = mesh.normalize_to_unit_cube()?;
        let id = normalized.name.clone();
        if id == self.template_id || self.entries.contains_key(&id) {
            return Err(Error::validation(format!(
                "shape id '{id}' already exists in library '{}'",
                self.category
            )));
        }
        let entry_samples = sample_training_grid(&normalized, &self.config.grid)?;
        let fit_cfg = self.config.fit.clone();
        let warp_cfg = self.config.warp.clone();
        let (sdf, fit_report) = fit_sdf(&entry_samples, &fit_cfg)?;
        let template_samples = self.template_samples()?;
        let (warp, warp_report) = train_warp(template_samples, &sdf, &warp_cfg)?;
        self.entries.insert(id, ShapeEntry { mesh: normalized, sdf, warp_from_template: warp });
        Ok(AddReport { fit: fit_report, warp: warp_report })
    }

    /// Plug a scanned mesh: fit its SDF and train the single bridge warp
    /// onto the template. Pure computation; persist with
    /// [`save_plugged`]. Plugging again with the same scan replaces the
    /// bridge and touches no entries.
    pub fn plug(&self, scanned: &TriangleMesh) -> Result<PluggedLibrary> {
        let (normalized, map) = scanned.normalize_to_unit_cube()?;
        let samples = sample_training_grid(&normalized, &self.config.grid)?;
        let (scan_sdf, _) = fit_sdf(&samples, &self.config.fit)?;
        let (bridge, _) = train_warp(&samples, &self.template_sdf, &self.config.warp)?;
        Ok(PluggedLibrary {
            category: self.category.clone(),
            template_id: self.template_id.clone(),
            scan_id: scanned.name.clone(),
            scan_mesh: scanned.clone(),
            scan_map: map,
            scan_sdf,
            bridge,
        })
    }

    /// Composite warp from plugged scan to a library target: bridge,
    /// refine on the template, entry warp, refine on the entry. Points are
    /// in the normalized shape cube. When the target is the template
    /// itself the entry leg is the identity. Each point is returned with
    /// `true` unless some refinement leg stalled (ran out of budget above
    /// tolerance); points outside the capture radius count as fine — they
    /// were never meant to be snapped.
    ///
    /// The plugged scan's own id is also a valid target: substituting the
    /// scanned shape for itself is the exact identity warp (no bridge, no
    /// refinement), so downstream alignment and action correction reduce
    /// to bit-exact no-ops. The scan id takes precedence over a library
    /// entry that happens to share its name.
    pub fn composite_warp_checked(
        &self,
        plugged: &PluggedLibrary,
        target_id: &str,
        points: &[Point3<f64>],
        refine: &RefineParams,
    ) -> Result<Vec<(Point3<f64>, bool)>> {
        if plugged.template_id != self.template_id || plugged.category != self.category {
            return Err(Error::validation(format!(
                "plugged scan '{}' belongs to library '{}/{}', not '{}/{}'",
                plugged.scan_id,
                plugged.category,
                plugged.template_id,
                self.category,
                self.template_id
            )));
        }
        if target_id == plugged.scan_id {
            return Ok(points.iter().map(|p| (*p, true)).collect());
        }
        let entry = if target_id == self.template_id {
            None
        } else {
            Some(self.entries.get(target_id).ok_or_else(|| {
                Error::validation(format!(
                    "unknown target shape '{target_id}' in library '{}'",
                    self.category
                ))
            })?)
        };
        let mut out = Vec::with_capacity(points.len());
        for p in points {
            let (on_template, o1) = refine_to_surface_checked(
                &self.template_sdf,
                &plugged.bridge.warp_point(p),
                refine,
            );
            let (q, ok) = match entry {
                None => (on_template, o1 != RefineOutcome::Stalled),
                Some(e) => {
                    let (q, o2) = refine_to_surface_checked(
                        &e.sdf,
                        &e.warp_from_template.warp_point(&on_template),
                        refine,
                    );
                    (q, o1 != RefineOutcome::Stalled && o2 != RefineOutcome::Stalled)
                }
            };
            out.push((q, ok));
        }
        Ok(out)
    }

    /// [`Self::composite_warp_checked`] without the per-point reports.
    pub fn composite_warp(
        &self,
        plugged: &PluggedLibrary,
        target_id: &str,
        points: &[Point3<f64>],
        refine: &RefineParams,
    ) -> Result<Vec<Point3<f64>>> {
        Ok(self
            .composite_warp_checked(plugged, target_id, points, refine)?
            .into_iter()
            .map(|(p, _)| p)
            .collect())
    }

    /// Warp points given in the scan's metric frame onto the target shape,
    /// returning metric-frame points (the normalized result re-read
    /// through the scan's own normalization map, which keeps the
    /// substituted shape at the scanned object's physical scale).
    pub fn warp_points_metric(
        &self,
        plugged: &PluggedLibrary,
        target_id: &str,
        points: &[Point3<f64>],
        refine: &RefineParams,
    ) -> Result<Vec<Point3<f64>>> {
        Ok(self
            .warp_points_metric_checked(plugged, target_id, points, refine)?
            .into_iter()
            .map(|(p, _)| p)
            .collect())
    }

    /// [`Self::warp_points_metric`] with per-point refinement reports.
    pub fn warp_points_metric_checked(
        &self,
        plugged: &PluggedLibrary,
        target_id: &str,
        points: &[Point3<f64>],
        refine: &RefineParams,
    ) -> Result<Vec<(Point3<f64>, bool)>> {
        if target_id == plugged.scan_id {
            // Bypass the normalization round trip too: it is only
            // float-exact up to rounding, while self-substitution promises
            // bitwise identity.
            return Ok(points.iter().map(|p| (*p, true)).collect());
        }
        let normalized: Vec<Point3<f64>> =
            points.iter().map(|p| plugged.scan_map.to_normalized(p)).collect();
        let warped = self.composite_warp_checked(plugged, target_id, &normalized, refine)?;
        Ok(warped
            .into_iter()
            .map(|(p, ok)| (plugged.scan_map.to_original(&p), ok))
            .collect())
    }

    /// The target shape's mesh expressed in the scan's metric frame (via
    /// the scan's normalization map), ready to pose with the retargeted
    /// track. For the template target this is the template mesh; for the
    /// scan's own id it is the scanned mesh verbatim.
    pub fn substitute_mesh_metric(
        &self,
        plugged: &PluggedLibrary,
        target_id: &str,
    ) -> Result<TriangleMesh> {
        if target_id == plugged.scan_id {
            return Ok(plugged.scan_mesh.clone());
        }
        let mesh = if target_id == self.template_id {
            &self.template_mesh
        } else {
            &self
                .entries
                .get(target_id)
                .ok_or_else(|| {
                    Error::validation(format!(
                        "unknown target shape '{target_id}' in library '{}'",
                        self.category
                    ))
                })?
                .mesh
        };
        Ok(mesh.map_vertices(|v| plugged.scan_map.to_original(v)))
    }
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct EntryRecord {
    id: String,
    mesh: String,
    sdf: String,
    warp: String,
    mesh_sha256: String,
    sdf_sha256: String,
    warp_sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    category: String,
    template_id: String,
    template_mesh: String,
    template_sdf: String,
    template_mesh_sha256: String,
    template_sdf_sha256: String,
    config: LibraryConfig,
    entries: Vec<EntryRecord>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn write_and_hash(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<String> {
    write(path)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn read_verified(root: &Path, rel: &str, expect_sha: &str) -> Result<PathBuf> {
    let path = root.join(rel);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let got = sha256_hex(&bytes);
    if got != expect_sha {
        return Err(Error::format(
            "library",
            path,
            format!("hash mismatch: manifest says {expect_sha}, file is {got}"),
        ));
    }
    Ok(path)
}

/// Write a library directory (`manifest.json`, `meshes/`, `nets/`).
/// Existing entry files are overwritten; `plugged/` subdirectories are
/// left untouched.
pub fn save_library(lib: &ShapeLibrary, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("meshes")).map_err(|e| Error::io(dir, e))?;
    std::fs::create_dir_all(dir.join("nets")).map_err(|e| Error::io(dir, e))?;
    let template_mesh_rel = format!("meshes/{}.ply", lib.template_id);
    let template_sdf_rel = format!("nets/{}_sdf.sgnet", lib.template_id);
    let template_mesh_sha = write_and_hash(&dir.join(&template_mesh_rel), |p| {
        save_ply(&lib.template_mesh, p)
    })?;
    let template_sdf_sha =
        write_and_hash(&dir.join(&template_sdf_rel), |p| lib.template_sdf.save(p))?;
    let mut entries = Vec::new();
    for (id, entry) in &lib.entries {
        let mesh_rel = format!("meshes/{id}.ply");
        let sdf_rel = format!("nets/{id}_sdf.sgnet");
        let warp_rel = format!("nets/{id}_warp.sgnet");
        let mesh_sha = write_and_hash(&dir.join(&mesh_rel), |p| save_ply(&entry.mesh, p))?;
        let sdf_sha = write_and_hash(&dir.join(&sdf_rel), |p| entry.sdf.save(p))?;
        let warp_sha =
            write_and_hash(&dir.join(&warp_rel), |p| entry.warp_from_template.save(p))?;
        entries.push(EntryRecord {
            id: id.clone(),
            mesh: mesh_rel,
            sdf: sdf_rel,
            warp: warp_rel,
            mesh_sha256: mesh_sha,
            sdf_sha256: sdf_sha,
            warp_sha256: warp_sha,
        });
    }
    let manifest = Manifest {
        version: 1,
        category: lib.category.clone(),
        template_id: lib.template_id.clone(),
        template_mesh: template_mesh_rel,
        template_sdf: template_sdf_rel,
        template_mesh_sha256: template_mesh_sha,
        template_sdf_sha256: template_sdf_sha,
        config: lib.config.clone(),
        entries,
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::validation(format!("cannot encode manifest: {e}")))?;
    std::fs::write(dir.join("manifest.json"), text)
        .map_err(|e| Error::io(dir.join("manifest.json"), e))
}

/// Load a library directory, verifying every artifact hash.
pub fn load_library(dir: &Path) -> Result<ShapeLibrary> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::format("library", manifest_path.clone(), format!("bad manifest: {e}")))?;
    if manifest.version != 1 {
        return Err(Error::format(
            "library",
            manifest_path,
            format!("unsupported manifest version {}", manifest.version),
        ));
    }
    let template_mesh = load_mesh(&read_verified(
        dir,
        &manifest.template_mesh,
        &manifest.template_mesh_sha256,
    )?)?;
    let template_sdf = load_net(&read_verified(
        dir,
        &manifest.template_sdf,
        &manifest.template_sdf_sha256,
    )?)?
    .into_sdf()?;
    let mut entries = BTreeMap::new();
    for rec in &manifest.entries {
        let mesh = load_mesh(&read_verified(dir, &rec.mesh, &rec.mesh_sha256)?)?;
        let sdf = load_net(&read_verified(dir, &rec.sdf, &rec.sdf_sha256)?)?.into_sdf()?;
        let warp = load_net(&read_verified(dir, &rec.warp, &rec.warp_sha256)?)?.into_warp()?;
        entries.insert(
            rec.id.clone(),
            ShapeEntry { mesh, sdf, warp_from_template: warp },
        );
    }
    Ok(ShapeLibrary {
        category: manifest.category,
        template_id: manifest.template_id,
        template_mesh,
        template_sdf,
        config: manifest.config,
        entries,
        template_samples: None,
    })
}

#[derive(Serialize, Deserialize)]
struct PluggedRecord {
    version: u32,
    category: String,
    template_id: String,
    scan_id: String,
    scan_mesh: String,
    scan_sdf: String,
    bridge: String,
    scan_mesh_sha256: String,
    scan_sdf_sha256: String,
    bridge_sha256: String,
    scan_scale: f64,
    scan_offset: [f64; 3],
}

/// Persist a plugged scan under `<library>/plugged/<scan_id>/`,
/// replacing any previous plug of the same scan.
pub fn save_plugged(plugged: &PluggedLibrary, library_dir: &Path) -> Result<()> {
    let dir = library_dir.join("plugged").join(&plugged.scan_id);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mesh_sha = write_and_hash(&dir.join("scan.ply"), |p| save_ply(&plugged.scan_mesh, p))?;
    let sdf_sha = write_and_hash(&dir.join("scan_sdf.sgnet"), |p| plugged.scan_sdf.save(p))?;
    let bridge_sha = write_and_hash(&dir.join("bridge.sgnet"), |p| plugged.bridge.save(p))?;
    let rec = PluggedRecord {
        version: 1,
        category: plugged.category.clone(),
        template_id: plugged.template_id.clone(),
        scan_id: plugged.scan_id.clone(),
        scan_mesh: "scan.ply".into(),
        scan_sdf: "scan_sdf.sgnet".into(),
        bridge: "bridge.sgnet".into(),
        scan_mesh_sha256: mesh_sha,
        scan_sdf_sha256: sdf_sha,
        bridge_sha256: bridge_sha,
        scan_scale: plugged.scan_map.scale,
        scan_offset: [
            plugged.scan_map.offset.x,
            plugged.scan_map.offset.y,
            plugged.scan_map.offset.z,
        ],
    };
    let text = serde_json::to_string_pretty(&rec)
        .map_err(|e| Error::validation(format!("cannot encode plugged record: {e}")))?;
    std::fs::write(dir.join("plugged.json"), text)
        .map_err(|e| Error::io(dir.join("plugged.json"), e))
}

/// Load a previously saved plug of `scan_id` from a library directory.
pub fn load_plugged(library_dir: &Path, scan_id: &str) -> Result<PluggedLibrary> {
    let dir = library_dir.join("plugged").join(scan_id);
    let rec_path = dir.join("plugged.json");
    let text = std::fs::read_to_string(&rec_path).map_err(|e| Error::io(&rec_path, e))?;
    let rec: PluggedRecord = serde_json::from_str(&text)
        .map_err(|e| Error::format("library", rec_path.clone(), format!("bad plugged record: {e}")))?;
    if rec.version != 1 {
        return Err(Error::format(
            "library",
            rec_path,
            format!("unsupported plugged record version {}", rec.version),
        ));
    }
    let scan_mesh = load_mesh(&read_verified(&dir, &rec.scan_mesh, &rec.scan_mesh_sha256)?)?;
    let scan_sdf = load_net(&read_verified(&dir, &rec.scan_sdf, &rec.scan_sdf_sha256)?)?
        .into_sdf()?;
    let bridge = load_net(&read_verified(&dir, &rec.bridge, &rec.bridge_sha256)?)?.into_warp()?;
    Ok(PluggedLibrary {
        category: rec.category,
        template_id: rec.template_id,
        scan_id: rec.scan_id,
        scan_mesh,
        scan_map: UnitCubeMap {
            scale: rec.scan_scale,
            offset: nalgebra::Vector3::new(rec.scan_offset[0], rec.scan_offset[1], rec.scan_offset[2]),
        },
        scan_sdf,
        bridge,
    })
}
