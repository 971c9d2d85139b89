//! Novel observation generation: compositing retargeted point-cloud
//! observations and writing generated episodes.
//!
//! Per frame, the source depth image is decomposed into background,
//! robot arm, static foreground, and the manipulated object
//! ([`frame_scene_points`]); the object is replaced by surface samples
//! of the substituted mesh posed with the retargeted track, the arm is
//! shifted by the gripper correction, environment points hidden behind
//! the substitute are removed against its analytic depth map
//! ([`mesh_depth_map`], [`filter_occluded`]), and the reassembled scene
//! ([`composite_scene`]) is downsampled camera-aware to a fixed-size
//! observation ([`sample_observation`]). [`generate_observations`] runs
//! this over a whole episode (frames in parallel, each with its own
//! seed), and [`generate_for_target`] additionally builds the retarget
//! plan and writes the generated episode directory.
//!
//! Determinism: all randomness flows from [`ObsGenConfig::rng_seed`];
//! frame `t` uses `rng_seed ^ t`, so outputs are bit-identical across
//! runs and thread counts.

mod compose;
mod frame;
mod io;
mod sample;

pub use compose::{
    arm_mask, composite_scene, depth_to_points, filter_occluded, frame_scene_points,
    mesh_depth_map, sample_mesh_surface, FrameScene,
};
pub(crate) use compose::rasterize_mesh;
pub use frame::{
    load_depth_frame, load_depth_png, load_mask_png, save_depth_png, save_mask_png, DepthFrame,
};
pub use io::{
    export_ply, load_generated_episode, load_ply_points, load_sgpc, save_sgpc, write_atomic,
    write_generated_episode, GeneratedManifest,
};
pub use sample::{chamfer_distance, sample_observation, CameraView};

use std::path::{Path, PathBuf};

use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{
    find_category_object, make_retarget_plan, save_plan, DemoEpisode, PlanFlags, RetargetPlan,
};
use crate::annotation::{resolve_ditto, Annotation};
use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;
use crate::library::{PluggedLibrary, RefineParams, ShapeLibrary};
use crate::se3::Se3;

/// Observation-generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObsGenConfig {
    /// Output observation size (every observation has exactly this many
    /// points).
    pub n_points: usize,
    /// Maximum distance from the camera origin; farther points are
    /// discarded before sampling.
    pub d_max: f64,
    /// Depth difference against the empty workspace above which a pixel
    /// counts as foreground when extracting the arm.
    pub fg_depth_threshold: f64,
    /// Apply z-buffer visibility culling before sampling (single-view
    /// realism). Disable only for diagnostics.
    pub visibility_culling: bool,
    /// Substituted-mesh surface samples per frame, as a multiple of
    /// `n_points`, drawn before culling.
    pub mesh_sample_factor: usize,
    /// Base seed for mesh sampling and downsampling.
    pub rng_seed: u64,
}

impl Default for ObsGenConfig {
    fn default() -> Self {
        ObsGenConfig {
            n_points: 8192,
            d_max: 0.8,
            fg_depth_threshold: 0.02,
            visibility_culling: true,
            mesh_sample_factor: 4,
            rng_seed: 42,
        }
    }
}

impl ObsGenConfig {
    /// Check the value invariants.
    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::validation("n_points must be positive"));
        }
        if !(self.d_max > 0.0) || !self.d_max.is_finite() {
            return Err(Error::validation(format!("d_max {} must be a positive meter", self.d_max)));
        }
        if !self.fg_depth_threshold.is_finite() || self.fg_depth_threshold < 0.0 {
            return Err(Error::validation(format!(
                "fg_depth_threshold {} must be a non-negative meter",
                self.fg_depth_threshold
            )));
        }
        if self.mesh_sample_factor == 0 {
            return Err(Error::validation("mesh_sample_factor must be positive"));
        }
        Ok(())
    }
}

/// Generate the per-frame observation clouds for one retargeted episode.
///
/// `object_label` is the manipulated object's mask label (removed and
/// replaced by `mesh` posed with the plan), `static_labels` are other
/// foreground objects left in place. Frames are processed in parallel;
/// frame `t` derives its seed as `config.rng_seed ^ t`.
pub fn generate_observations(
    episode: &DemoEpisode,
    plan: &RetargetPlan,
    object_label: &str,
    static_labels: &[&str],
    mesh: &TriangleMesh,
    config: &ObsGenConfig,
) -> Result<Vec<Vec<Point3<f64>>>> {
    episode.validate()?;
    config.validate()?;
    plan.validate()?;
    if plan.pose_track.len() != episode.length {
        return Err(Error::validation(format!(
            "plan has {} frames, episode has {}",
            plan.pose_track.len(),
            episode.length
        )));
    }
    let background = load_depth_frame(episode, &episode.background_frame)?;
    (0..episode.length)
        .into_par_iter()
        .map(|t| {
            let frame = load_depth_frame(episode, &episode.frames[t])?;
            let scene = frame_scene_points(
                &frame,
                &background,
                &episode.intrinsics,
                object_label,
                static_labels,
                config.fg_depth_threshold,
            )?;
            // The substituted mesh is a continuous occluder, but its
            // point samples leave pinholes wherever none lands on a
            // pixel, which would let revealed background bleed through
            // the object. Environment points are therefore tested
            // against the mesh's analytic depth map; the arm is left to
            // the point z-buffer, since after the gripper correction it
            // normally stays on the camera side of the object.
            let sub_depth = mesh_depth_map(
                mesh,
                &plan.pose_track[t],
                &episode.intrinsics,
                frame.width,
                frame.height,
            );
            let occlude = |pts| {
                filter_occluded(pts, &sub_depth, &episode.intrinsics, frame.width, frame.height)
            };
            let mut background = occlude(scene.background);
            background.extend(occlude(scene.backfill));
            let statics = occlude(scene.statics);
            let frame_config = ObsGenConfig { rng_seed: config.rng_seed ^ t as u64, ..*config };
            let composite = composite_scene(
                &background,
                &scene.arm,
                &plan.gripper[t],
                &statics,
                mesh,
                &plan.pose_track[t],
                &frame_config,
            );
            let camera = CameraView {
                pose: Se3::identity(),
                intrinsics: episode.intrinsics,
                width: frame.width,
                height: frame.height,
            };
            sample_observation(&composite, &camera, &frame_config)
        })
        .collect()
}

/// Everything produced for one target shape.
#[derive(Debug, Clone)]
pub struct GeneratedOutput {
    /// The retarget plan driving the generation.
    pub plan: RetargetPlan,
    /// Manifest of the written episode.
    pub manifest: GeneratedManifest,
    /// The episode directory.
    pub dir: PathBuf,
}

/// Run the full generation pipeline for one target shape and write the
/// generated episode under `out_dir`: `obs/frame_NNNN.sgpc` per frame,
/// `generated.json`, and the plan as `plan_<target>.json`.
#[allow(clippy::too_many_arguments)]
pub fn generate_for_target(
    episode: &DemoEpisode,
    source_id: &str,
    annotation: &Annotation,
    lib: &ShapeLibrary,
    plugged: &PluggedLibrary,
    target_id: &str,
    flags: &PlanFlags,
    refine: &RefineParams,
    config: &ObsGenConfig,
    out_dir: &Path,
) -> Result<GeneratedOutput> {
    let plan = make_retarget_plan(episode, annotation, lib, plugged, target_id, flags, refine)?;
    let resolved = resolve_ditto(annotation)?;
    let (object_label, _) = find_category_object(&resolved, &lib.category)?;
    let static_labels: Vec<&str> =
        resolved.other_foreground_objects.iter().map(String::as_str).collect();
    let mesh = lib.substitute_mesh_metric(plugged, target_id)?;
    let observations =
        generate_observations(episode, &plan, object_label, &static_labels, &mesh, config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let manifest = write_generated_episode(source_id, &plan, config, &observations, out_dir)?;
    save_plan(&plan, &out_dir.join(format!("plan_{target_id}.json")))?;
    Ok(GeneratedOutput { plan, manifest, dir: out_dir.to_path_buf() })
}
