//! Synthetic episode rendering for tests and demonstrations.
//!
//! A tiny ray tracer produces depth images (with per-object masks) of a
//! posed scene: a tabletop plane, a tracked sphere, a static distractor,
//! and a moving arm box. [`write_fixture_episode`] renders a complete,
//! loadable demonstration episode — depth/mask PNGs, `episode.json`,
//! pose tracks, actions, calibration, the scanned-object mesh, and an
//! annotation file — that exercises the whole retargeting pipeline
//! without any real capture hardware. Because frames are rendered from
//! the same mesh the library plugs as its scan, self-substitution has an
//! exact geometric oracle.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde_json::json;

use crate::alignment::{save_episode, CameraIntrinsics, DemoEpisode, FrameRefs};
use crate::annotation::{parse_annotation, Annotation};
use crate::error::{Error, Result};
use crate::geometry::primitives::{box_mesh, icosphere, plane_patch};
use crate::geometry::{save_ply, TriangleMesh};
use crate::obsgen::{rasterize_mesh, save_depth_png, save_mask_png, DepthFrame};
use crate::se3::Se3;

/// One renderable object: a mesh at a pose, optionally contributing a
/// named mask (the mask marks pixels whose nearest hit belongs to it).
#[derive(Debug, Clone)]
pub struct SceneObject<'a> {
    /// Mask label; `None` renders depth only (tabletop, arm).
    pub label: Option<&'a str>,
    /// Geometry in its own object frame.
    pub mesh: &'a TriangleMesh,
    /// Object-to-camera pose.
    pub pose: Se3,
}

/// Render a depth image of posed objects with a shared z-buffer
/// (nearest hit wins). Labeled objects also get a mask of the pixels
/// they win. Triangles with any vertex at or behind the camera plane
/// are skipped (the fixture scene never puts geometry there).
pub fn render_depth(
    objects: &[SceneObject],
    intrinsics: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> Result<DepthFrame> {
    intrinsics.validate()?;
    let mut zbuf = vec![f64::INFINITY; width * height];
    let mut owner = vec![usize::MAX; width * height];
    for (oi, obj) in objects.iter().enumerate() {
        rasterize_mesh(obj.mesh, &obj.pose, intrinsics, width, height, &mut zbuf, |pix| {
            owner[pix] = oi;
        });
    }
    let depth: Vec<f64> = zbuf.iter().map(|&z| if z.is_finite() { z } else { 0.0 }).collect();
    let mut masks = BTreeMap::new();
    for (oi, obj) in objects.iter().enumerate() {
        if let Some(label) = obj.label {
            let bits: Vec<bool> = owner.iter().map(|&o| o == oi).collect();
            masks.insert(label.to_string(), bits);
        }
    }
    DepthFrame::new(width, height, depth, masks)
}

/// Parameters of the synthetic fixture episode.
#[derive(Debug, Clone)]
pub struct FixtureSpec {
    /// Frame count.
    pub length: usize,
    /// Image width in pixels.
    pub width: usize,
    /// Image height in pixels.
    pub height: usize,
    /// Camera intrinsics.
    pub intrinsics: CameraIntrinsics,
    /// Radius of the manipulated sphere (meters).
    pub sphere_radius: f64,
    /// Icosphere subdivision level of the sphere mesh.
    pub sphere_subdivisions: u32,
    /// Distance of the fronto-parallel tabletop plane (meters).
    pub table_depth: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            length: 50,
            width: 160,
            height: 120,
            intrinsics: CameraIntrinsics { fx: 140.0, fy: 140.0, cx: 80.0, cy: 60.0 },
            sphere_radius: 0.12,
            sphere_subdivisions: 2,
            table_depth: 0.55,
        }
    }
}

impl FixtureSpec {
    /// Sphere (object-to-camera) pose at frame `t`: a slide across the
    /// table with a slow spin about the optical axis.
    pub fn sphere_pose(&self, t: usize) -> Se3 {
        let s = t as f64 / (self.length.max(2) - 1) as f64;
        let center = Vector3::new(
            -0.08 + 0.16 * s,
            0.10,
            self.table_depth - self.sphere_radius,
        );
        Se3::new(Se3::from_axis_angle(Vector3::z(), 0.2 * s).rotation, center)
    }

    /// Arm (object-to-camera) pose at frame `t`: rides above the sphere.
    pub fn arm_pose(&self, t: usize) -> Se3 {
        let sphere = self.sphere_pose(t);
        Se3::from_translation(sphere.translation + Vector3::new(0.0, -0.19, 0.0))
    }
}

/// A written fixture episode, with the pieces tests need in memory.
#[derive(Debug, Clone)]
pub struct SynthFixture {
    /// The episode directory (contains `episode.json`).
    pub episode_dir: PathBuf,
    /// The annotation file inside the episode directory.
    pub annotation_path: PathBuf,
    /// The scanned-object mesh file (binary PLY).
    pub scan_path: PathBuf,
    /// The scanned-object mesh (identical to what the frames render).
    pub scan: TriangleMesh,
    /// The episode, as re-loaded from disk.
    pub episode: DemoEpisode,
    /// The annotation, as re-loaded from disk.
    pub annotation: Annotation,
}

/// Render and write the complete fixture episode under `dir`.
///
/// Layout: `episode.json` + `poses/`, `frames/depth_NNNN.png`,
/// `frames/mask_<label>_NNNN.png`, `background/depth.png`,
/// `annotation.json`, and `scan.ply`. The annotated object is `ball_a`
/// (category `ball`, gripped, with functionals at frames 0, half, and
/// near-end — the middle one a ditto); a static `tree` box is listed as
/// other foreground.
pub fn write_fixture_episode(dir: &Path, spec: &FixtureSpec) -> Result<SynthFixture> {
    if spec.length < 2 {
        return Err(Error::validation("fixture needs at least 2 frames"));
    }
    let frames_dir = dir.join("frames");
    let bg_dir = dir.join("background");
    std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    std::fs::create_dir_all(&bg_dir).map_err(|e| Error::io(&bg_dir, e))?;

    let r = spec.sphere_radius;
    let scan = icosphere(Point3::origin(), r, spec.sphere_subdivisions, "scan");
    // Tabletop: fronto-parallel plane patch generously covering the
    // frustum at table depth.
    let half_u = spec.table_depth * spec.intrinsics.cx / spec.intrinsics.fx + 0.1;
    let half_v = spec.table_depth * spec.intrinsics.cy / spec.intrinsics.fy + 0.1;
    let table = plane_patch(
        Point3::new(-half_u, -half_v, spec.table_depth),
        Vector3::new(2.0 * half_u, 0.0, 0.0),
        Vector3::new(0.0, 2.0 * half_v, 0.0),
        (2, 2),
        "table",
    );
    let tree = box_mesh(
        Point3::new(-0.03, -0.05, -0.03),
        Point3::new(0.03, 0.05, 0.03),
        "tree",
    );
    let tree_pose = Se3::from_translation(Vector3::new(0.20, 0.08, 0.50));
    let arm = box_mesh(
        Point3::new(-0.025, -0.12, -0.025),
        Point3::new(0.025, 0.12, 0.025),
        "arm",
    );

    // Camera-to-base calibration: a fixed, non-axis-aligned transform.
    let t_c2b = Se3::new(
        Se3::from_axis_angle(Vector3::x(), -1.2).rotation,
        Vector3::new(0.05, -0.30, 0.45),
    );

    // Background: empty workspace, table only.
    let background = render_depth(
        &[SceneObject { label: None, mesh: &table, pose: Se3::identity() }],
        &spec.intrinsics,
        spec.width,
        spec.height,
    )?;
    let bg_depth_rel = "background/depth.png".to_string();
    save_depth_png(&dir.join(&bg_depth_rel), background.width, background.height, &background.depth)?;

    let sphere_track: Vec<Se3> = (0..spec.length).map(|t| spec.sphere_pose(t)).collect();
    let arm_track: Vec<Se3> = (0..spec.length).map(|t| spec.arm_pose(t)).collect();

    // Render and write every frame (parallel across frames; each frame's
    // files depend only on its own index).
    let frame_refs: Vec<FrameRefs> = (0..spec.length)
        .into_par_iter()
        .map(|t| -> Result<FrameRefs> {
            let frame = render_depth(
                &[
                    SceneObject { label: None, mesh: &table, pose: Se3::identity() },
                    SceneObject { label: Some("tree"), mesh: &tree, pose: tree_pose.clone() },
                    SceneObject { label: Some("ball_a"), mesh: &scan, pose: sphere_track[t].clone() },
                    SceneObject { label: None, mesh: &arm, pose: arm_track[t].clone() },
                ],
                &spec.intrinsics,
                spec.width,
                spec.height,
            )?;
            let depth_rel = format!("frames/depth_{t:04}.png");
            save_depth_png(&dir.join(&depth_rel), frame.width, frame.height, &frame.depth)?;
            let mut masks = BTreeMap::new();
            for (label, bits) in &frame.masks {
                let rel = format!("frames/mask_{label}_{t:04}.png");
                save_mask_png(&dir.join(&rel), frame.width, frame.height, bits)?;
                masks.insert(label.clone(), rel);
            }
            Ok(FrameRefs { depth: depth_rel, masks })
        })
        .collect::<Result<Vec<_>>>()?;

    // Actions: the arm pose expressed in the robot base frame.
    let actions: Vec<Se3> = arm_track.iter().map(|a| t_c2b.compose(a)).collect();

    let episode = DemoEpisode {
        root: dir.to_path_buf(),
        length: spec.length,
        intrinsics: spec.intrinsics,
        t_c2b,
        pose_tracks: BTreeMap::from([("ball_a".to_string(), sphere_track)]),
        actions,
        frames: frame_refs,
        background_frame: FrameRefs { depth: bg_depth_rel, masks: BTreeMap::new() },
    };
    save_episode(&episode, dir)?;

    let scan_path = dir.join("scan.ply");
    save_ply(&scan, &scan_path)?;

    // Annotation: gripper grips the sphere top; functionals mark the
    // table-contact point (held via ditto), then a side point.
    let mid = spec.length / 2;
    let late = spec.length - spec.length / 5 - 1;
    let annotation_value = json!({
        "objects": {
            "ball_a": {
                "category": "ball",
                "gripped": true,
                "gripper_keypoint": [[0.0, -r, 0.0]],
                "functionals": [
                    { "tstamp": 0, "keypoints": { "mode": "simple", "points": [[0.0, r, 0.0]] } },
                    { "tstamp": mid, "keypoints": "ditto" },
                    { "tstamp": late, "keypoints": { "mode": "simple", "points": [[r, 0.0, 0.0]] } }
                ]
            }
        },
        "other_foreground_objects": ["tree"]
    });
    let annotation_path = dir.join("annotation.json");
    let text = serde_json::to_string_pretty(&annotation_value)
        .map_err(|e| Error::format("JSON", &annotation_path, e.to_string()))?;
    std::fs::write(&annotation_path, text).map_err(|e| Error::io(&annotation_path, e))?;

    let annotation = parse_annotation(&annotation_path)?;
    let episode = crate::alignment::load_episode(dir)?;
    Ok(SynthFixture { episode_dir: dir.to_path_buf(), annotation_path, scan_path, scan, episode, annotation })
}
