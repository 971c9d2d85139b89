//! Function-aware alignment and demonstration retargeting.
//!
//! Given a source demonstration (object pose track `T_a`, end-effector
//! actions `a_t`, camera→base calibration `T_c2b`) and a resolved
//! annotation, this module places a substituted shape and corrects the
//! gripper actions:
//!
//! 1. Per annotated anchor, [`solve_alignment`] finds the transform `T̃`
//!    that maps the warped keypoints `W_aj[P]` back onto the source
//!    keypoints `P` in the shared object frame. `"simple"` mode is
//!    translation-only with an exactly-identity rotation (shapes are
//!    stored pre-aligned to a canonical orientation); `"rigid"` is an
//!    extension using a full least-squares rigid fit.
//! 2. [`build_alignment_sequence`] interpolates the per-anchor solutions
//!    across all frames (held outside the annotated range), and
//!    [`compose_pose_track`] forms the substituted pose track
//!    `T_j[t] = (T̂[t]·) T_a[t]·T̃[t]`, where the optional camera-space
//!    `T̂` tracks an anchor point on another (possibly moved) object,
//!    per [`solve_anchor_sequence`].
//! 3. [`gripper_correction`] produces per-frame translation-only `T^g`
//!    aligning the gripped point's camera-space trajectory onto its
//!    warped counterpart, and [`correct_actions`] applies
//!    `a'_t = T_c2b·T^g_t·T_c2b⁻¹·a_t` using the shortcut
//!    `translation += R_c2b·t^g` (valid exactly because `T^g` is
//!    translation-only, so only the calibration's rotation block enters).
//!
//! [`make_retarget_plan`] runs the whole chain for one target shape and
//! bundles the results into a [`RetargetPlan`]. Two ablation flags skip
//! individual stages: with `skip_alignment` the alignment sequence
//! degenerates to identity (shapes already share the canonical
//! orientation), and with `skip_action_correction` the source actions
//! pass through bit-identically.
//!
//! The pose convention throughout is object-frame→camera-frame: `T·x` is
//! the camera-space position of object point `x`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::annotation::{Annotation, ObjectAnnotation, resolve_ditto, MODE_RIGID, MODE_SIMPLE};
use crate::error::{Error, Result};
use crate::library::{PluggedLibrary, RefineParams, ShapeLibrary};
use crate::se3::{conjugate_translation, fit_rigid, fit_translation, Se3};

/// Pinhole camera intrinsics, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("fx", self.fx), ("fy", self.fy), ("cx", self.cx), ("cy", self.cy)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::validation(format!(
                    "intrinsics.{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-frame file references (relative to the episode directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRefs {
    /// Depth map (16-bit PNG, millimeters).
    pub depth: String,
    /// Object label → mask file (8-bit PNG, nonzero = in-mask).
    pub masks: BTreeMap<String, String>,
}

/// A source demonstration episode.
///
/// All per-frame lists have length `length`. Pose tracks map object name
/// to its object→camera trajectory; actions are end-effector→robot-base.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoEpisode {
    /// Directory the frame references resolve against (set on load).
    pub root: PathBuf,
    pub length: usize,
    pub intrinsics: CameraIntrinsics,
    /// Camera frame → robot base frame calibration.
    pub t_c2b: Se3,
    pub pose_tracks: BTreeMap<String, Vec<Se3>>,
    pub actions: Vec<Se3>,
    pub frames: Vec<FrameRefs>,
    /// Empty-workspace capture used for arm segmentation and back-fill.
    pub background_frame: FrameRefs,
}

impl DemoEpisode {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::validation("episode length must be at least 1"));
        }
        self.intrinsics.validate()?;
        for (name, track) in &self.pose_tracks {
            if track.len() != self.length {
                return Err(Error::validation(format!(
                    "pose track '{name}' has {} frames, episode has {}",
                    track.len(),
                    self.length
                )));
            }
        }
        if self.actions.len() != self.length {
            return Err(Error::validation(format!(
                "action track has {} frames, episode has {}",
                self.actions.len(),
                self.length
            )));
        }
        if self.frames.len() != self.length {
            return Err(Error::validation(format!(
                "frame list has {} entries, episode has {}",
                self.frames.len(),
                self.length
            )));
        }
        Ok(())
    }

    /// Resolve a frame reference against the episode directory.
    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EpisodeManifest {
    version: u32,
    length: usize,
    intrinsics: CameraIntrinsics,
    t_c2b: Se3,
    /// Object name → pose-track file (JSON list of row-major 4×4).
    pose_tracks: BTreeMap<String, String>,
    actions: Vec<Se3>,
    frames: Vec<FrameRefs>,
    background_frame: FrameRefs,
}

/// Load an episode directory (`episode.json` plus referenced pose-track
/// files). Frame pixel data is loaded lazily by the observation side.
pub fn load_episode(dir: &Path) -> Result<DemoEpisode> {
    let manifest_path = dir.join("episode.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: EpisodeManifest = serde_json::from_str(&text)
        .map_err(|e| Error::format("episode", manifest_path.clone(), format!("bad manifest: {e}")))?;
    if manifest.version != 1 {
        return Err(Error::format(
            "episode",
            manifest_path,
            format!("unsupported manifest version {}", manifest.version),
        ));
    }
    let mut pose_tracks = BTreeMap::new();
    for (name, rel) in &manifest.pose_tracks {
        let path = dir.join(rel);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let track: Vec<Se3> = serde_json::from_str(&text)
            .map_err(|e| Error::format("episode", path, format!("bad pose track: {e}")))?;
        pose_tracks.insert(name.clone(), track);
    }
    let episode = DemoEpisode {
        root: dir.to_path_buf(),
        length: manifest.length,
        intrinsics: manifest.intrinsics,
        t_c2b: manifest.t_c2b,
        pose_tracks,
        actions: manifest.actions,
        frames: manifest.frames,
        background_frame: manifest.background_frame,
    };
    episode.validate()?;
    Ok(episode)
}

/// Write `episode.json` and per-object pose-track files into `dir`.
/// Frame files (depth/mask PNGs) are written by their producers; this
/// records the references as given.
pub fn save_episode(episode: &DemoEpisode, dir: &Path) -> Result<()> {
    episode.validate()?;
    std::fs::create_dir_all(dir.join("poses")).map_err(|e| Error::io(dir, e))?;
    let mut pose_refs = BTreeMap::new();
    for (name, track) in &episode.pose_tracks {
        let rel = format!("poses/{name}.json");
        let text = serde_json::to_string(track)
            .map_err(|e| Error::validation(format!("cannot encode pose track: {e}")))?;
        std::fs::write(dir.join(&rel), text).map_err(|e| Error::io(dir.join(&rel), e))?;
        pose_refs.insert(name.clone(), rel);
    }
    let manifest = EpisodeManifest {
        version: 1,
        length: episode.length,
        intrinsics: episode.intrinsics,
        t_c2b: episode.t_c2b.clone(),
        pose_tracks: pose_refs,
        actions: episode.actions.clone(),
        frames: episode.frames.clone(),
        background_frame: episode.background_frame.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::validation(format!("cannot encode manifest: {e}")))?;
    std::fs::write(dir.join("episode.json"), text)
        .map_err(|e| Error::io(dir.join("episode.json"), e))
}

// ---------------------------------------------------------------------------
// Alignment solving
// ---------------------------------------------------------------------------

/// Solve the transform aligning `warped_points` onto `source_points`.
///
/// `"simple"`: translation-only centroid alignment, rotation exactly
/// identity. `"rigid"`: full least-squares rigid fit (needs ≥ 3
/// non-degenerate correspondences). Unknown modes (including an
/// unresolved `"ditto"`) are rejected.
pub fn solve_alignment(
    source_points: &[Point3<f64>],
    warped_points: &[Point3<f64>],
    mode: &str,
) -> Result<Se3> {
    if source_points.is_empty() || source_points.len() != warped_points.len() {
        return Err(Error::validation(format!(
            "alignment needs equal-length non-empty point sets, got {} and {}",
            source_points.len(),
            warped_points.len()
        )));
    }
    match mode {
        MODE_SIMPLE => fit_translation(warped_points, source_points),
        MODE_RIGID => fit_rigid(warped_points, source_points),
        other => Err(Error::validation(format!(
            "unknown alignment mode \"{other}\" (resolve dittos before solving)"
        ))),
    }
}

/// Warp an anchor's keypoints onto the target shape (metric frames),
/// erroring if refinement stalled on any of them.
fn warp_keypoints(
    lib: &ShapeLibrary,
    plugged: &PluggedLibrary,
    target_id: &str,
    points: &[Point3<f64>],
    refine: &RefineParams,
    what: &str,
) -> Result<Vec<Point3<f64>>> {
    let warped = lib.warp_points_metric_checked(plugged, target_id, points, refine)?;
    for (i, (_, ok)) in warped.iter().enumerate() {
        if !ok {
            return Err(Error::numerical(format!(
                "surface refinement did not converge for {what} keypoint {i} \
                 (target '{target_id}')"
            )));
        }
    }
    Ok(warped.into_iter().map(|(p, _)| p).collect())
}

/// Build the per-frame alignment sequence `T̃` for one annotated object.
///
/// Each functional anchor's keypoints are warped onto the target and
/// solved with [`solve_alignment`]; frames between anchor timestamps
/// interpolate the two surrounding solutions, frames outside the
/// annotated range hold the nearest one. Requires a resolved (ditto-free)
/// annotation object.
pub fn build_alignment_sequence(
    obj: &ObjectAnnotation,
    lib: &ShapeLibrary,
    plugged: &PluggedLibrary,
    target_id: &str,
    length: usize,
    refine: &RefineParams,
) -> Result<Vec<Se3>> {
    if obj.functionals.iter().any(|f| f.is_ditto()) {
        return Err(Error::validation(
            "alignment needs a resolved annotation (found an unresolved \"ditto\")",
        ));
    }
    let mut anchors = Vec::with_capacity(obj.functionals.len());
    for f in &obj.functionals {
        let warped = warp_keypoints(
            lib,
            plugged,
            target_id,
            &f.points,
            refine,
            &format!("functional (tstamp {})", f.tstamp),
        )?;
        anchors.push(solve_alignment(&f.points, &warped, &f.mode)?);
    }
    let mut seq = Vec::with_capacity(length);
    for t in 0..length {
        let (i, j, s) = obj.segment_indices_at(t as f64);
        seq.push(Se3::interp(&anchors[i], &anchors[j], s)?);
    }
    Ok(seq)
}

/// Compose the substituted shape's pose track:
/// `T_j[t] = T̂[t]·T_a[t]·T̃[t]` (the camera-space `T̂` leg only when
/// provided). Identity factors are skipped so they leave the source poses
/// bit-identical.
pub fn compose_pose_track(
    t_a: &[Se3],
    tilde: &[Se3],
    t_hat: Option<&[Se3]>,
) -> Result<Vec<Se3>> {
    if t_a.len() != tilde.len() {
        return Err(Error::validation(format!(
            "pose track has {} frames but alignment sequence has {}",
            t_a.len(),
            tilde.len()
        )));
    }
    if let Some(hat) = t_hat {
        if hat.len() != t_a.len() {
            return Err(Error::validation(format!(
                "pose track has {} frames but camera alignment sequence has {}",
                t_a.len(),
                hat.len()
            )));
        }
    }
    let mut out = Vec::with_capacity(t_a.len());
    for t in 0..t_a.len() {
        let base = if tilde[t].is_identity() {
            t_a[t].clone()
        } else {
            t_a[t].compose(&tilde[t])
        };
        let posed = match t_hat {
            Some(hat) if !hat[t].is_identity() => hat[t].compose(&base),
            _ => base,
        };
        out.push(posed);
    }
    Ok(out)
}

/// Camera-space anchored alignment: per-frame translation moving the
/// functional point by the anchor point's own displacement, so the
/// keypoint keeps its offset to an anchor that may itself have moved.
///
/// `T̂[t] = translate(new_track[t]·new_point − source_track[t]·source_point)`.
/// An unmoved anchor (same track, same point) yields exact identities.
pub fn solve_anchor_sequence(
    anchor_source_track: &[Se3],
    anchor_new_track: &[Se3],
    anchor_point_source: &Point3<f64>,
    anchor_point_new: &Point3<f64>,
) -> Result<Vec<Se3>> {
    if anchor_source_track.len() != anchor_new_track.len() {
        return Err(Error::validation(format!(
            "anchor tracks differ in length: {} vs {}",
            anchor_source_track.len(),
            anchor_new_track.len()
        )));
    }
    let mut out = Vec::with_capacity(anchor_source_track.len());
    for (src, new) in anchor_source_track.iter().zip(anchor_new_track) {
        let p = src.transform_point(anchor_point_source);
        let q = new.transform_point(anchor_point_new);
        out.push(Se3::from_translation(q - p));
    }
    Ok(out)
}

/// Per-frame translation-only gripper correction: `T^g[t]` moves the
/// source gripped point's camera position `T_a[t]·x_g` onto the
/// substituted one `T_j[t]·x_g_warped`. The rotation block is exactly
/// identity by construction.
pub fn gripper_correction(
    t_a: &[Se3],
    t_j: &[Se3],
    x_g: &Point3<f64>,
    x_g_warped: &Point3<f64>,
) -> Result<Vec<Se3>> {
    if t_a.len() != t_j.len() {
        return Err(Error::validation(format!(
            "source and substituted pose tracks differ in length: {} vs {}",
            t_a.len(),
            t_j.len()
        )));
    }
    let mut out = Vec::with_capacity(t_a.len());
    for (a, j) in t_a.iter().zip(t_j) {
        let p = a.transform_point(x_g);
        let q = j.transform_point(x_g_warped);
        out.push(Se3::from_translation(q - p));
    }
    Ok(out)
}

/// Apply gripper corrections to the action track:
/// `a'_t = T_c2b·T^g_t·T_c2b⁻¹·a_t`. Because `T^g` is translation-only
/// the conjugation reduces to adding `R_c2b·t^g` to the action's
/// translation; rotations pass through untouched, and identity
/// corrections leave actions bit-identical.
pub fn correct_actions(actions: &[Se3], t_g: &[Se3], t_c2b: &Se3) -> Result<Vec<Se3>> {
    if actions.len() != t_g.len() {
        return Err(Error::validation(format!(
            "action track has {} frames but gripper corrections have {}",
            actions.len(),
            t_g.len()
        )));
    }
    let mut out = Vec::with_capacity(actions.len());
    for (a, g) in actions.iter().zip(t_g) {
        if g.translation == Vector3::zeros() {
            out.push(a.clone());
        } else {
            out.push(Se3::new(
                a.rotation,
                a.translation + conjugate_translation(t_c2b, &g.translation),
            ));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Retarget plans
// ---------------------------------------------------------------------------

/// Ablation switches for plan construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlanFlags {
    /// Skip function-aware alignment: `T̃` stays identity (shapes rely on
    /// the shared canonical orientation alone).
    pub skip_alignment: bool,
    /// Skip gripper action correction: `T^g` stays identity and the
    /// source actions pass through bit-identically.
    pub skip_action_correction: bool,
}

/// Everything needed to re-render one episode with one substituted shape.
#[derive(Debug, Clone, PartialEq)]
pub struct RetargetPlan {
    pub target_id: String,
    /// Object-space alignment sequence `T̃` (length L).
    pub alignment: Vec<Se3>,
    /// Optional camera-space anchored alignment `T̂` (length L).
    pub camera_alignment: Option<Vec<Se3>>,
    /// Substituted shape's pose track `T_j` (length L).
    pub pose_track: Vec<Se3>,
    /// Translation-only gripper corrections `T^g` (length L).
    pub gripper: Vec<Se3>,
    /// Corrected actions `a'` (length L).
    pub actions: Vec<Se3>,
}

impl RetargetPlan {
    pub fn validate(&self) -> Result<()> {
        let l = self.alignment.len();
        let mut lens = vec![
            ("pose_track", self.pose_track.len()),
            ("gripper", self.gripper.len()),
            ("actions", self.actions.len()),
        ];
        if let Some(hat) = &self.camera_alignment {
            lens.push(("camera_alignment", hat.len()));
        }
        for (name, n) in lens {
            if n != l {
                return Err(Error::validation(format!(
                    "plan sequence '{name}' has {n} frames, alignment has {l}"
                )));
            }
        }
        for (t, g) in self.gripper.iter().enumerate() {
            if g.rotation != nalgebra::Matrix3::identity() {
                return Err(Error::validation(format!(
                    "gripper correction at frame {t} has a non-identity rotation block"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    version: u32,
    target_id: String,
    alignment: Vec<Se3>,
    camera_alignment: Option<Vec<Se3>>,
    pose_track: Vec<Se3>,
    gripper: Vec<Se3>,
    actions: Vec<Se3>,
}

/// Write a plan as JSON (`plan_<target>.json` by convention).
pub fn save_plan(plan: &RetargetPlan, path: &Path) -> Result<()> {
    plan.validate()?;
    let file = PlanFile {
        version: 1,
        target_id: plan.target_id.clone(),
        alignment: plan.alignment.clone(),
        camera_alignment: plan.camera_alignment.clone(),
        pose_track: plan.pose_track.clone(),
        gripper: plan.gripper.clone(),
        actions: plan.actions.clone(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::validation(format!("cannot encode plan: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Load and validate a plan file.
pub fn load_plan(path: &Path) -> Result<RetargetPlan> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: PlanFile = serde_json::from_str(&text)
        .map_err(|e| Error::format("plan", path, format!("bad plan: {e}")))?;
    if file.version != 1 {
        return Err(Error::format(
            "plan",
            path,
            format!("unsupported plan version {}", file.version),
        ));
    }
    let plan = RetargetPlan {
        target_id: file.target_id,
        alignment: file.alignment,
        camera_alignment: file.camera_alignment,
        pose_track: file.pose_track,
        gripper: file.gripper,
        actions: file.actions,
    };
    plan.validate()?;
    Ok(plan)
}

fn centroid(points: &[Point3<f64>]) -> Point3<f64> {
    let mut c = Vector3::zeros();
    for p in points {
        c += p.coords;
    }
    Point3::from(c / points.len() as f64)
}

/// Find the unique annotated object of the given category.
///
/// The manipulated object of a retargeting run is identified by category
/// match between the annotation and the shape library; zero or multiple
/// matches are validation errors.
pub fn find_category_object<'a>(
    annotation: &'a Annotation,
    category: &str,
) -> Result<(&'a str, &'a ObjectAnnotation)> {
    let mut matching = annotation.objects.iter().filter(|(_, o)| o.category == category);
    let (name, obj) = matching.next().ok_or_else(|| {
        Error::validation(format!("no annotated object has category '{category}' (library category)"))
    })?;
    if let Some((other, _)) = matching.next() {
        return Err(Error::validation(format!(
            "ambiguous: both '{name}' and '{other}' have category '{category}'"
        )));
    }
    Ok((name.as_str(), obj))
}

/// Build the full retarget plan for one target shape.
///
/// The manipulated object is the unique annotated object whose category
/// matches the library's; it must have a pose track in the episode. When
/// any functional carries an `anchor_ref`, a camera-space alignment
/// sequence is recorded; within a single-target plan the anchor object is
/// taken as unsubstituted, so that sequence is identity (chaining onto a
/// substituted anchor is available through [`solve_anchor_sequence`]).
///
/// Targeting the plugged scan's own id (self-substitution) goes through
/// the exact identity warp, so the resulting plan reproduces the source
/// pose track and actions bit for bit.
pub fn make_retarget_plan(
    episode: &DemoEpisode,
    annotation: &Annotation,
    lib: &ShapeLibrary,
    plugged: &PluggedLibrary,
    target_id: &str,
    flags: &PlanFlags,
    refine: &RefineParams,
) -> Result<RetargetPlan> {
    episode.validate()?;
    if target_id != lib.template_id
        && target_id != plugged.scan_id
        && lib.entry(target_id).is_none()
    {
        return Err(Error::validation(format!(
            "unknown target shape '{target_id}' in library '{}'",
            lib.category
        )));
    }
    let resolved = resolve_ditto(annotation)?;
    let (obj_name, obj) = find_category_object(&resolved, &lib.category)?;
    let t_a = episode.pose_tracks.get(obj_name).ok_or_else(|| {
        Error::validation(format!("episode has no pose track for annotated object '{obj_name}'"))
    })?;
    let length = episode.length;

    let alignment = if flags.skip_alignment {
        vec![Se3::identity(); length]
    } else {
        build_alignment_sequence(obj, lib, plugged, target_id, length, refine)?
    };

    let anchor_refs: Vec<_> =
        obj.functionals.iter().filter_map(|f| f.anchor_ref.as_ref()).collect();
    let camera_alignment = if anchor_refs.is_empty() {
        None
    } else {
        let anchor_obj = &anchor_refs[0].object;
        if anchor_refs.iter().any(|a| &a.object != anchor_obj) {
            return Err(Error::validation(
                "functionals reference different anchor objects; only one is supported",
            ));
        }
        let track = episode.pose_tracks.get(anchor_obj).ok_or_else(|| {
            Error::validation(format!("episode has no pose track for anchor object '{anchor_obj}'"))
        })?;
        let point = &anchor_refs[0].point;
        Some(solve_anchor_sequence(track, track, point, point)?)
    };

    let pose_track = compose_pose_track(t_a, &alignment, camera_alignment.as_deref())?;

    let (gripper, actions) = if flags.skip_action_correction || !obj.gripped {
        (vec![Se3::identity(); length], episode.actions.clone())
    } else {
        let gk = obj.gripper_keypoint.as_ref().expect("validated: gripped implies keypoints");
        let warped = warp_keypoints(lib, plugged, target_id, gk, refine, "gripper")?;
        let x_g = centroid(gk);
        let x_g_warped = centroid(&warped);
        let t_g = gripper_correction(t_a, &pose_track, &x_g, &x_g_warped)?;
        let corrected = correct_actions(&episode.actions, &t_g, &episode.t_c2b)?;
        (t_g, corrected)
    };

    let plan = RetargetPlan {
        target_id: target_id.to_owned(),
        alignment,
        camera_alignment,
        pose_track,
        gripper,
        actions,
    };
    plan.validate()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{AnchorRef, FunctionalAnchor};
    use crate::testkit::MID;
    use nalgebra::Matrix3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_se3(rng: &mut ChaCha8Rng) -> Se3 {
        let axis = Vector3::new(
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
        )
        .normalize();
        let angle = rng.random_range(-3.0..3.0);
        let t = Vector3::new(
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
        );
        Se3::from_axis_angle(axis, angle).compose(&Se3::from_translation(t))
    }

    fn random_point(rng: &mut ChaCha8Rng) -> Point3<f64> {
        Point3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>())
    }

    #[test]
    fn simple_singleton_alignment_is_exact() {
        let t = solve_alignment(
            &[Point3::new(0.1, 0.0, 0.2)],
            &[Point3::new(0.0, 0.0, 0.0)],
            MODE_SIMPLE,
        )
        .unwrap();
        assert_eq!(t.rotation, Matrix3::identity());
        assert_eq!(t.translation, Vector3::new(0.1, 0.0, 0.2));
        // Equal sets give the exact identity.
        let pts = [Point3::new(0.3, 0.1, 0.9), Point3::new(-0.2, 0.4, 0.0)];
        assert!(solve_alignment(&pts, &pts, MODE_SIMPLE).unwrap().is_identity());
    }

    #[test]
    fn simple_alignment_matches_translation_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let source: Vec<Point3<f64>> = (0..4).map(|_| random_point(&mut rng)).collect();
        let d = Vector3::new(0.013, -0.027, 0.041);
        let warped: Vec<Point3<f64>> = source.iter().map(|p| p - d).collect();
        let fit = solve_alignment(&source, &warped, MODE_SIMPLE).unwrap();
        assert!((fit.translation - d).norm() < 1e-12);
        // Brute grid search over translations at 1e-3 resolution.
        let cost = |tr: Vector3<f64>| -> f64 {
            warped
                .iter()
                .zip(&source)
                .map(|(w, s)| ((w + tr) - s).norm_squared())
                .sum()
        };
        let mut best = (f64::INFINITY, Vector3::zeros());
        for i in 0..=100 {
            for j in 0..=100 {
                for k in 0..=100 {
                    let tr = Vector3::new(
                        i as f64 * 1e-3 - 0.05,
                        j as f64 * 1e-3 - 0.05,
                        k as f64 * 1e-3 - 0.05,
                    );
                    let c = cost(tr);
                    if c < best.0 {
                        best = (c, tr);
                    }
                }
            }
        }
        let diff = fit.translation - best.1;
        assert!(
            diff.amax() < 1e-3,
            "closed form {:?} vs grid argmin {:?}",
            fit.translation,
            best.1
        );
    }

    #[test]
    fn rigid_alignment_recovers_known_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let warped: Vec<Point3<f64>> = (0..5).map(|_| random_point(&mut rng)).collect();
        let truth = random_se3(&mut rng);
        let source: Vec<Point3<f64>> = warped.iter().map(|p| truth.transform_point(p)).collect();
        let fit = solve_alignment(&source, &warped, MODE_RIGID).unwrap();
        assert!(fit.max_abs_diff(&truth) < 1e-9);
    }

    #[test]
    fn unknown_and_unresolved_modes_are_rejected() {
        let p = [Point3::origin()];
        assert!(matches!(solve_alignment(&p, &p, "fancy"), Err(Error::Validation(_))));
        assert!(matches!(solve_alignment(&p, &p, "ditto"), Err(Error::Validation(_))));
        assert!(matches!(solve_alignment(&p, &[], MODE_SIMPLE), Err(Error::Validation(_))));
    }

    #[test]
    fn compose_skips_identity_factors_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t_a: Vec<Se3> = (0..6).map(|_| random_se3(&mut rng)).collect();
        let tilde = vec![Se3::identity(); 6];
        let t_j = compose_pose_track(&t_a, &tilde, None).unwrap();
        assert_eq!(t_j, t_a);
        let hat = vec![Se3::identity(); 6];
        let t_j = compose_pose_track(&t_a, &tilde, Some(&hat)).unwrap();
        assert_eq!(t_j, t_a);
    }

    #[test]
    fn compose_places_object_frame_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let t_a: Vec<Se3> = (0..5).map(|_| random_se3(&mut rng)).collect();
        let d = Vector3::new(0.02, -0.01, 0.005);
        let tilde = vec![Se3::from_translation(d); 5];
        let t_j = compose_pose_track(&t_a, &tilde, None).unwrap();
        for (a, j) in t_a.iter().zip(&t_j) {
            // T_j maps the origin where T_a maps d (right-multiplication).
            let lhs = j.transform_point(&Point3::origin());
            let rhs = a.transform_point(&Point3::from(d));
            assert!((lhs - rhs).norm() < 1e-15);
        }
    }

    #[test]
    fn compose_camera_leg_shifts_camera_positions() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let t_a: Vec<Se3> = (0..5).map(|_| random_se3(&mut rng)).collect();
        let tilde: Vec<Se3> = (0..5).map(|_| random_se3(&mut rng)).collect();
        let e = Vector3::new(-0.03, 0.04, 0.01);
        let hat = vec![Se3::from_translation(e); 5];
        let with = compose_pose_track(&t_a, &tilde, Some(&hat)).unwrap();
        let without = compose_pose_track(&t_a, &tilde, None).unwrap();
        let x = Point3::new(0.1, 0.2, 0.3);
        for (w, wo) in with.iter().zip(&without) {
            let shift = w.transform_point(&x) - wo.transform_point(&x);
            assert!((shift - e).norm() < 1e-12);
        }
        // Length mismatches are rejected.
        assert!(matches!(
            compose_pose_track(&t_a, &tilde[..4], None),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            compose_pose_track(&t_a, &tilde, Some(&hat[..3])),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn anchor_sequence_identity_and_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let track: Vec<Se3> = (0..7).map(|_| random_se3(&mut rng)).collect();
        let x = Point3::new(0.05, -0.02, 0.4);
        // Unmoved anchor: exact identities.
        let hat = solve_anchor_sequence(&track, &track, &x, &x).unwrap();
        assert!(hat.iter().all(Se3::is_identity));
        // Anchor displaced by a fixed camera-space offset.
        let e = Vector3::new(0.01, 0.02, -0.03);
        let moved: Vec<Se3> =
            track.iter().map(|t| Se3::from_translation(e).compose(t)).collect();
        let hat = solve_anchor_sequence(&track, &moved, &x, &x).unwrap();
        for h in &hat {
            assert_eq!(h.rotation, Matrix3::identity());
            assert!((h.translation - e).norm() < 1e-12);
        }
        assert!(matches!(
            solve_anchor_sequence(&track, &track[..3], &x, &x),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn gripper_correction_is_translation_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let t_a: Vec<Se3> = (0..9).map(|_| random_se3(&mut rng)).collect();
        let t_j: Vec<Se3> = (0..9).map(|_| random_se3(&mut rng)).collect();
        let x_g = Point3::new(0.01, -0.02, 0.3);
        let x_w = Point3::new(0.015, -0.018, 0.29);
        let t_g = gripper_correction(&t_a, &t_j, &x_g, &x_w).unwrap();
        for g in &t_g {
            assert_eq!(g.rotation, Matrix3::identity());
        }
        // Same tracks and same point: exact identities.
        let t_g = gripper_correction(&t_a, &t_a, &x_g, &x_g).unwrap();
        assert!(t_g.iter().all(Se3::is_identity));
        // Identity poses with a z-offset keypoint: pure z translation.
        let idle = vec![Se3::identity(); 3];
        let off = Point3::new(x_g.x, x_g.y, x_g.z + 0.02);
        let t_g = gripper_correction(&idle, &idle, &x_g, &off).unwrap();
        for g in &t_g {
            assert!((g.translation - Vector3::new(0.0, 0.0, 0.02)).norm() < 1e-12);
        }
    }

    #[test]
    fn action_correction_matches_full_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..1000 {
            let t_c2b = random_se3(&mut rng);
            let a = random_se3(&mut rng);
            let g = Se3::from_translation(Vector3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            ));
            let shortcut = correct_actions(&[a.clone()], &[g.clone()], &t_c2b).unwrap();
            let full = t_c2b.compose(&g).compose(&t_c2b.inverse()).compose(&a);
            assert!(shortcut[0].max_abs_diff(&full) < 1e-12);
            assert_eq!(shortcut[0].rotation, a.rotation);
        }
    }

    #[test]
    fn action_correction_identity_and_simple_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let actions: Vec<Se3> = (0..4).map(|_| random_se3(&mut rng)).collect();
        let idle = vec![Se3::identity(); 4];
        let t_c2b = random_se3(&mut rng);
        // Identity corrections: bit-identical pass-through.
        assert_eq!(correct_actions(&actions, &idle, &t_c2b).unwrap(), actions);
        // Identity calibration rotation: translation adds through directly.
        let d = Vector3::new(0.01, 0.0, 0.0);
        let g = vec![Se3::from_translation(d); 4];
        let out = correct_actions(&actions, &g, &Se3::identity()).unwrap();
        for (a, o) in actions.iter().zip(&out) {
            assert!(((o.translation - a.translation) - d).norm() < 1e-15);
        }
        assert!(matches!(
            correct_actions(&actions, &g[..2], &t_c2b),
            Err(Error::Validation(_))
        ));
    }

    // -- plan construction against a shared real library -------------------
    //
    // Uses the crate-wide mid-quality fixture (category "ball", template
    // "tmpl", entry "twin") so keypoint refinement converges with the
    // default parameters.

    fn test_annotation(gripped: bool) -> Annotation {
        let mut objects = BTreeMap::new();
        objects.insert(
            "ball_a".to_string(),
            ObjectAnnotation {
                category: "ball".to_string(),
                gripped,
                gripper_keypoint: gripped.then(|| vec![Point3::new(0.0, 0.0, 0.1)]),
                functionals: vec![
                    FunctionalAnchor {
                        tstamp: 0,
                        mode: MODE_SIMPLE.to_string(),
                        points: vec![Point3::new(0.0, 0.0, -0.12)],
                        anchor_ref: None,
                    },
                    FunctionalAnchor {
                        tstamp: 3,
                        mode: MODE_SIMPLE.to_string(),
                        points: vec![Point3::new(0.0, 0.12, 0.0)],
                        anchor_ref: None,
                    },
                ],
            },
        );
        Annotation { objects, other_foreground_objects: vec!["tree".to_string()] }
    }

    fn test_episode(length: usize) -> DemoEpisode {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let frames = (0..length)
            .map(|i| FrameRefs {
                depth: format!("frames/depth_{i:04}.png"),
                masks: BTreeMap::from([(
                    "ball_a".to_string(),
                    format!("frames/mask_ball_a_{i:04}.png"),
                )]),
            })
            .collect();
        let mut pose_tracks = BTreeMap::new();
        pose_tracks.insert(
            "ball_a".to_string(),
            (0..length)
                .map(|i| {
                    Se3::from_translation(Vector3::new(0.0, 0.0, 0.5 + 0.01 * i as f64))
                })
                .collect(),
        );
        DemoEpisode {
            root: PathBuf::new(),
            length,
            intrinsics: CameraIntrinsics { fx: 140.0, fy: 140.0, cx: 80.0, cy: 60.0 },
            t_c2b: random_se3(&mut rng),
            pose_tracks,
            actions: (0..length).map(|_| random_se3(&mut rng)).collect(),
            frames,
            background_frame: FrameRefs { depth: "background/depth.png".into(), masks: BTreeMap::new() },
        }
    }

    #[test]
    fn plan_with_both_skips_reproduces_source() {
        let (lib, plugged) = &*MID;
        let episode = test_episode(5);
        let flags = PlanFlags { skip_alignment: true, skip_action_correction: true };
        let plan = make_retarget_plan(
            &episode,
            &test_annotation(true),
            lib,
            plugged,
            "twin",
            &flags,
            &RefineParams::default(),
        )
        .unwrap();
        assert_eq!(plan.actions, episode.actions);
        assert_eq!(&plan.pose_track, &episode.pose_tracks["ball_a"]);
        assert!(plan.alignment.iter().all(Se3::is_identity));
        assert!(plan.gripper.iter().all(Se3::is_identity));
        assert!(plan.camera_alignment.is_none());
    }

    #[test]
    fn plan_self_substitution_reproduces_source_exactly() {
        let (lib, plugged) = &*MID;
        let episode = test_episode(5);
        // No skip flags: the full pipeline runs, but the scan-as-target
        // identity warp makes every stage an exact no-op.
        let plan = make_retarget_plan(
            &episode,
            &test_annotation(true),
            lib,
            plugged,
            "scan",
            &PlanFlags::default(),
            &RefineParams::default(),
        )
        .unwrap();
        assert_eq!(plan.actions, episode.actions);
        assert_eq!(&plan.pose_track, &episode.pose_tracks["ball_a"]);
        assert!(plan.alignment.iter().all(Se3::is_identity));
        assert!(plan.gripper.iter().all(Se3::is_identity));
    }

    #[test]
    fn plan_sequences_have_episode_length() {
        let (lib, plugged) = &*MID;
        let episode = test_episode(5);
        let plan = make_retarget_plan(
            &episode,
            &test_annotation(true),
            lib,
            plugged,
            "twin",
            &PlanFlags::default(),
            &RefineParams::default(),
        )
        .unwrap();
        assert_eq!(plan.alignment.len(), 5);
        assert_eq!(plan.pose_track.len(), 5);
        assert_eq!(plan.gripper.len(), 5);
        assert_eq!(plan.actions.len(), 5);
        for g in &plan.gripper {
            assert_eq!(g.rotation, Matrix3::identity());
        }
        // T_j = T_a · T̃ by construction.
        let t_a = &episode.pose_tracks["ball_a"];
        for t in 0..5 {
            let expect = t_a[t].compose(&plan.alignment[t]);
            assert!(plan.pose_track[t].max_abs_diff(&expect) < 1e-15);
        }
        // Alignment sequence interpolates between the two anchors and is
        // held constant after the second (tstamp 3).
        assert_eq!(plan.alignment[3], plan.alignment[4]);
    }

    #[test]
    fn plan_skip_action_correction_only() {
        let (lib, plugged) = &*MID;
        let episode = test_episode(4);
        let flags = PlanFlags { skip_alignment: false, skip_action_correction: true };
        let plan = make_retarget_plan(
            &episode,
            &test_annotation(true),
            lib,
            plugged,
            "tmpl",
            &flags,
            &RefineParams::default(),
        )
        .unwrap();
        assert_eq!(plan.actions, episode.actions);
        assert!(plan.gripper.iter().all(Se3::is_identity));
        // Alignment still ran.
        assert!(!plan.alignment.iter().all(Se3::is_identity));
    }

    #[test]
    fn ungripped_object_passes_actions_through() {
        let (lib, plugged) = &*MID;
        let episode = test_episode(4);
        let plan = make_retarget_plan(
            &episode,
            &test_annotation(false),
            lib,
            plugged,
            "twin",
            &PlanFlags::default(),
            &RefineParams::default(),
        )
        .unwrap();
        assert_eq!(plan.actions, episode.actions);
        assert!(plan.gripper.iter().all(Se3::is_identity));
    }

    #[test]
    fn plan_validates_target_and_category() {
        let (lib, plugged) = &*MID;
        let episode = test_episode(3);
        let ann = test_annotation(true);
        let err = make_retarget_plan(
            &episode,
            &ann,
            lib,
            plugged,
            "missing",
            &PlanFlags::default(),
            &RefineParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        // No annotated object of the library's category.
        let mut other = ann.clone();
        other.objects.get_mut("ball_a").unwrap().category = "mug".into();
        let err = make_retarget_plan(
            &episode,
            &other,
            lib,
            plugged,
            "twin",
            &PlanFlags::default(),
            &RefineParams::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("no annotated object"), "{err}");
        // Two objects of the same category are ambiguous.
        let mut dup = ann.clone();
        let copy = dup.objects["ball_a"].clone();
        dup.objects.insert("ball_b".into(), copy);
        let err = make_retarget_plan(
            &episode,
            &dup,
            lib,
            plugged,
            "twin",
            &PlanFlags::default(),
            &RefineParams::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("ambiguous"), "{err}");
        // Annotated object without a pose track.
        let mut renamed = ann.clone();
        let obj = renamed.objects.remove("ball_a").unwrap();
        renamed.objects.insert("ghost".into(), obj);
        let err = make_retarget_plan(
            &episode,
            &renamed,
            lib,
            plugged,
            "twin",
            &PlanFlags::default(),
            &RefineParams::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("pose track"), "{err}");
    }

    #[test]
    fn plan_with_anchor_ref_records_camera_alignment() {
        let (lib, plugged) = &*MID;
        let mut episode = test_episode(4);
        episode.pose_tracks.insert(
            "tree".to_string(),
            (0..4).map(|_| Se3::identity()).collect(),
        );
        let mut ann = test_annotation(true);
        ann.objects.get_mut("ball_a").unwrap().functionals[1].anchor_ref =
            Some(AnchorRef { object: "tree".into(), point: Point3::new(0.0, 0.1, 0.0) });
        let plan = make_retarget_plan(
            &episode,
            &ann,
            lib,
            plugged,
            "twin",
            &PlanFlags::default(),
            &RefineParams::default(),
        )
        .unwrap();
        let hat = plan.camera_alignment.as_ref().unwrap();
        assert_eq!(hat.len(), 4);
        assert!(hat.iter().all(Se3::is_identity));
        // Anchor object without a track errors.
        episode.pose_tracks.remove("tree");
        let err = make_retarget_plan(
            &episode,
            &ann,
            lib,
            plugged,
            "twin",
            &PlanFlags::default(),
            &RefineParams::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("anchor object"), "{err}");
    }

    #[test]
    fn alignment_sequence_rejects_unresolved_ditto() {
        let (lib, plugged) = &*MID;
        let mut ann = test_annotation(false);
        let obj = ann.objects.get_mut("ball_a").unwrap();
        obj.functionals[1].mode = "ditto".into();
        obj.functionals[1].points.clear();
        let err =
            build_alignment_sequence(&ann.objects["ball_a"], lib, plugged, "twin", 4, &RefineParams::default())
                .unwrap_err();
        assert!(err.to_string().contains("ditto"), "{err}");
    }

    #[test]
    fn episode_roundtrips_and_validates() {
        let episode = test_episode(5);
        let dir = tempfile::tempdir().unwrap();
        save_episode(&episode, dir.path()).unwrap();
        let loaded = load_episode(dir.path()).unwrap();
        assert_eq!(loaded.length, episode.length);
        assert_eq!(loaded.intrinsics, episode.intrinsics);
        assert_eq!(loaded.t_c2b, episode.t_c2b);
        assert_eq!(loaded.pose_tracks, episode.pose_tracks);
        assert_eq!(loaded.actions, episode.actions);
        assert_eq!(loaded.frames, episode.frames);
        assert_eq!(loaded.background_frame, episode.background_frame);
        assert_eq!(loaded.root, dir.path());

        // Length mismatches are rejected.
        let mut bad = episode.clone();
        bad.actions.pop();
        assert!(matches!(bad.validate(), Err(Error::Validation(_))));
        let mut bad = episode.clone();
        bad.pose_tracks.get_mut("ball_a").unwrap().pop();
        assert!(matches!(bad.validate(), Err(Error::Validation(_))));
        let mut bad = episode;
        bad.intrinsics.fx = -1.0;
        assert!(matches!(bad.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn plan_roundtrips_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let plan = RetargetPlan {
            target_id: "twin".into(),
            alignment: (0..3).map(|_| random_se3(&mut rng)).collect(),
            camera_alignment: Some((0..3).map(|_| Se3::from_translation(Vector3::new(0.1, 0.0, 0.0))).collect()),
            pose_track: (0..3).map(|_| random_se3(&mut rng)).collect(),
            gripper: (0..3)
                .map(|_| Se3::from_translation(Vector3::new(0.0, 0.01, 0.0)))
                .collect(),
            actions: (0..3).map(|_| random_se3(&mut rng)).collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plan_e0.json");
        save_plan(&plan, &path).unwrap();
        let loaded = load_plan(&path).unwrap();
        assert_eq!(loaded, plan);
        // A gripper rotation that is not exactly identity is rejected.
        let mut bad = plan;
        bad.gripper[1] = Se3::from_axis_angle(Vector3::z(), 1e-9);
        assert!(matches!(bad.validate(), Err(Error::Validation(_))));
    }
}
