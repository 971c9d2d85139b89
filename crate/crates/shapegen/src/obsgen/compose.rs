//! Back-projection, arm extraction, and scene compositing.
//!
//! The observation pipeline decomposes each source frame into four point
//! sets — background, robot arm, static foreground objects, and the
//! manipulated object — then rebuilds the scene with the object replaced
//! by surface samples of the substituted mesh:
//!
//! * the arm is found by depth comparison against the empty-workspace
//!   frame, minus every labeled object mask;
//! * pixels under the removed object's mask are back-filled from the
//!   empty-workspace frame, so the substitute does not float over a hole;
//! * the arm cloud is moved by the translation-only gripper correction
//!   `T^g_t`, and the mesh samples are posed by the retargeted `T_j[t]`.

use nalgebra::{Point3, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::alignment::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;
use crate::se3::Se3;

use super::frame::DepthFrame;
use super::ObsGenConfig;

/// Seed salt separating the mesh-sampling stream from the downsampling
/// stream of the same frame.
const MESH_SEED_SALT: u64 = 0x6d65_7368;

/// Ray–triangle intersection (Möller–Trumbore) for the pixel ray from
/// the camera origin through `dir`; returns the ray parameter, which
/// equals depth because `dir.z == 1`. Slightly inclusive barycentric
/// bounds close seam holes between adjacent triangles.
pub(crate) fn ray_triangle(
    dir: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Option<f64> {
    const EPS: f64 = 1e-10;
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = -a.coords;
    let u = inv * s.dot(&h);
    if !(-EPS..=1.0 + EPS).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = inv * dir.dot(&q);
    if v < -EPS || u + v > 1.0 + EPS {
        return None;
    }
    let t = inv * e2.dot(&q);
    (t > 1e-6).then_some(t)
}

/// Rasterize one posed mesh into `zbuf` (per-triangle pixel bounding
/// boxes, nearest hit wins), calling `on_win(pixel)` whenever the mesh
/// takes over a pixel. Triangles with a vertex at or behind the camera
/// plane are skipped.
pub(crate) fn rasterize_mesh(
    mesh: &TriangleMesh,
    pose: &Se3,
    intrinsics: &CameraIntrinsics,
    width: usize,
    height: usize,
    zbuf: &mut [f64],
    mut on_win: impl FnMut(usize),
) {
    debug_assert_eq!(zbuf.len(), width * height);
    let posed: Vec<Point3<f64>> =
        mesh.vertices().iter().map(|v| pose.transform_point(v)).collect();
    for face in mesh.faces() {
        let [a, b, c] = [posed[face[0] as usize], posed[face[1] as usize], posed[face[2] as usize]];
        if a.z <= 1e-6 || b.z <= 1e-6 || c.z <= 1e-6 {
            continue;
        }
        let (mut u0, mut u1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in [&a, &b, &c] {
            let u = p.x * intrinsics.fx / p.z + intrinsics.cx;
            let v = p.y * intrinsics.fy / p.z + intrinsics.cy;
            u0 = u0.min(u);
            u1 = u1.max(u);
            v0 = v0.min(v);
            v1 = v1.max(v);
        }
        let ui0 = (u0.floor() as i64 - 1).max(0) as usize;
        let ui1 = (u1.ceil() as i64 + 1).clamp(-1, width as i64 - 1);
        let vi0 = (v0.floor() as i64 - 1).max(0) as usize;
        let vi1 = (v1.ceil() as i64 + 1).clamp(-1, height as i64 - 1);
        if ui1 < 0 || vi1 < 0 || ui0 > ui1 as usize || vi0 > vi1 as usize {
            continue;
        }
        for v in vi0..=vi1 as usize {
            for u in ui0..=ui1 as usize {
                let dir = Vector3::new(
                    (u as f64 - intrinsics.cx) / intrinsics.fx,
                    (v as f64 - intrinsics.cy) / intrinsics.fy,
                    1.0,
                );
                if let Some(t) = ray_triangle(&dir, &a, &b, &c) {
                    let pix = v * width + u;
                    if t < zbuf[pix] {
                        zbuf[pix] = t;
                        on_win(pix);
                    }
                }
            }
        }
    }
}

/// Analytic depth map of a posed mesh at the given image geometry
/// (0 = no hit). Used to let the substituted shape occlude revealed
/// background properly: point samples alone leave pinholes wherever no
/// sample lands on a pixel, but the mesh surface is continuous.
pub fn mesh_depth_map(
    mesh: &TriangleMesh,
    pose: &Se3,
    intrinsics: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> Vec<f64> {
    let mut zbuf = vec![f64::INFINITY; width * height];
    rasterize_mesh(mesh, pose, intrinsics, width, height, &mut zbuf, |_| {});
    zbuf.into_iter().map(|z| if z.is_finite() { z } else { 0.0 }).collect()
}

/// Drop points that a depth map occludes: a point is removed when it
/// projects onto a pixel whose map depth is valid and strictly nearer.
/// Points behind the camera or outside the image are kept (the
/// visibility stage deals with them).
pub fn filter_occluded(
    points: Vec<Point3<f64>>,
    depth: &[f64],
    intrinsics: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> Vec<Point3<f64>> {
    points
        .into_iter()
        .filter(|p| {
            if p.z <= 0.0 {
                return true;
            }
            let u = (p.x * intrinsics.fx / p.z + intrinsics.cx).round();
            let v = (p.y * intrinsics.fy / p.z + intrinsics.cy).round();
            if u < 0.0 || v < 0.0 || u >= width as f64 || v >= height as f64 {
                return true;
            }
            let d = depth[v as usize * width + u as usize];
            !(d > 0.0 && d < p.z)
        })
        .collect()
}

fn backproject_if(
    frame: &DepthFrame,
    intrinsics: &CameraIntrinsics,
    keep: impl Fn(usize) -> bool,
) -> Vec<Point3<f64>> {
    let mut out = Vec::new();
    for v in 0..frame.height {
        for u in 0..frame.width {
            let i = v * frame.width + u;
            let d = frame.depth[i];
            if d > 0.0 && keep(i) {
                out.push(Point3::new(
                    (u as f64 - intrinsics.cx) * d / intrinsics.fx,
                    (v as f64 - intrinsics.cy) * d / intrinsics.fy,
                    d,
                ));
            }
        }
    }
    out
}

/// Back-project a depth frame into camera-frame points.
///
/// Pixel `(u, v)` with depth `d` maps to
/// `((u−cx)·d/fx, (v−cy)·d/fy, d)`; invalid pixels (depth 0) are
/// skipped. With a mask label, only in-mask pixels are returned; an
/// unknown label is a validation error.
pub fn depth_to_points(
    frame: &DepthFrame,
    intrinsics: &CameraIntrinsics,
    mask: Option<&str>,
) -> Result<Vec<Point3<f64>>> {
    intrinsics.validate()?;
    frame.validate()?;
    match mask {
        None => Ok(backproject_if(frame, intrinsics, |_| true)),
        Some(label) => {
            let bits = frame.mask(label).ok_or_else(|| {
                Error::validation(format!("frame has no mask labeled '{label}'"))
            })?;
            Ok(backproject_if(frame, intrinsics, |i| bits[i]))
        }
    }
}

/// Extract the robot-arm mask by depth comparison against the
/// empty-workspace frame.
///
/// A pixel is arm when both depths are valid and the frame is more than
/// `threshold` meters closer than the background, and it is not covered
/// by any of the given object masks. Labels absent from the frame are
/// treated as empty masks.
pub fn arm_mask(
    frame: &DepthFrame,
    background: &DepthFrame,
    object_masks: &[&str],
    threshold: f64,
) -> Result<Vec<bool>> {
    if (frame.width, frame.height) != (background.width, background.height) {
        return Err(Error::validation(format!(
            "frame is {}×{}, background is {}×{}",
            frame.width, frame.height, background.width, background.height
        )));
    }
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::validation(format!(
            "foreground depth threshold {threshold} must be a non-negative meter"
        )));
    }
    let objects: Vec<&[bool]> = object_masks.iter().filter_map(|l| frame.mask(l)).collect();
    let mask = (0..frame.len())
        .map(|i| {
            frame.is_valid(i)
                && background.is_valid(i)
                && background.depth[i] - frame.depth[i] > threshold
                && !objects.iter().any(|m| m[i])
        })
        .collect();
    Ok(mask)
}

/// One frame decomposed into the point sets the composite is built from.
#[derive(Debug, Clone)]
pub struct FrameScene {
    /// Environment points: everything in the frame except arm, statics,
    /// and the removed object.
    pub background: Vec<Point3<f64>>,
    /// Empty-workspace back-fill under the removed object's mask, kept
    /// separate so the driver can test it against the substituted mesh's
    /// analytic depth before merging (the reveal only applies where the
    /// substitute does not cover it).
    pub backfill: Vec<Point3<f64>>,
    /// Robot-arm points (unmoved; the composite applies `T^g`).
    pub arm: Vec<Point3<f64>>,
    /// Static foreground objects, kept in place.
    pub statics: Vec<Point3<f64>>,
}

/// Decompose a frame against the empty-workspace background.
///
/// `removed_label` is the manipulated object's mask (its pixels are
/// dropped and back-filled from the background frame); `static_labels`
/// are other foreground objects that stay put. Mask labels absent from
/// the frame are treated as empty.
pub fn frame_scene_points(
    frame: &DepthFrame,
    background: &DepthFrame,
    intrinsics: &CameraIntrinsics,
    removed_label: &str,
    static_labels: &[&str],
    threshold: f64,
) -> Result<FrameScene> {
    intrinsics.validate()?;
    let mut all_labels: Vec<&str> = vec![removed_label];
    all_labels.extend_from_slice(static_labels);
    let arm = arm_mask(frame, background, &all_labels, threshold)?;

    let empty = vec![false; frame.len()];
    let removed = frame.mask(removed_label).unwrap_or(&empty);
    let static_masks: Vec<&[bool]> = static_labels.iter().filter_map(|l| frame.mask(l)).collect();
    let in_static = |i: usize| static_masks.iter().any(|m| m[i]);

    let background_pts =
        backproject_if(frame, intrinsics, |i| !arm[i] && !removed[i] && !in_static(i));
    let backfill_pts = backproject_if(background, intrinsics, |i| removed[i] && !in_static(i));
    let arm_pts = backproject_if(frame, intrinsics, |i| arm[i]);
    let statics_pts = backproject_if(frame, intrinsics, |i| in_static(i));

    Ok(FrameScene {
        background: background_pts,
        backfill: backfill_pts,
        arm: arm_pts,
        statics: statics_pts,
    })
}

/// Draw `n` points uniformly over a mesh surface (area-weighted triangle
/// choice, uniform barycentric placement). A mesh with no area yields no
/// points. Three RNG draws per point, so the stream is reproducible.
pub fn sample_mesh_surface(
    mesh: &TriangleMesh,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<Point3<f64>> {
    let mut cumulative = Vec::with_capacity(mesh.faces().len());
    let mut total = 0.0;
    for i in 0..mesh.faces().len() {
        let [a, b, c] = mesh.triangle(i);
        total += (b - a).cross(&(c - a)).norm() * 0.5;
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Vec::new();
    }
    (0..n)
        .map(|_| {
            let r = rng.random::<f64>() * total;
            let idx = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(idx);
            let su = rng.random::<f64>().sqrt();
            let v = rng.random::<f64>();
            Point3::from(
                a.coords * (1.0 - su) + b.coords * (su * (1.0 - v)) + c.coords * (su * v),
            )
        })
        .collect()
}

fn transformed(points: &[Point3<f64>], t: &Se3) -> Vec<Point3<f64>> {
    if t.is_identity() {
        // Bitwise pass-through: identity retargeting must reproduce the
        // source scene exactly.
        points.to_vec()
    } else {
        points.iter().map(|p| t.transform_point(p)).collect()
    }
}

/// Assemble the composite scene for one frame: background, statics, the
/// arm moved by `t_g`, and `mesh_sample_factor × n_points` surface
/// samples of the substituted mesh posed by `t_j`. The mesh-sampling RNG
/// is derived from `config.rng_seed`, which the episode driver has
/// already mixed with the frame index.
pub fn composite_scene(
    background: &[Point3<f64>],
    arm: &[Point3<f64>],
    t_g: &Se3,
    statics: &[Point3<f64>],
    mesh: &TriangleMesh,
    t_j: &Se3,
    config: &ObsGenConfig,
) -> Vec<Point3<f64>> {
    let mut scene = Vec::new();
    scene.extend_from_slice(background);
    scene.extend_from_slice(statics);
    scene.extend(transformed(arm, t_g));
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ MESH_SEED_SALT);
    let samples = sample_mesh_surface(mesh, config.mesh_sample_factor * config.n_points, &mut rng);
    scene.extend(transformed(&samples, t_j));
    scene
}
