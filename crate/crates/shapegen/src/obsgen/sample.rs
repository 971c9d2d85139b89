//! Camera-aware downsampling of composite scenes to fixed-size
//! observations.
//!
//! Three stages, in order: discard points farther than `d_max` from the
//! camera origin; keep only the nearest point per pixel under z-buffer
//! rasterization at the depth image's resolution (so occluded and inner
//! surfaces disappear, as they would from a real single-view capture);
//! and seeded farthest-point sampling down to exactly `n_points`
//! (topping up with replacement when fewer survive).

use nalgebra::Point3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::alignment::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::se3::Se3;

use super::ObsGenConfig;

/// The camera a scene is observed through: its pose in the scene frame
/// (camera→scene; identity when the scene is already in camera
/// coordinates) and the depth image geometry used for visibility.
#[derive(Debug, Clone)]
pub struct CameraView {
    /// Camera-to-scene transform.
    pub pose: Se3,
    /// Pinhole intrinsics of the depth image.
    pub intrinsics: CameraIntrinsics,
    /// Depth image width in pixels.
    pub width: usize,
    /// Depth image height in pixels.
    pub height: usize,
}

/// Mark the scene indices that survive z-buffer visibility: project each
/// point in front of the camera to its nearest pixel and keep the
/// closest point per pixel (ties by lowest index). Points behind the
/// camera or projecting outside the image are invisible.
fn visible_flags(points: &[Point3<f64>], camera: &CameraView) -> Vec<bool> {
    let (w, h) = (camera.width, camera.height);
    let intr = &camera.intrinsics;
    let mut zbuf: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); w * h];
    for (i, p) in points.iter().enumerate() {
        if p.z <= 0.0 {
            continue;
        }
        let u = (p.x * intr.fx / p.z + intr.cx).round();
        let v = (p.y * intr.fy / p.z + intr.cy).round();
        if u < 0.0 || v < 0.0 || u >= w as f64 || v >= h as f64 {
            continue;
        }
        let pix = v as usize * w + u as usize;
        if p.z < zbuf[pix].0 {
            zbuf[pix] = (p.z, i);
        }
    }
    let mut keep = vec![false; points.len()];
    for &(_, i) in &zbuf {
        if i != usize::MAX {
            keep[i] = true;
        }
    }
    keep
}

/// Seeded farthest-point sampling: pick a random start, then repeatedly
/// add the point with the greatest distance to the chosen set (ties by
/// lowest index). Returns indices in selection order.
fn farthest_point_sample(points: &[Point3<f64>], n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let k = points.len();
    debug_assert!(n <= k && n > 0);
    let mut selected = Vec::with_capacity(n);
    let start = rng.random_range(0..k);
    selected.push(start);
    let mut min_d2 = vec![f64::INFINITY; k];
    while selected.len() < n {
        let last = points[*selected.last().expect("non-empty")];
        let mut best = 0;
        let mut best_d2 = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let d2 = (p - last).norm_squared();
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
            if min_d2[i] > best_d2 {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        selected.push(best);
    }
    selected
}

/// Downsample a composite scene to exactly `config.n_points` points.
///
/// Output points stay in the scene frame. When the survivor count
/// already equals `n_points` the survivors are returned as-is (in scene
/// order); when fewer survive, the set is topped up by drawing existing
/// survivors with replacement. An empty post-culling scene is an error.
pub fn sample_observation(
    scene: &[Point3<f64>],
    camera: &CameraView,
    config: &ObsGenConfig,
) -> Result<Vec<Point3<f64>>> {
    config.validate()?;
    camera.intrinsics.validate()?;
    if camera.width == 0 || camera.height == 0 {
        return Err(Error::validation("camera view has zero pixels"));
    }
    let cam_points: Vec<Point3<f64>> = if camera.pose.is_identity() {
        scene.to_vec()
    } else {
        let world_to_cam = camera.pose.inverse();
        scene.iter().map(|p| world_to_cam.transform_point(p)).collect()
    };

    let in_range: Vec<bool> = cam_points.iter().map(|p| p.coords.norm() <= config.d_max).collect();
    let survivors: Vec<usize> = if config.visibility_culling {
        let ranged: Vec<Point3<f64>> = cam_points
            .iter()
            .zip(&in_range)
            .map(|(p, &ok)| if ok { *p } else { Point3::new(0.0, 0.0, -1.0) })
            .collect();
        let keep = visible_flags(&ranged, camera);
        (0..scene.len()).filter(|&i| in_range[i] && keep[i]).collect()
    } else {
        (0..scene.len()).filter(|&i| in_range[i]).collect()
    };

    if survivors.is_empty() {
        return Err(Error::validation(
            "scene is empty after distance and visibility culling",
        ));
    }

    let points: Vec<Point3<f64>> = survivors.iter().map(|&i| scene[i]).collect();
    let k = points.len();
    let n = config.n_points;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    Ok(if k == n {
        points
    } else if k < n {
        let mut out = points.clone();
        out.extend((k..n).map(|_| points[rng.random_range(0..k)]));
        out
    } else {
        farthest_point_sample(&points, n, &mut rng).into_iter().map(|i| points[i]).collect()
    })
}

/// Symmetric chamfer distance: the mean nearest-neighbor distance from
/// `a` to `b` averaged with the reverse direction. Intended for
/// observation-sized clouds (brute-force pairing). Infinite when either
/// cloud is empty.
pub fn chamfer_distance(a: &[Point3<f64>], b: &[Point3<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |from: &[Point3<f64>], to: &[Point3<f64>]| {
        from.iter()
            .map(|p| {
                to.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min).sqrt()
            })
            .sum::<f64>()
            / from.len() as f64
    };
    0.5 * (directed(a, b) + directed(b, a))
}
