//! Rigid transforms in SE(3) and the small solver kit built on them.
//!
//! Poses are stored as an explicit rotation matrix plus translation vector;
//! quaternions appear only transiently inside [`Se3::interp`]. On-disk and
//! over-the-wire, a pose is a row-major 4×4 matrix flattened to 16 numbers
//! (see [`Se3::to_row_major`] / [`Se3::from_row_major`]).

use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dot-product threshold below which two orientations are treated as
/// antipodal (180° apart) and interpolation is refused.
const ANTIPODAL_DOT: f64 = 1e-8;

/// A rigid transform: rotation followed by translation.
#[derive(Debug, Clone, PartialEq)]
pub struct Se3 {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Se3 {
    fn default() -> Self {
        Se3::identity()
    }
}

impl Se3 {
    /// The identity transform.
    pub fn identity() -> Self {
        Se3 { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Se3 { rotation, translation }
    }

    /// Pure translation.
    pub fn from_translation(t: Vector3<f64>) -> Self {
        Se3 { rotation: Matrix3::identity(), translation: t }
    }

    /// Rotation about a unit axis by `angle` radians, zero translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Se3 { rotation: rot.into_inner(), translation: Vector3::zeros() }
    }

    /// Apply to a point: `R p + t`.
    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// Rotate a direction vector (ignores translation).
    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Composition `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Se3) -> Se3 {
        Se3 {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Inverse transform.
    pub fn inverse(&self) -> Se3 {
        let rt = self.rotation.transpose();
        Se3 { rotation: rt, translation: -(rt * self.translation) }
    }

    /// True when this is the identity transform (exact comparison; ±0.0
    /// both count as zero). Used to skip no-op compositions so exact
    /// source poses survive identity retargeting bit for bit.
    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vector3::zeros()
    }

    /// Interpolate between two poses at parameter `s ∈ [0, 1]`: spherical
    /// linear interpolation on orientation, linear on translation.
    ///
    /// Endpoints are exact (`s = 0` returns `a` bitwise, `s = 1` returns
    /// `b`), and bitwise-equal rotations pass through unchanged so that an
    /// exactly-identity rotation block survives interpolation untouched.
    ///
    /// Errors with [`Error::Numerical`] when the two orientations are
    /// antipodal (relative rotation of 180°), where the geodesic is not
    /// unique.
    pub fn interp(a: &Se3, b: &Se3, s: f64) -> Result<Se3> {
        if s == 0.0 {
            return Ok(a.clone());
        }
        if s == 1.0 {
            return Ok(b.clone());
        }
        let translation = a.translation.lerp(&b.translation, s);
        if a.rotation == b.rotation {
            return Ok(Se3 { rotation: a.rotation, translation });
        }
        let qa = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(a.rotation));
        let qb = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(b.rotation));
        // Canonicalize sign so the interpolation takes the short arc.
        let mut dot = qa.coords.dot(&qb.coords);
        let qb = if dot < 0.0 {
            dot = -dot;
            UnitQuaternion::new_unchecked(-qb.into_inner())
        } else {
            qb
        };
        if dot < ANTIPODAL_DOT {
            return Err(Error::numerical(
                "cannot interpolate between antipodal orientations (rotation of 180°)",
            ));
        }
        let dot = dot.min(1.0);
        let theta = dot.acos();
        let q = if theta < 1e-9 {
            // Orientations nearly coincide; normalized lerp is exact enough
            // and avoids dividing by a vanishing sin(theta).
            let mixed = qa.into_inner().lerp(&qb.into_inner(), s);
            UnitQuaternion::new_normalize(mixed)
        } else {
            let sin_theta = theta.sin();
            let wa = ((1.0 - s) * theta).sin() / sin_theta;
            let wb = (s * theta).sin() / sin_theta;
            UnitQuaternion::new_normalize(qa.into_inner() * wa + qb.into_inner() * wb)
        };
        Ok(Se3 { rotation: q.to_rotation_matrix().into_inner(), translation })
    }

    /// Row-major flattening of the homogeneous 4×4 matrix.
    pub fn to_row_major(&self) -> [f64; 16] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x, //
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y, //
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z, //
            0.0, 0.0, 0.0, 1.0,
        ]
    }

    /// Parse a row-major flattened 4×4. The last row must be `0 0 0 1` and
    /// the upper-left block must be a proper rotation (orthonormal,
    /// determinant +1) to within `1e-6`.
    pub fn from_row_major(m: &[f64; 16]) -> Result<Se3> {
        let bottom = [m[12], m[13], m[14], m[15]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::validation(format!(
                "homogeneous matrix bottom row must be [0, 0, 0, 1], got {bottom:?}"
            )));
        }
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        let gram = rotation.transpose() * rotation;
        let ortho_err = (gram - Matrix3::identity()).abs().max();
        if ortho_err > 1e-6 || (rotation.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::validation(format!(
                "upper-left 3×3 block is not a proper rotation (orthogonality error {ortho_err:.2e}, det {:.6})",
                rotation.determinant()
            )));
        }
        Ok(Se3 { rotation, translation })
    }

    /// Largest absolute entry-wise difference between two poses, useful for
    /// tolerance checks in tests and diagnostics.
    pub fn max_abs_diff(&self, other: &Se3) -> f64 {
        let dr = (self.rotation - other.rotation).abs().max();
        let dt = (self.translation - other.translation).abs().max();
        dr.max(dt)
    }
}

impl Serialize for Se3 {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row_major().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Se3 {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = <[f64; 16]>::deserialize(deserializer)?;
        Se3::from_row_major(&m).map_err(serde::de::Error::custom)
    }
}

/// Best translation (least-squares) mapping `src` onto `dst`: the centroid
/// difference. The rotation block of the result is exactly identity.
///
/// Errors on empty or mismatched inputs.
pub fn fit_translation(src: &[Point3<f64>], dst: &[Point3<f64>]) -> Result<Se3> {
    if src.is_empty() || src.len() != dst.len() {
        return Err(Error::validation(format!(
            "fit_translation needs equal-length non-empty point sets, got {} and {}",
            src.len(),
            dst.len()
        )));
    }
    let n = src.len() as f64;
    let mut delta = Vector3::zeros();
    for (s, d) in src.iter().zip(dst) {
        delta += d.coords - s.coords;
    }
    Ok(Se3::from_translation(delta / n))
}

/// Best rigid transform (least-squares, Kabsch/Umeyama) mapping `src` onto
/// `dst`, with SVD sign correction so the rotation is proper (det +1).
///
/// Errors on fewer than 3 correspondences or on rank-deficient
/// configurations (e.g. collinear points), where the rotation is not
/// determined.
pub fn fit_rigid(src: &[Point3<f64>], dst: &[Point3<f64>]) -> Result<Se3> {
    if src.len() != dst.len() {
        return Err(Error::validation(format!(
            "fit_rigid needs equal-length point sets, got {} and {}",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::validation(format!(
            "fit_rigid needs at least 3 correspondences, got {}",
            src.len()
        )));
    }
    let n = src.len() as f64;
    let c_src = src.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let c_dst = dst.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s.coords - c_src) * (d.coords - c_dst).transpose();
    }
    let svd = h.svd(true, true);
    let sigma = svd.singular_values;
    let scale = sigma[0].max(1.0);
    if sigma[1] <= 1e-9 * scale {
        return Err(Error::numerical(
            "degenerate rigid fit: correspondences are rank-deficient (collinear or coincident)",
        ));
    }
    let u = svd.u.expect("svd with u requested");
    let v_t = svd.v_t.expect("svd with v_t requested");
    // H = U Σ Vᵀ accumulated as Σ src·dstᵀ, so the aligning rotation is
    // V diag(1, 1, det(V Uᵀ)) Uᵀ.
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum()));
    let rotation = v * correction * u.transpose();
    let translation = c_dst - rotation * c_src;
    Ok(Se3 { rotation, translation })
}

/// Conjugate a pure translation `t` by a frame change with rotation block
/// `R`: for `T_f = [R | t_f]`, `T_f · translate(t) · T_f⁻¹ = translate(R t)`.
pub fn conjugate_translation(frame: &Se3, t: &Vector3<f64>) -> Vector3<f64> {
    frame.rotation * t
}
