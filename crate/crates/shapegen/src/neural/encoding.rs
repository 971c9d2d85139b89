//! Multiresolution dense feature grids with cubic B-spline interpolation.
//!
//! Each level is a `res³ × features` lattice spanning the encoding cube.
//! A query point is mapped to continuous node coordinates and each axis
//! contributes 4 uniform cubic B-spline weights, so a feature read touches
//! 4×4×4 = 64 nodes per level. The B-spline basis is C², which keeps both
//! the field and its analytic input gradient consistent with central
//! finite differences across cell boundaries. Node indices are clamped at
//! the lattice edge (boundary nodes repeat), and query coordinates are
//! clamped to the cube, so the encoding is finite everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture of [`crate::neural::SdfNet`]: the grid levels plus the MLP
/// head dimensions. The parameter vector layout is: all grid levels in
/// order (node-major, x fastest, features innermost), then head `W1`
/// (row-major `hidden × (levels·features + 3)`), `b1`, `W2`
/// (`1 × hidden`), `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdfArch {
    pub level_resolutions: Vec<usize>,
    pub features_per_level: usize,
    pub hidden: usize,
    pub domain_min: [f64; 3],
    pub domain_max: [f64; 3],
}

impl Default for SdfArch {
    fn default() -> Self {
        SdfArch {
            level_resolutions: vec![8, 16, 32, 64],
            features_per_level: 2,
            hidden: 64,
            domain_min: [-0.05; 3],
            domain_max: [1.05; 3],
        }
    }
}

impl SdfArch {
    pub fn validate(&self) -> Result<()> {
        if self.level_resolutions.is_empty() || self.level_resolutions.iter().any(|&r| r < 2) {
            return Err(Error::validation("encoding needs levels with resolution ≥ 2"));
        }
        if self.features_per_level == 0 || self.hidden == 0 {
            return Err(Error::validation("features_per_level and hidden must be positive"));
        }
        for k in 0..3 {
            if !(self.domain_max[k] > self.domain_min[k]) {
                return Err(Error::validation("encoding domain must have positive extent"));
            }
        }
        Ok(())
    }

    /// Total interpolated features feeding the head (before xyz append).
    pub fn feature_dim(&self) -> usize {
        self.level_resolutions.len() * self.features_per_level
    }

    /// Head input dimension: features plus the raw coordinates.
    pub fn head_input_dim(&self) -> usize {
        self.feature_dim() + 3
    }

    pub fn grid_param_count(&self) -> usize {
        self.level_resolutions
            .iter()
            .map(|&r| r * r * r * self.features_per_level)
            .sum()
    }

    pub fn head_param_count(&self) -> usize {
        let d = self.head_input_dim();
        self.hidden * d + self.hidden + self.hidden + 1
    }

    pub fn param_count(&self) -> usize {
        self.grid_param_count() + self.head_param_count()
    }

    /// Parameter offset of level `l`'s grid.
    pub fn level_offset(&self, level: usize) -> usize {
        self.level_resolutions[..level]
            .iter()
            .map(|&r| r * r * r * self.features_per_level)
            .sum()
    }

    /// Offsets of the head blocks: (W1, b1, W2, b2).
    pub fn head_offsets(&self) -> (usize, usize, usize, usize) {
        let g = self.grid_param_count();
        let d = self.head_input_dim();
        let w1 = g;
        let b1 = w1 + self.hidden * d;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.hidden;
        (w1, b1, w2, b2)
    }
}

/// Uniform cubic B-spline basis at fractional position `t ∈ [0, 1)`:
/// weights for nodes `i-1, i, i+1, i+2`.
#[inline]
pub fn bspline_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let omt = 1.0 - t;
    [
        omt * omt * omt / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Derivatives of [`bspline_weights`] with respect to `t`.
#[inline]
pub fn bspline_dweights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let omt = 1.0 - t;
    [
        -omt * omt / 2.0,
        (9.0 * t2 - 12.0 * t) / 6.0,
        (-9.0 * t2 + 6.0 * t + 3.0) / 6.0,
        t2 / 2.0,
    ]
}

/// Interpolation taps of one level at one query point: clamped base node,
/// per-axis weights, and per-axis weight derivatives in node units.
#[derive(Debug, Clone, Copy)]
pub struct LevelTaps {
    pub base: [isize; 3],
    pub w: [[f64; 4]; 3],
    pub dw: [[f64; 4]; 3],
    /// d(node coordinate)/d(world coordinate) per axis.
    pub scale: [f64; 3],
}

/// Compute the taps of every level at point `p`. Coordinates are clamped
/// to the encoding domain first. `taps` is cleared and refilled, letting
/// hot loops reuse the allocation.
pub fn compute_taps(arch: &SdfArch, p: &[f64; 3], taps: &mut Vec<LevelTaps>) {
    taps.clear();
    for &res in &arch.level_resolutions {
        let mut base = [0isize; 3];
        let mut w = [[0.0; 4]; 3];
        let mut dw = [[0.0; 4]; 3];
        let mut scale = [0.0; 3];
        for k in 0..3 {
            let lo = arch.domain_min[k];
            let hi = arch.domain_max[k];
            let x = p[k].clamp(lo, hi);
            let s = (res as f64 - 1.0) / (hi - lo);
            let u = (x - lo) * s;
            // Fractional split; at the top edge u == res-1, floor would be
            // the last node and t = 0, which the clamped taps handle.
            let i = u.floor();
            let t = u - i;
            base[k] = i as isize - 1;
            w[k] = bspline_weights(t);
            dw[k] = bspline_dweights(t);
            scale[k] = s;
        }
        taps.push(LevelTaps { base, w, dw, scale });
    }
}

#[inline]
fn clamp_node(i: isize, res: usize) -> usize {
    i.clamp(0, res as isize - 1) as usize
}

/// Interpolate the features of every level at precomputed taps into
/// `out` (length [`SdfArch::feature_dim`]).
pub fn interpolate(arch: &SdfArch, params: &[f64], taps: &[LevelTaps], out: &mut [f64]) {
    let fpl = arch.features_per_level;
    out.iter_mut().for_each(|v| *v = 0.0);
    for (l, (&res, tap)) in arch.level_resolutions.iter().zip(taps).enumerate() {
        let grid = &params[arch.level_offset(l)..];
        let fo = l * fpl;
        for (az, &wz) in tap.w[2].iter().enumerate() {
            let iz = clamp_node(tap.base[2] + az as isize, res);
            for (ay, &wy) in tap.w[1].iter().enumerate() {
                let iy = clamp_node(tap.base[1] + ay as isize, res);
                let wzy = wz * wy;
                let row = (iz * res + iy) * res;
                for (ax, &wx) in tap.w[0].iter().enumerate() {
                    let ix = clamp_node(tap.base[0] + ax as isize, res);
                    let wght = wzy * wx;
                    let node = (row + ix) * fpl;
                    for f in 0..fpl {
                        out[fo + f] += wght * grid[node + f];
                    }
                }
            }
        }
    }
}

/// Input Jacobian dFeatures/dPoint (rows = features, columns = xyz).
/// `jac` has length `feature_dim`, each entry a `[f64; 3]`.
pub fn jacobian(arch: &SdfArch, params: &[f64], taps: &[LevelTaps], jac: &mut [[f64; 3]]) {
    let fpl = arch.features_per_level;
    jac.iter_mut().for_each(|r| *r = [0.0; 3]);
    for (l, (&res, tap)) in arch.level_resolutions.iter().zip(taps).enumerate() {
        let grid = &params[arch.level_offset(l)..];
        let fo = l * fpl;
        for az in 0..4 {
            let iz = clamp_node(tap.base[2] + az as isize, res);
            let wz = tap.w[2][az];
            let dz = tap.dw[2][az];
            for ay in 0..4 {
                let iy = clamp_node(tap.base[1] + ay as isize, res);
                let wy = tap.w[1][ay];
                let dy = tap.dw[1][ay];
                let row = (iz * res + iy) * res;
                for ax in 0..4 {
                    let ix = clamp_node(tap.base[0] + ax as isize, res);
                    let wx = tap.w[0][ax];
                    let dx = tap.dw[0][ax];
                    let node = (row + ix) * fpl;
                    let gx = dx * wy * wz * tap.scale[0];
                    let gy = wx * dy * wz * tap.scale[1];
                    let gz = wx * wy * dz * tap.scale[2];
                    for f in 0..fpl {
                        let v = grid[node + f];
                        jac[fo + f][0] += gx * v;
                        jac[fo + f][1] += gy * v;
                        jac[fo + f][2] += gz * v;
                    }
                }
            }
        }
    }
}

/// Scatter the loss gradient with respect to the interpolated features
/// (`d_features`, length `feature_dim`) back into the grid parameter
/// gradient accumulator `grad` (full parameter-vector length).
pub fn scatter_feature_grad(
    arch: &SdfArch,
    taps: &[LevelTaps],
    d_features: &[f64],
    grad: &mut [f64],
) {
    let fpl = arch.features_per_level;
    for (l, (&res, tap)) in arch.level_resolutions.iter().zip(taps).enumerate() {
        let level_off = arch.level_offset(l);
        let fo = l * fpl;
        for (az, &wz) in tap.w[2].iter().enumerate() {
            let iz = clamp_node(tap.base[2] + az as isize, res);
            for (ay, &wy) in tap.w[1].iter().enumerate() {
                let iy = clamp_node(tap.base[1] + ay as isize, res);
                let wzy = wz * wy;
                let row = (iz * res + iy) * res;
                for (ax, &wx) in tap.w[0].iter().enumerate() {
                    let ix = clamp_node(tap.base[0] + ax as isize, res);
                    let wght = wzy * wx;
                    let node = level_off + (row + ix) * fpl;
                    for f in 0..fpl {
                        grad[node + f] += wght * d_features[fo + f];
                    }
                }
            }
        }
    }
}
