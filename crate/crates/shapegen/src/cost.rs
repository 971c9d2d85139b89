//! Closed-form time accounting: generating retargeted episodes versus
//! collecting every demonstration manually.
//!
//! For a category with `n_shape` target shapes and `n_demo` source
//! demonstrations, the pipeline pays once per shape (SDF fit + warp), once
//! for the scan bridge, once per demonstration (teleoperation + keypoint
//! annotation), and once per generated episode:
//!
//! ```text
//! cost_gen  = (t_sdf + t_wrp)·n_shape + (t_scan + t_wrp)
//!           + (t_demo + t_ann)·n_demo + t_gen·n_shape·n_demo
//! cost_man  = t_demo·n_shape·n_demo + t_collect(n_shape)
//! ```
//!
//! where manual collection teleoperates every (shape, demo) pair and
//! additionally spends `t_collect` procuring/preparing the physical object
//! set. Because episode generation is much cheaper than teleoperation, the
//! generated route wins once `n_shape·n_demo` passes a crossover that
//! [`CostConstants::crossover_n_demo`] computes; in the large-data limit
//! the cost ratio tends to `t_gen / t_demo`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-step time constants (seconds) of the cost model.
///
/// Defaults are representative wall-clock figures for a tabletop setup:
/// SDF fitting 5 s, warp training 180 s, scanning a new object 300 s, one
/// teleoperated demonstration 60 s, annotating its keypoints 60 s, and
/// generating one retargeted episode 20 s. Manual object procurement
/// defaults to free (`t_collect_per_object = 0`) since it varies wildly
/// between categories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConstants {
    /// Fitting one shape's SDF network.
    pub t_sdf: f64,
    /// Training one warp network (template→entry or scan bridge).
    pub t_wrp: f64,
    /// Scanning the manipulated object into a mesh.
    pub t_scan: f64,
    /// Teleoperating one demonstration.
    pub t_demo: f64,
    /// Annotating one demonstration's keypoints.
    pub t_ann: f64,
    /// Generating one retargeted episode.
    pub t_gen: f64,
    /// Manual-baseline cost of procuring and preparing one physical
    /// object (`t_collect(n) = t_collect_per_object · n`).
    pub t_collect_per_object: f64,
}

impl Default for CostConstants {
    fn default() -> Self {
        CostConstants {
            t_sdf: 5.0,
            t_wrp: 180.0,
            t_scan: 300.0,
            t_demo: 60.0,
            t_ann: 60.0,
            t_gen: 20.0,
            t_collect_per_object: 0.0,
        }
    }
}

impl CostConstants {
    /// Check that every constant is a finite, non-negative time.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_sdf", self.t_sdf),
            ("t_wrp", self.t_wrp),
            ("t_scan", self.t_scan),
            ("t_demo", self.t_demo),
            ("t_ann", self.t_ann),
            ("t_gen", self.t_gen),
            ("t_collect_per_object", self.t_collect_per_object),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(format!(
                    "cost constant {name} = {v} must be a finite non-negative time"
                )));
            }
        }
        Ok(())
    }

    /// Manual-baseline object-procurement cost for `n_shape` objects.
    pub fn t_collect(&self, n_shape: u64) -> f64 {
        self.t_collect_per_object * n_shape as f64
    }

    /// Total time (seconds) to produce `n_shape · n_demo` episodes by
    /// generation: per-shape fitting, the scan bridge, per-demo
    /// teleoperation and annotation, and per-episode generation.
    pub fn shapegen_cost(&self, n_shape: u64, n_demo: u64) -> f64 {
        let (s, d) = (n_shape as f64, n_demo as f64);
        (self.t_sdf + self.t_wrp) * s
            + (self.t_scan + self.t_wrp)
            + (self.t_demo + self.t_ann) * d
            + self.t_gen * s * d
    }

    /// Total time (seconds) to teleoperate every (shape, demo) pair,
    /// plus procuring the physical object set.
    pub fn manual_cost(&self, n_shape: u64, n_demo: u64) -> f64 {
        self.t_demo * n_shape as f64 * n_demo as f64 + self.t_collect(n_shape)
    }

    /// Large-data limit of `shapegen_cost / manual_cost` (both dominated
    /// by their bilinear term): `t_gen / t_demo`. Non-finite when
    /// `t_demo` is zero.
    pub fn asymptotic_ratio(&self) -> f64 {
        self.t_gen / self.t_demo
    }

    /// Smallest `n_demo` at which generation is strictly cheaper than
    /// manual collection for the given `n_shape`, or `None` if it never
    /// becomes cheaper as `n_demo` grows (e.g. too few shapes to amortize
    /// the per-shape fitting cost).
    pub fn crossover_n_demo(&self, n_shape: u64) -> Option<u64> {
        let margin = |n_demo: u64| {
            self.manual_cost(n_shape, n_demo) - self.shapegen_cost(n_shape, n_demo)
        };
        // The margin is affine in n_demo: margin(d) = a·d + margin(0).
        let a = margin(1) - margin(0);
        if margin(0) > 0.0 {
            return Some(0);
        }
        if a <= 0.0 {
            return None;
        }
        let mut k = ((-margin(0)) / a).floor() as u64 + 1;
        // Settle float rounding near exact boundaries.
        while k > 0 && margin(k - 1) > 0.0 {
            k -= 1;
        }
        while margin(k) <= 0.0 {
            k += 1;
        }
        Some(k)
    }
}
