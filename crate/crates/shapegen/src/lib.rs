//! SDF-supervised neural shape warping and demonstration retargeting.
//!
//! This crate implements a pipeline for multiplying robot demonstration data
//! across object shape variations:
//!
//! 1. **Geometry** ([`geometry`]): triangle meshes, exact signed distance
//!    queries (closest-point + generalized winding number), and dense SDF
//!    sample grids used as training supervision.
//! 2. **Neural fields** ([`neural`]): a multiresolution feature-grid SDF
//!    network fit per shape, and a residual fully-connected warp network
//!    trained to carry points from a source shape onto a target shape under
//!    SDF supervision with pointwise and pairwise regularizers.
//! 3. **Shape libraries** ([`library`]): a template shape acts as a hub;
//!    each entry stores its mesh, its SDF network, and a warp from the
//!    template. A newly scanned shape is "plugged" by training one bridge
//!    warp to the template, after which every entry is reachable through
//!    composition — adding a shape stays O(1) in library size.
//! 4. **Annotations** ([`annotation`]): a small JSON schema marking gripper
//!    and functional keypoints on the scanned object at sparse timestamps.
//! 5. **Alignment** ([`alignment`]): function-aware pose alignment that
//!    turns a tracked source-object pose track plus warped keypoints into a
//!    pose track for a substituted shape, corrects the end-effector actions,
//!    and emits a retargeting plan.
//! 6. **Observation generation** ([`obsgen`]): depth-image back-projection,
//!    arm extraction, point-cloud compositing of background / arm /
//!    substituted mesh, and deterministic downsampling to fixed-size
//!    observations written as a generated episode.
//! 7. **Cost model** ([`cost`]): closed-form scan-vs-demonstrate time
//!    accounting used to compare this pipeline against manual collection.
//!
//! All stochastic stages are seeded and single-run deterministic: identical
//! inputs, seeds, and build produce bit-identical checkpoints and
//! observations. Data-parallel loops (grid sampling, per-frame generation)
//! partition work by index and never reduce across threads in
//! iteration-order-dependent ways.

pub mod alignment;
pub mod annotation;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod library;
pub mod neural;
pub mod obsgen;
pub mod se3;
pub mod synth;

#[cfg(test)]
pub(crate) mod testkit;

pub use error::{Error, Result};
pub use se3::Se3;
