//! Neural implicit shapes and warps.
//!
//! Two small fixed architectures, both in `f64` with hand-written
//! backpropagation (this crate deliberately has no general autodiff):
//!
//! * [`SdfNet`] — a multiresolution dense feature grid (4 levels, 2
//!   features per level, finest 64³ over the `[-0.05, 1.05]³` shape cube)
//!   interpolated with cubic B-splines, feeding a 2-layer MLP head together
//!   with the raw query point. Cubic interpolation makes the field C²
//!   across cell boundaries, so analytic gradients agree with central
//!   finite differences everywhere, not just in cell interiors.
//! * [`WarpNet`] — a chain of 4 residual fully-connected stages of width
//!   128 mapping a 3-D point to a 3-D point. With all parameters zero the
//!   warp is exactly the identity; output layers are zero-initialized so
//!   training starts from the identity.
//!
//! Training ([`fit_sdf`], [`train_warp`]) uses seeded minibatch Adam with
//! step learning-rate decay and is single-threaded and bit-deterministic:
//! identical inputs, configuration, and build produce identical
//! checkpoints. Checkpoints are `.sgnet` files (JSON header plus a
//! little-endian `f64` parameter blob, see [`checkpoint`]).
//!
//! The warp loss combines an SDF consistency term |SDF_src(x) −
//! f_tgt(W(x))|, a pointwise Huber penalty on displacement ‖W(x) − x‖, and
//! a pairwise relative-displacement penalty max(‖Δ₁ − Δ₂‖/‖x₁ − x₂‖ − ε, 0)
//! over disjoint in-batch pairs; see [`warpnet::evaluate_warp_losses`].

pub mod adam;
pub mod checkpoint;
pub mod encoding;
pub mod sdfnet;
pub mod warpnet;

pub use checkpoint::{load_net, save_net, Checkpoint};
pub use encoding::SdfArch;
pub use sdfnet::{eval_sdf, fit_sdf, grad_sdf, FitReport, SdfNet};
pub use warpnet::{
    evaluate_warp_losses, forward_warp, train_warp, LossBreakdown, WarpArch, WarpNet, WarpReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters shared by SDF fitting and warp training.
///
/// The defaults are the reference configuration: loss weights
/// `alpha_pw = 1e-2`, `alpha_pp = 1.0`, pairwise margin `ε = 0.5`, Huber
/// delta `0.25`, batch size 8196, 2 epochs, Adam with step decay.
/// Tests and small fixtures typically override batch size and epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the pointwise displacement penalty (warp training only).
    pub alpha_pw: f64,
    /// Weight of the pairwise relative-displacement penalty (warp only).
    pub alpha_pp: f64,
    /// Slack margin ε of the pairwise penalty.
    pub pairwise_epsilon: f64,
    /// Huber transition point for the pointwise penalty.
    pub huber_delta: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Initial Adam learning rate.
    pub learning_rate: f64,
    /// Multiplicative decay factor applied every `lr_decay_every` steps.
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha_pw: 1e-2,
            alpha_pp: 1.0,
            pairwise_epsilon: 0.5,
            huber_delta: 0.25,
            batch_size: 8196,
            epochs: 2,
            learning_rate: 1e-2,
            lr_decay_factor: 0.5,
            lr_decay_every: 500,
            rng_seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_pw < 0.0 || self.alpha_pp < 0.0 {
            return Err(Error::validation("loss weights must be non-negative"));
        }
        if self.pairwise_epsilon < 0.0 {
            return Err(Error::validation("pairwise_epsilon must be non-negative"));
        }
        if !(self.huber_delta > 0.0) {
            return Err(Error::validation("huber_delta must be positive"));
        }
        if self.batch_size < 2 {
            return Err(Error::validation("batch_size must be at least 2"));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::validation("learning_rate must be positive"));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return Err(Error::validation("lr_decay_factor must be in (0, 1]"));
        }
        if self.lr_decay_every == 0 {
            return Err(Error::validation("lr_decay_every must be at least 1"));
        }
        Ok(())
    }

    /// Learning rate at optimizer step `t` (0-based) under step decay.
    pub fn lr_at(&self, step: usize) -> f64 {
        self.learning_rate * self.lr_decay_factor.powi((step / self.lr_decay_every) as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_matches_reference_values() {
        let c = TrainConfig::default();
        assert_eq!(c.alpha_pw, 1e-2);
        assert_eq!(c.alpha_pp, 1.0);
        assert_eq!(c.pairwise_epsilon, 0.5);
        assert_eq!(c.huber_delta, 0.25);
        assert_eq!(c.batch_size, 8196);
        assert_eq!(c.epochs, 2);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn validation_rejects_bad_values() {
        for mutate in [
            (|c: &mut TrainConfig| c.alpha_pw = -1.0) as fn(&mut TrainConfig),
            |c| c.batch_size = 1,
            |c| c.epochs = 0,
            |c| c.learning_rate = 0.0,
            |c| c.lr_decay_factor = 0.0,
            |c| c.lr_decay_factor = 1.5,
            |c| c.lr_decay_every = 0,
            |c| c.huber_delta = 0.0,
        ] {
            let mut c = TrainConfig::default();
            mutate(&mut c);
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn step_decay_schedule() {
        let c = TrainConfig { learning_rate: 1.0, lr_decay_factor: 0.5, lr_decay_every: 10, ..Default::default() };
        assert_eq!(c.lr_at(0), 1.0);
        assert_eq!(c.lr_at(9), 1.0);
        assert_eq!(c.lr_at(10), 0.5);
        assert_eq!(c.lr_at(25), 0.25);
    }
}
