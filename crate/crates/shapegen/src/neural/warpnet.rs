//! The residual warp network and its SDF-supervised training loop.

use nalgebra::{Point3, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::sdfnet::{Scratch as SdfScratch, SdfNet};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::geometry::SdfSampleSet;

/// Architecture of [`WarpNet`]: `stages` residual blocks of width
/// `hidden`. Each block computes `x ← x + B·tanh(A·x + a) + c`. Parameter
/// layout per stage: `A` (row-major `hidden × 3`), `a`, `B` (row-major
/// `3 × hidden`), `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpArch {
    pub stages: usize,
    pub hidden: usize,
}

impl Default for WarpArch {
    fn default() -> Self {
        WarpArch { stages: 4, hidden: 128 }
    }
}

impl WarpArch {
    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 || self.hidden == 0 {
            return Err(Error::validation("warp architecture needs stages ≥ 1 and hidden ≥ 1"));
        }
        Ok(())
    }

    pub fn stage_param_count(&self) -> usize {
        self.hidden * 3 + self.hidden + 3 * self.hidden + 3
    }

    pub fn param_count(&self) -> usize {
        self.stages * self.stage_param_count()
    }

    /// Offsets of stage `k`'s blocks: (A, a, B, c).
    pub fn stage_offsets(&self, k: usize) -> (usize, usize, usize, usize) {
        let base = k * self.stage_param_count();
        let a_mat = base;
        let a_bias = a_mat + self.hidden * 3;
        let b_mat = a_bias + self.hidden;
        let c_bias = b_mat + 3 * self.hidden;
        (a_mat, a_bias, b_mat, c_bias)
    }
}

/// A spatial warp from a source shape's frame onto a target shape's frame
/// (both unit-cube normalized). With all parameters zero the warp is
/// exactly the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpNet {
    pub arch: WarpArch,
    pub source_mesh: String,
    pub target_mesh: String,
    pub(crate) params: Vec<f64>,
}

/// Reusable buffers for warp forward/backward passes.
#[derive(Debug, Default)]
pub struct WarpScratch {
    /// Stage inputs x₀ … x_K (K+1 entries after a forward pass).
    xs: Vec<[f64; 3]>,
    /// Hidden activations, `stages × hidden`.
    hs: Vec<f64>,
    dpre: Vec<f64>,
}

impl WarpNet {
    /// Exact-identity warp (all parameters zero).
    pub fn identity(arch: WarpArch, source_mesh: impl Into<String>, target_mesh: impl Into<String>) -> Result<WarpNet> {
        arch.validate()?;
        let params = vec![0.0; arch.param_count()];
        Ok(WarpNet { arch, source_mesh: source_mesh.into(), target_mesh: target_mesh.into(), params })
    }

    /// Training initialization: random first-layer weights for gradient
    /// flow, zero output layers — so the initial warp is still exactly the
    /// identity.
    pub fn new_seeded(
        arch: WarpArch,
        source_mesh: impl Into<String>,
        target_mesh: impl Into<String>,
        seed: u64,
    ) -> Result<WarpNet> {
        let mut net = WarpNet::identity(arch, source_mesh, target_mesh)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..net.arch.stages {
            let (a_mat, a_bias, _, _) = net.arch.stage_offsets(k);
            for p in net.params[a_mat..a_bias].iter_mut() {
                *p = rng.random_range(-0.5..0.5);
            }
        }
        Ok(net)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn from_parts(
        arch: WarpArch,
        source_mesh: String,
        target_mesh: String,
        params: Vec<f64>,
    ) -> Result<WarpNet> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(Error::validation(format!(
                "parameter blob has {} values, architecture expects {}",
                params.len(),
                arch.param_count()
            )));
        }
        Ok(WarpNet { arch, source_mesh, target_mesh, params })
    }

    /// Pure translation by `t`: zero weights, stage-0 output bias `t`.
    /// Useful as an exactly-analyzable warp in tests.
    pub fn pure_translation(
        arch: WarpArch,
        t: Vector3<f64>,
        source_mesh: impl Into<String>,
        target_mesh: impl Into<String>,
    ) -> Result<WarpNet> {
        let mut net = WarpNet::identity(arch, source_mesh, target_mesh)?;
        let (_, _, _, c) = net.arch.stage_offsets(0);
        net.params[c] = t.x;
        net.params[c + 1] = t.y;
        net.params[c + 2] = t.z;
        Ok(net)
    }

    /// Forward pass with reusable scratch.
    pub fn warp_with(&self, p: &Point3<f64>, s: &mut WarpScratch) -> Point3<f64> {
        let stages = self.arch.stages;
        let hidden = self.arch.hidden;
        s.xs.resize(stages + 1, [0.0; 3]);
        s.hs.resize(stages * hidden, 0.0);
        s.xs[0] = [p.x, p.y, p.z];
        for k in 0..stages {
            let (a_mat, a_bias, b_mat, c_bias) = self.arch.stage_offsets(k);
            let x = s.xs[k];
            let mut delta = [
                self.params[c_bias],
                self.params[c_bias + 1],
                self.params[c_bias + 2],
            ];
            for j in 0..hidden {
                let row = a_mat + j * 3;
                let pre = self.params[a_bias + j]
                    + self.params[row] * x[0]
                    + self.params[row + 1] * x[1]
                    + self.params[row + 2] * x[2];
                let h = pre.tanh();
                s.hs[k * hidden + j] = h;
                delta[0] += self.params[b_mat + j] * h;
                delta[1] += self.params[b_mat + hidden + j] * h;
                delta[2] += self.params[b_mat + 2 * hidden + j] * h;
            }
            s.xs[k + 1] = [x[0] + delta[0], x[1] + delta[1], x[2] + delta[2]];
        }
        let y = s.xs[stages];
        Point3::new(y[0], y[1], y[2])
    }

    /// Forward pass (allocating convenience wrapper).
    pub fn warp_point(&self, p: &Point3<f64>) -> Point3<f64> {
        let mut s = WarpScratch::default();
        self.warp_with(p, &mut s)
    }

    /// Accumulate `∂L/∂θ` into `grad` given `∂L/∂y` (`upstream`), using
    /// activations left by the immediately preceding [`Self::warp_with`]
    /// on the same point. Returns `∂L/∂x` (gradient at the input point).
    pub(crate) fn backward_params(
        &self,
        upstream: &Vector3<f64>,
        s: &mut WarpScratch,
        grad: &mut [f64],
    ) -> Vector3<f64> {
        let stages = self.arch.stages;
        let hidden = self.arch.hidden;
        s.dpre.resize(hidden, 0.0);
        let mut g = [upstream.x, upstream.y, upstream.z];
        for k in (0..stages).rev() {
            let (a_mat, a_bias, b_mat, c_bias) = self.arch.stage_offsets(k);
            let x = s.xs[k];
            // dL/dΔ = g (Δ feeds the residual add directly).
            grad[c_bias] += g[0];
            grad[c_bias + 1] += g[1];
            grad[c_bias + 2] += g[2];
            for j in 0..hidden {
                let h = s.hs[k * hidden + j];
                grad[b_mat + j] += g[0] * h;
                grad[b_mat + hidden + j] += g[1] * h;
                grad[b_mat + 2 * hidden + j] += g[2] * h;
                let dh = self.params[b_mat + j] * g[0]
                    + self.params[b_mat + hidden + j] * g[1]
                    + self.params[b_mat + 2 * hidden + j] * g[2];
                s.dpre[j] = dh * (1.0 - h * h);
            }
            // dL/dx_k = g + Aᵀ dpre; dA += dpre xᵀ; da += dpre.
            let mut gx = g;
            for j in 0..hidden {
                let dp = s.dpre[j];
                let row = a_mat + j * 3;
                grad[a_bias + j] += dp;
                grad[row] += dp * x[0];
                grad[row + 1] += dp * x[1];
                grad[row + 2] += dp * x[2];
                gx[0] += self.params[row] * dp;
                gx[1] += self.params[row + 1] * dp;
                gx[2] += self.params[row + 2] * dp;
            }
            g = gx;
        }
        Vector3::new(g[0], g[1], g[2])
    }
}

/// Batch-apply a warp.
pub fn forward_warp(net: &WarpNet, points: &[Point3<f64>]) -> Vec<Point3<f64>> {
    let mut s = WarpScratch::default();
    points.iter().map(|p| net.warp_with(p, &mut s)).collect()
}

/// The three warp-training loss components and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// SDF consistency: mean |SDF_src(x) − f_tgt(W(x))|.
    pub l_sdf: f64,
    /// Pointwise: mean Huber(‖W(x) − x‖).
    pub l_pw: f64,
    /// Pairwise: mean max(‖Δ₁ − Δ₂‖ / ‖x₁ − x₂‖ − ε, 0) over disjoint
    /// consecutive pairs.
    pub l_pp: f64,
    /// `l_sdf + alpha_pw·l_pw + alpha_pp·l_pp`.
    pub total: f64,
}

#[inline]
fn huber(r: f64, delta: f64) -> f64 {
    if r <= delta {
        0.5 * r * r
    } else {
        delta * (r - 0.5 * delta)
    }
}

#[inline]
fn huber_deriv(r: f64, delta: f64) -> f64 {
    if r <= delta {
        r
    } else {
        delta
    }
}

/// Evaluate the warp losses on `points` (with ground-truth source SDF
/// values) in the given order. Pairs for the pairwise term are the
/// consecutive disjoint index pairs (0,1), (2,3), …; pairs with coincident
/// inputs are skipped. No training happens here.
pub fn evaluate_warp_losses(
    net: &WarpNet,
    points: &[Point3<f64>],
    sdf_values: &[f64],
    target: &SdfNet,
    config: &TrainConfig,
) -> Result<LossBreakdown> {
    if points.len() != sdf_values.len() || points.is_empty() {
        return Err(Error::validation(
            "evaluate_warp_losses needs equal-length non-empty points and sdf_values",
        ));
    }
    let mut ws = WarpScratch::default();
    let mut ss = SdfScratch::default();
    let n = points.len() as f64;
    let mut l_sdf = 0.0;
    let mut l_pw = 0.0;
    let warped: Vec<Point3<f64>> = points.iter().map(|p| net.warp_with(p, &mut ws)).collect();
    for ((p, y), &s) in points.iter().zip(&warped).zip(sdf_values) {
        let f = target.eval_with(y, &mut ss);
        l_sdf += (s - f).abs();
        l_pw += huber((y - p).norm(), config.huber_delta);
    }
    l_sdf /= n;
    l_pw /= n;
    let mut l_pp = 0.0;
    let mut pairs = 0usize;
    for k in 0..points.len() / 2 {
        let (i, j) = (2 * k, 2 * k + 1);
        let dist = (points[i] - points[j]).norm();
        if dist == 0.0 {
            continue;
        }
        let d1 = warped[i] - points[i];
        let d2 = warped[j] - points[j];
        let rel = (d1 - d2).norm() / dist;
        l_pp += (rel - config.pairwise_epsilon).max(0.0);
        pairs += 1;
    }
    if pairs > 0 {
        l_pp /= pairs as f64;
    }
    let total = l_sdf + config.alpha_pw * l_pw + config.alpha_pp * l_pp;
    Ok(LossBreakdown { l_sdf, l_pw, l_pp, total })
}

/// Outcome of [`train_warp`]: final-epoch mean losses.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpReport {
    pub steps: usize,
    pub losses: LossBreakdown,
}

/// Train a warp carrying the source shape's narrow-band samples onto the
/// frozen target SDF network.
///
/// The loss is `L_sdf + alpha_pw·L_pw + alpha_pp·L_pp` (see
/// [`LossBreakdown`]); gradients flow through the warp parameters only —
/// the target network is read-only. Deterministic for fixed inputs,
/// config, and build; errors with [`Error::Numerical`] on divergence.
pub fn train_warp(
    source_samples: &SdfSampleSet,
    target: &SdfNet,
    config: &TrainConfig,
) -> Result<(WarpNet, WarpReport)> {
    config.validate()?;
    if source_samples.is_empty() {
        return Err(Error::validation("train_warp needs a non-empty source sample set"));
    }
    let arch = WarpArch::default();
    let mut net = WarpNet::new_seeded(
        arch,
        source_samples.source_mesh.clone(),
        target.source_mesh.clone(),
        config.rng_seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ 0xc2b2_ae3d_27d4_eb4f);

    let n = source_samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; net.params.len()];
    let mut adam = Adam::new(net.params.len());
    let mut ws = WarpScratch::default();
    let mut ss = SdfScratch::default();
    let mut step = 0usize;
    let mut last = LossBreakdown { l_sdf: 0.0, l_pw: 0.0, l_pp: 0.0, total: 0.0 };

    // Per-batch caches.
    let mut warped: Vec<Point3<f64>> = Vec::new();
    let mut dy: Vec<Vector3<f64>> = Vec::new();

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut ep_sdf = 0.0;
        let mut ep_pw = 0.0;
        let mut ep_pp = 0.0;
        let mut ep_pairs = 0usize;
        let mut ep_count = 0usize;
        for batch in order.chunks(config.batch_size) {
            let bn = batch.len();
            let inv = 1.0 / bn as f64;
            grad.iter_mut().for_each(|g| *g = 0.0);
            warped.clear();
            dy.clear();
            dy.resize(bn, Vector3::zeros());

            let mut batch_sdf = 0.0;
            let mut batch_pw = 0.0;
            // Forward + per-point loss terms.
            for (bi, &ix) in batch.iter().enumerate() {
                let x = source_samples.points[ix];
                let y = net.warp_with(&x, &mut ws);
                warped.push(y);
                let (f, gf) = target.eval_grad_with(&y, &mut ss);
                let e = f - source_samples.sdf_values[ix];
                batch_sdf += e.abs() * inv;
                let sign = if e > 0.0 { 1.0 } else if e < 0.0 { -1.0 } else { 0.0 };
                dy[bi] += gf * (sign * inv);

                let delta = y - x;
                let r = delta.norm();
                batch_pw += huber(r, config.huber_delta) * inv;
                if r > 0.0 {
                    dy[bi] += delta * (config.alpha_pw * inv * huber_deriv(r, config.huber_delta) / r);
                }
            }
            // Pairwise term over consecutive disjoint pairs of the batch.
            let mut pair_terms: Vec<(usize, usize, Vector3<f64>)> = Vec::new();
            let mut batch_pp = 0.0;
            let mut pairs = 0usize;
            for k in 0..bn / 2 {
                let (i, j) = (2 * k, 2 * k + 1);
                let xi = source_samples.points[batch[i]];
                let xj = source_samples.points[batch[j]];
                let dist = (xi - xj).norm();
                if dist == 0.0 {
                    continue;
                }
                let d1 = warped[i] - xi;
                let d2 = warped[j] - xj;
                let dd = d1 - d2;
                let ddn = dd.norm();
                let rel = ddn / dist;
                if rel > config.pairwise_epsilon {
                    batch_pp += rel - config.pairwise_epsilon;
                    if ddn > 0.0 {
                        pair_terms.push((i, j, dd / (ddn * dist)));
                    }
                }
                pairs += 1;
            }
            if pairs > 0 {
                batch_pp /= pairs as f64;
                let w = config.alpha_pp / pairs as f64;
                for (i, j, g) in pair_terms {
                    dy[i] += g * w;
                    dy[j] -= g * w;
                }
            }

            let batch_total =
                batch_sdf + config.alpha_pw * batch_pw + config.alpha_pp * batch_pp;
            if !batch_total.is_finite() {
                return Err(Error::numerical(format!(
                    "warp training diverged at step {step}: non-finite loss"
                )));
            }

            // Backward: recompute activations per sample, then accumulate.
            for (bi, &ix) in batch.iter().enumerate() {
                let x = source_samples.points[ix];
                let _ = net.warp_with(&x, &mut ws);
                net.backward_params(&dy[bi], &mut ws, &mut grad);
            }
            adam.step(&mut net.params, &grad, config.lr_at(step));
            step += 1;
            ep_sdf += batch_sdf * bn as f64;
            ep_pw += batch_pw * bn as f64;
            ep_pp += batch_pp * pairs.max(1) as f64;
            ep_pairs += pairs.max(1);
            ep_count += bn;
        }
        let c = ep_count.max(1) as f64;
        last = LossBreakdown {
            l_sdf: ep_sdf / c,
            l_pw: ep_pw / c,
            l_pp: ep_pp / ep_pairs.max(1) as f64,
            total: 0.0,
        };
        last.total = last.l_sdf + config.alpha_pw * last.l_pw + config.alpha_pp * last.l_pp;
    }

    Ok((net, WarpReport { steps: step, losses: last }))
}
