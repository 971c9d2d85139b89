//! The neural SDF: feature-grid encoding plus a 2-layer MLP head, fit to
//! ground-truth samples with seeded minibatch Adam on an L1 objective.

use nalgebra::{Point3, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use super::encoding::{self, LevelTaps, SdfArch};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::geometry::SdfSampleSet;

/// A fitted neural SDF for one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfNet {
    pub arch: SdfArch,
    pub source_mesh: String,
    pub(crate) params: Vec<f64>,
}

/// Reusable per-query scratch buffers for the hot paths.
#[derive(Debug, Default)]
pub struct Scratch {
    taps: Vec<LevelTaps>,
    features: Vec<f64>,
    head_in: Vec<f64>,
    hidden: Vec<f64>,
    d_pre: Vec<f64>,
    d_in: Vec<f64>,
    jac: Vec<[f64; 3]>,
}

impl Scratch {
    fn prepare(&mut self, arch: &SdfArch) {
        self.features.resize(arch.feature_dim(), 0.0);
        self.head_in.resize(arch.head_input_dim(), 0.0);
        self.hidden.resize(arch.hidden, 0.0);
        self.d_pre.resize(arch.hidden, 0.0);
        self.d_in.resize(arch.head_input_dim(), 0.0);
        self.jac.resize(arch.feature_dim(), [0.0; 3]);
    }
}

impl SdfNet {
    /// Freshly initialized network: tiny uniform grid features, Xavier
    /// head weights, zero biases. Fully determined by `seed`.
    pub fn new_seeded(arch: SdfArch, source_mesh: impl Into<String>, seed: u64) -> Result<SdfNet> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; arch.param_count()];
        for p in params[..arch.grid_param_count()].iter_mut() {
            *p = rng.random_range(-1e-4..1e-4);
        }
        let (w1, b1, w2, b2) = arch.head_offsets();
        let d = arch.head_input_dim();
        let a1 = (6.0 / (d + arch.hidden) as f64).sqrt();
        for p in params[w1..b1].iter_mut() {
            *p = rng.random_range(-a1..a1);
        }
        let a2 = (6.0 / (arch.hidden + 1) as f64).sqrt();
        for p in params[w2..b2].iter_mut() {
            *p = rng.random_range(-a2..a2);
        }
        Ok(SdfNet { arch, source_mesh: source_mesh.into(), params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Same-architecture net with a replaced parameter vector
    /// (length-checked). Lets callers probe the parameter space from
    /// outside, e.g. finite-difference checks against
    /// [`Self::param_grad_sparse`].
    pub fn with_params(&self, params: Vec<f64>) -> Result<SdfNet> {
        SdfNet::from_parts(self.arch.clone(), self.source_mesh.clone(), params)
    }

    pub(crate) fn from_parts(arch: SdfArch, source_mesh: String, params: Vec<f64>) -> Result<SdfNet> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(Error::validation(format!(
                "parameter blob has {} values, architecture expects {}",
                params.len(),
                arch.param_count()
            )));
        }
        Ok(SdfNet { arch, source_mesh, params })
    }

    /// Forward pass with reusable scratch. Returns the predicted SDF.
    pub fn eval_with(&self, p: &Point3<f64>, s: &mut Scratch) -> f64 {
        s.prepare(&self.arch);
        let q = [p.x, p.y, p.z];
        encoding::compute_taps(&self.arch, &q, &mut s.taps);
        encoding::interpolate(&self.arch, &self.params, &s.taps, &mut s.features);
        self.head_forward(&q, s)
    }

    /// Forward pass (allocating convenience wrapper).
    pub fn eval(&self, p: &Point3<f64>) -> f64 {
        let mut s = Scratch::default();
        self.eval_with(p, &mut s)
    }

    /// Value and analytic input gradient ∂f/∂p.
    pub fn eval_grad_with(&self, p: &Point3<f64>, s: &mut Scratch) -> (f64, Vector3<f64>) {
        let z = self.eval_with(p, s);
        // Head backward to its input vector only (no parameter grads).
        let (w1o, _, w2o, _) = self.arch.head_offsets();
        let d = self.arch.head_input_dim();
        let nf = self.arch.feature_dim();
        s.d_in.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.arch.hidden {
            let dh = self.params[w2o + j];
            let dpre = dh * (1.0 - s.hidden[j] * s.hidden[j]);
            let row = &self.params[w1o + j * d..w1o + (j + 1) * d];
            for (di, w) in s.d_in.iter_mut().zip(row) {
                *di += dpre * w;
            }
        }
        encoding::jacobian(&self.arch, &self.params, &s.taps, &mut s.jac);
        let mut g = Vector3::new(s.d_in[nf], s.d_in[nf + 1], s.d_in[nf + 2]);
        for (f, row) in s.jac.iter().enumerate() {
            let c = s.d_in[f];
            g.x += c * row[0];
            g.y += c * row[1];
            g.z += c * row[2];
        }
        (z, g)
    }

    pub fn eval_grad(&self, p: &Point3<f64>) -> (f64, Vector3<f64>) {
        let mut s = Scratch::default();
        self.eval_grad_with(p, &mut s)
    }

    /// Value plus the sparse parameter gradient ∂f/∂θ at one point: the
    /// touched grid nodes and all head parameters, as (index, ∂f/∂θᵢ)
    /// pairs. Parameters not listed have exactly zero gradient.
    pub fn param_grad_sparse(&self, p: &Point3<f64>) -> (f64, Vec<(usize, f64)>) {
        let mut s = Scratch::default();
        let z = self.eval_with(p, &mut s);
        let mut dense = vec![0.0; self.params.len()];
        self.backward_params(1.0, &mut s, &mut dense);
        let grid = self.arch.grid_param_count();
        let mut out: Vec<(usize, f64)> = Vec::new();
        for (i, &g) in dense.iter().enumerate() {
            if g != 0.0 || i >= grid {
                out.push((i, g));
            }
        }
        (z, out)
    }

    /// Head forward from `s.features` (already interpolated); fills
    /// `s.head_in` and `s.hidden`.
    fn head_forward(&self, q: &[f64; 3], s: &mut Scratch) -> f64 {
        let nf = self.arch.feature_dim();
        let d = self.arch.head_input_dim();
        s.head_in[..nf].copy_from_slice(&s.features);
        s.head_in[nf..].copy_from_slice(q);
        let (w1o, b1o, w2o, b2o) = self.arch.head_offsets();
        let mut z = self.params[b2o];
        for j in 0..self.arch.hidden {
            let row = &self.params[w1o + j * d..w1o + (j + 1) * d];
            let mut pre = self.params[b1o + j];
            for (w, v) in row.iter().zip(&s.head_in) {
                pre += w * v;
            }
            let h = pre.tanh();
            s.hidden[j] = h;
            z += self.params[w2o + j] * h;
        }
        z
    }

    /// Accumulate `upstream · ∂f/∂θ` into `grad`, using the activations
    /// left in `s` by the immediately preceding `eval_with` on the same
    /// point.
    pub(crate) fn backward_params(&self, upstream: f64, s: &mut Scratch, grad: &mut [f64]) {
        let (w1o, b1o, w2o, b2o) = self.arch.head_offsets();
        let d = self.arch.head_input_dim();
        let nf = self.arch.feature_dim();
        grad[b2o] += upstream;
        s.d_in.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.arch.hidden {
            let h = s.hidden[j];
            grad[w2o + j] += upstream * h;
            let dpre = upstream * self.params[w2o + j] * (1.0 - h * h);
            grad[b1o + j] += dpre;
            let row_off = w1o + j * d;
            for (i, v) in s.head_in.iter().enumerate() {
                grad[row_off + i] += dpre * v;
            }
            let w_row = &self.params[row_off..row_off + d];
            for (di, w) in s.d_in.iter_mut().zip(w_row) {
                *di += dpre * w;
            }
        }
        encoding::scatter_feature_grad(&self.arch, &s.taps, &s.d_in[..nf], grad);
    }
}

/// Batch-evaluate the network at `points`.
pub fn eval_sdf(net: &SdfNet, points: &[Point3<f64>]) -> Vec<f64> {
    let mut s = Scratch::default();
    points.iter().map(|p| net.eval_with(p, &mut s)).collect()
}

/// Batch-evaluate analytic input gradients at `points`.
pub fn grad_sdf(net: &SdfNet, points: &[Point3<f64>]) -> Vec<Vector3<f64>> {
    let mut s = Scratch::default();
    points.iter().map(|p| net.eval_grad_with(p, &mut s).1).collect()
}

/// Outcome of [`fit_sdf`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Optimizer steps taken.
    pub steps: usize,
    /// Mean L1 training loss over the final epoch.
    pub final_loss: f64,
    /// Mean absolute error on the held-out 10% split (or on the training
    /// set when the sample count is too small to split).
    pub holdout_mae: f64,
}

/// Fit a neural SDF to ground-truth samples.
///
/// Deterministic for fixed inputs, config, and build: initialization,
/// the holdout split, and per-epoch shuffles all derive from
/// `config.rng_seed`. Training is single-threaded. Errors with
/// [`Error::Numerical`] if the loss stops being finite.
pub fn fit_sdf(samples: &SdfSampleSet, config: &TrainConfig) -> Result<(SdfNet, FitReport)> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::validation("fit_sdf needs a non-empty sample set"));
    }
    let arch = SdfArch::default();
    let mut net = SdfNet::new_seeded(arch, samples.source_mesh.clone(), config.rng_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ 0x9e37_79b9_7f4a_7c15);

    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let holdout_len = if n >= 20 { n / 10 } else { 0 };
    let (holdout, train): (Vec<usize>, Vec<usize>) = {
        let (h, t) = order.split_at(holdout_len);
        (h.to_vec(), t.to_vec())
    };

    let mut grad = vec![0.0; net.params.len()];
    let mut adam = Adam::new(net.params.len());
    let mut scratch = Scratch::default();
    let mut train_order = train;
    let mut step = 0usize;
    let mut last_epoch_loss = 0.0;

    for _epoch in 0..config.epochs {
        train_order.shuffle(&mut rng);
        let mut epoch_loss_sum = 0.0;
        let mut epoch_count = 0usize;
        for batch in train_order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let inv = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &ix in batch {
                let p = samples.points[ix];
                let y = samples.sdf_values[ix];
                let z = net.eval_with(&p, &mut scratch);
                let e = z - y;
                batch_loss += e.abs() * inv;
                let up = if e > 0.0 {
                    inv
                } else if e < 0.0 {
                    -inv
                } else {
                    0.0
                };
                net.backward_params(up, &mut scratch, &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(Error::numerical(format!(
                    "SDF fit diverged at step {step}: non-finite loss"
                )));
            }
            adam.step(&mut net.params, &grad, config.lr_at(step));
            step += 1;
            epoch_loss_sum += batch_loss * batch.len() as f64;
            epoch_count += batch.len();
        }
        last_epoch_loss = epoch_loss_sum / epoch_count.max(1) as f64;
    }

    let eval_ix: &[usize] = if holdout.is_empty() { &train_order } else { &holdout };
    let mut mae = 0.0;
    for &ix in eval_ix {
        let z = net.eval_with(&samples.points[ix], &mut scratch);
        mae += (z - samples.sdf_values[ix]).abs();
    }
    mae /= eval_ix.len() as f64;

    Ok((net, FitReport { steps: step, final_loss: last_epoch_loss, holdout_mae: mae }))
}
