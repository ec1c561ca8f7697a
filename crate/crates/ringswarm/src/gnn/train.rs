//! Gradient-based training of the assignment network, with a
//! finite-difference gradient check as the independent oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GnnError;

use super::forward::{forward_tape, loss_tape, stage_params};
use super::graph::LabeledGraph;
use super::params::GnnParams;
use super::tape::Tape;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    /// Plain SGD with a fixed learning rate (the reference path).
    Sgd,
    /// Adam with the usual defaults.
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub alpha: f64,
    pub eps: f64,
    pub optimizer: Optimizer,
    /// Present each graph under a fresh random goal relabeling every epoch.
    /// The relabeled graph is the same problem under different goal names,
    /// so this teaches cost-equivariance instead of slot priors.
    pub augment: bool,
    /// Decoupled per-step weight decay (0 disables).
    pub weight_decay: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lr: 1e-3,
            epochs: 40,
            batch: 32,
            seed: 0,
            alpha: 0.5,
            eps: 1e-8,
            optimizer: Optimizer::adam(),
            augment: false,
            weight_decay: 0.0,
        }
    }
}

/// Loss and parameter gradient for one labeled graph.
pub fn graph_loss_and_grad(
    params: &GnnParams,
    lg: &LabeledGraph,
    alpha: f64,
    eps: f64,
) -> (f64, Vec<Vec<f64>>) {
    let mut tape = Tape::new();
    let staged = stage_params(&mut tape, params);
    let rows = forward_tape(&mut tape, &staged, params, &lg.graph);
    let loss = loss_tape(&mut tape, rows, &lg.graph, lg.y_matrix(), alpha, eps);
    let value = tape.value(loss)[0];
    tape.backward(loss);
    (value, staged.grads(&tape))
}

/// Loss only (no backward); the value route used by the gradient check.
pub fn graph_loss(params: &GnnParams, lg: &LabeledGraph, alpha: f64, eps: f64) -> f64 {
    let mut tape = Tape::new();
    let staged = stage_params(&mut tape, params);
    let rows = forward_tape(&mut tape, &staged, params, &lg.graph);
    let loss = loss_tape(&mut tape, rows, &lg.graph, lg.y_matrix(), alpha, eps);
    tape.value(loss)[0]
}

/// Deterministic minibatch training. Returns the per-epoch mean loss curve.
pub fn train(
    params: &mut GnnParams,
    dataset: &[LabeledGraph],
    hyper: &Hyper,
) -> Result<Vec<f64>, GnnError> {
    assert!(!dataset.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let n_tensors = params.tensors().len();
    let sizes: Vec<usize> = params.tensors().iter().map(|(_, _, t)| t.len()).collect();

    let mut m: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
    let mut v: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
    let mut step_count = 0usize;

    let mut curve = Vec::with_capacity(hyper.epochs);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();

    for _epoch in 0..hyper.epochs {
        for i in (1..indices.len()).rev() {
            indices.swap(i, rng.gen_range(0..=i));
        }
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in indices.chunks(hyper.batch).enumerate() {
            let mut grads: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
            let mut batch_loss = 0.0;
            for &gi in batch {
                let sample;
                let lg = if hyper.augment {
                    let mut perm: Vec<usize> = (0..dataset[gi].graph.n_goals).collect();
                    for i in (1..perm.len()).rev() {
                        perm.swap(i, rng.gen_range(0..=i));
                    }
                    let relabeled = super::graph::relabel_goals(&dataset[gi], &perm);
                    sample = super::graph::dihedral_positions(&relabeled, rng.gen_range(0..8));
                    &sample
                } else {
                    &dataset[gi]
                };
                let (loss, g) = graph_loss_and_grad(params, lg, hyper.alpha, hyper.eps);
                if !loss.is_finite() {
                    return Err(GnnError::NonFiniteLoss { batch: batch_idx });
                }
                batch_loss += loss;
                for (acc, gt) in grads.iter_mut().zip(&g) {
                    for (a, b) in acc.iter_mut().zip(gt) {
                        *a += b;
                    }
                }
            }
            epoch_loss += batch_loss;
            let scale = 1.0 / batch.len() as f64;
            step_count += 1;

            let mut tensors = params.tensors_mut();
            if hyper.weight_decay > 0.0 {
                for (_, data) in tensors.iter_mut() {
                    for p in data.iter_mut() {
                        *p -= hyper.lr * hyper.weight_decay * *p;
                    }
                }
            }
            match hyper.optimizer {
                Optimizer::Sgd => {
                    for t in 0..n_tensors {
                        let (_, data) = &mut tensors[t];
                        for (p, g) in data.iter_mut().zip(&grads[t]) {
                            *p -= hyper.lr * g * scale;
                        }
                    }
                }
                Optimizer::Adam { beta1, beta2, eps } => {
                    let bc1 = 1.0 - beta1.powi(step_count as i32);
                    let bc2 = 1.0 - beta2.powi(step_count as i32);
                    for t in 0..n_tensors {
                        let (_, data) = &mut tensors[t];
                        for (idx, (p, g)) in data.iter_mut().zip(&grads[t]).enumerate() {
                            let g = g * scale;
                            m[t][idx] = beta1 * m[t][idx] + (1.0 - beta1) * g;
                            v[t][idx] = beta2 * v[t][idx] + (1.0 - beta2) * g * g;
                            let mhat = m[t][idx] / bc1;
                            let vhat = v[t][idx] / bc2;
                            *p -= hyper.lr * mhat / (vhat.sqrt() + eps);
                        }
                    }
                }
            }
        }
        curve.push(epoch_loss / dataset.len() as f64);
    }
    Ok(curve)
}

/// Per-tensor relative error between analytic gradients and central finite
/// differences at the given step: ||analytic - fd|| / max(||analytic||,
/// ||fd||) over each parameter group. The norm-ratio form keeps individual
/// near-zero entries, whose central differences are dominated by f64
/// cancellation, from drowning out the comparison.
pub fn gradient_check(
    params: &GnnParams,
    lg: &LabeledGraph,
    alpha: f64,
    eps: f64,
    step: f64,
) -> Vec<(String, f64)> {
    let (_, analytic) = graph_loss_and_grad(params, lg, alpha, eps);
    let names: Vec<String> = params.tensors().iter().map(|(n, _, _)| n.clone()).collect();
    let mut out = Vec::with_capacity(names.len());
    for (t, name) in names.iter().enumerate() {
        let len = analytic[t].len();
        let mut diff_sq = 0.0f64;
        let mut a_sq = 0.0f64;
        let mut fd_sq = 0.0f64;
        for idx in 0..len {
            let mut plus = params.clone();
            plus.tensors_mut()[t].1[idx] += step;
            let mut minus = params.clone();
            minus.tensors_mut()[t].1[idx] -= step;
            let fd = (graph_loss(&plus, lg, alpha, eps) - graph_loss(&minus, lg, alpha, eps))
                / (2.0 * step);
            let a = analytic[t][idx];
            diff_sq += (a - fd) * (a - fd);
            a_sq += a * a;
            fd_sq += fd * fd;
        }
        let rel = diff_sq.sqrt() / a_sq.sqrt().max(fd_sq.sqrt()).max(1e-12);
        out.push((name.clone(), rel));
    }
    out
}
