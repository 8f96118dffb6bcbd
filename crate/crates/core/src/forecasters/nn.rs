//! Training loop shared by the feed-forward and LSTM forecasters.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::timeseries::LaggedDataset;

/// A scalar regressor over lag windows with a flat parameter vector.
pub trait Network: Clone {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn predict(&self, window: &[f64]) -> f64;
    /// Loss `Σ ½(ŷ − y)² / B` over the batch and its gradient.
    fn loss_grad(&self, batch: &[(&[f64], f64)]) -> (f64, Vec<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = BETA1 * self.m[k] + (1.0 - BETA1) * grad[k];
            self.v[k] = BETA2 * self.v[k] + (1.0 - BETA2) * grad[k] * grad[k];
            params[k] -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + ADAM_EPS);
        }
    }
}

/// In-sample sum of squared errors.
pub fn sse<N: Network>(net: &N, data: &LaggedDataset) -> f64 {
    data.rows.iter().map(|(w, y)| (net.predict(w) - y).powi(2)).sum()
}

/// Mini-batch training. Returns the in-sample SSE after every epoch.
pub fn train<N: Network>(net: &mut N, data: &LaggedDataset, cfg: &TrainConfig, rng: &mut Rng) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..data.rows.len()).collect();
    let batch = cfg.batch_size.max(1);
    let mut adam = Adam::new(net.params().len());
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(batch) {
            let rows: Vec<(&[f64], f64)> = chunk.iter().map(|&i| (data.rows[i].0.as_slice(), data.rows[i].1)).collect();
            let (_, grad) = net.loss_grad(&rows);
            match cfg.optimizer {
                OptimizerKind::Sgd => {
                    for (p, g) in net.params_mut().iter_mut().zip(&grad) {
                        *p -= cfg.learning_rate * g;
                    }
                }
                OptimizerKind::Adam => adam.step(net.params_mut(), &grad, cfg.learning_rate),
            }
        }
        let loss = sse(net, data);
        if !loss.is_finite() || net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged(format!("loss became {loss} in epoch {}", epoch + 1)));
        }
        curve.push(loss);
    }
    Ok(curve)
}

/// Trains from `initial`; on divergence retries once from the same start
/// with half the learning rate.
pub fn train_with_retry<N: Network>(initial: &N, data: &LaggedDataset, cfg: &TrainConfig, rng: &mut Rng) -> Result<(N, Vec<f64>)> {
    let mut net = initial.clone();
    match train(&mut net, data, cfg, rng) {
        Ok(curve) => Ok((net, curve)),
        Err(Error::Diverged(first)) => {
            log::warn!("training diverged ({first}); retrying with halved learning rate");
            let mut net = initial.clone();
            let halved = TrainConfig { learning_rate: cfg.learning_rate / 2.0, ..*cfg };
            let curve = train(&mut net, data, &halved, rng)?;
            Ok((net, curve))
        }
        Err(e) => Err(e),
    }
}

pub(crate) fn uniform(rng: &mut Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
