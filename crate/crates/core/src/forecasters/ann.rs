//! Single-hidden-layer feed-forward network: sigmoid hidden units, linear
//! output.

use serde::{Deserialize, Serialize};

use super::nn::{self, Network};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnParams {
    pub lag: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

/// Parameter layout: `w1[hidden × lag]`, `b1[hidden]`, `w2[hidden]`, `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    lag: usize,
    hidden: usize,
    theta: Vec<f64>,
}

const INIT_SCALE: f64 = 0.5;

impl Mlp {
    pub fn new(lag: usize, hidden: usize, rng: &mut Rng) -> Self {
        let n = hidden * lag + 2 * hidden + 1;
        Mlp { lag, hidden, theta: nn::uniform(rng, n, INIT_SCALE) }
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (h, l) = (self.hidden, self.lag);
        let (w1, rest) = self.theta.split_at(h * l);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        (w1, b1, w2, rest[0])
    }

    fn hidden_activations(&self, window: &[f64]) -> Vec<f64> {
        let (w1, b1, _, _) = self.split();
        (0..self.hidden)
            .map(|j| {
                let row = &w1[j * self.lag..(j + 1) * self.lag];
                nn::sigmoid(b1[j] + row.iter().zip(window).map(|(w, x)| w * x).sum::<f64>())
            })
            .collect()
    }
}

impl Network for Mlp {
    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn predict(&self, window: &[f64]) -> f64 {
        let (_, _, w2, b2) = self.split();
        let a = self.hidden_activations(window);
        b2 + w2.iter().zip(&a).map(|(w, h)| w * h).sum::<f64>()
    }

    fn loss_grad(&self, batch: &[(&[f64], f64)]) -> (f64, Vec<f64>) {
        let (h, l) = (self.hidden, self.lag);
        let (_, _, w2, b2) = self.split();
        let mut grad = vec![0.0; self.theta.len()];
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut loss = 0.0;
        let (o_b1, o_w2, o_b2) = (h * l, h * l + h, h * l + 2 * h);
        for &(window, target) in batch {
            let a = self.hidden_activations(window);
            let out = b2 + w2.iter().zip(&a).map(|(w, h)| w * h).sum::<f64>();
            let err = out - target;
            loss += 0.5 * err * err * scale;
            let d_out = err * scale;
            grad[o_b2] += d_out;
            for j in 0..h {
                grad[o_w2 + j] += d_out * a[j];
                let d_pre = d_out * w2[j] * a[j] * (1.0 - a[j]);
                grad[o_b1 + j] += d_pre;
                for (i, x) in window.iter().enumerate() {
                    grad[j * l + i] += d_pre * x;
                }
            }
        }
        (loss, grad)
    }
}
