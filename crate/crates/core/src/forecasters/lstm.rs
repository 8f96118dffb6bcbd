//! One LSTM layer with a linear readout of the last hidden state.
//!
//! ```text
//! z_t = W x_t + U h_{t−1} + b          (gate blocks i, f, g, o)
//! i, f, o = σ(z_i), σ(z_f), σ(z_o);  g = tanh(z_g)
//! c_t = f ⊙ c_{t−1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ŷ   = vᵀ h_T + c
//! ```
//!
//! Each lag window is one sequence; gradients come from backpropagation
//! through the whole window.

use serde::{Deserialize, Serialize};

use super::nn::{self, Network, OptimizerKind};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub lag: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
}

/// Gate indices inside the 4H pre-activation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

/// Parameter layout: `w[4H]`, `u[4H × H]`, `b[4H]`, `v[H]`, `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmNet {
    hidden: usize,
    theta: Vec<f64>,
}

struct Step {
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
}

impl LstmNet {
    pub fn new(hidden: usize, rng: &mut Rng) -> Self {
        let n = 4 * hidden + 4 * hidden * hidden + 4 * hidden + hidden + 1;
        let scale = 1.0 / (hidden as f64).sqrt();
        let mut net = LstmNet { hidden, theta: nn::uniform(rng, n, scale) };
        // forget-gate bias starts at one so early training keeps memory
        let hsz = hidden;
        let ob = net.off_b();
        for k in 0..hsz {
            net.theta[ob + Gate::Forget as usize * hsz + k] = 1.0;
        }
        net
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn off_u(&self) -> usize {
        4 * self.hidden
    }
    fn off_b(&self) -> usize {
        self.off_u() + 4 * self.hidden * self.hidden
    }
    fn off_v(&self) -> usize {
        self.off_b() + 4 * self.hidden
    }
    fn off_c(&self) -> usize {
        self.off_v() + self.hidden
    }

    /// Sets the bias of every unit of one gate.
    pub fn set_gate_bias(&mut self, gate: Gate, value: f64) {
        let g = gate as usize;
        let (h, ob) = (self.hidden, self.off_b());
        self.theta[ob + g * h..ob + (g + 1) * h].iter_mut().for_each(|b| *b = value);
    }

    /// Zeroes the input and recurrent weights of one gate.
    pub fn clear_gate_weights(&mut self, gate: Gate) {
        let g = gate as usize;
        let (h, ou) = (self.hidden, self.off_u());
        self.theta[g * h..(g + 1) * h].iter_mut().for_each(|w| *w = 0.0);
        self.theta[ou + g * h * h..ou + (g + 1) * h * h].iter_mut().for_each(|w| *w = 0.0);
    }

    fn forward(&self, window: &[f64], h0: &[f64], c0: &[f64]) -> Vec<Step> {
        let hs = self.hidden;
        let (ou, ob) = (self.off_u(), self.off_b());
        let w = &self.theta[..4 * hs];
        let u = &self.theta[ou..ob];
        let b = &self.theta[ob..ob + 4 * hs];
        let mut h_prev = h0.to_vec();
        let mut c_prev = c0.to_vec();
        let mut steps = Vec::with_capacity(window.len());
        for &x in window {
            let z: Vec<f64> = (0..4 * hs)
                .map(|r| w[r] * x + b[r] + u[r * hs..(r + 1) * hs].iter().zip(&h_prev).map(|(a, h)| a * h).sum::<f64>())
                .collect();
            let block = |g: Gate| &z[g as usize * hs..(g as usize + 1) * hs];
            let i: Vec<f64> = block(Gate::Input).iter().map(|&v| nn::sigmoid(v)).collect();
            let f: Vec<f64> = block(Gate::Forget).iter().map(|&v| nn::sigmoid(v)).collect();
            let g: Vec<f64> = block(Gate::Cell).iter().map(|v| v.tanh()).collect();
            let o: Vec<f64> = block(Gate::Output).iter().map(|&v| nn::sigmoid(v)).collect();
            let c: Vec<f64> = (0..hs).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
            let h: Vec<f64> = (0..hs).map(|k| o[k] * c[k].tanh()).collect();
            h_prev = h.clone();
            c_prev = c.clone();
            steps.push(Step { i, f, g, o, c, h });
        }
        steps
    }

    /// Cell states after each step when starting from `(h0, c0)`.
    pub fn cell_states(&self, window: &[f64], h0: &[f64], c0: &[f64]) -> Vec<Vec<f64>> {
        self.forward(window, h0, c0).into_iter().map(|s| s.c).collect()
    }

    fn readout(&self, h: &[f64]) -> f64 {
        let (ov, oc) = (self.off_v(), self.off_c());
        self.theta[oc] + self.theta[ov..oc].iter().zip(h).map(|(v, x)| v * x).sum::<f64>()
    }
}

impl Network for LstmNet {
    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn predict(&self, window: &[f64]) -> f64 {
        let zeros = vec![0.0; self.hidden];
        let steps = self.forward(window, &zeros, &zeros);
        match steps.last() {
            Some(s) => self.readout(&s.h),
            None => self.readout(&zeros),
        }
    }

    fn loss_grad(&self, batch: &[(&[f64], f64)]) -> (f64, Vec<f64>) {
        let hs = self.hidden;
        let (ou, ob, ov, oc) = (self.off_u(), self.off_b(), self.off_v(), self.off_c());
        let u = &self.theta[ou..ob];
        let v = &self.theta[ov..oc];
        let zeros = vec![0.0; hs];
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut grad = vec![0.0; self.theta.len()];
        let mut loss = 0.0;

        for &(window, target) in batch {
            let steps = self.forward(window, &zeros, &zeros);
            let h_last = steps.last().map_or(&zeros, |s| &s.h);
            let err = self.readout(h_last) - target;
            loss += 0.5 * err * err * scale;
            let d_out = err * scale;
            grad[oc] += d_out;
            for k in 0..hs {
                grad[ov + k] += d_out * h_last[k];
            }

            let mut dh: Vec<f64> = v.iter().map(|vk| d_out * vk).collect();
            let mut dc_next = vec![0.0; hs];
            let mut dz = vec![0.0; 4 * hs];
            for t in (0..steps.len()).rev() {
                let s = &steps[t];
                let c_prev = if t > 0 { &steps[t - 1].c } else { &zeros };
                let h_prev = if t > 0 { &steps[t - 1].h } else { &zeros };
                for k in 0..hs {
                    let tc = s.c[k].tanh();
                    let d_o = dh[k] * tc;
                    let dc = dh[k] * s.o[k] * (1.0 - tc * tc) + dc_next[k];
                    let d_i = dc * s.g[k];
                    let d_g = dc * s.i[k];
                    let d_f = dc * c_prev[k];
                    dc_next[k] = dc * s.f[k];
                    dz[Gate::Input as usize * hs + k] = d_i * s.i[k] * (1.0 - s.i[k]);
                    dz[Gate::Forget as usize * hs + k] = d_f * s.f[k] * (1.0 - s.f[k]);
                    dz[Gate::Cell as usize * hs + k] = d_g * (1.0 - s.g[k] * s.g[k]);
                    dz[Gate::Output as usize * hs + k] = d_o * s.o[k] * (1.0 - s.o[k]);
                }
                let x = window[t];
                let mut dh_prev = vec![0.0; hs];
                for r in 0..4 * hs {
                    let d = dz[r];
                    grad[r] += d * x;
                    grad[ob + r] += d;
                    let urow = &u[r * hs..(r + 1) * hs];
                    for k in 0..hs {
                        grad[ou + r * hs + k] += d * h_prev[k];
                        dh_prev[k] += urow[k] * d;
                    }
                }
                dh = dh_prev;
            }
        }
        (loss, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(5);
        let net = LstmNet::new(2, &mut rng);
        let w1 = [0.2, 0.7, 0.4];
        let w2 = [0.9, 0.1, 0.5];
        let batch: Vec<(&[f64], f64)> = vec![(&w1, 0.6), (&w2, 0.3)];
        let (_, analytic) = net.loss_grad(&batch);
        let h = 1e-5;
        for k in 0..net.params().len() {
            let mut up = net.clone();
            up.params_mut()[k] += h;
            let mut down = net.clone();
            down.params_mut()[k] -= h;
            let fd = (up.loss_grad(&batch).0 - down.loss_grad(&batch).0) / (2.0 * h);
            let denom = fd.abs().max(analytic[k].abs()).max(1e-8);
            assert!((fd - analytic[k]).abs() / denom < 1e-4, "param {k}: {fd} vs {}", analytic[k]);
        }
    }

    #[test]
    fn saturated_gates_freeze_the_cell_state() {
        let mut rng = rng_from_seed(9);
        let mut net = LstmNet::new(2, &mut rng);
        net.clear_gate_weights(Gate::Forget);
        net.clear_gate_weights(Gate::Input);
        net.set_gate_bias(Gate::Forget, 1e3);
        net.set_gate_bias(Gate::Input, -1e3);
        let c0 = [0.3, -0.8];
        let states = net.cell_states(&[0.1, 0.9, -0.4, 0.5], &[0.2, 0.1], &c0);
        for c in states {
            assert_eq!(c, c0.to_vec());
        }
    }
}
