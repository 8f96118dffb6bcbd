//! Holt's linear trend method.
//!
//! ```text
//! level:    l_t = α y_t + (1 − α)(l_{t−1} + b_{t−1})
//! trend:    b_t = β (l_t − l_{t−1}) + (1 − β) b_{t−1}
//! forecast: ŷ_{T+h} = l_T + h b_T
//! ```
//!
//! Initialised with `l_1 = y_1`, `b_1 = y_2 − y_1`. The smoothing constants
//! are picked by minimizing the one-step-ahead squared error over the
//! training data: a 0.05 grid over (0, 1)², then a shrinking pattern search
//! around the best grid point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_STEP: f64 = 0.05;
const BOUND: f64 = 1e-4;
const MIN_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoltParams {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoltFit {
    pub params: HoltParams,
    pub level: f64,
    pub trend: f64,
    pub sse: f64,
}

impl HoltFit {
    pub fn forecast(&self, h: usize) -> Vec<f64> {
        (1..=h).map(|k| self.level + k as f64 * self.trend).collect()
    }
}

/// Runs the recursion, returning (one-step SSE, final level, final trend).
pub fn smooth(y: &[f64], params: HoltParams) -> (f64, f64, f64) {
    let HoltParams { alpha, beta } = params;
    let mut level = y[0];
    let mut trend = y[1] - y[0];
    let mut sse = 0.0;
    for &obs in &y[1..] {
        let predicted = level + trend;
        sse += (obs - predicted).powi(2);
        let prev = level;
        level = alpha * obs + (1.0 - alpha) * (level + trend);
        trend = beta * (level - prev) + (1.0 - beta) * trend;
    }
    (sse, level, trend)
}

pub fn holt_fit(train: &[f64]) -> Result<HoltFit> {
    if train.len() < 3 {
        return Err(Error::SeriesTooShort { needed: 3, got: train.len() });
    }
    let sse = |a: f64, b: f64| smooth(train, HoltParams { alpha: a, beta: b }).0;

    let grid: Vec<f64> = (1..20).map(|i| i as f64 * GRID_STEP).collect();
    let (mut alpha, mut beta, mut best) = (grid[0], grid[0], f64::INFINITY);
    for &a in &grid {
        for &b in &grid {
            let v = sse(a, b);
            if v < best {
                (alpha, beta, best) = (a, b, v);
            }
        }
    }

    let clamp = |v: f64| v.clamp(BOUND, 1.0 - BOUND);
    let mut step = GRID_STEP / 2.0;
    while step >= MIN_STEP {
        let mut moved = false;
        for (da, db) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (a, b) = (clamp(alpha + da), clamp(beta + db));
            let v = sse(a, b);
            if v < best {
                (alpha, beta, best) = (a, b, v);
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }

    let params = HoltParams { alpha, beta };
    let (sse, level, trend) = smooth(train, params);
    Ok(HoltFit { params, level, trend, sse })
}
