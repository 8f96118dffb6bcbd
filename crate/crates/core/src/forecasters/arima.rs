//! ARIMA(p, d, q) by conditional sum of squares.
//!
//! After `d`-fold differencing the series `w` is modelled as
//!
//! ```text
//! w_t − μ = Σ φ_i (w_{t−i} − μ) + Σ θ_j e_{t−j} + e_t
//! ```
//!
//! Residuals are computed recursively from `t = p` with presample errors set
//! to zero; the sum of their squares is minimized with Nelder-Mead, starting
//! from a Hannan-Rissanen regression. Candidates whose AR polynomial is not
//! stationary or whose MA polynomial is not invertible are rejected.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{self, NelderMeadOptions};
use crate::error::{Error, Result};
use crate::timeseries::{self, Differenced};

pub const MAX_P: usize = 5;
pub const MAX_D: usize = 2;
pub const MAX_Q: usize = 5;

/// Margin kept from the unit circle when checking partial autocorrelations.
const UNIT_MARGIN: f64 = 1e-6;

/// Orders to fit, before estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaConfig {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub intercept: bool,
}

impl ArimaConfig {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        ArimaConfig { p, d, q, intercept: true }
    }
}

/// Fitted orders and coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    /// Mean of the differenced series (zero when fitted without intercept).
    pub intercept: f64,
    pub sigma2: f64,
    pub sse: f64,
    /// Number of residuals entering the SSE.
    pub n_eff: usize,
    pub aic: f64,
}

#[derive(Debug, Clone)]
pub struct ArimaFit {
    pub order: ArimaOrder,
    pub config: ArimaConfig,
    diff: Differenced,
    /// Last `p` differenced values, oldest first.
    w_tail: Vec<f64>,
    /// Last `q` residuals, oldest first.
    e_tail: Vec<f64>,
}

/// True when `1 − Σ φ_i z^i` has all roots outside the unit circle.
///
/// Uses the step-down (reverse Levinson-Durbin) recursion: the polynomial is
/// stationary iff every implied partial autocorrelation has modulus < 1.
pub fn is_stationary(phi: &[f64]) -> bool {
    let mut a = phi.to_vec();
    while let Some(&k) = a.last() {
        if !k.is_finite() || k.abs() >= 1.0 - UNIT_MARGIN {
            return false;
        }
        let p = a.len();
        let denom = 1.0 - k * k;
        let lower: Vec<f64> = (0..p - 1).map(|j| (a[j] + k * a[p - 2 - j]) / denom).collect();
        a = lower;
    }
    true
}

/// True when `1 + Σ θ_j z^j` has all roots outside the unit circle.
pub fn is_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    is_stationary(&neg)
}

fn residuals(w: &[f64], p: usize, mu: f64, phi: &[f64], theta: &[f64], e: &mut [f64]) -> f64 {
    let q = theta.len();
    let mut sse = 0.0;
    for t in 0..w.len() {
        if t < p {
            e[t] = 0.0;
            continue;
        }
        let mut pred = mu;
        for i in 0..p {
            pred += phi[i] * (w[t - 1 - i] - mu);
        }
        for j in 0..q.min(t) {
            pred += theta[j] * e[t - 1 - j];
        }
        let r = w[t] - pred;
        e[t] = r;
        sse += r * r;
    }
    sse
}

fn aic(sse: f64, n: usize, k: usize) -> f64 {
    let n = n as f64;
    n * (sse / n).max(f64::MIN_POSITIVE).ln() + 2.0 * k as f64
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Hannan-Rissanen starting values: a long autoregression supplies residual
/// estimates, then `w` is regressed on its own lags and lagged residuals.
fn initial_guess(w: &[f64], p: usize, q: usize, mu: f64) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = w.iter().map(|v| v - mu).collect();
    let n = x.len();
    let mut resid = vec![0.0; n];
    let long = if q > 0 { (p + q + 2).max((n as f64).sqrt() as usize).min(n / 3) } else { 0 };
    if long >= 1 {
        let rows: Vec<Vec<f64>> = (long..n).map(|t| (1..=long).map(|i| x[t - i]).collect()).collect();
        let ys: Vec<f64> = (long..n).map(|t| x[t]).collect();
        if let Some(a) = optim::least_squares(&rows, &ys) {
            for t in long..n {
                resid[t] = x[t] - (1..=long).map(|i| a[i - 1] * x[t - i]).sum::<f64>();
            }
        }
    }
    // lagged residuals are only meaningful from `long` on
    let start = p.max(long + q);
    if p + q == 0 || start + p + q >= n {
        return (vec![0.0; p], vec![0.0; q]);
    }
    let rows: Vec<Vec<f64>> = (start..n)
        .map(|t| (1..=p).map(|i| x[t - i]).chain((1..=q).map(|j| resid[t - j])).collect())
        .collect();
    let ys: Vec<f64> = (start..n).map(|t| x[t]).collect();
    let Some(beta) = optim::least_squares(&rows, &ys) else {
        return (vec![0.0; p], vec![0.0; q]);
    };
    let mut phi = beta[..p].to_vec();
    let mut theta = beta[p..].to_vec();
    for _ in 0..60 {
        if is_stationary(&phi) {
            break;
        }
        phi.iter_mut().for_each(|v| *v *= 0.9);
    }
    for _ in 0..60 {
        if is_invertible(&theta) {
            break;
        }
        theta.iter_mut().for_each(|v| *v *= 0.9);
    }
    if !is_stationary(&phi) {
        phi = vec![0.0; p];
    }
    if !is_invertible(&theta) {
        theta = vec![0.0; q];
    }
    (phi, theta)
}

/// Fits one ARIMA configuration.
pub fn arima_fit(train: &[f64], config: ArimaConfig) -> Result<ArimaFit> {
    let ArimaConfig { p, d, q, intercept } = config;
    if p > MAX_P || d > MAX_D || q > MAX_Q {
        return Err(Error::invalid(format!("ARIMA order ({p},{d},{q}) out of range")));
    }
    if train.len() <= p + q + d + 1 {
        return Err(Error::SeriesTooShort { needed: p + q + d + 2, got: train.len() });
    }
    let diff = timeseries::difference(train, d)?;
    let w = &diff.values;
    let n_eff = w.len() - p;

    let mu0 = if intercept { mean(w) } else { 0.0 };
    let (phi0, theta0) = initial_guess(w, p, q, mu0);
    let mut e = vec![0.0; w.len()];

    let dim = p + q + usize::from(intercept);
    let (mu, phi, theta) = if dim == usize::from(intercept) {
        // pure mean model: closed form
        (mu0, Vec::new(), Vec::new())
    } else {
        let sd = {
            let m = mean(w);
            (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / w.len() as f64).sqrt()
        };
        let mut start = Vec::with_capacity(dim);
        let mut steps = Vec::with_capacity(dim);
        if intercept {
            start.push(mu0);
            steps.push(0.1 * sd.max(1e-8));
        }
        start.extend_from_slice(&phi0);
        start.extend_from_slice(&theta0);
        steps.extend(std::iter::repeat_n(0.1, p + q));
        let off = usize::from(intercept);
        let objective = |x: &[f64]| {
            let mu = if intercept { x[0] } else { 0.0 };
            let phi = &x[off..off + p];
            let theta = &x[off + p..];
            if !is_stationary(phi) || !is_invertible(theta) {
                return f64::INFINITY;
            }
            let mut e = vec![0.0; w.len()];
            residuals(w, p, mu, phi, theta, &mut e)
        };
        let opts = NelderMeadOptions { max_iter: 4000 * dim, ..Default::default() };
        let min = optim::nelder_mead(objective, &start, &steps, opts)?;
        let x = min.x;
        (
            if intercept { x[0] } else { 0.0 },
            x[off..off + p].to_vec(),
            x[off + p..].to_vec(),
        )
    };

    if !is_stationary(&phi) {
        return Err(Error::UnstableFit(format!("AR polynomial of ({p},{d},{q}) is not stationary")));
    }
    if !is_invertible(&theta) {
        return Err(Error::UnstableFit(format!("MA polynomial of ({p},{d},{q}) is not invertible")));
    }

    let sse = residuals(w, p, mu, &phi, &theta, &mut e);
    if !sse.is_finite() {
        return Err(Error::UnstableFit(format!("non-finite residuals for ({p},{d},{q})")));
    }
    let order = ArimaOrder {
        p,
        d,
        q,
        ar_coeffs: phi,
        ma_coeffs: theta,
        intercept: mu,
        sigma2: sse / n_eff as f64,
        sse,
        n_eff,
        aic: aic(sse, n_eff, p + q + 1),
    };
    Ok(ArimaFit {
        order,
        config,
        w_tail: w[w.len() - p..].to_vec(),
        e_tail: e[e.len() - q..].to_vec(),
        diff,
    })
}

impl ArimaFit {
    pub fn forecast(&self, h: usize) -> Vec<f64> {
        let o = &self.order;
        let mut w = self.w_tail.clone();
        let mut e = self.e_tail.clone();
        let mut out = Vec::with_capacity(h);
        for _ in 0..h {
            let mut pred = o.intercept;
            for i in 0..o.p {
                pred += o.ar_coeffs[i] * (w[w.len() - 1 - i] - o.intercept);
            }
            for j in 0..o.q {
                pred += o.ma_coeffs[j] * e[e.len() - 1 - j];
            }
            out.push(pred);
            w.push(pred);
            e.push(0.0);
        }
        self.diff.integrate(&out)
    }
}

/// Candidate orders admitted for a series of length `n`.
///
/// Beyond `n > p + q + d + 1`, the number of residuals must exceed twice the
/// parameter count so that the AIC is not dominated by saturated fits.
pub fn candidate_orders(n: usize) -> Vec<ArimaConfig> {
    let mut out = Vec::new();
    for d in 0..=MAX_D {
        for p in 0..=MAX_P {
            for q in 0..=MAX_Q {
                if n <= p + q + d + 1 || n < d + p {
                    continue;
                }
                let n_eff = n - d - p;
                if n_eff <= 2 * (p + q + 1) {
                    continue;
                }
                out.push(ArimaConfig::new(p, d, q));
            }
        }
    }
    out
}

/// Exhaustive order search by AIC. Ties go to the smaller `p + q`, then the
/// smaller `d`. If every candidate fails, ARIMA(0,1,0) is returned.
pub fn auto_arima(train: &[f64]) -> Result<ArimaFit> {
    if train.len() < 10 {
        return Err(Error::SeriesTooShort { needed: 10, got: train.len() });
    }
    let candidates = candidate_orders(train.len());
    let fits: Vec<(ArimaConfig, Result<ArimaFit>)> = candidates
        .par_iter()
        .map(|&c| (c, arima_fit(train, c)))
        .collect();

    let mut best: Option<ArimaFit> = None;
    for (config, fit) in fits {
        let fit = match fit {
            Ok(f) => f,
            Err(err) => {
                log::debug!("ARIMA({},{},{}) skipped: {err}", config.p, config.d, config.q);
                continue;
            }
        };
        let key = |f: &ArimaFit| (f.order.aic, f.order.p + f.order.q, f.order.d);
        let better = match &best {
            None => true,
            Some(b) => {
                let (a1, s1, d1) = key(&fit);
                let (a0, s0, d0) = key(b);
                a1 < a0 || (a1 == a0 && (s1 < s0 || (s1 == s0 && d1 < d0)))
            }
        };
        if better {
            best = Some(fit);
        }
    }
    match best {
        Some(fit) => Ok(fit),
        None => {
            log::warn!("no stable ARIMA candidate; falling back to ARIMA(0,1,0)");
            arima_fit(train, ArimaConfig::new(0, 1, 0))
        }
    }
}
