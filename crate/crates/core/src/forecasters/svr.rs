//! ε-insensitive support vector regression.
//!
//! The dual is solved in the 2l-variable form used by LIBSVM:
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t.  yᵀa = 0,  0 ≤ a_t ≤ C
//! y_t = +1, p_t = ε − z_t      (t < l)
//! y_t = −1, p_t = ε + z_t      (t ≥ l)
//! Q_ts = y_t y_s K(x_{t mod l}, x_{s mod l})
//! ```
//!
//! by sequential minimal optimization with second-order working-set
//! selection. The regression function is
//! `f(x) = Σ_i (a_i − a_{i+l}) K(x_i, x) + b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf,
}

impl Kernel {
    pub fn eval(self, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: Kernel,
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub lag: usize,
}

/// Raw dual solution.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// `a[..l]` are the upper multipliers, `a[l..]` the lower ones.
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DualSolution {
    pub fn coefficients(&self) -> Vec<f64> {
        let l = self.alpha.len() / 2;
        (0..l).map(|i| self.alpha[i] - self.alpha[i + l]).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SmoOptions {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions { tolerance: 1e-3, max_iter: 1_000_000 }
    }
}

/// Solves the ε-SVR dual on `(x, z)`.
pub fn solve_dual(
    x: &[Vec<f64>],
    z: &[f64],
    kernel: Kernel,
    gamma: f64,
    c: f64,
    epsilon: f64,
    opts: SmoOptions,
) -> Result<DualSolution> {
    let l = x.len();
    if l == 0 || z.len() != l {
        return Err(Error::invalid(format!("SVR needs matching non-empty data, got {l} rows and {} targets", z.len())));
    }
    if !(c > 0.0 && epsilon >= 0.0 && gamma > 0.0) {
        return Err(Error::invalid(format!("SVR parameters must be positive (C={c}, gamma={gamma}, epsilon={epsilon})")));
    }
    let kmat: Vec<Vec<f64>> = (0..l)
        .map(|i| (0..l).map(|j| kernel.eval(gamma, &x[i], &x[j])).collect())
        .collect();

    let n = 2 * l;
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let k = |t: usize, s: usize| kmat[t % l][s % l];
    let q = |t: usize, s: usize| sign(t) * sign(s) * k(t, s);
    let mut alpha = vec![0.0; n];
    let mut grad: Vec<f64> = (0..n)
        .map(|t| if t < l { epsilon - z[t] } else { epsilon + z[t - l] })
        .collect();

    let at_upper = |a: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let in_up = if sign(t) > 0.0 { !at_upper(alpha[t]) } else { !at_lower(alpha[t]) };
            if in_up && -sign(t) * grad[t] >= gmax {
                gmax = -sign(t) * grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        // j: second-order choice in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            let in_low = if sign(t) > 0.0 { !at_lower(alpha[t]) } else { !at_upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let yg = sign(t) * grad[t];
            if yg >= gmax2 {
                gmax2 = yg;
            }
            let diff = gmax + yg;
            if diff > 0.0 {
                let mut quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -(diff * diff) / quad;
                if obj <= best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < opts.tolerance || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if sign(i) != sign(j) {
            let mut quad = k(i, i) + k(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k(i, i) + k(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tolerance");
    }

    // b = −ρ, ρ averaged over free variables or taken mid-way between bounds
    let (mut ub, mut lb, mut sum_free, mut n_free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = sign(t) * grad[t];
        if at_upper(alpha[t]) {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(alpha[t]) {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
    Ok(DualSolution { alpha, bias: -rho, iterations, converged })
}

/// Trained regressor over lag windows.
#[derive(Debug, Clone)]
pub struct SvrModel {
    pub params: SvrParams,
    support: Vec<Vec<f64>>,
    coef: Vec<f64>,
    bias: f64,
}

impl SvrModel {
    pub fn train(x: &[Vec<f64>], z: &[f64], params: SvrParams) -> Result<Self> {
        let sol = solve_dual(x, z, params.kernel, params.gamma, params.c, params.epsilon, SmoOptions::default())?;
        let coef = sol.coefficients();
        let (support, coef): (Vec<Vec<f64>>, Vec<f64>) = x
            .iter()
            .zip(coef)
            .filter(|(_, a)| *a != 0.0)
            .map(|(row, a)| (row.clone(), a))
            .unzip();
        Ok(SvrModel { params, support, coef, bias: sol.bias })
    }

    pub fn predict(&self, window: &[f64]) -> f64 {
        self.bias
            + self
                .support
                .iter()
                .zip(&self.coef)
                .map(|(sv, a)| a * self.params.kernel.eval(self.params.gamma, sv, window))
                .sum::<f64>()
    }

    pub fn support_vectors(&self) -> usize {
        self.support.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Checks the KKT conditions of the dual solution directly.
    fn kkt_violation(x: &[Vec<f64>], z: &[f64], sol: &DualSolution, kernel: Kernel, gamma: f64, c: f64, eps: f64) -> f64 {
        let l = x.len();
        let coef = sol.coefficients();
        let f = |r: &[f64]| sol.bias + x.iter().zip(&coef).map(|(xi, a)| a * kernel.eval(gamma, xi, r)).sum::<f64>();
        let mut worst: f64 = 0.0;
        let sum: f64 = coef.iter().sum();
        worst = worst.max(sum.abs());
        for i in 0..l {
            let (up, lo) = (sol.alpha[i], sol.alpha[i + l]);
            assert!((0.0..=c).contains(&up) && (0.0..=c).contains(&lo));
            let r = z[i] - f(&x[i]);
            // upper multiplier: 0 → r ≤ ε ; C → r ≥ ε ; free → r = ε
            worst = worst.max(if up <= 0.0 {
                (r - eps).max(0.0)
            } else if up >= c {
                (eps - r).max(0.0)
            } else {
                (r - eps).abs()
            });
            worst = worst.max(if lo <= 0.0 {
                (-eps - r).max(0.0)
            } else if lo >= c {
                (r + eps).max(0.0)
            } else {
                (r + eps).abs()
            });
            // both multipliers positive only when ε = 0
            if eps > 0.0 {
                worst = worst.max(up.min(lo));
            }
        }
        worst
    }

    #[test]
    fn tiny_rbf_problem_satisfies_kkt() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0, ((i * 7) % 6) as f64 / 5.0]).collect();
        let z = [0.1, 0.9, 0.4, 0.3, 0.8, 0.2];
        for &(c, eps) in &[(1.0, 0.05), (10.0, 0.01), (0.1, 0.1)] {
            let sol = solve_dual(&x, &z, Kernel::Rbf, 1.0, c, eps, SmoOptions::default()).unwrap();
            assert!(sol.converged);
            let v = kkt_violation(&x, &z, &sol, Kernel::Rbf, 1.0, c, eps);
            assert!(v <= 1e-3, "C={c} eps={eps}: violation {v}");
        }
    }

    #[test]
    fn constant_targets_give_constant_predictions() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 10.0]).collect();
        let z = vec![0.5; 10];
        let m = SvrModel::train(&x, &z, SvrParams { kernel: Kernel::Rbf, c: 1.0, gamma: 1.0, epsilon: 0.01, lag: 1 }).unwrap();
        for probe in [0.0, 0.33, 0.9, 2.0] {
            assert!((m.predict(&[probe]) - 0.5).abs() <= 0.01 + 1e-9);
        }
    }

    #[test]
    fn linear_kernel_fits_a_line() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 20.0, (i + 1) as f64 / 20.0]).collect();
        let z: Vec<f64> = (0..20).map(|i| (i + 2) as f64 / 20.0).collect();
        let m = SvrModel::train(&x, &z, SvrParams { kernel: Kernel::Linear, c: 100.0, gamma: 1.0, epsilon: 0.001, lag: 2 }).unwrap();
        for (row, want) in x.iter().zip(&z) {
            let got = m.predict(row);
            assert!((got - want).abs() <= 0.02 * want.abs().max(0.05), "{got} vs {want}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = vec![vec![0.0]];
        assert!(solve_dual(&x, &[1.0], Kernel::Rbf, 1.0, 0.0, 0.1, SmoOptions::default()).is_err());
        assert!(solve_dual(&[], &[], Kernel::Rbf, 1.0, 1.0, 0.1, SmoOptions::default()).is_err());
    }
}
