//! The five forecasting approaches behind one fit / forecast contract.
//!
//! HOLT and ARIMA fit raw values and estimate their own parameters. SVR,
//! ANN and LSTM learn one-step predictions from lag windows of min-max
//! normalized data, select hyperparameters by grid search on a validation
//! segment, and forecast recursively by feeding predictions back into the
//! window. ANN and LSTM average the forecasts of `runs` independently
//! initialised networks.

pub mod ann;
pub mod arima;
pub mod holt;
pub mod lstm;
pub mod nn;
pub mod optim;
pub mod svr;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::rmse;
use crate::rng::{rng_from_seed, run_seed};
use crate::timeseries::{make_lagged, normalize, LaggedDataset, NormalizationParams};

pub use ann::{AnnParams, Mlp};
pub use arima::{ArimaConfig, ArimaFit, ArimaOrder};
pub use holt::{HoltFit, HoltParams};
pub use lstm::{LstmNet, LstmParams};
pub use nn::{Network, OptimizerKind, TrainConfig};
pub use svr::{Kernel, SvrModel, SvrParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ApproachKind {
    Holt,
    Arima,
    Svr,
    Ann,
    Lstm,
}

impl ApproachKind {
    pub const ALL: [ApproachKind; 5] = [
        ApproachKind::Holt,
        ApproachKind::Arima,
        ApproachKind::Svr,
        ApproachKind::Ann,
        ApproachKind::Lstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ApproachKind::Holt => "HOLT",
            ApproachKind::Arima => "ARIMA",
            ApproachKind::Svr => "SVR",
            ApproachKind::Ann => "ANN",
            ApproachKind::Lstm => "LSTM",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, ApproachKind::Ann | ApproachKind::Lstm)
    }
}

impl fmt::Display for ApproachKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ApproachKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ApproachKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown approach {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrGrid {
    pub kernel: Vec<Kernel>,
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub lag: Vec<usize>,
}

impl Default for SvrGrid {
    fn default() -> Self {
        SvrGrid {
            kernel: vec![Kernel::Rbf, Kernel::Linear],
            c: vec![0.1, 1.0, 10.0, 100.0],
            gamma: vec![0.01, 0.1, 1.0],
            epsilon: vec![0.001, 0.01],
            lag: vec![3, 5, 10],
        }
    }
}

impl SvrGrid {
    /// All combinations in grid order. The linear kernel ignores `gamma`,
    /// so it is paired with the first gamma only.
    pub fn candidates(&self) -> Vec<SvrParams> {
        let mut out = Vec::new();
        for &kernel in &self.kernel {
            let gammas: &[f64] = match kernel {
                Kernel::Rbf => &self.gamma,
                Kernel::Linear => &self.gamma[..self.gamma.len().min(1)],
            };
            for &lag in &self.lag {
                for &c in &self.c {
                    for &gamma in gammas {
                        for &epsilon in &self.epsilon {
                            out.push(SvrParams { kernel, c, gamma, epsilon, lag });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnGrid {
    pub lag: Vec<usize>,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for AnnGrid {
    fn default() -> Self {
        AnnGrid {
            lag: vec![3, 5, 10],
            hidden: vec![2, 4, 8],
            learning_rate: 0.1,
            epochs: 500,
            batch_size: 16,
        }
    }
}

impl AnnGrid {
    pub fn candidates(&self) -> Vec<AnnParams> {
        let mut out = Vec::new();
        for &lag in &self.lag {
            for &hidden in &self.hidden {
                out.push(AnnParams {
                    lag,
                    hidden,
                    learning_rate: self.learning_rate,
                    epochs: self.epochs,
                    batch_size: self.batch_size,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmGrid {
    pub lag: Vec<usize>,
    pub hidden: Vec<usize>,
    pub epochs: Vec<usize>,
    pub optimizer: Vec<OptimizerKind>,
    /// Overrides the per-optimizer default (SGD 0.1, Adam 0.01).
    pub learning_rate: Option<f64>,
    pub batch_size: usize,
}

impl Default for LstmGrid {
    fn default() -> Self {
        LstmGrid {
            lag: vec![3, 5, 10],
            hidden: vec![4, 8],
            epochs: vec![50, 200],
            optimizer: vec![OptimizerKind::Sgd, OptimizerKind::Adam],
            learning_rate: None,
            batch_size: 16,
        }
    }
}

impl LstmGrid {
    pub fn candidates(&self) -> Vec<LstmParams> {
        let mut out = Vec::new();
        for &lag in &self.lag {
            for &hidden in &self.hidden {
                for &epochs in &self.epochs {
                    for &optimizer in &self.optimizer {
                        let learning_rate = self.learning_rate.unwrap_or(match optimizer {
                            OptimizerKind::Sgd => 0.1,
                            OptimizerKind::Adam => 0.01,
                        });
                        out.push(LstmParams {
                            lag,
                            hidden,
                            epochs,
                            optimizer,
                            learning_rate,
                            batch_size: self.batch_size,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Search grids for the three machine-learning approaches.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub svr: SvrGrid,
    pub ann: AnnGrid,
    pub lstm: LstmGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArimaSearch {
    Auto,
    Fixed(ArimaConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hyperparams {
    Holt,
    Arima(ArimaSearch),
    Svr(SvrGrid),
    Ann(AnnGrid),
    Lstm(LstmGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecasterSpec {
    pub hyper: Hyperparams,
    pub seed: u64,
    /// Number of averaged networks; only ANN and LSTM use it.
    pub runs: usize,
}

pub const DEFAULT_RUNS: usize = 5;

impl ForecasterSpec {
    pub fn new(kind: ApproachKind, grids: &Grids, seed: u64, runs: usize) -> Self {
        let hyper = match kind {
            ApproachKind::Holt => Hyperparams::Holt,
            ApproachKind::Arima => Hyperparams::Arima(ArimaSearch::Auto),
            ApproachKind::Svr => Hyperparams::Svr(grids.svr.clone()),
            ApproachKind::Ann => Hyperparams::Ann(grids.ann.clone()),
            ApproachKind::Lstm => Hyperparams::Lstm(grids.lstm.clone()),
        };
        ForecasterSpec { hyper, seed, runs }
    }

    pub fn kind(&self) -> ApproachKind {
        match self.hyper {
            Hyperparams::Holt => ApproachKind::Holt,
            Hyperparams::Arima(_) => ApproachKind::Arima,
            Hyperparams::Svr(_) => ApproachKind::Svr,
            Hyperparams::Ann(_) => ApproachKind::Ann,
            Hyperparams::Lstm(_) => ApproachKind::Lstm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        let empty = match &self.hyper {
            Hyperparams::Svr(g) => {
                g.kernel.is_empty() || g.c.is_empty() || g.gamma.is_empty() || g.epsilon.is_empty() || g.lag.is_empty()
            }
            Hyperparams::Ann(g) => g.lag.is_empty() || g.hidden.is_empty(),
            Hyperparams::Lstm(g) => g.lag.is_empty() || g.hidden.is_empty() || g.epochs.is_empty() || g.optimizer.is_empty(),
            _ => false,
        };
        if empty {
            return Err(Error::invalid(format!("{} grid has an empty parameter list", self.kind())));
        }
        Ok(())
    }

    /// Fits on `train`, using `validation` for hyperparameter selection
    /// where the approach has hyperparameters.
    pub fn fit(&self, train: &[f64], validation: &[f64]) -> Result<FittedForecaster> {
        self.validate()?;
        match &self.hyper {
            Hyperparams::Holt => holt_fit(train),
            Hyperparams::Arima(ArimaSearch::Auto) => auto_arima(train),
            Hyperparams::Arima(ArimaSearch::Fixed(c)) => arima_fit(train, *c),
            Hyperparams::Svr(grid) => svr_fit(train, grid, validation),
            Hyperparams::Ann(grid) => ann_fit(train, grid, validation, self.runs, self.seed),
            Hyperparams::Lstm(grid) => lstm_fit(train, grid, validation, self.runs, self.seed),
        }
    }
}

/// Hyperparameters chosen for a fitted forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "UPPERCASE")]
pub enum ResolvedParams {
    Holt(HoltParams),
    Arima(ArimaOrder),
    Svr(SvrParams),
    Ann(AnnParams),
    Lstm(LstmParams),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub in_sample_sse: f64,
    pub aic: Option<f64>,
    pub validation_rmse: Option<f64>,
    /// Mean per-epoch training SSE across runs (ANN, LSTM).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub loss_curve: Vec<f64>,
}

/// JSON export of a fitted forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterSummary {
    pub approach: ApproachKind,
    pub chosen: ResolvedParams,
    pub seed: u64,
    pub runs: usize,
    pub in_sample_sse: f64,
    pub aic: Option<f64>,
    pub validation_rmse: Option<f64>,
}

trait LagRegressor {
    fn predict_window(&self, window: &[f64]) -> f64;
}

impl LagRegressor for SvrModel {
    fn predict_window(&self, window: &[f64]) -> f64 {
        self.predict(window)
    }
}

impl LagRegressor for Mlp {
    fn predict_window(&self, window: &[f64]) -> f64 {
        self.predict(window)
    }
}

impl LagRegressor for LstmNet {
    fn predict_window(&self, window: &[f64]) -> f64 {
        self.predict(window)
    }
}

/// Lag-window regressors plus the state for recursive forecasting.
#[derive(Debug, Clone)]
struct LagEnsemble<M> {
    norm: NormalizationParams,
    /// Last `lag` normalized training values.
    tail: Vec<f64>,
    members: Vec<M>,
}

impl<M: LagRegressor> LagEnsemble<M> {
    fn forecast_normalized(&self, h: usize) -> Vec<f64> {
        let mut mean = vec![0.0; h];
        for member in &self.members {
            let mut window = self.tail.clone();
            for slot in mean.iter_mut() {
                let next = member.predict_window(&window);
                *slot += next;
                window.remove(0);
                window.push(next);
            }
        }
        let k = self.members.len() as f64;
        mean.iter_mut().for_each(|v| *v /= k);
        mean
    }

    fn forecast(&self, h: usize) -> Vec<f64> {
        self.forecast_normalized(h).into_iter().map(|v| self.norm.invert(v)).collect()
    }
}

#[derive(Debug, Clone)]
enum Model {
    Holt(HoltFit),
    Arima(Box<ArimaFit>),
    Svr(LagEnsemble<SvrModel>),
    Ann(LagEnsemble<Mlp>),
    Lstm(LagEnsemble<LstmNet>),
}

/// A fitted, immutable forecaster.
#[derive(Debug, Clone)]
pub struct FittedForecaster {
    pub params: ResolvedParams,
    pub seed: u64,
    pub runs: usize,
    pub diagnostics: Diagnostics,
    auto_order: bool,
    model: Model,
}

impl FittedForecaster {
    pub fn kind(&self) -> ApproachKind {
        match self.params {
            ResolvedParams::Holt(_) => ApproachKind::Holt,
            ResolvedParams::Arima(_) => ApproachKind::Arima,
            ResolvedParams::Svr(_) => ApproachKind::Svr,
            ResolvedParams::Ann(_) => ApproachKind::Ann,
            ResolvedParams::Lstm(_) => ApproachKind::Lstm,
        }
    }

    /// `h` values following the training data, in the original scale.
    pub fn forecast(&self, h: usize) -> Result<Vec<f64>> {
        if h == 0 {
            return Err(Error::invalid("forecast horizon must be at least 1"));
        }
        Ok(match &self.model {
            Model::Holt(m) => m.forecast(h),
            Model::Arima(m) => m.forecast(h),
            Model::Svr(m) => m.forecast(h),
            Model::Ann(m) => m.forecast(h),
            Model::Lstm(m) => m.forecast(h),
        })
    }

    /// Forecasts of the ML approaches before denormalization.
    pub fn forecast_normalized(&self, h: usize) -> Option<(Vec<f64>, NormalizationParams)> {
        match &self.model {
            Model::Svr(m) => Some((m.forecast_normalized(h), m.norm)),
            Model::Ann(m) => Some((m.forecast_normalized(h), m.norm)),
            Model::Lstm(m) => Some((m.forecast_normalized(h), m.norm)),
            _ => None,
        }
    }

    /// Refits on new history. HOLT and ARIMA re-estimate from scratch
    /// (including the ARIMA order when it was searched); the ML approaches
    /// keep their selected hyperparameters and seed.
    pub fn refit(&self, history: &[f64]) -> Result<FittedForecaster> {
        match &self.params {
            ResolvedParams::Holt(_) => holt_fit(history),
            ResolvedParams::Arima(order) => {
                if self.auto_order {
                    auto_arima(history)
                } else {
                    let config = match &self.model {
                        Model::Arima(fit) => fit.config,
                        _ => ArimaConfig::new(order.p, order.d, order.q),
                    };
                    arima_fit(history, config)
                }
            }
            ResolvedParams::Svr(p) => svr_fit_params(history, *p),
            ResolvedParams::Ann(p) => ann_fit_params(history, *p, self.runs, self.seed),
            ResolvedParams::Lstm(p) => lstm_fit_params(history, *p, self.runs, self.seed),
        }
    }

    pub fn summary(&self) -> ForecasterSummary {
        ForecasterSummary {
            approach: self.kind(),
            chosen: self.params.clone(),
            seed: self.seed,
            runs: self.runs,
            in_sample_sse: self.diagnostics.in_sample_sse,
            aic: self.diagnostics.aic,
            validation_rmse: self.diagnostics.validation_rmse,
        }
    }
}

pub fn holt_fit(train: &[f64]) -> Result<FittedForecaster> {
    let fit = holt::holt_fit(train)?;
    Ok(FittedForecaster {
        params: ResolvedParams::Holt(fit.params),
        seed: 0,
        runs: 1,
        diagnostics: Diagnostics { in_sample_sse: fit.sse, ..Default::default() },
        auto_order: false,
        model: Model::Holt(fit),
    })
}

fn wrap_arima(fit: ArimaFit, auto_order: bool) -> FittedForecaster {
    FittedForecaster {
        params: ResolvedParams::Arima(fit.order.clone()),
        seed: 0,
        runs: 1,
        diagnostics: Diagnostics {
            in_sample_sse: fit.order.sse,
            aic: Some(fit.order.aic),
            ..Default::default()
        },
        auto_order,
        model: Model::Arima(Box::new(fit)),
    }
}

pub fn arima_fit(train: &[f64], config: ArimaConfig) -> Result<FittedForecaster> {
    arima::arima_fit(train, config).map(|f| wrap_arima(f, false))
}

pub fn auto_arima(train: &[f64]) -> Result<FittedForecaster> {
    arima::auto_arima(train).map(|f| wrap_arima(f, true))
}

/// Normalizes `history` and builds its lag dataset.
fn lagged_normalized(history: &[f64], lag: usize) -> Result<(NormalizationParams, Vec<f64>, LaggedDataset)> {
    if history.len() <= lag {
        return Err(Error::SeriesTooShort { needed: lag + 1, got: history.len() });
    }
    let (scaled, norm) = normalize(history);
    let data = make_lagged(&scaled, lag)?;
    Ok((norm, scaled, data))
}

fn split_rows(data: &LaggedDataset) -> (Vec<Vec<f64>>, Vec<f64>) {
    data.rows.iter().cloned().unzip()
}

pub fn svr_fit_params(history: &[f64], params: SvrParams) -> Result<FittedForecaster> {
    let (norm, scaled, data) = lagged_normalized(history, params.lag)?;
    let (x, z) = split_rows(&data);
    let model = SvrModel::train(&x, &z, params)?;
    let in_sample_sse = x
        .iter()
        .zip(&z)
        .map(|(w, y)| (norm.invert(model.predict(w)) - norm.invert(*y)).powi(2))
        .sum();
    Ok(FittedForecaster {
        params: ResolvedParams::Svr(params),
        seed: 0,
        runs: 1,
        diagnostics: Diagnostics { in_sample_sse, ..Default::default() },
        auto_order: false,
        model: Model::Svr(LagEnsemble {
            norm,
            tail: scaled[scaled.len() - params.lag..].to_vec(),
            members: vec![model],
        }),
    })
}

fn train_members<N: Network>(
    data: &LaggedDataset,
    cfg: &TrainConfig,
    runs: usize,
    seed: u64,
    init: impl Fn(&mut crate::rng::Rng) -> N,
) -> Result<(Vec<N>, Vec<f64>)> {
    let mut members = Vec::with_capacity(runs);
    let mut curve = vec![0.0; cfg.epochs];
    for run in 0..runs {
        let mut rng = rng_from_seed(run_seed(seed, run));
        let initial = init(&mut rng);
        let (net, c) = nn::train_with_retry(&initial, data, cfg, &mut rng)?;
        for (acc, v) in curve.iter_mut().zip(&c) {
            *acc += v / runs as f64;
        }
        members.push(net);
    }
    Ok((members, curve))
}

fn ensemble_sse<M: LagRegressor>(members: &[M], data: &LaggedDataset, norm: &NormalizationParams) -> f64 {
    data.rows
        .iter()
        .map(|(w, y)| {
            let mean = members.iter().map(|m| m.predict_window(w)).sum::<f64>() / members.len() as f64;
            (norm.invert(mean) - norm.invert(*y)).powi(2)
        })
        .sum()
}

pub fn ann_fit_params(history: &[f64], params: AnnParams, runs: usize, seed: u64) -> Result<FittedForecaster> {
    if runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    let (norm, scaled, data) = lagged_normalized(history, params.lag)?;
    let cfg = TrainConfig {
        epochs: params.epochs,
        learning_rate: params.learning_rate,
        batch_size: params.batch_size,
        optimizer: OptimizerKind::Sgd,
    };
    let (members, loss_curve) = train_members(&data, &cfg, runs, seed, |rng| Mlp::new(params.lag, params.hidden, rng))?;
    let in_sample_sse = ensemble_sse(&members, &data, &norm);
    Ok(FittedForecaster {
        params: ResolvedParams::Ann(params),
        seed,
        runs,
        diagnostics: Diagnostics { in_sample_sse, loss_curve, ..Default::default() },
        auto_order: false,
        model: Model::Ann(LagEnsemble { norm, tail: scaled[scaled.len() - params.lag..].to_vec(), members }),
    })
}

pub fn lstm_fit_params(history: &[f64], params: LstmParams, runs: usize, seed: u64) -> Result<FittedForecaster> {
    if runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    let (norm, scaled, data) = lagged_normalized(history, params.lag)?;
    let cfg = TrainConfig {
        epochs: params.epochs,
        learning_rate: params.learning_rate,
        batch_size: params.batch_size,
        optimizer: params.optimizer,
    };
    let (members, loss_curve) = train_members(&data, &cfg, runs, seed, |rng| LstmNet::new(params.hidden, rng))?;
    let in_sample_sse = ensemble_sse(&members, &data, &norm);
    Ok(FittedForecaster {
        params: ResolvedParams::Lstm(params),
        seed,
        runs,
        diagnostics: Diagnostics { in_sample_sse, loss_curve, ..Default::default() },
        auto_order: false,
        model: Model::Lstm(LagEnsemble { norm, tail: scaled[scaled.len() - params.lag..].to_vec(), members }),
    })
}

/// Fits every candidate on `train`, scores recursive forecasts over
/// `validation` by RMSE and keeps the best. Ties go to the earlier
/// candidate; failing candidates are skipped.
fn grid_search<P: Copy + Send + Sync + fmt::Debug>(
    kind: ApproachKind,
    train: &[f64],
    validation: &[f64],
    candidates: &[P],
    fit: impl Fn(P) -> Result<FittedForecaster> + Sync,
) -> Result<FittedForecaster> {
    if validation.is_empty() {
        return Err(Error::EmptySegment("validation"));
    }
    let scored: Vec<Option<(f64, FittedForecaster)>> = candidates
        .par_iter()
        .map(|&p| {
            let attempt = fit(p).and_then(|f| {
                let pred = f.forecast(validation.len())?;
                Ok((rmse(&pred, validation)?, f))
            });
            match attempt {
                Ok((score, f)) if score.is_finite() => Some((score, f)),
                Ok(_) => None,
                Err(err) => {
                    log::debug!("{kind} candidate {p:?} skipped: {err}");
                    None
                }
            }
        })
        .collect();
    let mut best: Option<(f64, FittedForecaster)> = None;
    for (score, fitted) in scored.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, fitted));
        }
    }
    let (score, mut fitted) = best.ok_or_else(|| {
        Error::DegenerateGrid(format!("{kind}: none of {} candidates could be fitted on {} training values", candidates.len(), train.len()))
    })?;
    fitted.diagnostics.validation_rmse = Some(score);
    Ok(fitted)
}

pub fn svr_fit(train: &[f64], grid: &SvrGrid, validation: &[f64]) -> Result<FittedForecaster> {
    grid_search(ApproachKind::Svr, train, validation, &grid.candidates(), |p| svr_fit_params(train, p))
}

pub fn ann_fit(train: &[f64], grid: &AnnGrid, validation: &[f64], runs: usize, seed: u64) -> Result<FittedForecaster> {
    grid_search(ApproachKind::Ann, train, validation, &grid.candidates(), |p| ann_fit_params(train, p, runs, seed))
}

pub fn lstm_fit(train: &[f64], grid: &LstmGrid, validation: &[f64], runs: usize, seed: u64) -> Result<FittedForecaster> {
    grid_search(ApproachKind::Lstm, train, validation, &grid.candidates(), |p| lstm_fit_params(train, p, runs, seed))
}
