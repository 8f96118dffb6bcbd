//! Forecast scoring and approach comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecasters::ApproachKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "BC")]
    Bc,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Loc, Metric::Bc];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Loc => "LOC",
            Metric::Bc => "BC",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LOC" => Ok(Metric::Loc),
            "BC" => Ok(Metric::Bc),
            _ => Err(Error::invalid(format!("unknown metric {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdPolicy {
    /// A model is flagged when its mean percent deviation exceeds this.
    pub max_error_pct: f64,
    pub horizon_days: u32,
    pub alpha: f64,
    pub short_steps: usize,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy { max_error_pct: 8.3, horizon_days: 28, alpha: 0.05, short_steps: 4 }
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_error_pct > 0.0 && self.max_error_pct.is_finite()) {
            return Err(Error::invalid("max_error_pct must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha must lie in (0, 1)"));
        }
        if self.horizon_days == 0 || self.short_steps == 0 {
            return Err(Error::invalid("horizon_days and short_steps must be positive"));
        }
        Ok(())
    }

    pub fn is_above(&self, mean_pct_dev: f64) -> bool {
        mean_pct_dev > self.max_error_pct
    }
}

fn check_lengths(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    if pred.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(())
}

/// `sqrt(Σ (pred − truth)² / n)`.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sum / pred.len() as f64).sqrt())
}

/// Mean of `|pred − truth| / truth × 100`. Every truth value must be positive.
pub fn mean_pct_deviation(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    if let Some(t) = truth.iter().find(|t| t.is_nan() || **t <= 0.0) {
        return Err(Error::invalid(format!("percent deviation needs positive ground truth, got {t}")));
    }
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs() / t * 100.0).sum();
    Ok(sum / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub model_id: String,
    pub metric: Metric,
    pub approach: ApproachKind,
    pub test_len: usize,
    /// Absent when the test segment is shorter than the short horizon.
    pub rmse_short: Option<f64>,
    /// Present only when the test segment is longer than the short horizon.
    pub rmse_long: Option<f64>,
    pub mean_pct_dev: f64,
    pub above_threshold: bool,
}

impl EvaluationRecord {
    pub fn rmse(&self, horizon: Horizon) -> Option<f64> {
        match horizon {
            Horizon::Short => self.rmse_short,
            Horizon::Long => self.rmse_long,
        }
    }
}

/// Scores each approach's forecast of one model's test segment.
pub fn evaluate_model(
    model_id: &str,
    metric: Metric,
    forecasts: &[(ApproachKind, Vec<f64>)],
    test: &[f64],
    policy: &ThresholdPolicy,
) -> Result<Vec<EvaluationRecord>> {
    let short = policy.short_steps;
    if test.len() < short {
        log::info!("{model_id} {metric}: test has {} steps, excluded from the short-term set", test.len());
    }
    forecasts
        .iter()
        .map(|(approach, pred)| {
            let mean_pct_dev = mean_pct_deviation(pred, test)?;
            let rmse_short = if test.len() >= short { Some(rmse(&pred[..short], &test[..short])?) } else { None };
            let rmse_long = if test.len() > short { Some(rmse(pred, test)?) } else { None };
            Ok(EvaluationRecord {
                model_id: model_id.to_string(),
                metric,
                approach: *approach,
                test_len: test.len(),
                rmse_short,
                rmse_long,
                mean_pct_dev,
                above_threshold: policy.is_above(mean_pct_dev),
            })
        })
        .collect()
}

/// Upper tail `P(X ≥ x)` of a chi-square distribution with `df` degrees of freedom.
pub fn chi_square_upper_tail(x: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::invalid("chi-square needs df ≥ 1"));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!("chi-square statistic must be non-negative, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(statrs::function::gamma::gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0))
}

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRank {
    pub label: String,
    pub n: usize,
    pub rank_sum: f64,
    pub mean_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KWTestResult {
    pub groups: Vec<GroupRank>,
    #[serde(rename = "H")]
    pub h: f64,
    pub tie_correction: f64,
    pub df: u32,
    pub p_value: f64,
}

struct Ranked {
    ranks: Vec<f64>,
    sizes: Vec<usize>,
    tie_correction: f64,
}

fn rank_groups(groups: &[(String, Vec<f64>)]) -> Result<Ranked> {
    if groups.len() < 2 {
        return Err(Error::invalid("Kruskal-Wallis needs at least two groups"));
    }
    if let Some((label, _)) = groups.iter().find(|(_, g)| g.is_empty()) {
        return Err(Error::invalid(format!("group {label:?} is empty")));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|(_, g)| g.iter().copied()).collect();
    if pooled.len() < 3 {
        return Err(Error::invalid("Kruskal-Wallis needs at least three observations"));
    }
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("Kruskal-Wallis observations must be finite"));
    }
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    for run in sorted.chunk_by(|a, b| a == b) {
        let t = run.len() as f64;
        ties += t * t * t - t;
    }
    let n = pooled.len() as f64;
    Ok(Ranked {
        ranks: midranks(&pooled),
        sizes: groups.iter().map(|(_, g)| g.len()).collect(),
        tie_correction: 1.0 - ties / (n * n * n - n),
    })
}

fn rank_sums(ranks: &[f64], sizes: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for &s in sizes {
        out.push(ranks[at..at + s].iter().sum());
        at += s;
    }
    out
}

fn statistic(sums: &[f64], sizes: &[usize]) -> f64 {
    sums.iter().zip(sizes).map(|(r, &n)| r * r / n as f64).sum()
}

fn h_from(stat: f64, n: usize, tie_correction: f64) -> f64 {
    let n = n as f64;
    ((12.0 / (n * (n + 1.0)) * stat - 3.0 * (n + 1.0)) / tie_correction).max(0.0)
}

/// Kruskal-Wallis H test with midranks and tie correction; the p-value is
/// the chi-square approximation with `k − 1` degrees of freedom. When every
/// observation is identical the result is `H = 0`, `p = 1`.
pub fn kruskal_wallis(groups: &[(String, Vec<f64>)]) -> Result<KWTestResult> {
    let ranked = rank_groups(groups)?;
    let sums = rank_sums(&ranked.ranks, &ranked.sizes);
    let df = groups.len() as u32 - 1;
    let group_ranks = groups
        .iter()
        .zip(&sums)
        .map(|((label, g), &rank_sum)| GroupRank {
            label: label.clone(),
            n: g.len(),
            rank_sum,
            mean_rank: rank_sum / g.len() as f64,
        })
        .collect();
    if ranked.tie_correction <= 0.0 {
        return Ok(KWTestResult { groups: group_ranks, h: 0.0, tie_correction: 1.0, df, p_value: 1.0 });
    }
    let h = h_from(statistic(&sums, &ranked.sizes), ranked.ranks.len(), ranked.tie_correction);
    Ok(KWTestResult {
        groups: group_ranks,
        h,
        tie_correction: ranked.tie_correction,
        df,
        p_value: chi_square_upper_tail(h, df)?,
    })
}

pub const EXACT_P_MAX_N: usize = 10;

/// Exact permutation p-value of the Kruskal-Wallis statistic: the share of
/// all assignments of the pooled observations to groups of the observed
/// sizes whose H is at least the observed H. Limited to N ≤ 10.
pub fn kruskal_wallis_exact_p(groups: &[(String, Vec<f64>)]) -> Result<f64> {
    let ranked = rank_groups(groups)?;
    let n = ranked.ranks.len();
    if n > EXACT_P_MAX_N {
        return Err(Error::invalid(format!("exact p-value limited to N ≤ {EXACT_P_MAX_N}, got {n}")));
    }
    if ranked.tie_correction <= 0.0 {
        return Ok(1.0);
    }
    let observed = statistic(&rank_sums(&ranked.ranks, &ranked.sizes), &ranked.sizes);
    let tol = 1e-9 * observed.abs().max(1.0);

    struct Walk<'a> {
        ranks: &'a [f64],
        sizes: &'a [usize],
        left: Vec<usize>,
        sums: Vec<f64>,
        threshold: f64,
        hits: u64,
        total: u64,
    }

    fn go(w: &mut Walk<'_>, i: usize) {
        if i == w.ranks.len() {
            w.total += 1;
            if statistic(&w.sums, w.sizes) >= w.threshold {
                w.hits += 1;
            }
            return;
        }
        for g in 0..w.sizes.len() {
            if w.left[g] > 0 {
                w.left[g] -= 1;
                w.sums[g] += w.ranks[i];
                go(w, i + 1);
                w.sums[g] -= w.ranks[i];
                w.left[g] += 1;
            }
        }
    }

    let mut walk = Walk {
        ranks: &ranked.ranks,
        sizes: &ranked.sizes,
        left: ranked.sizes.clone(),
        sums: vec![0.0; ranked.sizes.len()],
        threshold: observed - tol,
        hits: 0,
        total: 0,
    };
    go(&mut walk, 0);
    Ok(walk.hits as f64 / walk.total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Short,
    Long,
}

/// Skewness and excess kurtosis of one group, with a Jarque-Bera style
/// screen. Advisory only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityAdvisory {
    pub label: String,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub looks_normal: Option<bool>,
}

const JB_CRITICAL_5PCT: f64 = 5.991;

pub fn normality_advisory(label: &str, values: &[f64]) -> NormalityAdvisory {
    let n = values.len() as f64;
    let empty = NormalityAdvisory { label: label.to_string(), skewness: None, excess_kurtosis: None, looks_normal: None };
    if values.len() < 3 {
        return empty;
    }
    let mean = values.iter().sum::<f64>() / n;
    let moment = |k: i32| values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let m2 = moment(2);
    if m2 <= 0.0 {
        return empty;
    }
    let skew = moment(3) / m2.powf(1.5);
    let kurt = moment(4) / (m2 * m2) - 3.0;
    let jb = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
    NormalityAdvisory {
        label: label.to_string(),
        skewness: Some(skew),
        excess_kurtosis: Some(kurt),
        looks_normal: Some(jb < JB_CRITICAL_5PCT),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: ApproachKind,
    pub b: ApproachKind,
    #[serde(rename = "H")]
    pub h: f64,
    pub p_value: f64,
    pub reject_h0: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTest {
    pub horizon: Horizon,
    pub metric: Metric,
    /// Models with a score for every approach; only these enter the test.
    pub models: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped: Option<String>,
    pub kruskal_wallis: Option<KWTestResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact_p: Option<f64>,
    pub reject_h0: Option<bool>,
    pub normality: Vec<NormalityAdvisory>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub pairwise: Vec<PairwiseTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCount {
    pub metric: Metric,
    pub approach: ApproachKind,
    pub flagged: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub max_error_pct: f64,
    pub tests: Vec<ComparisonTest>,
    pub threshold_counts: Vec<ThresholdCount>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareOptions {
    pub pairwise: bool,
    pub exact_p: bool,
}

pub fn threshold_counts(records: &[EvaluationRecord]) -> Vec<ThresholdCount> {
    let mut counts: BTreeMap<(Metric, ApproachKind), (usize, usize)> = BTreeMap::new();
    for r in records {
        let c = counts.entry((r.metric, r.approach)).or_default();
        c.0 += r.above_threshold as usize;
        c.1 += 1;
    }
    counts
        .into_iter()
        .map(|((metric, approach), (flagged, total))| ThresholdCount { metric, approach, flagged, total })
        .collect()
}

/// Per-approach score vectors over models that have a score for every
/// approach, in model order.
fn score_groups(records: &[EvaluationRecord], metric: Metric, horizon: Horizon) -> (Vec<ApproachKind>, Vec<String>, Vec<Vec<f64>>) {
    let mut table: BTreeMap<&str, BTreeMap<ApproachKind, f64>> = BTreeMap::new();
    let mut approaches = BTreeSet::new();
    for r in records.iter().filter(|r| r.metric == metric) {
        approaches.insert(r.approach);
        if let Some(v) = r.rmse(horizon) {
            table.entry(r.model_id.as_str()).or_default().insert(r.approach, v);
        }
    }
    let approaches: Vec<ApproachKind> = approaches.into_iter().collect();
    let models: Vec<String> = table
        .iter()
        .filter(|(_, row)| approaches.iter().all(|a| row.contains_key(a)))
        .map(|(m, _)| m.to_string())
        .collect();
    let groups = approaches
        .iter()
        .map(|a| models.iter().map(|m| table[m.as_str()][a]).collect())
        .collect();
    (approaches, models, groups)
}

pub fn compare_approaches(records: &[EvaluationRecord], policy: &ThresholdPolicy) -> Result<ComparisonReport> {
    compare_approaches_with(records, policy, &CompareOptions::default())
}

/// The four Kruskal-Wallis tests {short, long} × {LOC, BC} over per-model
/// RMSE. A test lacking two approaches with two models each is reported as
/// skipped; it is an error when every test is skipped.
pub fn compare_approaches_with(records: &[EvaluationRecord], policy: &ThresholdPolicy, options: &CompareOptions) -> Result<ComparisonReport> {
    policy.validate()?;
    let mut tests = Vec::new();
    for horizon in [Horizon::Short, Horizon::Long] {
        for metric in Metric::ALL {
            let (approaches, models, groups) = score_groups(records, metric, horizon);
            let mut test = ComparisonTest {
                horizon,
                metric,
                models: models.len(),
                skipped: None,
                kruskal_wallis: None,
                exact_p: None,
                reject_h0: None,
                normality: Vec::new(),
                pairwise: Vec::new(),
            };
            if approaches.len() < 2 || models.len() < 2 {
                test.skipped = Some(format!("{} approaches with {} complete models; need at least 2 of each", approaches.len(), models.len()));
                tests.push(test);
                continue;
            }
            let labelled: Vec<(String, Vec<f64>)> =
                approaches.iter().zip(&groups).map(|(a, g)| (a.to_string(), g.clone())).collect();
            let kw = kruskal_wallis(&labelled)?;
            test.reject_h0 = Some(kw.p_value < policy.alpha);
            if options.exact_p && models.len() * approaches.len() <= EXACT_P_MAX_N {
                test.exact_p = Some(kruskal_wallis_exact_p(&labelled)?);
            }
            test.kruskal_wallis = Some(kw);
            test.normality = labelled.iter().map(|(l, g)| normality_advisory(l, g)).collect();
            if options.pairwise {
                for i in 0..approaches.len() {
                    for j in i + 1..approaches.len() {
                        let pair = [labelled[i].clone(), labelled[j].clone()];
                        let kw = kruskal_wallis(&pair)?;
                        test.pairwise.push(PairwiseTest {
                            a: approaches[i],
                            b: approaches[j],
                            h: kw.h,
                            p_value: kw.p_value,
                            reject_h0: kw.p_value < policy.alpha,
                        });
                    }
                }
            }
            tests.push(test);
        }
    }
    if tests.iter().all(|t| t.skipped.is_some()) {
        return Err(Error::invalid("fewer than two usable approach groups in every comparison"));
    }
    Ok(ComparisonReport {
        alpha: policy.alpha,
        max_error_pct: policy.max_error_pct,
        tests,
        threshold_counts: threshold_counts(records),
    })
}

pub fn write_evaluation_csv(path: &Path, records: &[EvaluationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_evaluation_csv(path: &Path) -> Result<Vec<EvaluationRecord>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_comparison_json(path: &Path, report: &ComparisonReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Grouped-bar plot data: one row per (model, metric, horizon), one RMSE
/// column per approach.
pub fn write_plot_data_csv(path: &Path, records: &[EvaluationRecord]) -> Result<()> {
    let approaches: BTreeSet<ApproachKind> = records.iter().map(|r| r.approach).collect();
    let mut rows: BTreeMap<(&str, Metric, Horizon), BTreeMap<ApproachKind, f64>> = BTreeMap::new();
    for r in records {
        for horizon in [Horizon::Short, Horizon::Long] {
            if let Some(v) = r.rmse(horizon) {
                rows.entry((r.model_id.as_str(), r.metric, horizon)).or_default().insert(r.approach, v);
            }
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["model_id".to_string(), "metric".into(), "horizon".into()];
    header.extend(approaches.iter().map(|a| a.to_string()));
    w.write_record(&header)?;
    for ((model, metric, horizon), row) in rows {
        let mut line = vec![
            model.to_string(),
            metric.to_string(),
            match horizon {
                Horizon::Short => "short".to_string(),
                Horizon::Long => "long".to_string(),
            },
        ];
        line.extend(approaches.iter().map(|a| row.get(a).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(())
}
