//! End-to-end orchestration: mine → measure → forecast → evaluate → compare.
//!
//! Every stage reads the previous stage's files from the output directory
//! and writes its own, so stages can be rerun individually:
//!
//! | stage    | reads            | writes                                   |
//! |----------|------------------|------------------------------------------|
//! | mine     | repository       | `history.csv`                            |
//! | measure  | `history.csv`    | `revisions.csv`                          |
//! | forecast | `revisions.csv`  | `forecasts.csv`, `models.json`, `series/` |
//! | evaluate | `forecasts.csv`  | `evaluation.csv`, `plot_data.csv`        |
//! | compare  | `evaluation.csv` | `comparison.json`                        |
//!
//! `manifest.json` records the configuration hash, stage timings, the
//! corpus counts and every excluded model with a machine-readable reason.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::{
    compare_approaches_with, evaluate_model, read_evaluation_csv, write_comparison_json, write_evaluation_csv,
    write_plot_data_csv, CompareOptions, EvaluationRecord, Metric, ThresholdPolicy,
};
use crate::forecasters::{ApproachKind, ForecasterSpec, ForecasterSummary, Grids, DEFAULT_RUNS};
use crate::mining::{self, RepoSource, RevisionRecord};
use crate::rng::child_seed;
use crate::timeseries::{split_by_dates, to_daily, utc_day, UnevenSeries};

pub const HISTORY_FILE: &str = "history.csv";
pub const REVISIONS_FILE: &str = "revisions.csv";
pub const FORECASTS_FILE: &str = "forecasts.csv";
pub const MODELS_FILE: &str = "models.json";
pub const SERIES_DIR: &str = "series";
pub const EVALUATION_FILE: &str = "evaluation.csv";
pub const PLOT_DATA_FILE: &str = "plot_data.csv";
pub const COMPARISON_FILE: &str = "comparison.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    /// One value per UTC day, forward-filled between commits.
    Daily,
    /// One value per revision.
    Commits,
}

impl FromStr for IndexMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "daily" => Ok(IndexMode::Daily),
            "commits" => Ok(IndexMode::Commits),
            _ => Err(Error::Config(format!("index must be daily or commits, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepoConfig {
    pub root: PathBuf,
    pub include: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub since: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub until: Option<NaiveDate>,
}

impl Default for RepoConfig {
    fn default() -> Self {
        RepoConfig { root: PathBuf::from("."), include: vec!["**/*.mdl".into()], since: None, until: None }
    }
}

impl RepoConfig {
    pub fn source(&self) -> RepoSource {
        RepoSource {
            root_path: self.root.clone(),
            include_patterns: self.include.clone(),
            since: self.since,
            until: self.until,
        }
    }
}

/// Last day of training and last day of validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub b1: NaiveDate,
    pub b2: NaiveDate,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            b1: NaiveDate::from_ymd_opt(2015, 12, 31).expect("valid date"),
            b2: NaiveDate::from_ymd_opt(2016, 3, 31).expect("valid date"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub index: IndexMode,
    pub min_revisions: usize,
    pub out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub runs: usize,
    pub approaches: Vec<ApproachKind>,
    pub repo: RepoConfig,
    pub split: SplitConfig,
    pub policy: ThresholdPolicy,
    pub compare: CompareOptions,
    pub grids: Grids,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            index: IndexMode::Daily,
            min_revisions: 20,
            out: PathBuf::from("growthcast-out"),
            jobs: None,
            runs: DEFAULT_RUNS,
            approaches: ApproachKind::ALL.to_vec(),
            repo: RepoConfig::default(),
            split: SplitConfig::default(),
            policy: ThresholdPolicy::default(),
            compare: CompareOptions::default(),
            grids: Grids::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads TOML, or JSON when the file name ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.approaches.is_empty() {
            return Err(Error::Config("at least one approach is required".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.split.b1 >= self.split.b2 {
            return Err(Error::Config(format!("split.b1 ({}) must precede split.b2 ({})", self.split.b1, self.split.b2)));
        }
        self.policy.validate()?;
        self.repo.source().validate()?;
        for &kind in &self.approaches {
            ForecasterSpec::new(kind, &self.grids, self.seed, self.runs).validate()?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Mine,
    Measure,
    Forecast,
    Evaluate,
    Compare,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Mine, Stage::Measure, Stage::Forecast, Stage::Evaluate, Stage::Compare];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Mine => "mine",
            Stage::Measure => "measure",
            Stage::Forecast => "forecast",
            Stage::Evaluate => "evaluate",
            Stage::Compare => "compare",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    TooFewRevisions,
    NoMeasurements,
    SplitFailed,
    FitFailed,
    NonPositiveTruth,
    ShortTestSegment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub stage: Stage,
    pub model_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metric: Option<Metric>,
    pub reason: ExclusionReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub ok: bool,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Revision counts of the forecast corpus, by segment and per model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub models: usize,
    pub total_revisions: usize,
    pub train_revisions: usize,
    pub validation_revisions: usize,
    pub test_revisions: usize,
    pub min_per_model: usize,
    pub max_per_model: usize,
    pub avg_per_model: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub index: IndexMode,
    pub stages: Vec<StageRecord>,
    pub failed_stage: Option<Stage>,
    pub reason: Option<String>,
    pub counts: Option<CorpusCounts>,
    pub exclusions: Vec<Exclusion>,
    pub threshold_violations: Option<usize>,
}

impl RunManifest {
    fn new(cfg: &PipelineConfig) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            index: cfg.index,
            stages: Vec::new(),
            failed_stage: None,
            reason: None,
            counts: None,
            exclusions: Vec::new(),
            threshold_violations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HistoryRow {
    model_id: String,
    commit_id: String,
    timestamp: i64,
}

/// One forecast step next to its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub model_id: String,
    pub metric: Metric,
    pub approach: ApproachKind,
    pub step: usize,
    /// Calendar day of the step in daily mode, commit id in commits mode.
    pub at: String,
    pub forecast: f64,
    pub truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub metric: Metric,
    pub forecasters: Vec<ForecasterSummary>,
}

struct Segments {
    train: Vec<f64>,
    validation: Vec<f64>,
    test: Vec<f64>,
    test_labels: Vec<String>,
    daily: Option<crate::timeseries::DailySeries>,
}

fn segment_series(cfg: &PipelineConfig, records: &[&RevisionRecord], metric: Metric) -> Result<Segments> {
    let points: Vec<(i64, f64, &str)> = records
        .iter()
        .filter(|r| metric == Metric::Loc || r.block_count >= 0)
        .map(|r| {
            let v = match metric {
                Metric::Loc => r.loc as f64,
                Metric::Bc => r.block_count as f64,
            };
            (r.timestamp, v, r.commit_id.as_str())
        })
        .collect();
    if points.is_empty() {
        return Err(Error::EmptySeries);
    }
    let (b1, b2) = (cfg.split.b1, cfg.split.b2);
    match cfg.index {
        IndexMode::Daily => {
            let uneven = UnevenSeries::new(points.iter().map(|p| (p.0, p.1)))?;
            let mut daily = to_daily(&uneven)?;
            if let Some(until) = cfg.repo.until {
                daily.extend_to(until);
            }
            let split = split_by_dates(&daily, b1, b2)?;
            let test_labels = (0..split.test.len()).map(|i| split.test.day(i).to_string()).collect();
            Ok(Segments {
                train: split.train.values,
                validation: split.validation.values,
                test: split.test.values,
                test_labels,
                daily: Some(daily),
            })
        }
        IndexMode::Commits => {
            let mut seg = Segments { train: vec![], validation: vec![], test: vec![], test_labels: vec![], daily: None };
            for (ts, v, commit) in points {
                let day = utc_day(ts)?;
                if day <= b1 {
                    seg.train.push(v);
                } else if day <= b2 {
                    seg.validation.push(v);
                } else {
                    seg.test.push(v);
                    seg.test_labels.push(commit.to_string());
                }
            }
            for (name, s) in [("train", &seg.train), ("validation", &seg.validation), ("test", &seg.test)] {
                if s.is_empty() {
                    return Err(Error::EmptySegment(name));
                }
            }
            Ok(seg)
        }
    }
}

struct SeriesOutcome {
    rows: Vec<ForecastRow>,
    summary: ModelSummary,
    daily: Option<crate::timeseries::DailySeries>,
}

fn forecast_series(cfg: &PipelineConfig, model_id: &str, metric: Metric, seg: &Segments) -> std::result::Result<SeriesOutcome, String> {
    let mut history = seg.train.clone();
    history.extend_from_slice(&seg.validation);
    let mut rows = Vec::new();
    let mut forecasters = Vec::new();
    for &kind in &cfg.approaches {
        let seed = child_seed(cfg.seed, &format!("{model_id}:{metric}"), kind.as_str(), 0);
        let spec = ForecasterSpec::new(kind, &cfg.grids, seed, cfg.runs);
        let outcome = spec.fit(&seg.train, &seg.validation).and_then(|selected| {
            let mut fitted = selected.refit(&history)?;
            fitted.diagnostics.validation_rmse = selected.diagnostics.validation_rmse;
            let fc = fitted.forecast(seg.test.len())?;
            Ok((fitted, fc))
        });
        let (fitted, fc) = outcome.map_err(|e| format!("{kind}: {e}"))?;
        for (i, (f, t)) in fc.iter().zip(&seg.test).enumerate() {
            rows.push(ForecastRow {
                model_id: model_id.to_string(),
                metric,
                approach: kind,
                step: i + 1,
                at: seg.test_labels[i].clone(),
                forecast: *f,
                truth: *t,
            });
        }
        forecasters.push(fitted.summary());
    }
    Ok(SeriesOutcome {
        rows,
        summary: ModelSummary { model_id: model_id.to_string(), metric, forecasters },
        daily: seg.daily.clone(),
    })
}

fn series_file_name(model_id: &str, metric: Metric) -> String {
    let stem: String = model_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    format!("{stem}.{metric}.csv")
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.is_file() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Runs stages against one configuration and keeps the manifest current.
pub struct Pipeline {
    cfg: PipelineConfig,
    manifest: RunManifest,
}

impl Pipeline {
    /// Continues the manifest in the output directory when it was written
    /// with the same configuration; starts a new one otherwise.
    pub fn open(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        fs::create_dir_all(&cfg.out)?;
        let existing = fs::read_to_string(cfg.path(MANIFEST_FILE))
            .ok()
            .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
            .filter(|m| m.config_hash == cfg.hash());
        let manifest = existing.unwrap_or_else(|| RunManifest::new(&cfg));
        Ok(Pipeline { cfg, manifest })
    }

    pub fn fresh(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        fs::create_dir_all(&cfg.out)?;
        let manifest = RunManifest::new(&cfg);
        Ok(Pipeline { cfg, manifest })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn into_manifest(self) -> RunManifest {
        self.manifest
    }

    pub fn run_all(&mut self) -> Result<()> {
        for stage in Stage::ALL {
            self.run(stage)?;
        }
        Ok(())
    }

    /// Runs one stage, records its timing and outcome, and rewrites the
    /// manifest whether or not the stage succeeded.
    pub fn run(&mut self, stage: Stage) -> Result<()> {
        self.manifest.stages.retain(|s| s.stage < stage);
        self.manifest.exclusions.retain(|e| e.stage < stage);
        self.manifest.failed_stage = None;
        self.manifest.reason = None;
        if stage <= Stage::Evaluate {
            self.manifest.threshold_violations = None;
        }
        let started = Instant::now();
        let cfg = self.cfg.clone();
        let result = match cfg.jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))
                .and_then(|pool| pool.install(|| self.execute(stage))),
            None => self.execute(stage),
        };
        let seconds = started.elapsed().as_secs_f64();
        self.manifest.stages.push(StageRecord {
            stage,
            ok: result.is_ok(),
            seconds,
            error: result.as_ref().err().map(|e| e.to_string()),
        });
        if let Err(e) = &result {
            self.manifest.failed_stage = Some(stage);
            self.manifest.reason = Some(e.to_string());
        }
        write_json(&self.cfg.path(MANIFEST_FILE), &self.manifest)?;
        result
    }

    fn execute(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Mine => self.mine(),
            Stage::Measure => self.measure(),
            Stage::Forecast => self.forecast(),
            Stage::Evaluate => self.evaluate(),
            Stage::Compare => self.compare(),
        }
    }

    fn mine(&mut self) -> Result<()> {
        let models = mining::list_model_revisions(&self.cfg.repo.source())?;
        if models.is_empty() {
            return Err(Error::NoModels);
        }
        let rows: Vec<HistoryRow> = models
            .iter()
            .flat_map(|(id, revs)| {
                revs.iter().map(move |r| HistoryRow { model_id: id.clone(), commit_id: r.commit_id.clone(), timestamp: r.timestamp })
            })
            .collect();
        log::info!("mined {} revisions of {} models", rows.len(), models.len());
        write_csv_rows(&self.cfg.path(HISTORY_FILE), &rows, &["model_id", "commit_id", "timestamp"])
    }

    fn measure(&mut self) -> Result<()> {
        let history: Vec<HistoryRow> = read_csv_rows(&self.cfg.path(HISTORY_FILE))?;
        let wanted: BTreeSet<(&str, &str)> = history.iter().map(|h| (h.model_id.as_str(), h.commit_id.as_str())).collect();
        let mut models = mining::list_model_revisions(&self.cfg.repo.source())?;
        models.retain(|id, _| wanted.iter().any(|(m, _)| *m == id.as_str()));
        for (id, revs) in models.iter_mut() {
            revs.retain(|r| wanted.contains(&(id.as_str(), r.commit_id.as_str())));
        }
        let records = mining::measure_all(&models);
        if records.len() != history.len() {
            return Err(Error::Repository {
                path: self.cfg.repo.root.clone(),
                reason: format!("history lists {} revisions but {} were found; rerun mine", history.len(), records.len()),
            });
        }
        let flagged = records.iter().filter(|r| r.is_flagged()).count();
        if flagged > 0 {
            log::warn!("{flagged} revisions have no block count");
        }
        mining::write_revisions_csv(&self.cfg.path(REVISIONS_FILE), &records)
    }

    fn forecast(&mut self) -> Result<()> {
        let records = mining::read_revisions_csv(&self.cfg.path(REVISIONS_FILE))?;
        let by_model = mining::group_by_model(&records);
        let mut exclusions = Vec::new();
        let mut included: Vec<(&String, &Vec<RevisionRecord>)> = Vec::new();
        for (id, revs) in &by_model {
            if revs.len() < self.cfg.min_revisions {
                exclusions.push(Exclusion {
                    stage: Stage::Forecast,
                    model_id: id.clone(),
                    metric: None,
                    reason: ExclusionReason::TooFewRevisions,
                    detail: format!("{} revisions, minimum {}", revs.len(), self.cfg.min_revisions),
                });
            } else {
                included.push((id, revs));
            }
        }
        self.manifest.counts = Some(self.counts(&included)?);

        let jobs: Vec<(&str, Metric, Vec<&RevisionRecord>)> = included
            .iter()
            .flat_map(|(id, revs)| Metric::ALL.into_iter().map(move |m| (id.as_str(), m, revs.iter().collect())))
            .collect();
        let cfg = &self.cfg;
        let outcomes: Vec<std::result::Result<SeriesOutcome, Exclusion>> = jobs
            .par_iter()
            .map(|(id, metric, revs)| {
                let exclude = |reason, detail: String| Exclusion {
                    stage: Stage::Forecast,
                    model_id: id.to_string(),
                    metric: Some(*metric),
                    reason,
                    detail,
                };
                let seg = segment_series(cfg, revs, *metric).map_err(|e| match e {
                    Error::EmptySeries => exclude(ExclusionReason::NoMeasurements, e.to_string()),
                    e => exclude(ExclusionReason::SplitFailed, e.to_string()),
                })?;
                forecast_series(cfg, id, *metric, &seg).map_err(|d| exclude(ExclusionReason::FitFailed, d))
            })
            .collect();

        let mut rows = Vec::new();
        let mut summaries = Vec::new();
        let series_dir = self.cfg.path(SERIES_DIR);
        if series_dir.is_dir() {
            fs::remove_dir_all(&series_dir)?;
        }
        for outcome in outcomes {
            match outcome {
                Ok(o) => {
                    if let Some(daily) = &o.daily {
                        fs::create_dir_all(&series_dir)?;
                        daily.write_csv(&series_dir.join(series_file_name(&o.summary.model_id, o.summary.metric)))?;
                    }
                    rows.extend(o.rows);
                    summaries.push(o.summary);
                }
                Err(ex) => {
                    log::warn!("excluding {} {:?}: {}", ex.model_id, ex.metric, ex.detail);
                    exclusions.push(ex);
                }
            }
        }
        self.manifest.exclusions.extend(exclusions);
        write_csv_rows(
            &self.cfg.path(FORECASTS_FILE),
            &rows,
            &["model_id", "metric", "approach", "step", "at", "forecast", "truth"],
        )?;
        write_json(&self.cfg.path(MODELS_FILE), &summaries)
    }

    fn counts(&self, included: &[(&String, &Vec<RevisionRecord>)]) -> Result<CorpusCounts> {
        let mut c = CorpusCounts { models: included.len(), ..Default::default() };
        let (b1, b2) = (self.cfg.split.b1, self.cfg.split.b2);
        let sizes: Vec<usize> = included.iter().map(|(_, r)| r.len()).collect();
        for (_, revs) in included {
            for r in revs.iter() {
                let day = utc_day(r.timestamp)?;
                match (day <= b1, day <= b2) {
                    (true, _) => c.train_revisions += 1,
                    (false, true) => c.validation_revisions += 1,
                    _ => c.test_revisions += 1,
                }
            }
        }
        c.total_revisions = sizes.iter().sum();
        c.min_per_model = sizes.iter().copied().min().unwrap_or(0);
        c.max_per_model = sizes.iter().copied().max().unwrap_or(0);
        c.avg_per_model = if sizes.is_empty() { 0.0 } else { c.total_revisions as f64 / sizes.len() as f64 };
        Ok(c)
    }

    fn evaluate(&mut self) -> Result<()> {
        let rows: Vec<ForecastRow> = read_csv_rows(&self.cfg.path(FORECASTS_FILE))?;
        let mut grouped: BTreeMap<(String, Metric), BTreeMap<ApproachKind, Vec<&ForecastRow>>> = BTreeMap::new();
        for r in &rows {
            grouped.entry((r.model_id.clone(), r.metric)).or_default().entry(r.approach).or_default().push(r);
        }
        let policy = self.cfg.policy;
        let mut records = Vec::new();
        for ((model_id, metric), by_approach) in grouped {
            let truth: Vec<f64> = by_approach.values().next().map(|v| v.iter().map(|r| r.truth).collect()).unwrap_or_default();
            let forecasts: Vec<(ApproachKind, Vec<f64>)> =
                by_approach.iter().map(|(k, v)| (*k, v.iter().map(|r| r.forecast).collect())).collect();
            if truth.len() < policy.short_steps {
                self.manifest.exclusions.push(Exclusion {
                    stage: Stage::Evaluate,
                    model_id: model_id.clone(),
                    metric: Some(metric),
                    reason: ExclusionReason::ShortTestSegment,
                    detail: format!("{} test steps, short horizon {}", truth.len(), policy.short_steps),
                });
            }
            match evaluate_model(&model_id, metric, &forecasts, &truth, &policy) {
                Ok(recs) => records.extend(recs),
                Err(e) => self.manifest.exclusions.push(Exclusion {
                    stage: Stage::Evaluate,
                    model_id,
                    metric: Some(metric),
                    reason: ExclusionReason::NonPositiveTruth,
                    detail: e.to_string(),
                }),
            }
        }
        let violations = records.iter().filter(|r| r.above_threshold).count();
        self.manifest.threshold_violations = Some(violations);
        write_evaluation_csv(&self.cfg.path(EVALUATION_FILE), &records)?;
        write_plot_data_csv(&self.cfg.path(PLOT_DATA_FILE), &records)
    }

    fn compare(&mut self) -> Result<()> {
        let records: Vec<EvaluationRecord> = read_evaluation_csv(&self.cfg.path(EVALUATION_FILE))?;
        let report = compare_approaches_with(&records, &self.cfg.policy, &self.cfg.compare)?;
        write_comparison_json(&self.cfg.path(COMPARISON_FILE), &report)
    }
}

/// Runs every stage in order with a fresh manifest.
pub fn run_pipeline(cfg: PipelineConfig) -> Result<RunManifest> {
    let mut pipeline = Pipeline::fresh(cfg)?;
    pipeline.run_all()?;
    Ok(pipeline.into_manifest())
}
