//! Mining, measuring and forecasting the size growth of block-structured
//! model files.
//!
//! The pipeline walks a repository history ([`mining`]), measures each
//! revision ([`metrics`]), turns the uneven revision series into daily
//! series ([`timeseries`]), fits five competing forecasters
//! ([`forecasters`]) and scores them against held-out data
//! ([`evaluation`]). [`pipeline`] wires the stages together and owns the
//! on-disk report formats.

pub mod error;
pub mod evaluation;
pub mod forecasters;
pub mod metrics;
pub mod mining;
pub mod pipeline;
pub mod rng;
pub mod synthetic;
pub mod timeseries;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
pub use evaluation::{
    chi_square_upper_tail, compare_approaches, evaluate_model, kruskal_wallis,
    kruskal_wallis_exact_p, mean_pct_deviation, rmse, ComparisonReport, EvaluationRecord,
    KWTestResult, Metric, ThresholdPolicy,
};
pub use forecasters::{ApproachKind, FittedForecaster, ForecasterSpec, Grids};
pub use metrics::{count_blocks, count_loc, parse_model, ModelDocument, Section, SizeMeasurement};
pub use pipeline::{run_pipeline, IndexMode, Pipeline, PipelineConfig, RunManifest, Stage};
pub use mining::{list_model_revisions, measure_revisions, RepoSource, Revision, RevisionRecord};
pub use timeseries::{DailySeries, SplitSeries, UnevenSeries};
