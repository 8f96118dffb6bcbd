mod common;

use std::fs;
use std::process::Command;

use common::{code, growthcast, stderr};
use growthcast::evaluation::{ComparisonReport, Horizon, Metric};
use growthcast::{PipelineConfig, RunManifest};

fn manifest(dir: &std::path::Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn print_config_emits_a_loadable_config_with_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let out = growthcast(&["print-config", "--seed", "7", "--index", "commits", "--policy.max_error_pct", "3.5"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let path = tmp.path().join("cfg.toml");
    fs::write(&path, &out.stdout).unwrap();
    let cfg = PipelineConfig::load(&path).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.index, growthcast::IndexMode::Commits);
    assert_eq!(cfg.policy.max_error_pct, 3.5);
    assert_eq!(cfg.grids, PipelineConfig::default().grids);
}

#[test]
fn unknown_config_key_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "seed = 1\nbogus = 2\n").unwrap();
    let out = growthcast(&["print-config", "--config", "bad.toml"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));
}

#[test]
fn repository_without_models_fails_with_reason() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = tmp.path().join("repo");
    fs::create_dir(&repo).unwrap();
    let status = Command::new("git").args(["init", "-q"]).current_dir(&repo).status().unwrap();
    assert!(status.success());
    let out = growthcast(&["run", "--repo", "repo", "--out", "out"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no models matched"), "{}", stderr(&out));
    let m = manifest(&tmp.path().join("out"));
    assert_eq!(m.failed_stage, Some(growthcast::Stage::Mine));
    assert_eq!(m.reason.as_deref(), Some("no models matched"));
}

#[test]
fn forecast_before_measure_names_the_missing_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = growthcast(&["forecast", "--out", "out"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("revisions.csv not found"), "{}", stderr(&out));
}

const FORECASTS: &str = "\
model_id,metric,approach,step,at,forecast,truth
m1,LOC,HOLT,1,2016-04-01,200,100
m1,LOC,HOLT,2,2016-04-02,220,110
m1,LOC,HOLT,3,2016-04-03,240,120
m1,LOC,HOLT,4,2016-04-04,260,130
m1,LOC,HOLT,5,2016-04-05,280,140
";

#[test]
fn evaluate_exits_one_on_threshold_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    fs::create_dir(&dir).unwrap();
    fs::write(dir.join("forecasts.csv"), FORECASTS).unwrap();

    let out = growthcast(&["evaluate", "--out", "out"], tmp.path());
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert_eq!(manifest(&dir).threshold_violations, Some(1));
    let records = growthcast::evaluation::read_evaluation_csv(&dir.join("evaluation.csv")).unwrap();
    assert_eq!(records.len(), 1);
    assert!((records[0].mean_pct_dev - 100.0).abs() < 1e-12);

    let out = growthcast(&["evaluate", "--out", "out", "--policy.max_error_pct", "100"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(manifest(&dir).threshold_violations, Some(0));
}

const EVALUATION: &str = "\
model_id,metric,approach,test_len,rmse_short,rmse_long,mean_pct_dev,above_threshold
a,LOC,HOLT,30,1.0,4.0,1.0,false
a,LOC,ARIMA,30,2.5,6.0,1.0,false
a,LOC,SVR,30,9.0,20.0,12.0,true
b,LOC,HOLT,30,2.0,3.0,1.0,false
b,LOC,ARIMA,30,2.5,5.0,1.0,false
b,LOC,SVR,30,7.0,30.0,9.0,true
c,LOC,HOLT,30,0.5,7.0,1.0,false
c,LOC,ARIMA,30,3.0,8.0,1.0,false
c,LOC,SVR,30,11.0,10.0,2.0,false
d,LOC,HOLT,30,,,1.0,false
";

/// Kruskal-Wallis H with midranks and tie correction, written out longhand.
fn oracle_h(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let rank = |x: f64| {
        let below = all.iter().filter(|&&v| v < x).count() as f64;
        let equal = all.iter().filter(|&&v| v == x).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let mut h = 0.0;
    for g in groups {
        let r: f64 = g.iter().map(|&x| rank(x)).sum();
        h += r * r / g.len() as f64;
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    let mut ties = 0.0;
    for (i, &x) in all.iter().enumerate() {
        if all[..i].contains(&x) {
            continue;
        }
        let t = all.iter().filter(|&&v| v == x).count() as f64;
        ties += t * t * t - t;
    }
    h / (1.0 - ties / (n * n * n - n))
}

#[test]
fn compare_reads_evaluation_csv_and_matches_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    fs::create_dir(&dir).unwrap();
    fs::write(dir.join("evaluation.csv"), EVALUATION).unwrap();
    let out = growthcast(&["compare", "--out", "out", "--exact-p", "--pairwise"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let report: ComparisonReport = serde_json::from_str(&fs::read_to_string(dir.join("comparison.json")).unwrap()).unwrap();
    let short = report.tests.iter().find(|t| t.horizon == Horizon::Short && t.metric == Metric::Loc).unwrap();
    let long = report.tests.iter().find(|t| t.horizon == Horizon::Long && t.metric == Metric::Loc).unwrap();
    assert_eq!(short.models, 3, "model d lacks approaches and is left out");

    let short_groups = vec![vec![1.0, 2.0, 0.5], vec![2.5, 2.5, 3.0], vec![9.0, 7.0, 11.0]];
    let kw = short.kruskal_wallis.as_ref().unwrap();
    assert!((kw.h - oracle_h(&short_groups)).abs() < 1e-12);
    assert_eq!(kw.df, 2);
    let long_groups = vec![vec![4.0, 3.0, 7.0], vec![6.0, 5.0, 8.0], vec![20.0, 30.0, 10.0]];
    assert!((long.kruskal_wallis.as_ref().unwrap().h - oracle_h(&long_groups)).abs() < 1e-12);
    assert!(short.exact_p.is_some());
    assert_eq!(short.pairwise.len(), 3);

    let bc = report.tests.iter().filter(|t| t.metric == Metric::Bc);
    assert!(bc.clone().count() > 0 && bc.clone().all(|t| t.skipped.is_some()));
    let svr = report.threshold_counts.iter().find(|c| c.approach == growthcast::ApproachKind::Svr).unwrap();
    assert_eq!((svr.flagged, svr.total), (2, 3));
}
