#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chrono::NaiveDate;
use growthcast::forecasters::{AnnGrid, Grids, LstmGrid, OptimizerKind, SvrGrid};
use growthcast::synthetic::{generate_corpus, write_snapshot, CorpusSpec, GeneratedRevision};
use growthcast::PipelineConfig;

pub fn growthcast(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_growthcast")).args(args).current_dir(cwd).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Snapshot corpus under `root`; returns the generated revisions.
pub fn snapshot_corpus(root: &Path, models: usize, seed: u64) -> Vec<GeneratedRevision> {
    let spec = CorpusSpec {
        models,
        start: NaiveDate::from_ymd_opt(2015, 9, 1).unwrap(),
        end: NaiveDate::from_ymd_opt(2016, 6, 25).unwrap(),
        commit_probability: 0.2,
        seed,
    };
    let (commits, truth) = generate_corpus(&spec);
    write_snapshot(root, &commits).unwrap();
    truth
}

/// Small grids so end-to-end runs finish quickly.
pub fn light_config(repo: &Path, out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.repo.root = repo.to_path_buf();
    cfg.repo.until = NaiveDate::from_ymd_opt(2016, 6, 30);
    cfg.out = out.to_path_buf();
    cfg.min_revisions = 10;
    cfg.runs = 1;
    cfg.grids = Grids {
        svr: SvrGrid { c: vec![1.0, 10.0], gamma: vec![0.1], epsilon: vec![0.01], lag: vec![3], ..Default::default() },
        ann: AnnGrid { lag: vec![3], hidden: vec![2], epochs: 100, ..Default::default() },
        lstm: LstmGrid {
            lag: vec![3],
            hidden: vec![4],
            epochs: vec![10],
            optimizer: vec![OptimizerKind::Adam],
            ..Default::default()
        },
    };
    cfg
}

/// Every output file except the manifest, keyed by relative path.
pub fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut found = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "manifest.json" {
                found.insert(path.strip_prefix(dir).unwrap().display().to_string(), fs::read(&path).unwrap());
            }
        }
    }
    found
}
