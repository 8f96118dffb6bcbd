//! Seeded synthetic corpora for demos, tests and benchmarks.
//!
//! [`generate_corpus`] produces a linear history in which model files grow
//! by a few blocks per commit, and [`write_snapshot`] lays it out in the
//! snapshot-directory format read by [`crate::mining`].
//! [`growth_series`] produces step-shaped upward series directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng as _;

use crate::error::Result;
use crate::mining::MANIFEST_FILE;
use crate::rng::{rng_from_seed, Rng};

/// Model text with `blocks` gain blocks and `padding` annotation lines.
pub fn model_text(name: &str, blocks: usize, padding: usize) -> String {
    let mut s = format!("Model {{\n  Name \"{name}\"\n  System {{\n");
    for b in 0..blocks {
        s.push_str(&format!("    Block {{\n      BlockType Gain\n      Name \"g{b}\"\n    }}\n"));
    }
    s.push_str("  }\n");
    for p in 0..padding {
        s.push_str(&format!("  Annotation \"note {p}\"\n"));
    }
    s.push_str("}\n");
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub models: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Chance that a given day has a commit.
    pub commit_probability: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotCommit {
    pub commit_id: String,
    pub timestamp: i64,
    /// Full tree at this commit.
    pub files: BTreeMap<String, String>,
}

/// One model revision as generated.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRevision {
    pub model_id: String,
    pub commit_id: String,
    pub timestamp: i64,
    pub blocks: usize,
    pub content: String,
}

struct ModelState {
    blocks: usize,
    padding: usize,
}

/// Every model is created by the first commit; each later commit touches
/// one or two models and never shrinks them.
pub fn generate_corpus(spec: &CorpusSpec) -> (Vec<SnapshotCommit>, Vec<GeneratedRevision>) {
    let mut rng = rng_from_seed(spec.seed);
    let names: Vec<String> = (0..spec.models).map(|m| format!("models/m{m:02}.mdl")).collect();
    let mut states: Vec<ModelState> =
        (0..spec.models).map(|_| ModelState { blocks: rng.gen_range(5..40), padding: rng.gen_range(0..30) }).collect();
    let mut commits = Vec::new();
    let mut truth = Vec::new();
    let mut day = spec.start;
    let mut first = true;
    while day <= spec.end {
        if first || rng.gen_bool(spec.commit_probability) {
            let midnight = day.and_hms_opt(0, 0, 0).expect("valid time").and_utc().timestamp();
            let timestamp = midnight + rng.gen_range(0..86_400);
            let touched: Vec<usize> = if first {
                (0..spec.models).collect()
            } else {
                let a = rng.gen_range(0..spec.models);
                let b = rng.gen_range(0..spec.models);
                if a == b || rng.gen_bool(0.7) { vec![a] } else { vec![a.min(b), a.max(b)] }
            };
            let commit_id = format!("c{:05}", commits.len());
            for &m in &touched {
                if !first {
                    states[m].blocks += rng.gen_range(0..4);
                    states[m].padding += rng.gen_range(1..12);
                }
                truth.push(GeneratedRevision {
                    model_id: names[m].clone(),
                    commit_id: commit_id.clone(),
                    timestamp,
                    blocks: states[m].blocks,
                    content: model_text(&names[m], states[m].blocks, states[m].padding),
                });
            }
            let files = names
                .iter()
                .zip(&states)
                .map(|(n, s)| (n.clone(), model_text(n, s.blocks, s.padding)))
                .collect();
            commits.push(SnapshotCommit { commit_id, timestamp, files });
            first = false;
        }
        day = day.succ_opt().expect("date in range");
    }
    (commits, truth)
}

/// Writes `<root>/<index>/<files>` and `manifest.tsv`.
pub fn write_snapshot(root: &Path, commits: &[SnapshotCommit]) -> Result<()> {
    let mut manifest = String::from("rev_index\tcommit_id\tunix_timestamp\n");
    for (i, c) in commits.iter().enumerate() {
        manifest.push_str(&format!("{i}\t{}\t{}\n", c.commit_id, c.timestamp));
        let dir = root.join(i.to_string());
        for (name, body) in &c.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, body)?;
        }
    }
    fs::create_dir_all(root)?;
    fs::write(root.join(MANIFEST_FILE), manifest)?;
    Ok(())
}

/// An upward, step-shaped size series of `n` revisions: mostly small
/// growth, occasional larger jumps and rare small shrinks.
pub fn growth_series(rng: &mut Rng, n: usize) -> Vec<f64> {
    let mut level: f64 = rng.gen_range(500.0..5000.0);
    let slope: f64 = rng.gen_range(2.0..30.0);
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            level += if u < 0.1 {
                -rng.gen_range(0.0..slope)
            } else if u < 0.15 {
                rng.gen_range(3.0..8.0) * slope
            } else {
                rng.gen_range(0.0..2.0) * slope
            };
            level = level.max(1.0);
            level.round()
        })
        .collect()
}
