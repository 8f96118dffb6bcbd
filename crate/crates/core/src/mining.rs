//! Revision history mining.
//!
//! Two history sources are supported:
//!
//! * a git working copy, read through the `git` command line tool
//!   (first-parent linear history, renames seen as delete + add);
//! * a snapshot directory: `<root>/<rev-index>/<files...>` with a
//!   `<root>/manifest.tsv` listing `rev_index<TAB>commit_id<TAB>unix_timestamp`.
//!   Each revision directory holds the full tree at that revision; a file
//!   counts as changed when it is new or its bytes differ from the previous
//!   revision.
//!
//! Either way the result maps each tracked model file to the revisions that
//! changed it, ordered by `(timestamp, commit sequence)`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use chrono::{DateTime, NaiveDate};
use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;

pub const MANIFEST_FILE: &str = "manifest.tsv";

/// `block_count` value recorded when a revision fails to parse.
pub const BLOCK_PARSE_FAILURE: i64 = -1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoSource {
    pub root_path: PathBuf,
    pub include_patterns: Vec<String>,
    #[serde(default)]
    pub since: Option<NaiveDate>,
    #[serde(default)]
    pub until: Option<NaiveDate>,
}

impl RepoSource {
    pub fn new(root: impl Into<PathBuf>, patterns: impl IntoIterator<Item = impl Into<String>>) -> Self {
        RepoSource {
            root_path: root.into(),
            include_patterns: patterns.into_iter().map(Into::into).collect(),
            since: None,
            until: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.include_patterns.is_empty() {
            return Err(Error::invalid("include_patterns must not be empty"));
        }
        if let (Some(since), Some(until)) = (self.since, self.until) {
            if since > until {
                return Err(Error::invalid(format!("since {since} is after until {until}")));
            }
        }
        Ok(())
    }

    fn matcher(&self) -> Result<GlobSet> {
        let mut builder = GlobSetBuilder::new();
        for pattern in &self.include_patterns {
            let glob = Glob::new(pattern)
                .map_err(|e| Error::invalid(format!("bad include pattern {pattern:?}: {e}")))?;
            builder.add(glob);
        }
        builder
            .build()
            .map_err(|e| Error::invalid(format!("include patterns: {e}")))
    }

    fn in_window(&self, timestamp: i64) -> bool {
        let Some(day) = DateTime::from_timestamp(timestamp, 0).map(|t| t.date_naive()) else {
            return false;
        };
        self.since.is_none_or(|s| day >= s) && self.until.is_none_or(|u| day <= u)
    }
}

/// One revision of one model file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Revision {
    pub commit_id: String,
    /// Position of the commit in the linear history, oldest first.
    pub seq: usize,
    pub timestamp: i64,
    pub content: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionRecord {
    pub model_id: String,
    pub commit_id: String,
    pub timestamp: i64,
    pub loc: u64,
    pub block_count: i64,
}

impl RevisionRecord {
    /// True when the block parser failed on this revision.
    pub fn is_flagged(&self) -> bool {
        self.block_count < 0
    }
}

pub type ModelRevisions = BTreeMap<String, Vec<Revision>>;

pub fn list_model_revisions(src: &RepoSource) -> Result<ModelRevisions> {
    src.validate()?;
    let root = &src.root_path;
    let meta = fs::metadata(root).map_err(|e| Error::Repository {
        path: root.clone(),
        reason: e.to_string(),
    })?;
    if !meta.is_dir() {
        return Err(Error::Repository {
            path: root.clone(),
            reason: "not a directory".into(),
        });
    }
    let mut map = if root.join(MANIFEST_FILE).is_file() {
        snapshot_revisions(src)?
    } else {
        git_revisions(src)?
    };
    for revisions in map.values_mut() {
        revisions.sort_by_key(|r| (r.timestamp, r.seq));
    }
    map.retain(|_, revs| !revs.is_empty());
    Ok(map)
}

/// Measures each revision. A block-parse failure records
/// [`BLOCK_PARSE_FAILURE`] and keeps the line count.
pub fn measure_revisions(model_id: &str, revisions: &[Revision]) -> Vec<RevisionRecord> {
    revisions
        .iter()
        .map(|rev| {
            let text = String::from_utf8_lossy(&rev.content);
            let loc = metrics::count_loc(&text);
            let block_count = match metrics::parse_model(&text) {
                Ok(doc) => metrics::count_blocks(&doc) as i64,
                Err(err) => {
                    log::warn!("{model_id}@{}: block count unavailable: {err}", rev.commit_id);
                    BLOCK_PARSE_FAILURE
                }
            };
            RevisionRecord {
                model_id: model_id.to_string(),
                commit_id: rev.commit_id.clone(),
                timestamp: rev.timestamp,
                loc,
                block_count,
            }
        })
        .collect()
}

/// Measures all models in parallel; output is ordered by model id, then
/// revision order.
pub fn measure_all(models: &ModelRevisions) -> Vec<RevisionRecord> {
    let per_model: Vec<Vec<RevisionRecord>> = models
        .par_iter()
        .map(|(id, revs)| measure_revisions(id, revs))
        .collect();
    per_model.into_iter().flatten().collect()
}

pub fn write_revisions_csv(path: &Path, records: &[RevisionRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    if records.is_empty() {
        writer.write_record(["model_id", "commit_id", "timestamp", "loc", "block_count"])?;
    }
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_revisions_csv(path: &Path) -> Result<Vec<RevisionRecord>> {
    if !path.is_file() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let records = reader.deserialize().collect::<Result<Vec<RevisionRecord>, _>>()?;
    Ok(records)
}

/// Groups records by model, preserving their order.
pub fn group_by_model(records: &[RevisionRecord]) -> BTreeMap<String, Vec<RevisionRecord>> {
    let mut map: BTreeMap<String, Vec<RevisionRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.model_id.clone()).or_default().push(r.clone());
    }
    map
}

struct ManifestEntry {
    rev_index: u64,
    commit_id: String,
    timestamp: i64,
}

fn read_manifest(root: &Path) -> Result<Vec<ManifestEntry>> {
    let path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path)?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |reason: &str| Error::Repository {
            path: path.clone(),
            reason: format!("line {}: {reason}", idx + 1),
        };
        if fields.len() != 3 {
            return Err(bad("expected 3 tab-separated columns"));
        }
        let Ok(rev_index) = fields[0].trim().parse::<u64>() else {
            if idx == 0 {
                continue; // header
            }
            return Err(bad("rev_index is not an integer"));
        };
        let timestamp: i64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| bad("unix_timestamp is not an integer"))?;
        if timestamp <= 0 {
            return Err(bad("unix_timestamp must be positive"));
        }
        entries.push(ManifestEntry {
            rev_index,
            commit_id: fields[1].trim().to_string(),
            timestamp,
        });
    }
    entries.sort_by_key(|e| e.rev_index);
    Ok(entries)
}

fn snapshot_revisions(src: &RepoSource) -> Result<ModelRevisions> {
    let matcher = src.matcher()?;
    let entries = read_manifest(&src.root_path)?;
    let mut map: ModelRevisions = BTreeMap::new();
    let mut previous: HashMap<String, Vec<u8>> = HashMap::new();

    for (seq, entry) in entries.iter().enumerate() {
        let dir = src.root_path.join(entry.rev_index.to_string());
        if !dir.is_dir() {
            return Err(Error::Repository {
                path: dir,
                reason: "revision directory listed in manifest is missing".into(),
            });
        }
        let mut current: HashMap<String, Vec<u8>> = HashMap::new();
        for item in walkdir::WalkDir::new(&dir).sort_by_file_name() {
            let item = item.map_err(|e| Error::Repository {
                path: dir.clone(),
                reason: e.to_string(),
            })?;
            if !item.file_type().is_file() {
                continue;
            }
            let rel = item.path().strip_prefix(&dir).expect("walk stays under dir");
            let model_id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if !matcher.is_match(&model_id) {
                continue;
            }
            let content = fs::read(item.path())?;
            let changed = previous.get(&model_id) != Some(&content);
            if changed && src.in_window(entry.timestamp) {
                map.entry(model_id.clone()).or_default().push(Revision {
                    commit_id: entry.commit_id.clone(),
                    seq,
                    timestamp: entry.timestamp,
                    content: content.clone(),
                });
            }
            current.insert(model_id, content);
        }
        previous = current;
    }
    Ok(map)
}

fn git(root: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C").arg(root).args(["-c", "core.quotepath=off"]);
    cmd
}

fn git_error(root: &Path, what: &str, stderr: &[u8]) -> Error {
    Error::Repository {
        path: root.to_path_buf(),
        reason: format!("{what}: {}", String::from_utf8_lossy(stderr).trim()),
    }
}

fn git_revisions(src: &RepoSource) -> Result<ModelRevisions> {
    let root = &src.root_path;
    let probe = git(root)
        .args(["rev-parse", "--git-dir"])
        .output()
        .map_err(|e| Error::Repository {
            path: root.clone(),
            reason: format!("cannot run git: {e}"),
        })?;
    if !probe.status.success() {
        return Err(git_error(root, "not a git repository", &probe.stderr));
    }
    let head = git(root).args(["rev-parse", "--verify", "-q", "HEAD"]).output()?;
    if !head.status.success() {
        // no commits yet
        return Ok(BTreeMap::new());
    }

    let log = git(root)
        .args([
            "log",
            "--first-parent",
            "--diff-merges=first-parent",
            "--reverse",
            "--no-renames",
            "--name-status",
            "--format=@@%H%x09%ct",
        ])
        .output()?;
    if !log.status.success() {
        return Err(git_error(root, "git log failed", &log.stderr));
    }

    let matcher = src.matcher()?;
    // (model_id, commit_id, seq, timestamp) in history order
    let mut wanted: Vec<(String, String, usize, i64)> = Vec::new();
    let mut current: Option<(String, i64)> = None;
    let mut seq = 0usize;
    for line in String::from_utf8_lossy(&log.stdout).lines() {
        if let Some(header) = line.strip_prefix("@@") {
            let (hash, ts) = header
                .split_once('\t')
                .ok_or_else(|| git_error(root, "malformed log header", line.as_bytes()))?;
            let ts: i64 = ts
                .trim()
                .parse()
                .map_err(|_| git_error(root, "malformed commit time", line.as_bytes()))?;
            if current.is_some() {
                seq += 1;
            }
            current = Some((hash.to_string(), ts));
            continue;
        }
        let Some((status, path)) = line.split_once('\t') else {
            continue;
        };
        let Some((commit, ts)) = &current else {
            continue;
        };
        // deletions end a series; renames are disabled so R/C never appear
        if status.starts_with('D') || !matcher.is_match(path) || !src.in_window(*ts) {
            continue;
        }
        wanted.push((path.to_string(), commit.clone(), seq, *ts));
    }

    let specs: Vec<String> = wanted.iter().map(|(p, c, _, _)| format!("{c}:{p}")).collect();
    let blobs = cat_files(root, &specs)?;
    let mut map: ModelRevisions = BTreeMap::new();
    for ((model_id, commit_id, seq, timestamp), content) in wanted.into_iter().zip(blobs) {
        map.entry(model_id).or_default().push(Revision {
            commit_id,
            seq,
            timestamp,
            content,
        });
    }
    Ok(map)
}

/// Reads many `<rev>:<path>` objects through one `git cat-file --batch`.
fn cat_files(root: &Path, specs: &[String]) -> Result<Vec<Vec<u8>>> {
    if specs.is_empty() {
        return Ok(Vec::new());
    }
    let mut child = git(root)
        .args(["cat-file", "--batch"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input: String = specs.iter().map(|s| format!("{s}\n")).collect();
    let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));

    let mut reader = BufReader::new(child.stdout.take().expect("piped stdout"));
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(git_error(root, &format!("cannot read {spec}"), header.as_bytes()));
        }
        let size: usize = fields[2]
            .parse()
            .map_err(|_| git_error(root, "bad object size", header.as_bytes()))?;
        let mut content = vec![0u8; size];
        reader.read_exact(&mut content)?;
        let mut newline = [0u8; 1];
        reader.read_exact(&mut newline)?;
        out.push(content);
    }
    writer
        .join()
        .expect("writer thread panicked")
        .map_err(Error::Io)?;
    let status = child.wait()?;
    if !status.success() {
        return Err(git_error(root, "git cat-file failed", b""));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_snapshot(root: &Path, revs: &[(&str, i64, &[(&str, &str)])]) {
        let mut manifest = String::from("rev_index\tcommit_id\tunix_timestamp\n");
        for (i, (commit, ts, files)) in revs.iter().enumerate() {
            manifest.push_str(&format!("{i}\t{commit}\t{ts}\n"));
            let dir = root.join(i.to_string());
            fs::create_dir_all(&dir).unwrap();
            for (name, body) in *files {
                let path = dir.join(name);
                fs::create_dir_all(path.parent().unwrap()).unwrap();
                fs::write(path, body).unwrap();
            }
        }
        fs::write(root.join(MANIFEST_FILE), manifest).unwrap();
    }

    #[test]
    fn snapshot_history_lists_only_changing_revisions() {
        let tmp = tempfile::tempdir().unwrap();
        write_snapshot(
            tmp.path(),
            &[
                ("c1", 1_000, &[("A.mdl", "a1\n")]),
                ("c2", 2_000, &[("A.mdl", "a1\n"), ("B.mdl", "b1\n")]),
                ("c3", 3_000, &[("A.mdl", "a2\n"), ("B.mdl", "b1\n")]),
            ],
        );
        let src = RepoSource::new(tmp.path(), ["*.mdl"]);
        let map = list_model_revisions(&src).unwrap();
        let ids = |m: &str| map[m].iter().map(|r| r.commit_id.as_str()).collect::<Vec<_>>();
        assert_eq!(ids("A.mdl"), ["c1", "c3"]);
        assert_eq!(ids("B.mdl"), ["c2"]);
    }

    #[test]
    fn deleted_model_ends_its_series() {
        let tmp = tempfile::tempdir().unwrap();
        write_snapshot(
            tmp.path(),
            &[
                ("c1", 10, &[("sub/A.mdl", "x\n")]),
                ("c2", 20, &[("sub/A.mdl", "y\n")]),
                ("c3", 30, &[("other.txt", "z")]),
            ],
        );
        let src = RepoSource::new(tmp.path(), ["**/*.mdl"]);
        let map = list_model_revisions(&src).unwrap();
        assert_eq!(map.len(), 1);
        assert_eq!(map["sub/A.mdl"].len(), 2);
    }

    #[test]
    fn no_matching_files_gives_empty_map() {
        let tmp = tempfile::tempdir().unwrap();
        write_snapshot(tmp.path(), &[("c1", 10, &[("readme.md", "hi")])]);
        let map = list_model_revisions(&RepoSource::new(tmp.path(), ["*.mdl"])).unwrap();
        assert!(map.is_empty());
    }

    #[test]
    fn date_window_filters_revisions() {
        let tmp = tempfile::tempdir().unwrap();
        let day = 86_400;
        write_snapshot(
            tmp.path(),
            &[
                ("c1", day, &[("A.mdl", "1\n")]),
                ("c2", 5 * day, &[("A.mdl", "2\n")]),
                ("c3", 9 * day, &[("A.mdl", "3\n")]),
            ],
        );
        let mut src = RepoSource::new(tmp.path(), ["*.mdl"]);
        src.since = NaiveDate::from_ymd_opt(1970, 1, 3);
        src.until = NaiveDate::from_ymd_opt(1970, 1, 8);
        let map = list_model_revisions(&src).unwrap();
        assert_eq!(map["A.mdl"].len(), 1);
        assert_eq!(map["A.mdl"][0].commit_id, "c2");
    }

    #[test]
    fn invalid_sources_are_rejected() {
        let src = RepoSource::new("/definitely/not/here", ["*.mdl"]);
        assert!(matches!(list_model_revisions(&src), Err(Error::Repository { .. })));
        let empty = RepoSource::new(".", Vec::<String>::new());
        assert!(empty.validate().is_err());
        let mut reversed = RepoSource::new(".", ["*"]);
        reversed.since = NaiveDate::from_ymd_opt(2020, 1, 2);
        reversed.until = NaiveDate::from_ymd_opt(2020, 1, 1);
        assert!(reversed.validate().is_err());
    }

    #[test]
    fn measuring_keeps_order_and_flags_parse_failures() {
        let revs = vec![
            Revision { commit_id: "a".into(), seq: 0, timestamp: 1, content: b"".to_vec() },
            Revision {
                commit_id: "b".into(),
                seq: 1,
                timestamp: 2,
                content: b"Model {\n Block {\n }\n}\n".to_vec(),
            },
            Revision { commit_id: "c".into(), seq: 2, timestamp: 3, content: b"Model {\n".to_vec() },
        ];
        let recs = measure_revisions("m", &revs);
        assert_eq!(recs.iter().map(|r| r.commit_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!((recs[0].loc, recs[0].block_count), (0, 0));
        assert_eq!((recs[1].loc, recs[1].block_count), (4, 1));
        assert_eq!(recs[2].loc, 1);
        assert!(recs[2].is_flagged());
    }

    #[test]
    fn revisions_csv_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("revisions.csv");
        let recs = vec![RevisionRecord {
            model_id: "dir/with,comma.mdl".into(),
            commit_id: "abc".into(),
            timestamp: 1_450_000_000,
            loc: 12,
            block_count: -1,
        }];
        write_revisions_csv(&path, &recs).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("model_id,commit_id,timestamp,loc,block_count\n"));
        assert!(text.contains("\"dir/with,comma.mdl\""));
        assert_eq!(read_revisions_csv(&path).unwrap(), recs);
        assert!(matches!(
            read_revisions_csv(&tmp.path().join("nope.csv")),
            Err(Error::MissingInput(_))
        ));
    }

    struct GitHarness {
        dir: tempfile::TempDir,
    }

    impl GitHarness {
        fn new() -> Self {
            let h = GitHarness { dir: tempfile::tempdir().unwrap() };
            h.git(&["init", "-q"], 0);
            h
        }

        fn git(&self, args: &[&str], ts: i64) -> String {
            let date = format!("@{ts} +0000");
            let out = Command::new("git")
                .arg("-C")
                .arg(self.dir.path())
                .args(["-c", "user.name=t", "-c", "user.email=t@example.com", "-c", "commit.gpgsign=false"])
                .args(args)
                .env("GIT_AUTHOR_DATE", &date)
                .env("GIT_COMMITTER_DATE", &date)
                .output()
                .unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            String::from_utf8(out.stdout).unwrap().trim().to_string()
        }

        /// Writes (or with `None` deletes) files and commits at `ts`.
        fn commit(&self, changes: &[(&str, Option<&str>)], ts: i64) -> String {
            for (name, body) in changes {
                let path = self.dir.path().join(name);
                match body {
                    Some(b) => {
                        fs::create_dir_all(path.parent().unwrap()).unwrap();
                        fs::write(&path, b).unwrap();
                    }
                    None => fs::remove_file(&path).unwrap(),
                }
            }
            self.git(&["add", "-A"], ts);
            self.git(&["commit", "-q", "--allow-empty", "-m", "c"], ts);
            self.git(&["rev-parse", "HEAD"], ts)
        }

        fn source(&self) -> RepoSource {
            RepoSource::new(self.dir.path(), ["**/*.mdl"])
        }
    }

    fn ids(revs: &[Revision]) -> Vec<&str> {
        revs.iter().map(|r| r.commit_id.as_str()).collect()
    }

    #[test]
    fn git_history_keeps_only_touching_commits() {
        let h = GitHarness::new();
        let c1 = h.commit(&[("a.mdl", Some("A {\n}\n"))], 1_450_000_000);
        let c2 = h.commit(&[("sub/b.mdl", Some("B {\n}\n"))], 1_450_000_100);
        let c3 = h.commit(&[("a.mdl", Some("A {\n  x 1\n}\n")), ("notes.txt", Some("x"))], 1_450_000_200);
        let map = list_model_revisions(&h.source()).unwrap();
        assert_eq!(map.keys().collect::<Vec<_>>(), ["a.mdl", "sub/b.mdl"]);
        assert_eq!(ids(&map["a.mdl"]), [c1.as_str(), c3.as_str()]);
        assert_eq!(ids(&map["sub/b.mdl"]), [c2.as_str()]);
        assert_eq!(map["a.mdl"][1].content, b"A {\n  x 1\n}\n");
    }

    #[test]
    fn git_timestamps_equal_harness_times() {
        let h = GitHarness::new();
        let times = [1_400_000_000, 1_400_086_400, 1_400_090_000, 1_401_000_000, 1_402_000_000];
        let mut commits = Vec::new();
        for (i, &ts) in times.iter().enumerate() {
            commits.push(h.commit(&[("m.mdl", Some(&format!("M {{\n  v {i}\n}}\n")))], ts));
        }
        let map = list_model_revisions(&h.source()).unwrap();
        let revs = &map["m.mdl"];
        assert_eq!(revs.iter().map(|r| r.timestamp).collect::<Vec<_>>(), times);
        assert_eq!(ids(revs), commits.iter().map(String::as_str).collect::<Vec<_>>());
        let recs = measure_revisions("m.mdl", revs);
        assert!(recs.iter().all(|r| r.loc == 3 && r.block_count == 0));
    }

    #[test]
    fn git_deletion_ends_a_series_and_rename_starts_a_new_one() {
        let h = GitHarness::new();
        let c1 = h.commit(&[("a.mdl", Some("A {\n}\n")), ("b.mdl", Some("B {\n}\n"))], 1_450_000_000);
        let c2 = h.commit(&[("a.mdl", Some("A {\n  v 2\n}\n"))], 1_450_000_100);
        h.commit(&[("a.mdl", None)], 1_450_000_200);
        h.git(&["mv", "b.mdl", "c.mdl"], 1_450_000_300);
        let c4 = h.commit(&[], 1_450_000_300);
        let map = list_model_revisions(&h.source()).unwrap();
        assert_eq!(ids(&map["a.mdl"]), [c1.as_str(), c2.as_str()]);
        assert_eq!(ids(&map["b.mdl"]), [c1.as_str()]);
        assert_eq!(ids(&map["c.mdl"]), [c4.as_str()]);
    }

    #[test]
    fn git_same_second_commits_keep_history_order() {
        let h = GitHarness::new();
        let c1 = h.commit(&[("a.mdl", Some("A {\n}\n"))], 1_450_000_000);
        let c2 = h.commit(&[("a.mdl", Some("A {\n  v\n}\n"))], 1_450_000_000);
        let map = list_model_revisions(&h.source()).unwrap();
        assert_eq!(ids(&map["a.mdl"]), [c1.as_str(), c2.as_str()]);
        assert!(map["a.mdl"][0].seq < map["a.mdl"][1].seq);
    }

    #[test]
    fn git_repository_without_commits_is_empty() {
        let h = GitHarness::new();
        assert!(list_model_revisions(&h.source()).unwrap().is_empty());
        h.commit(&[("readme.txt", Some("x"))], 1_450_000_000);
        assert!(list_model_revisions(&h.source()).unwrap().is_empty());
    }

    #[test]
    fn plain_directory_is_not_a_repository() {
        let tmp = tempfile::tempdir().unwrap();
        let src = RepoSource::new(tmp.path(), ["*.mdl"]);
        assert!(matches!(list_model_revisions(&src), Err(Error::Repository { .. })));
        let missing = RepoSource::new(tmp.path().join("missing"), ["*.mdl"]);
        assert!(matches!(list_model_revisions(&missing), Err(Error::Repository { .. })));
    }
}
