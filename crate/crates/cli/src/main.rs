use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use growthcast::{IndexMode, Pipeline, PipelineConfig, Stage};

/// Mine model-file size histories and compare growth forecasters.
#[derive(Debug, Parser)]
#[command(name = "growthcast", version, about)]
struct Cli {
    #[command(flatten)]
    opts: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every stage in order.
    Run,
    /// List the revisions that changed each model file.
    Mine,
    /// Measure LOC and block count of every mined revision.
    Measure,
    /// Build series, fit all approaches and forecast the test segment.
    Forecast,
    /// Score forecasts against the test segment.
    Evaluate,
    /// Kruskal-Wallis comparison of the approaches.
    Compare,
    /// Print the effective configuration as TOML.
    PrintConfig,
}

#[derive(Debug, Args)]
struct Overrides {
    /// TOML (or .json) configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Series index: daily or commits.
    #[arg(long, global = true)]
    index: Option<IndexMode>,
    /// Models with fewer revisions are excluded.
    #[arg(long, global = true)]
    min_revisions: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repository or snapshot directory.
    #[arg(long, global = true)]
    repo: Option<PathBuf>,
    /// Glob selecting model files (repeatable).
    #[arg(long, global = true)]
    include: Vec<String>,
    /// Flag models whose mean percent deviation exceeds this.
    #[arg(long = "policy.max_error_pct", global = true)]
    max_error_pct: Option<f64>,
    /// Add pairwise two-approach tests to the comparison.
    #[arg(long, global = true)]
    pairwise: bool,
    /// Add exact permutation p-values where N ≤ 10.
    #[arg(long, global = true)]
    exact_p: bool,
    /// Increase log verbosity.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Overrides {
    fn apply(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => PipelineConfig::default(),
        };
        if self.jobs.is_some() {
            cfg.jobs = self.jobs;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(index) = self.index {
            cfg.index = index;
        }
        if let Some(n) = self.min_revisions {
            cfg.min_revisions = n;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(repo) = &self.repo {
            cfg.repo.root = repo.clone();
        }
        if !self.include.is_empty() {
            cfg.repo.include = self.include.clone();
        }
        if let Some(pct) = self.max_error_pct {
            cfg.policy.max_error_pct = pct;
        }
        cfg.compare.pairwise |= self.pairwise;
        cfg.compare.exact_p |= self.exact_p;
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let cfg = cli.opts.apply()?;
    let stages: Vec<Stage> = match cli.command {
        Command::PrintConfig => {
            print!("{}", cfg.to_toml()?);
            return Ok(ExitCode::SUCCESS);
        }
        Command::Run => Stage::ALL.to_vec(),
        Command::Mine => vec![Stage::Mine],
        Command::Measure => vec![Stage::Measure],
        Command::Forecast => vec![Stage::Forecast],
        Command::Evaluate => vec![Stage::Evaluate],
        Command::Compare => vec![Stage::Compare],
    };
    let mut pipeline = match cli.command {
        Command::Run => Pipeline::fresh(cfg)?,
        _ => Pipeline::open(cfg)?,
    };
    for &stage in &stages {
        pipeline.run(stage).with_context(|| format!("stage {stage} failed"))?;
    }
    let manifest = pipeline.manifest();
    if stages.contains(&Stage::Evaluate) {
        if let Some(n) = manifest.threshold_violations.filter(|&n| n > 0) {
            eprintln!("{n} forecasts exceed max_error_pct {}", pipeline.config().policy.max_error_pct);
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.opts.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
