//! `metafeat`: batch experiment driver.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use metafeat_core::experiment::{
    cmd_adversary, cmd_run, cmd_sweep, to_csv, with_jobs, Axis, ExperimentConfig, SweepConfig, GAME_HEADER, REGIME_HEADER, RUN_HEADER, SWEEP_HEADER,
};

#[derive(Parser)]
#[command(name = "metafeat", version, about = "Run probe-metered lifelong learning experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured protocol; writes report.json and report.csv.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write every generated task to streams.json.
        #[arg(long)]
        dump_streams: bool,
    },
    /// Sweep one parameter; writes report.json and report.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides the config's sweep axis (m, N, K, r or c).
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values; overrides the config's list.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
    },
    /// Guessing-game statistics and lower-bound regime streams; writes
    /// report.json, game.csv and regimes.csv.
    Adversary(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for trials.
    #[arg(long)]
    jobs: Option<usize>,
    /// Exit 1 if any bound check or the probe envelope fails.
    #[arg(long)]
    strict: bool,
    /// Output directory (default: the config's out_dir, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed_override: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(&self.config).with_context(|| format!("reading {}", self.config.display()))?;
        let mut cfg = ExperimentConfig::from_json(&text).with_context(|| format!("in {}", self.config.display()))?;
        if let Some(seed) = self.seed_override {
            cfg.stream.seed = seed;
        }
        cfg.strict |= self.strict;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> Result<PathBuf> {
        let dir = self.out.clone().or_else(|| cfg.out_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn parse_axis(s: &str) -> Result<Axis> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| anyhow::anyhow!("unknown sweep axis {s:?}; expected m, N, K, r or c"))
}

/// Returns whether strict mode found violations.
fn execute(cmd: Cmd) -> Result<bool> {
    let (common, violations) = match cmd {
        Cmd::Run { common: c, dump_streams: dump } => {
            let cfg = c.load()?;
            let dir = c.out_dir(&cfg)?;
            if dump {
                write(&dir, "streams.json", &serde_json::to_string(&metafeat_core::experiment::dump_streams(&cfg)?)?)?;
            }
            let out = with_jobs(c.jobs, || cmd_run(&cfg))??;
            write(&dir, "report.json", &serde_json::to_string_pretty(&out)?)?;
            write(&dir, "report.csv", &to_csv(&out.rows(), &RUN_HEADER)?)?;
            (cfg, out.violations)
        }
        Cmd::Sweep { common: c, axis, values } => {
            let mut cfg = c.load()?;
            if axis.is_some() || values.is_some() {
                let old = cfg.sweep.take();
                let axis = match axis {
                    Some(a) => parse_axis(&a)?,
                    None => old.as_ref().map(|s| s.axis).context("--values needs --axis or a sweep section in the config")?,
                };
                let values = values.or_else(|| old.map(|s| s.values)).unwrap_or_default();
                cfg.sweep = Some(SweepConfig { axis, values });
                cfg.validate()?;
            }
            let dir = c.out_dir(&cfg)?;
            let out = with_jobs(c.jobs, || cmd_sweep(&cfg))??;
            write(&dir, "report.json", &serde_json::to_string_pretty(&out)?)?;
            write(&dir, "report.csv", &to_csv(&out.rows, &SWEEP_HEADER)?)?;
            (cfg, out.violations)
        }
        Cmd::Adversary(c) => {
            let cfg = c.load()?;
            let dir = c.out_dir(&cfg)?;
            let out = with_jobs(c.jobs, || cmd_adversary(&cfg))??;
            write(&dir, "report.json", &serde_json::to_string_pretty(&out)?)?;
            write(&dir, "game.csv", &to_csv(&out.game, &GAME_HEADER)?)?;
            write(&dir, "regimes.csv", &to_csv(&out.regimes, &REGIME_HEADER)?)?;
            (cfg, out.violations)
        }
    };
    for v in &violations {
        eprintln!("violation: {v}");
    }
    Ok(common.strict && !violations.is_empty())
}

fn main() -> ExitCode {
    match execute(Cli::parse().cmd) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("strict mode: bound violations found");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
