//! `hypervol <command> --config <json> [--seed N] [--out path] [--threads N]`
//!
//! Writes the command's table to `--out` (or stdout) and its checks to stderr.
//! Exits 0 only when every check passes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use hypervol::experiments::{self, Command, RunConfig};
use log::info;

#[derive(Debug, Parser)]
#[command(name = "hypervol", version, about = "Hyperbolic hull and volume experiments")]
struct Cli {
    /// theorem1-sweep, theorem2-check, cone-table, extremal-search, mass-near-vertices or hull-volume
    command: Command,
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent (attachments are then skipped)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; output does not depend on this
    #[arg(long)]
    threads: Option<usize>,
}

fn attachment_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("building thread pool")?;
    }
    let text = fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let mut config = RunConfig::from_json(&text).with_context(|| format!("parsing {}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    // A relative input path is taken relative to the config file.
    if let Some(input) = &config.input {
        if input.is_relative() && !input.exists() {
            if let Some(dir) = cli.config.parent() {
                config.input = Some(dir.join(input));
            }
        }
    }
    let out = cli.out.clone().or_else(|| config.output.clone());
    info!("running {} with seed {}", cli.command, config.seed);
    let output = experiments::run(cli.command, &config)?;
    match &out {
        Some(path) => {
            fs::write(path, &output.body).with_context(|| format!("writing {}", path.display()))?;
            for (suffix, body) in &output.attachments {
                let p = attachment_path(path, suffix);
                fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        None => print!("{}", output.body),
    }
    for check in &output.checks {
        eprintln!("{check}");
    }
    Ok(output.passed())
}
