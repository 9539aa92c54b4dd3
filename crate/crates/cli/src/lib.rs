//! Command-line front end: scenario configs, results CSV, SVG charts and
//! the run manifest.

pub mod chart;
pub mod config;
pub mod csv_io;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use routerq::scenario::{builtin_scenario, builtin_scenarios, run_scenario, ScenarioSpec};
use routerq::validation::oracle_suite;
use routerq::Metric;

pub use chart::emit_chart;
pub use csv_io::{emit_csv, load_csv, read_csv, write_csv};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "routerq", version, about = "Router queueing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario sweep and write scenario_<id>.csv plus a manifest.
    Simulate {
        /// Built-in scenario id (A, B, C, D) or a config file path.
        #[arg(long)]
        scenario: String,
        #[arg(long, env = "ROUTERQ_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        arrivals: Option<u64>,
    },
    /// Run the oracle suite; exit 1 if any check fails.
    Validate {
        #[arg(long, env = "ROUTERQ_SEED")]
        seed: Option<u64>,
    },
    /// Print the canonical config of every built-in scenario.
    Scenarios,
    /// Render one metric of a results CSV as an SVG chart.
    Chart {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Exit status: 0 success, 1 runtime or validation failure, 2 usage error.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn resolve_scenario(arg: &str) -> Result<ScenarioSpec> {
    if let Some(spec) = builtin_scenario(arg) {
        return Ok(spec);
    }
    let path = Path::new(arg);
    if !path.is_file() {
        return Err(UsageError(format!(
            "unknown scenario `{arg}`: expected A, B, C, D or a config file"
        ))
        .into());
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    config::parse_config(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Simulate {
            scenario,
            seed,
            out,
            parallel,
            replications,
            arrivals,
        } => {
            let mut spec = resolve_scenario(&scenario)?;
            if let Some(r) = replications {
                spec.replications = r;
            }
            if let Some(a) = arrivals {
                spec.arrivals_per_replication = a;
            }
            if parallel == Some(0) {
                return Err(UsageError("--parallel must be at least 1".into()).into());
            }
            spec.validate().map_err(|e| UsageError(e.to_string()))?;
            let seed = seed.unwrap_or(DEFAULT_SEED);
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let started = Instant::now();
            let report = run_scenario(&spec, seed, parallel)?;
            let csv_path = out.join(format!("scenario_{}.csv", spec.id));
            emit_csv(&report, &csv_path)?;
            let manifest = manifest::RunManifest::new(&spec, &report, seed, started.elapsed());
            let manifest_path = out.join(format!("scenario_{}.manifest", spec.id));
            std::fs::write(&manifest_path, manifest.to_text())
                .with_context(|| format!("writing {}", manifest_path.display()))?;
            println!("wrote {} ({} rows)", csv_path.display(), report.rows.len());
            for f in &manifest.failures {
                eprintln!("arm failure: {f}");
            }
            Ok(if report.failures.is_empty() { 0 } else { 1 })
        }
        Command::Validate { seed } => {
            let checks = oracle_suite(seed.unwrap_or(DEFAULT_SEED));
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            Ok(if ok { 0 } else { 1 })
        }
        Command::Scenarios => {
            for spec in builtin_scenarios() {
                println!("{}", config::to_config_text(&spec));
            }
            Ok(0)
        }
        Command::Chart { input, metric, out } => {
            let report = load_csv(&input)?;
            if report.rows.is_empty() {
                bail!("{} has no rows", input.display());
            }
            emit_chart(&report, metric, &out)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}
