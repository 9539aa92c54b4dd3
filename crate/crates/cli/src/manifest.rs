//! Run manifest written next to each results CSV.

use std::fmt::Write as _;
use std::time::Duration;

use routerq::scenario::{MetricsReport, ScenarioSpec};

use crate::config::config_hash;

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub tool_version: String,
    pub replications: usize,
    pub arrivals_per_replication: u64,
    pub rows_per_arm: Vec<(String, usize)>,
    pub failures: Vec<String>,
    pub wall_clock: Duration,
}

impl RunManifest {
    pub fn new(spec: &ScenarioSpec, report: &MetricsReport, base_seed: u64, wall_clock: Duration) -> Self {
        Self {
            scenario: spec.id.clone(),
            config_hash: config_hash(spec),
            base_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            replications: spec.replications,
            arrivals_per_replication: spec.arrivals_per_replication,
            rows_per_arm: report.rows_per_arm(),
            failures: report
                .failures
                .iter()
                .map(|f| match f.lambda1 {
                    Some(l) => format!("{} @ lambda1={l:e}: {}", f.arm, f.message),
                    None => format!("{}: {}", f.arm, f.message),
                })
                .collect(),
            wall_clock,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario = {}", self.scenario);
        let _ = writeln!(out, "config_hash = {}", self.config_hash);
        let _ = writeln!(out, "base_seed = {}", self.base_seed);
        let _ = writeln!(out, "tool_version = {}", self.tool_version);
        let _ = writeln!(out, "replications = {}", self.replications);
        let _ = writeln!(out, "arrivals_per_replication = {}", self.arrivals_per_replication);
        for (arm, rows) in &self.rows_per_arm {
            let _ = writeln!(out, "rows[{arm}] = {rows}");
        }
        for f in &self.failures {
            let _ = writeln!(out, "failure = {f}");
        }
        let _ = writeln!(out, "wall_clock_seconds = {:.3}", self.wall_clock.as_secs_f64());
        out
    }
}
