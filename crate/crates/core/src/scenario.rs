//! Scenario grids (arms × λ₁ sweep × replications) and their aggregation
//! into a [`MetricsReport`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::node::{Discipline, NodeConfig};
use crate::router::{
    run_replication, ArrivalStream, FullForwardingPolicy, NetworkClassMetrics, NetworkMetrics, ReplicationResult,
    RouterConfig, RunOptions, Security,
};
use crate::stats::Estimate;
use crate::variates::{replication_seed, GeParams};

/// Output label of a traffic class: `VT` (class 0), `FF` (class 1).
pub fn class_label(class: usize) -> String {
    match class {
        0 => "VT".to_string(),
        1 => "FF".to_string(),
        k => format!("C{k}"),
    }
}

pub const TOTAL_LABEL: &str = "total";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// Mean response time.
    W,
    /// Mean number of packets in the router.
    Mql,
    /// Packet loss probability.
    Pl,
    /// Utilization.
    Util,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::W, Metric::Mql, Metric::Pl, Metric::Util];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::W => "W",
            Metric::Mql => "MQL",
            Metric::Pl => "PL",
            Metric::Util => "UTIL",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Metric::W => "Mean response time (s)",
            Metric::Mql => "Mean queue length (packets)",
            Metric::Pl => "Packet loss probability",
            Metric::Util => "Total utilization",
        }
    }

    pub fn of(&self, m: &NetworkClassMetrics) -> f64 {
        match self {
            Metric::W => m.mean_response,
            Metric::Mql => m.mean_in_system,
            Metric::Pl => m.loss_probability,
            Metric::Util => m.utilization,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| invalid(format!("unknown metric `{s}` (expected W, MQL, PL or UTIL)")))
    }
}

/// One configuration of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub discipline: Discipline,
    pub servers: usize,
    pub security: Security,
    pub scv_a1: f64,
    pub scv_a2: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// `A`–`D` or `custom`.
    pub id: String,
    /// λ₁, high-priority (VT) arrival rates in packets/s.
    pub lambda1_sweep: Vec<f64>,
    /// λ₂, low-priority (FF) arrival rate.
    pub lambda2: f64,
    /// Per-server service rate.
    pub mu: f64,
    pub scv_s: f64,
    pub capacity: usize,
    pub servers: Vec<usize>,
    pub disciplines: Vec<Discipline>,
    pub security: Vec<Security>,
    /// (SCVa1, SCVa2) pairs.
    pub arrival_scv: Vec<(f64, f64)>,
    pub accept_prob: f64,
    /// ACL service rate; twice `mu` when unset.
    pub acl_rate: Option<f64>,
    pub acl_scv: f64,
    pub replications: usize,
    pub arrivals_per_replication: u64,
    pub warmup_fraction: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            id: "custom".to_string(),
            lambda1_sweep: (1..=10).map(|k| k as f64 * 1e5).collect(),
            lambda2: 5e5,
            mu: 17e5,
            scv_s: 4.0,
            capacity: 50,
            servers: vec![4],
            disciplines: vec![Discipline::Hol],
            security: vec![Security::Off],
            arrival_scv: vec![(4.0, 4.0)],
            accept_prob: 1.0,
            acl_rate: None,
            acl_scv: 4.0,
            replications: 20,
            arrivals_per_replication: 1_000_000,
            warmup_fraction: 0.1,
        }
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl ScenarioSpec {
    pub fn acl_rate(&self) -> f64 {
        self.acl_rate.unwrap_or(2.0 * self.mu)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda1_sweep.is_empty() {
            return Err(invalid("lambda1 sweep is empty"));
        }
        if let Some(l) = self.lambda1_sweep.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(invalid(format!("lambda1 values must be >= 0, got {l}")));
        }
        if !(self.lambda2.is_finite() && self.lambda2 >= 0.0) {
            return Err(invalid(format!("lambda2 must be >= 0, got {}", self.lambda2)));
        }
        GeParams::new(self.mu, self.scv_s)?;
        GeParams::new(self.acl_rate(), self.acl_scv)?;
        for &(a1, a2) in &self.arrival_scv {
            ArrivalStream::new(0, 1.0, a1)?;
            ArrivalStream::new(1, 1.0, a2)?;
        }
        if self.servers.is_empty() || self.disciplines.is_empty() || self.security.is_empty() || self.arrival_scv.is_empty()
        {
            return Err(invalid("every arm axis needs at least one value"));
        }
        for &c in &self.servers {
            NodeConfig::new(c, self.capacity, Discipline::Fcfs, GeParams::new(self.mu, self.scv_s)?)?;
        }
        if !(0.0..=1.0).contains(&self.accept_prob) {
            return Err(invalid(format!("accept_prob must lie in [0, 1], got {}", self.accept_prob)));
        }
        if self.replications == 0 {
            return Err(invalid("replications must be >= 1"));
        }
        RunOptions {
            seed: 0,
            arrivals: self.arrivals_per_replication,
            warmup_fraction: self.warmup_fraction,
            trace: false,
        }
        .validate()
    }

    /// Cartesian product of the axes: discipline × servers × security × SCV.
    /// Labels name only the axes that take more than one value.
    pub fn arms(&self) -> Vec<Arm> {
        let mut arms = Vec::new();
        for &discipline in &self.disciplines {
            for &servers in &self.servers {
                for &security in &self.security {
                    for &(scv_a1, scv_a2) in &self.arrival_scv {
                        let mut parts = Vec::new();
                        if self.disciplines.len() > 1 {
                            parts.push(discipline.to_string());
                        }
                        if self.servers.len() > 1 {
                            parts.push(format!("c={servers}"));
                        }
                        if self.security.len() > 1 {
                            parts.push(format!("SEC={security}"));
                        }
                        if self.arrival_scv.len() > 1 {
                            if scv_a1 == scv_a2 {
                                parts.push(format!("SCV={}", fmt_num(scv_a1)));
                            } else {
                                parts.push(format!("SCV={}+{}", fmt_num(scv_a1), fmt_num(scv_a2)));
                            }
                        }
                        let label = if parts.is_empty() {
                            discipline.to_string()
                        } else {
                            parts.join("/")
                        };
                        arms.push(Arm {
                            discipline,
                            servers,
                            security,
                            scv_a1,
                            scv_a2,
                            label,
                        });
                    }
                }
            }
        }
        arms
    }

    pub fn router_config(&self, arm: &Arm) -> Result<RouterConfig> {
        let forwarding = NodeConfig::new(arm.servers, self.capacity, arm.discipline, GeParams::new(self.mu, self.scv_s)?)?;
        let acl = NodeConfig::new(
            arm.servers,
            self.capacity,
            arm.discipline,
            GeParams::new(self.acl_rate(), self.acl_scv)?,
        )?;
        let config = RouterConfig {
            security: arm.security,
            acl,
            forwarding,
            accept_prob: self.accept_prob,
            full_forwarding_policy: FullForwardingPolicy::Drop,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn streams(&self, arm: &Arm, lambda1: f64) -> Result<Vec<ArrivalStream>> {
        Ok(vec![
            ArrivalStream::new(0, lambda1, arm.scv_a1)?,
            ArrivalStream::new(1, self.lambda2, arm.scv_a2)?,
        ])
    }

    pub fn run_options(&self, seed: u64) -> RunOptions {
        RunOptions {
            seed,
            arrivals: self.arrivals_per_replication,
            warmup_fraction: self.warmup_fraction,
            trace: false,
        }
    }
}

fn preset(id: &str) -> ScenarioSpec {
    let base = ScenarioSpec {
        id: id.to_string(),
        ..ScenarioSpec::default()
    };
    match id {
        "A" => ScenarioSpec {
            disciplines: vec![Discipline::Fcfs, Discipline::Hol],
            ..base
        },
        "B" => ScenarioSpec {
            security: vec![Security::On, Security::Off],
            arrival_scv: vec![(5.0, 5.0), (10.0, 10.0)],
            ..base
        },
        "C" => ScenarioSpec {
            servers: vec![1, 4],
            ..base
        },
        "D" => ScenarioSpec {
            security: vec![Security::Off, Security::On],
            ..base
        },
        _ => base,
    }
}

/// Built-in scenario by id (`A`–`D`, case-insensitive).
pub fn builtin_scenario(id: &str) -> Option<ScenarioSpec> {
    let id = id.trim().to_ascii_uppercase();
    matches!(id.as_str(), "A" | "B" | "C" | "D").then(|| preset(&id))
}

/// Scenarios A–D.
pub fn builtin_scenarios() -> Vec<ScenarioSpec> {
    ["A", "B", "C", "D"].iter().map(|id| preset(id)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub arm: String,
    pub lambda1: f64,
    pub class: String,
    pub metric: Metric,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmFailure {
    pub arm: String,
    pub lambda1: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub scenario: String,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<ArmFailure>,
}

impl MetricsReport {
    /// Order rows by (scenario, arm, λ₁, class, metric name).
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            a.scenario
                .cmp(&b.scenario)
                .then_with(|| a.arm.cmp(&b.arm))
                .then_with(|| a.lambda1.total_cmp(&b.lambda1))
                .then_with(|| a.class.cmp(&b.class))
                .then_with(|| a.metric.name().cmp(b.metric.name()))
        });
    }

    pub fn get(&self, arm: &str, lambda1: f64, class: &str, metric: Metric) -> Option<&Estimate> {
        self.rows
            .iter()
            .find(|r| r.arm == arm && r.lambda1 == lambda1 && r.class == class && r.metric == metric)
            .map(|r| &r.estimate)
    }

    /// Distinct arm labels in first-seen order.
    pub fn arms(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.arm) {
                out.push(r.arm.clone());
            }
        }
        out
    }

    pub fn lambda1_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.rows.iter().map(|r| r.lambda1).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn rows_per_arm(&self) -> Vec<(String, usize)> {
        self.arms()
            .into_iter()
            .map(|a| {
                let n = self.rows.iter().filter(|r| r.arm == a).count();
                (a, n)
            })
            .collect()
    }
}

/// Run every replication of one (arm, λ₁) point serially. Replication `i`
/// uses seed `replication_seed(base_seed, i)`, shared across arms and sweep
/// points.
pub fn run_point(spec: &ScenarioSpec, arm: &Arm, lambda1: f64, base_seed: u64) -> Result<Vec<ReplicationResult>> {
    let config = spec.router_config(arm)?;
    let streams = spec.streams(arm, lambda1)?;
    (0..spec.replications)
        .map(|i| run_replication(&config, &streams, &spec.run_options(replication_seed(base_seed, i as u64))))
        .collect()
}

fn aggregate_rows(spec: &ScenarioSpec, arm: &str, lambda1: f64, reps: &[NetworkMetrics]) -> Vec<ReportRow> {
    let classes = reps.first().map_or(0, |r| r.classes.len());
    let mut rows = Vec::new();
    let mut push = |class: String, pick: &dyn Fn(&NetworkMetrics) -> &NetworkClassMetrics| {
        for metric in Metric::ALL {
            let samples: Vec<f64> = reps.iter().map(|r| metric.of(pick(r))).collect();
            rows.push(ReportRow {
                scenario: spec.id.clone(),
                arm: arm.to_string(),
                lambda1,
                class: class.clone(),
                metric,
                estimate: Estimate::from_samples(&samples),
            });
        }
    };
    for k in 0..classes {
        push(class_label(k), &|r| &r.classes[k]);
    }
    push(TOTAL_LABEL.to_string(), &|r| &r.total);
    rows
}

/// Run the whole grid and aggregate each metric over replications (mean and
/// Student-t 95% CI). With `parallel = Some(k)` replications run on a
/// dedicated pool of `k` threads; results are always combined in
/// replication-index order, so the report does not depend on `k`.
///
/// A failing arm or point is recorded in `failures` and the rest still runs.
pub fn run_scenario(spec: &ScenarioSpec, base_seed: u64, parallel: Option<usize>) -> Result<MetricsReport> {
    run_scenario_inspected(spec, base_seed, parallel, |_, _, _| {})
}

/// [`run_scenario`], additionally handing every finished replication to
/// `inspect` along with its arm and λ₁. Call order follows thread scheduling.
pub fn run_scenario_inspected<F>(
    spec: &ScenarioSpec,
    base_seed: u64,
    parallel: Option<usize>,
    inspect: F,
) -> Result<MetricsReport>
where
    F: Fn(&Arm, f64, &ReplicationResult) + Sync,
{
    spec.validate()?;
    let arms = spec.arms();
    let mut report = MetricsReport {
        scenario: spec.id.clone(),
        ..MetricsReport::default()
    };

    struct Job {
        arm: usize,
        point: usize,
        rep: usize,
    }
    let mut prepared = Vec::new();
    for arm in &arms {
        match spec.router_config(arm) {
            Ok(config) => prepared.push(Some(config)),
            Err(e) => {
                report.failures.push(ArmFailure {
                    arm: arm.label.clone(),
                    lambda1: None,
                    message: e.to_string(),
                });
                prepared.push(None);
            }
        }
    }
    let mut jobs = Vec::new();
    for (a, config) in prepared.iter().enumerate() {
        if config.is_none() {
            continue;
        }
        for point in 0..spec.lambda1_sweep.len() {
            for rep in 0..spec.replications {
                jobs.push(Job { arm: a, point, rep });
            }
        }
    }

    let run_job = |job: &Job| -> Result<NetworkMetrics> {
        let arm = &arms[job.arm];
        let config = prepared[job.arm].as_ref().expect("prepared arm");
        let lambda1 = spec.lambda1_sweep[job.point];
        let streams = spec.streams(arm, lambda1)?;
        let options = spec.run_options(replication_seed(base_seed, job.rep as u64));
        let rep = run_replication(config, &streams, &options)?;
        inspect(arm, lambda1, &rep);
        Ok(rep.network)
    };
    let results: Vec<Result<NetworkMetrics>> = match parallel {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::Logic(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(run_job).collect()),
        None => jobs.par_iter().map(run_job).collect(),
    };

    // jobs are grouped by (arm, point) in replication order
    let mut results = results.into_iter();
    for (a, config) in prepared.iter().enumerate() {
        if config.is_none() {
            continue;
        }
        for &lambda1 in &spec.lambda1_sweep {
            let chunk: Vec<Result<NetworkMetrics>> = results.by_ref().take(spec.replications).collect();
            match chunk.into_iter().collect::<Result<Vec<_>>>() {
                Ok(reps) => report.rows.extend(aggregate_rows(spec, &arms[a].label, lambda1, &reps)),
                Err(e) => report.failures.push(ArmFailure {
                    arm: arms[a].label.clone(),
                    lambda1: Some(lambda1),
                    message: e.to_string(),
                }),
            }
        }
    }
    report.sort_rows();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_grid_matches_preset() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 4);
        for s in &all {
            assert_eq!(s.capacity, 50);
            assert_eq!(s.replications, 20);
            assert_eq!(s.mu, 17e5);
            assert_eq!(s.lambda2, 5e5);
            assert_eq!(s.scv_s, 4.0);
            assert_eq!(s.lambda1_sweep.len(), 10);
            assert_eq!(s.lambda1_sweep[0], 1e5);
            assert_eq!(s.lambda1_sweep[9], 10e5);
            s.validate().unwrap();
        }
        let labels = |id: &str| -> Vec<String> { builtin_scenario(id).unwrap().arms().into_iter().map(|a| a.label).collect() };
        assert_eq!(labels("A"), ["FCFS", "HOL"]);
        assert_eq!(labels("B"), ["SEC=ON/SCV=5", "SEC=ON/SCV=10", "SEC=OFF/SCV=5", "SEC=OFF/SCV=10"]);
        assert_eq!(labels("C"), ["c=1", "c=4"]);
        assert_eq!(labels("D"), ["SEC=OFF", "SEC=ON"]);
        let b = builtin_scenario("b").unwrap();
        assert!(b.arms().iter().all(|a| a.discipline == Discipline::Hol && a.servers == 4));
        assert!(builtin_scenario("Z").is_none());
    }

    #[test]
    fn acl_defaults_to_twice_mu() {
        let mut s = builtin_scenario("D").unwrap();
        assert_eq!(s.acl_rate(), 34e5);
        s.mu = 1e5;
        assert_eq!(s.acl_rate(), 2e5);
        s.acl_rate = Some(7.0);
        assert_eq!(s.acl_rate(), 7.0);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("latency".parse::<Metric>().is_err());
    }

    #[test]
    fn small_scenario_report_shape() {
        let spec = ScenarioSpec {
            id: "A".into(),
            lambda1_sweep: vec![2e5, 4e5],
            disciplines: vec![Discipline::Fcfs, Discipline::Hol],
            replications: 3,
            arrivals_per_replication: 5_000,
            ..ScenarioSpec::default()
        };
        let report = run_scenario(&spec, 9, Some(2)).unwrap();
        assert!(report.failures.is_empty());
        assert_eq!(report.rows.len(), 2 * 2 * 3 * 4);
        assert_eq!(report.arms(), ["FCFS", "HOL"]);
        for r in &report.rows {
            assert!(r.estimate.ci95_lo <= r.estimate.mean && r.estimate.mean <= r.estimate.ci95_hi);
            assert_eq!(r.estimate.replications, 3);
        }
        let serial = run_scenario(&spec, 9, Some(1)).unwrap();
        assert_eq!(report, serial);
    }

    #[test]
    fn arm_configs_are_validated() {
        let spec = ScenarioSpec {
            lambda1_sweep: vec![1e5],
            servers: vec![2],
            replications: 2,
            arrivals_per_replication: 2_000,
            ..ScenarioSpec::default()
        };
        let mut bad = spec.arms()[0].clone();
        bad.servers = 60;
        assert!(spec.router_config(&bad).is_err());
        assert!(run_scenario(&spec, 1, Some(1)).unwrap().failures.is_empty());

        let spec = ScenarioSpec {
            servers: vec![2, 60],
            ..spec
        };
        assert!(spec.validate().is_err());
        assert!(run_scenario(&spec, 1, None).is_err());
    }
}
