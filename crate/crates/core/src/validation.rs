//! Self-checks of the simulator against closed forms and internal
//! identities. Backs the CLI `validate` command.

use crate::analytic::{erlang_b, littles_check, littles_residual, mm1n_solve, mmcn_solve, neumaier_sum, MarkovQueueResult};
use crate::error::Result;
use crate::node::{Discipline, NodeConfig};
use crate::router::{run_replication, ArrivalStream, FullForwardingPolicy, ReplicationResult, RouterConfig, RunOptions, Security};
use crate::stats::Estimate;
use crate::variates::{ge_sample, replication_seed, GeParams, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Simulated Markovian router (every SCV = 1, FCFS, security OFF) next to
/// the M/M/c/N solution for the same load.
#[derive(Debug, Clone)]
pub struct MarkovComparison {
    pub servers: usize,
    pub rho: f64,
    pub oracle: MarkovQueueResult,
    pub blocking: Estimate,
    pub mean_in_system: Estimate,
    pub replications: Vec<ReplicationResult>,
    /// Loss probability carried by a single lost packet over all measured
    /// arrivals; the finest step the blocking estimator can resolve.
    pub blocking_resolution: f64,
}

impl MarkovComparison {
    pub fn blocking_consistent(&self) -> bool {
        let r = self.blocking_resolution;
        self.blocking.ci95_lo - r <= self.oracle.blocking && self.oracle.blocking <= self.blocking.ci95_hi + r
    }

    pub fn mean_in_system_consistent(&self) -> bool {
        self.mean_in_system.contains(self.oracle.mean_in_system)
    }
}

/// Per-server rate used by the Markovian checks.
pub const MARKOV_MU: f64 = 17e5;

/// Offered load `rho = λ / (c·μ)` split evenly over the two classes.
pub fn markov_comparison(
    servers: usize,
    rho: f64,
    capacity: usize,
    replications: usize,
    arrivals: u64,
    base_seed: u64,
) -> Result<MarkovComparison> {
    let lambda = rho * servers as f64 * MARKOV_MU;
    let service = GeParams::exponential(MARKOV_MU)?;
    let node = NodeConfig::new(servers, capacity, Discipline::Fcfs, service)?;
    let config = RouterConfig {
        security: Security::Off,
        acl: node,
        forwarding: node,
        accept_prob: 1.0,
        full_forwarding_policy: FullForwardingPolicy::Drop,
    };
    let streams = [
        ArrivalStream::new(0, lambda / 2.0, 1.0)?,
        ArrivalStream::new(1, lambda / 2.0, 1.0)?,
    ];
    let reps = (0..replications)
        .map(|i| {
            let options = RunOptions::new(replication_seed(base_seed, i as u64), arrivals);
            run_replication(&config, &streams, &options)
        })
        .collect::<Result<Vec<_>>>()?;
    let blocking: Vec<f64> = reps.iter().map(|r| r.forwarding.total.loss_probability).collect();
    let l: Vec<f64> = reps.iter().map(|r| r.forwarding.total.mean_in_system).collect();
    let measured: u64 = reps.iter().map(|r| r.forwarding.total.offered).sum();
    Ok(MarkovComparison {
        servers,
        rho,
        oracle: mmcn_solve(lambda, MARKOV_MU, servers, capacity)?,
        blocking: Estimate::from_samples(&blocking),
        mean_in_system: Estimate::from_samples(&l),
        replications: reps,
        blocking_resolution: 1.0 / measured.max(1) as f64,
    })
}

/// Largest Little's-law residual of a replication over every node, both per
/// class and for the class aggregate.
pub fn worst_littles_residual(rep: &ReplicationResult) -> f64 {
    rep.acl
        .iter()
        .chain(std::iter::once(&rep.forwarding))
        .flat_map(|m| {
            m.classes
                .iter()
                .map(|c| littles_residual(c, m.window))
                .chain(std::iter::once(littles_check(m)))
        })
        .fold(0.0, f64::max)
}

/// Largest `|served − demand|` over all service records.
pub fn worst_ledger_error(rep: &ReplicationResult) -> f64 {
    rep.trace
        .iter()
        .map(|r| (r.served - r.demand).abs())
        .fold(0.0, f64::max)
}

/// Bursty HOL run with a trace, through single-CPU nodes loaded so that
/// preemptions are frequent.
pub fn preemption_trace(seed: u64, arrivals: u64, security: Security) -> Result<ReplicationResult> {
    let node = NodeConfig::new(1, 50, Discipline::Hol, GeParams::new(17e5, 4.0)?)?;
    let acl = NodeConfig::new(1, 50, Discipline::Hol, GeParams::new(34e5, 4.0)?)?;
    let config = RouterConfig {
        security,
        acl,
        forwarding: node,
        accept_prob: 0.9,
        full_forwarding_policy: FullForwardingPolicy::Drop,
    };
    let streams = [ArrivalStream::new(0, 6e5, 4.0)?, ArrivalStream::new(1, 8e5, 4.0)?];
    let options = RunOptions {
        trace: true,
        ..RunOptions::new(seed, arrivals)
    };
    run_replication(&config, &streams, &options)
}

/// Run the oracle suite at a size that finishes in a few seconds.
pub fn oracle_suite(seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();

    // GE moments
    let params = GeParams::new(17e5, 4.0).expect("valid");
    let mut rng = Rng::new(seed);
    let n = 2_000_000usize;
    let (mut sum, mut sumsq, mut zeros) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..n {
        let x = ge_sample(&params, &mut rng);
        sum += x;
        sumsq += x * x;
        zeros += usize::from(x == 0.0);
    }
    let mean = sum / n as f64;
    let scv = (sumsq / n as f64 - mean * mean) / (mean * mean);
    let zero_frac = zeros as f64 / n as f64;
    checks.push(Check::new(
        "ge-moments",
        (mean * 17e5 - 1.0).abs() < 0.01 && (scv / 4.0 - 1.0).abs() < 0.05 && (zero_frac - 0.6).abs() < 0.005,
        format!("mean={mean:.4e} scv={scv:.4} zero-mass={zero_frac:.4}"),
    ));

    // closed forms against each other
    let mut closed_ok = true;
    let mut detail = String::new();
    for (lambda, mu, cap) in [(1.0, 2.0, 2), (0.85, 1.0, 50), (1.3, 1.0, 20)] {
        match (mm1n_solve(lambda, mu, cap), mmcn_solve(lambda, mu, 1, cap)) {
            (Ok(a), Ok(b)) => {
                let diff = a
                    .probabilities
                    .iter()
                    .zip(&b.probabilities)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                let norm = (neumaier_sum(b.probabilities.iter().copied()) - 1.0).abs();
                closed_ok &= diff < 1e-12 && norm < 1e-12;
            }
            _ => closed_ok = false,
        }
    }
    for (c, a) in [(4usize, 3.0f64), (16, 12.0)] {
        match mmcn_solve(a, 1.0, c, c) {
            Ok(r) => {
                let eb = erlang_b(c, a);
                closed_ok &= (r.blocking - eb).abs() <= 1e-12 * eb;
                detail.push_str(&format!("erlang-b(c={c})={eb:.6} "));
            }
            Err(_) => closed_ok = false,
        }
    }
    checks.push(Check::new("closed-forms", closed_ok, detail.trim_end().to_string()));

    // Markovian simulation against M/M/c/N
    for servers in [1usize, 4] {
        let name = format!("markov-equivalence c={servers} rho=0.85");
        match markov_comparison(servers, 0.85, 50, 10, 200_000, seed) {
            Ok(cmp) => {
                checks.push(Check::new(
                    name,
                    cmp.blocking_consistent() && cmp.mean_in_system_consistent(),
                    format!(
                        "blocking oracle={:.4e} sim={:.4e} [{:.4e}, {:.4e}]; L oracle={:.4} sim={:.4} [{:.4}, {:.4}]",
                        cmp.oracle.blocking,
                        cmp.blocking.mean,
                        cmp.blocking.ci95_lo,
                        cmp.blocking.ci95_hi,
                        cmp.oracle.mean_in_system,
                        cmp.mean_in_system.mean,
                        cmp.mean_in_system.ci95_lo,
                        cmp.mean_in_system.ci95_hi
                    ),
                ));
                let worst = cmp.replications.iter().map(worst_littles_residual).fold(0.0, f64::max);
                checks.push(Check::new(
                    format!("littles-law c={servers}"),
                    worst < 0.01,
                    format!("worst residual {worst:.3e}"),
                ));
                let conserved = cmp.replications.iter().all(|r| r.conservation.holds() && r.node_conservation);
                checks.push(Check::new(format!("conservation c={servers}"), conserved, ""));
            }
            Err(e) => checks.push(Check::new(name, false, e.to_string())),
        }
    }

    // preemptive-resume work ledger, with and without the ACL stage
    for security in [Security::Off, Security::On] {
        let name = format!("preemption-ledger SEC={security}");
        match preemption_trace(seed, 100_000, security) {
            Ok(rep) => {
                let worst = worst_ledger_error(&rep);
                let preempted = rep.trace.iter().filter(|r| r.preemptions > 0).count();
                checks.push(Check::new(
                    name,
                    worst <= 1e-9 && preempted > 0 && rep.conservation.holds(),
                    format!("{preempted} preempted packets, worst |served - demand| = {worst:.3e}"),
                ));
            }
            Err(e) => checks.push(Check::new(name, false, e.to_string())),
        }
    }
    checks
}
