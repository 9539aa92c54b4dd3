//! Discrete-event simulation of a router modeled as a tandem network of
//! finite-capacity GE/GE/c/N queues: an optional ACL (security) node in
//! front of the forwarding node, with FCFS or preemptive HOL priority
//! service and GE-distributed bursty traffic.

pub mod analytic;
pub mod des;
pub mod error;
pub mod node;
pub mod router;
pub mod scenario;
pub mod stats;
pub mod validation;
pub mod variates;

pub use analytic::{erlang_b, littles_check, littles_residual, mm1n_solve, mmcn_solve, MarkovQueueResult};
pub use des::{Engine, Event, EventHandler, EventKind, StopRule};
pub use error::{Error, Result};
pub use node::{ArrivalOutcome, ClassMetrics, Discipline, NodeConfig, NodeMetrics, Packet, QueueNode};
pub use router::{
    route_after_acl, run_replication, ArrivalStream, Conservation, NetworkMetrics, ReplicationResult, RouterConfig,
    RunOptions, Security,
};
pub use scenario::{builtin_scenario, builtin_scenarios, run_scenario, run_scenario_inspected, Arm, Metric, MetricsReport, ReportRow, ScenarioSpec};
pub use stats::Estimate;
pub use variates::{exp_sample, ge_sample, ge_tau, GeParams, Rng};
