//! Tandem router network: an optional ACL node feeding the forwarding node.
//!
//! With security ON every external arrival first visits the ACL node. A
//! packet finishing ACL service is forwarded with probability `p` and
//! rejected otherwise. With security OFF arrivals go straight to the
//! forwarding node and the ACL node does not exist.

use std::fmt;
use std::str::FromStr;

use crate::des::{Engine, Event, EventHandler, EventKind, StopRule};
use crate::error::{invalid, Error, Result};
use crate::node::{ArrivalOutcome, ClassMetrics, NodeConfig, NodeMetrics, Packet, QueueNode, ServiceStart};
use crate::variates::{ge_sample, GeParams, Rng};

pub const ACL_NODE: usize = 0;
pub const FORWARDING_NODE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Security {
    Off,
    On,
}

impl fmt::Display for Security {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Security::Off => "OFF",
            Security::On => "ON",
        })
    }
}

impl FromStr for Security {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "OFF" => Ok(Security::Off),
            "ON" => Ok(Security::On),
            other => Err(invalid(format!("unknown security setting `{other}`"))),
        }
    }
}

/// What happens to a forwarded packet that finds the forwarding node full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FullForwardingPolicy {
    #[default]
    Drop,
}

/// External traffic of one class. A zero rate means the stream is silent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalStream {
    pub class: usize,
    pub rate: f64,
    pub scv: f64,
}

impl ArrivalStream {
    pub fn new(class: usize, rate: f64, scv: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(invalid(format!("arrival rate must be finite and >= 0, got {rate}")));
        }
        if !(scv.is_finite() && scv >= 1.0) {
            return Err(invalid(format!("arrival scv must be >= 1, got {scv}")));
        }
        Ok(Self { class, rate, scv })
    }

    pub fn interarrival(&self) -> Option<GeParams> {
        if self.rate > 0.0 {
            GeParams::new(self.rate, self.scv).ok()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouterConfig {
    pub security: Security,
    /// Ignored when security is OFF.
    pub acl: NodeConfig,
    pub forwarding: NodeConfig,
    pub accept_prob: f64,
    pub full_forwarding_policy: FullForwardingPolicy,
}

impl RouterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.accept_prob) {
            return Err(invalid(format!(
                "acceptance probability must lie in [0, 1], got {}",
                self.accept_prob
            )));
        }
        self.forwarding.validate()?;
        if self.security == Security::On {
            self.acl.validate()?;
            if self.acl.classes != self.forwarding.classes {
                return Err(invalid("ACL and forwarding nodes must agree on the class count"));
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.forwarding.classes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Forward,
    Reject,
}

/// Bernoulli(`accept_prob`) decision for a packet leaving the ACL node.
pub fn route_after_acl(accept_prob: f64, rng: &mut Rng) -> Route {
    if rng.bernoulli(accept_prob) {
        Route::Forward
    } else {
        Route::Reject
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// External arrivals to simulate; the run stops right after the last one.
    pub arrivals: u64,
    /// Leading share of arrivals excluded from every accumulator.
    pub warmup_fraction: f64,
    /// Record a [`ServiceRecord`] for every completed service.
    pub trace: bool,
}

impl RunOptions {
    pub fn new(seed: u64, arrivals: u64) -> Self {
        Self {
            seed,
            arrivals,
            warmup_fraction: 0.1,
            trace: false,
        }
    }

    pub fn warmup_arrivals(&self) -> u64 {
        (self.warmup_fraction * self.arrivals as f64).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.arrivals == 0 {
            return Err(invalid("arrivals per replication must be > 0"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(invalid(format!(
                "warm-up fraction must lie in [0, 1), got {}",
                self.warmup_fraction
            )));
        }
        Ok(())
    }
}

/// One completed service at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceRecord {
    pub packet: u64,
    pub class: usize,
    pub node: usize,
    pub node_arrival: f64,
    pub departure: f64,
    pub demand: f64,
    /// Sum of all service intervals the packet received at the node.
    pub served: f64,
    pub preemptions: u32,
}

/// Whole-run packet accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Conservation {
    pub offered: u64,
    pub departed: u64,
    pub acl_lost: u64,
    pub rejected: u64,
    pub forwarding_lost: u64,
    pub in_flight: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.offered == self.departed + self.acl_lost + self.rejected + self.forwarding_lost + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NetworkClassMetrics {
    pub offered: u64,
    pub departed: u64,
    pub buffer_lost: u64,
    pub rejected: u64,
    /// End-to-end W, from network arrival to leaving the forwarding node.
    pub mean_response: f64,
    /// Packets inside the router (all nodes), time-averaged.
    pub mean_in_system: f64,
    /// Buffer losses over offered packets; rejections are not included.
    pub loss_probability: f64,
    /// Busy time over the capacity of every server in the router.
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMetrics {
    pub window: f64,
    pub classes: Vec<NetworkClassMetrics>,
    pub total: NetworkClassMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub seed: u64,
    pub acl: Option<NodeMetrics>,
    pub forwarding: NodeMetrics,
    pub network: NetworkMetrics,
    pub conservation: Conservation,
    pub node_conservation: bool,
    pub trace: Vec<ServiceRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
struct WindowCounts {
    offered: u64,
    departed: u64,
    buffer_lost: u64,
    rejected: u64,
    response_sum: f64,
}

struct Router {
    acl: Option<QueueNode>,
    forwarding: QueueNode,
    streams: Vec<(usize, Option<GeParams>)>,
    rng: Rng,
    accept_prob: f64,
    next_id: u64,
    arrivals_seen: u64,
    warmup_arrivals: u64,
    window: Vec<WindowCounts>,
    totals: Conservation,
    trace: Option<Vec<ServiceRecord>>,
}

impl Router {
    fn begin_measurement(&mut self, now: f64) {
        if let Some(acl) = self.acl.as_mut() {
            acl.begin_measurement(now);
        }
        self.forwarding.begin_measurement(now);
        self.window.iter_mut().for_each(|w| *w = WindowCounts::default());
    }

    fn schedule_start(engine: &mut Engine, node: usize, start: Option<ServiceStart>) -> Result<()> {
        if let Some(s) = start {
            engine.schedule(
                s.completes_at,
                EventKind::ServiceCompletion {
                    node,
                    server: s.server,
                    epoch: s.epoch,
                },
            )?;
        }
        Ok(())
    }

    fn offer(&mut self, node: usize, packet: Packet, engine: &mut Engine) -> Result<()> {
        let class = packet.class;
        let now = engine.clock();
        let outcome = {
            let rng = &mut self.rng;
            let target = match node {
                ACL_NODE => self.acl.as_mut().expect("ACL node present"),
                _ => &mut self.forwarding,
            };
            target.on_arrival(packet, now, rng)
        };
        match outcome {
            ArrivalOutcome::Admitted(start) => Self::schedule_start(engine, node, start),
            ArrivalOutcome::Lost => {
                if node == ACL_NODE {
                    self.totals.acl_lost += 1;
                } else {
                    self.totals.forwarding_lost += 1;
                }
                self.window[class].buffer_lost += 1;
                Ok(())
            }
        }
    }

    fn on_arrival(&mut self, stream: usize, engine: &mut Engine) -> Result<()> {
        let now = engine.clock();
        if self.arrivals_seen == self.warmup_arrivals && self.warmup_arrivals > 0 {
            self.begin_measurement(now);
        }
        self.arrivals_seen += 1;
        let (class, params) = self.streams[stream];
        let params = params.ok_or_else(|| Error::Logic(format!("arrival on silent stream {stream}")))?;

        let packet = Packet::new(self.next_id, class, now);
        self.next_id += 1;
        self.totals.offered += 1;
        self.window[class].offered += 1;
        let entry = if self.acl.is_some() { ACL_NODE } else { FORWARDING_NODE };
        self.offer(entry, packet, engine)?;

        let gap = ge_sample(&params, &mut self.rng);
        engine.schedule(now + gap, EventKind::ExternalArrival { stream })?;
        Ok(())
    }

    fn on_completion(&mut self, node: usize, server: usize, epoch: u64, engine: &mut Engine) -> Result<()> {
        let now = engine.clock();
        let departure = {
            let Router { acl, forwarding, rng, .. } = self;
            let target = match node {
                ACL_NODE => acl
                    .as_mut()
                    .ok_or_else(|| Error::Logic("ACL event while security is OFF".into()))?,
                FORWARDING_NODE => forwarding,
                other => return Err(Error::Logic(format!("unknown node {other}"))),
            };
            target.on_service_completion(server, epoch, now, rng)
        };
        let Some(departure) = departure else {
            return Ok(());
        };
        Self::schedule_start(engine, node, departure.next)?;

        let mut packet = departure.packet;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(ServiceRecord {
                packet: packet.id,
                class: packet.class,
                node,
                node_arrival: packet.node_arrival_time,
                departure: now,
                demand: packet.service_demand.unwrap_or(0.0),
                served: packet.served,
                preemptions: packet.preemptions,
            });
        }

        if node == ACL_NODE {
            match route_after_acl(self.accept_prob, &mut self.rng) {
                Route::Forward => {
                    packet.enter_node(now);
                    self.offer(FORWARDING_NODE, packet, engine)?;
                }
                Route::Reject => {
                    self.totals.rejected += 1;
                    self.window[packet.class].rejected += 1;
                }
            }
        } else {
            self.totals.departed += 1;
            let w = &mut self.window[packet.class];
            w.departed += 1;
            w.response_sum += now - packet.network_arrival_time;
        }
        Ok(())
    }
}

impl EventHandler for Router {
    fn handle(&mut self, event: Event, engine: &mut Engine) -> Result<()> {
        match event.kind {
            EventKind::ExternalArrival { stream } => self.on_arrival(stream, engine),
            EventKind::ServiceCompletion { node, server, epoch } => self.on_completion(node, server, epoch, engine),
        }
    }
}

fn idle_node_metrics(config: &NodeConfig) -> NodeMetrics {
    NodeMetrics {
        window: 0.0,
        servers: config.servers,
        classes: vec![ClassMetrics::default(); config.classes],
        total: ClassMetrics::default(),
        server_utilization: vec![0.0; config.servers],
    }
}

fn network_class(
    w: &WindowCounts,
    nodes: &[&ClassMetrics],
    total_servers: usize,
    window: f64,
) -> NetworkClassMetrics {
    let busy: f64 = nodes.iter().map(|m| m.busy_time).sum();
    let capacity_time = total_servers as f64 * window;
    NetworkClassMetrics {
        offered: w.offered,
        departed: w.departed,
        buffer_lost: w.buffer_lost,
        rejected: w.rejected,
        mean_response: if w.departed > 0 {
            w.response_sum / w.departed as f64
        } else {
            0.0
        },
        mean_in_system: nodes.iter().map(|m| m.mean_in_system).sum(),
        loss_probability: if w.offered > 0 {
            w.buffer_lost as f64 / w.offered as f64
        } else {
            0.0
        },
        utilization: if capacity_time > 0.0 { busy / capacity_time } else { 0.0 },
    }
}

/// Simulate one replication of the router fed by `streams`.
pub fn run_replication(config: &RouterConfig, streams: &[ArrivalStream], options: &RunOptions) -> Result<ReplicationResult> {
    config.validate()?;
    options.validate()?;
    let classes = config.classes();
    if let Some(s) = streams.iter().find(|s| s.class >= classes) {
        return Err(invalid(format!("stream class {} exceeds class count {classes}", s.class)));
    }

    let acl = match config.security {
        Security::On => Some(QueueNode::new(config.acl)?),
        Security::Off => None,
    };
    let mut router = Router {
        acl,
        forwarding: QueueNode::new(config.forwarding)?,
        streams: streams.iter().map(|s| (s.class, s.interarrival())).collect(),
        rng: Rng::new(options.seed),
        accept_prob: config.accept_prob,
        next_id: 0,
        arrivals_seen: 0,
        warmup_arrivals: options.warmup_arrivals(),
        window: vec![WindowCounts::default(); classes],
        totals: Conservation::default(),
        trace: options.trace.then(Vec::new),
    };

    let mut engine = Engine::new();
    for (idx, (_, params)) in router.streams.clone().iter().enumerate() {
        if let Some(params) = params {
            let first = ge_sample(params, &mut router.rng);
            engine.schedule(first, EventKind::ExternalArrival { stream: idx })?;
        }
    }
    engine.run(&mut router, StopRule::Arrivals(options.arrivals))?;
    let now = engine.clock();

    let in_flight = router.acl.as_ref().map_or(0, QueueNode::in_system) + router.forwarding.in_system();
    router.totals.in_flight = in_flight as u64;
    let node_conservation =
        router.forwarding.conservation_holds() && router.acl.as_ref().is_none_or(QueueNode::conservation_holds);

    let (acl_metrics, forwarding_metrics) = if router.arrivals_seen == 0 {
        (router.acl.as_ref().map(|n| idle_node_metrics(n.config())), idle_node_metrics(&config.forwarding))
    } else {
        let acl_metrics = router.acl.as_mut().map(|n| n.snapshot_metrics(now)).transpose()?;
        (acl_metrics, router.forwarding.snapshot_metrics(now)?)
    };

    let total_servers = forwarding_metrics.servers + acl_metrics.as_ref().map_or(0, |m| m.servers);
    let window = forwarding_metrics.window;
    // per-node metrics of one class (or the aggregate when `None`)
    let class_nodes = |k: Option<usize>| -> Vec<&ClassMetrics> {
        acl_metrics
            .iter()
            .chain(std::iter::once(&forwarding_metrics))
            .map(|m| match k {
                Some(k) => &m.classes[k],
                None => &m.total,
            })
            .collect()
    };
    let network_classes: Vec<NetworkClassMetrics> = (0..classes)
        .map(|k| network_class(&router.window[k], &class_nodes(Some(k)), total_servers, window))
        .collect();
    let total_counts = router.window.iter().fold(WindowCounts::default(), |acc, w| WindowCounts {
        offered: acc.offered + w.offered,
        departed: acc.departed + w.departed,
        buffer_lost: acc.buffer_lost + w.buffer_lost,
        rejected: acc.rejected + w.rejected,
        response_sum: acc.response_sum + w.response_sum,
    });
    let network_total = network_class(&total_counts, &class_nodes(None), total_servers, window);

    Ok(ReplicationResult {
        seed: options.seed,
        acl: acl_metrics,
        forwarding: forwarding_metrics,
        network: NetworkMetrics {
            window,
            classes: network_classes,
            total: network_total,
        },
        conservation: router.totals,
        node_conservation,
        trace: router.trace.unwrap_or_default(),
    })
}
