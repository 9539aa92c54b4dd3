//! One GE/GE/c/N station with FCFS or preemptive-resume HOL priority.
//!
//! Capacity `N` counts every packet at the node, including those in service.
//! Class 0 is the highest priority.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::variates::{ge_sample, GeParams, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Discipline {
    Fcfs,
    Hol,
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Discipline::Fcfs => "FCFS",
            Discipline::Hol => "HOL",
        })
    }
}

impl std::str::FromStr for Discipline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FCFS" => Ok(Discipline::Fcfs),
            "HOL" | "PQ" => Ok(Discipline::Hol),
            other => Err(invalid(format!("unknown discipline `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub class: usize,
    pub network_arrival_time: f64,
    pub node_arrival_time: f64,
    /// Total work required at the current node. Drawn at first service start
    /// unless set beforehand.
    pub service_demand: Option<f64>,
    pub remaining_service: f64,
    /// Work received so far at the current node.
    pub served: f64,
    pub service_started: Option<f64>,
    pub preemptions: u32,
}

impl Packet {
    pub fn new(id: u64, class: usize, arrival_time: f64) -> Self {
        Self {
            id,
            class,
            network_arrival_time: arrival_time,
            node_arrival_time: arrival_time,
            service_demand: None,
            remaining_service: 0.0,
            served: 0.0,
            service_started: None,
            preemptions: 0,
        }
    }

    pub fn with_demand(mut self, demand: f64) -> Self {
        self.service_demand = Some(demand);
        self.remaining_service = demand;
        self
    }

    /// Clear per-node service state before the packet joins another node.
    pub fn enter_node(&mut self, now: f64) {
        self.node_arrival_time = now;
        self.service_demand = None;
        self.remaining_service = 0.0;
        self.served = 0.0;
        self.service_started = None;
        self.preemptions = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeConfig {
    pub servers: usize,
    pub capacity: usize,
    pub discipline: Discipline,
    pub service: GeParams,
    pub classes: usize,
}

impl NodeConfig {
    pub fn new(servers: usize, capacity: usize, discipline: Discipline, service: GeParams) -> Result<Self> {
        let config = Self {
            servers,
            capacity,
            discipline,
            service,
            classes: 2,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_classes(mut self, classes: usize) -> Result<Self> {
        self.classes = classes;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.servers == 0 {
            return Err(invalid("a node needs at least one server"));
        }
        if self.capacity == 0 {
            return Err(invalid("node capacity must be at least 1"));
        }
        if self.servers > self.capacity {
            return Err(invalid(format!(
                "servers ({}) exceed capacity ({})",
                self.servers, self.capacity
            )));
        }
        if self.classes == 0 {
            return Err(invalid("at least one traffic class is required"));
        }
        Ok(())
    }
}

/// A service that just began; the caller schedules its completion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceStart {
    pub server: usize,
    pub epoch: u64,
    pub completes_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalOutcome {
    Admitted(Option<ServiceStart>),
    Lost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Departure {
    pub packet: Packet,
    pub next: Option<ServiceStart>,
}

#[derive(Debug, Clone)]
struct InService {
    packet: Packet,
    started: f64,
}

/// Whole-run counters, never reset by the warm-up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub offered: u64,
    pub lost: u64,
    pub departed: u64,
}

#[derive(Debug, Clone, Default)]
struct Accumulators {
    window_start: f64,
    last_update: f64,
    area_in_system: Vec<f64>,
    busy_by_class: Vec<f64>,
    busy_by_server: Vec<f64>,
    response_sum: Vec<f64>,
    offered: Vec<u64>,
    admitted: Vec<u64>,
    lost: Vec<u64>,
    departed: Vec<u64>,
}

impl Accumulators {
    fn new(classes: usize, servers: usize, start: f64) -> Self {
        Self {
            window_start: start,
            last_update: start,
            area_in_system: vec![0.0; classes],
            busy_by_class: vec![0.0; classes],
            busy_by_server: vec![0.0; servers],
            response_sum: vec![0.0; classes],
            offered: vec![0; classes],
            admitted: vec![0; classes],
            lost: vec![0; classes],
            departed: vec![0; classes],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassMetrics {
    pub offered: u64,
    pub admitted: u64,
    pub lost: u64,
    pub departed: u64,
    pub response_sum: f64,
    pub busy_time: f64,
    /// W: mean time from node arrival to departure.
    pub mean_response: f64,
    /// L: time-averaged number of packets at the node.
    pub mean_in_system: f64,
    pub loss_probability: f64,
    /// Share of the server bank's capacity spent on this class.
    pub utilization: f64,
}

impl ClassMetrics {
    /// Admitted arrivals per unit time.
    pub fn effective_rate(&self, window: f64) -> f64 {
        if window > 0.0 {
            self.admitted as f64 / window
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMetrics {
    pub window: f64,
    pub servers: usize,
    pub classes: Vec<ClassMetrics>,
    pub total: ClassMetrics,
    pub server_utilization: Vec<f64>,
}

impl NodeMetrics {
    pub fn utilization(&self) -> f64 {
        self.total.utilization
    }
}

#[derive(Debug, Clone)]
pub struct QueueNode {
    config: NodeConfig,
    servers: Vec<Option<InService>>,
    epochs: Vec<u64>,
    queues: Vec<VecDeque<Packet>>,
    in_system: Vec<usize>,
    in_system_total: usize,
    serving_by_class: Vec<usize>,
    totals: Vec<ClassCounts>,
    acc: Accumulators,
}

impl QueueNode {
    pub fn new(config: NodeConfig) -> Result<Self> {
        config.validate()?;
        let queue_count = match config.discipline {
            Discipline::Fcfs => 1,
            Discipline::Hol => config.classes,
        };
        Ok(Self {
            config,
            servers: vec![None; config.servers],
            epochs: vec![0; config.servers],
            queues: vec![VecDeque::new(); queue_count],
            in_system: vec![0; config.classes],
            in_system_total: 0,
            serving_by_class: vec![0; config.classes],
            totals: vec![ClassCounts::default(); config.classes],
            acc: Accumulators::new(config.classes, config.servers, 0.0),
        })
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn in_system(&self) -> usize {
        self.in_system_total
    }

    pub fn in_system_of(&self, class: usize) -> usize {
        self.in_system[class]
    }

    pub fn busy_servers(&self) -> usize {
        self.servers.iter().filter(|s| s.is_some()).count()
    }

    pub fn queued(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    pub fn totals(&self) -> &[ClassCounts] {
        &self.totals
    }

    /// The packet currently on `server`, if any.
    pub fn serving(&self, server: usize) -> Option<&Packet> {
        self.servers.get(server)?.as_ref().map(|s| &s.packet)
    }

    pub fn queue_of(&self, class: usize) -> impl Iterator<Item = &Packet> {
        let idx = match self.config.discipline {
            Discipline::Fcfs => 0,
            Discipline::Hol => class,
        };
        self.queues[idx].iter().filter(move |p| p.class == class)
    }

    /// `offered = departed + lost + in_system` for every class.
    pub fn conservation_holds(&self) -> bool {
        self.totals
            .iter()
            .zip(&self.in_system)
            .all(|(t, &n)| t.offered == t.departed + t.lost + n as u64)
    }

    fn advance(&mut self, now: f64) {
        let dt = now - self.acc.last_update;
        if dt > 0.0 {
            for (class, area) in self.acc.area_in_system.iter_mut().enumerate() {
                *area += self.in_system[class] as f64 * dt;
            }
            for (class, busy) in self.acc.busy_by_class.iter_mut().enumerate() {
                *busy += self.serving_by_class[class] as f64 * dt;
            }
            for (slot, busy) in self.servers.iter().zip(self.acc.busy_by_server.iter_mut()) {
                if slot.is_some() {
                    *busy += dt;
                }
            }
            self.acc.last_update = now;
        }
    }

    /// Discard everything accumulated so far and start measuring at `now`.
    pub fn begin_measurement(&mut self, now: f64) {
        self.advance(now);
        self.acc = Accumulators::new(self.config.classes, self.config.servers, now);
    }

    pub fn window_start(&self) -> f64 {
        self.acc.window_start
    }

    fn start_service(&mut self, server: usize, mut packet: Packet, now: f64, rng: &mut Rng) -> ServiceStart {
        if packet.service_demand.is_none() {
            let demand = ge_sample(&self.config.service, rng);
            packet.service_demand = Some(demand);
            packet.remaining_service = demand;
        }
        packet.service_started = Some(now);
        let completes_at = now + packet.remaining_service;
        self.serving_by_class[packet.class] += 1;
        self.epochs[server] += 1;
        self.servers[server] = Some(InService { packet, started: now });
        ServiceStart {
            server,
            epoch: self.epochs[server],
            completes_at,
        }
    }

    /// Server that a packet of `class` would preempt: the busy server holding
    /// the lowest-priority packet, ties going to the latest service start.
    /// `None` unless every server is busy and that packet has strictly lower
    /// priority than `class`.
    pub fn preemption_victim(&self, class: usize) -> Option<usize> {
        let mut victim: Option<(usize, usize, f64)> = None;
        for (idx, slot) in self.servers.iter().enumerate() {
            let s = slot.as_ref()?;
            let better = match victim {
                None => true,
                Some((_, vclass, vstart)) => {
                    s.packet.class > vclass || (s.packet.class == vclass && s.started >= vstart)
                }
            };
            if better {
                victim = Some((idx, s.packet.class, s.started));
            }
        }
        victim.filter(|&(_, vclass, _)| vclass > class).map(|(idx, _, _)| idx)
    }

    /// Offer a packet to the node. A full node loses it; otherwise it starts
    /// service on an idle server, preempts a lower-priority packet (HOL), or
    /// waits.
    pub fn on_arrival(&mut self, mut packet: Packet, now: f64, rng: &mut Rng) -> ArrivalOutcome {
        self.advance(now);
        let class = packet.class;
        debug_assert!(class < self.config.classes);
        self.totals[class].offered += 1;
        self.acc.offered[class] += 1;
        if self.in_system_total >= self.config.capacity {
            self.totals[class].lost += 1;
            self.acc.lost[class] += 1;
            return ArrivalOutcome::Lost;
        }
        self.acc.admitted[class] += 1;
        self.in_system[class] += 1;
        self.in_system_total += 1;
        packet.node_arrival_time = now;

        if let Some(idle) = self.servers.iter().position(Option::is_none) {
            return ArrivalOutcome::Admitted(Some(self.start_service(idle, packet, now, rng)));
        }
        if self.config.discipline == Discipline::Hol {
            if let Some(victim) = self.preemption_victim(class) {
                let start = self
                    .preempt(victim, packet, now, rng)
                    .expect("victim chosen under HOL");
                return ArrivalOutcome::Admitted(Some(start));
            }
        }
        self.enqueue_back(packet);
        ArrivalOutcome::Admitted(None)
    }

    fn enqueue_back(&mut self, packet: Packet) {
        match self.config.discipline {
            Discipline::Fcfs => self.queues[0].push_back(packet),
            Discipline::Hol => self.queues[packet.class].push_back(packet),
        }
    }

    /// Interrupt the packet on `victim` and serve `incoming` there instead.
    /// The victim keeps its remaining work and goes to the head of its class
    /// queue. `incoming` must already be admitted (`on_arrival` does this).
    pub fn preempt(&mut self, victim: usize, incoming: Packet, now: f64, rng: &mut Rng) -> Result<ServiceStart> {
        if self.config.discipline != Discipline::Hol {
            return Err(Error::PreemptionWithoutPriority);
        }
        self.advance(now);
        let InService { mut packet, started } = self
            .servers
            .get_mut(victim)
            .and_then(Option::take)
            .ok_or_else(|| Error::Logic(format!("preemption of idle server {victim}")))?;
        let worked = now - started;
        packet.served += worked;
        packet.remaining_service = (packet.remaining_service - worked).max(0.0);
        packet.service_started = None;
        packet.preemptions += 1;
        self.serving_by_class[packet.class] -= 1;
        self.queues[packet.class].push_front(packet);
        Ok(self.start_service(victim, incoming, now, rng))
    }

    /// Remove and return the packet to serve next: the global head under
    /// FCFS, the head of the highest-priority non-empty class under HOL.
    pub fn select_next(&mut self) -> Option<Packet> {
        self.queues.iter_mut().find(|q| !q.is_empty())?.pop_front()
    }

    /// Complete service on `server`. Returns `None` for a completion whose
    /// epoch was invalidated by a preemption.
    pub fn on_service_completion(&mut self, server: usize, epoch: u64, now: f64, rng: &mut Rng) -> Option<Departure> {
        if self.epochs.get(server) != Some(&epoch) || self.servers[server].is_none() {
            return None;
        }
        self.advance(now);
        let InService { mut packet, started } = self.servers[server].take()?;
        packet.served += now - started;
        packet.remaining_service = 0.0;
        packet.service_started = None;
        let class = packet.class;
        self.serving_by_class[class] -= 1;
        self.in_system[class] -= 1;
        self.in_system_total -= 1;
        self.totals[class].departed += 1;
        self.acc.departed[class] += 1;
        self.acc.response_sum[class] += now - packet.node_arrival_time;

        let next = self.select_next().map(|p| self.start_service(server, p, now, rng));
        Some(Departure { packet, next })
    }

    /// Metrics over `[window_start, now]`.
    pub fn snapshot_metrics(&mut self, now: f64) -> Result<NodeMetrics> {
        if now < self.acc.window_start {
            return Err(invalid("snapshot before the measurement window"));
        }
        self.advance(now);
        let window = now - self.acc.window_start;
        if window <= 0.0 {
            return Err(Error::EmptyWindow);
        }
        let servers = self.config.servers;
        let capacity_time = servers as f64 * window;
        let acc = &self.acc;
        let classes: Vec<ClassMetrics> = (0..self.config.classes)
            .map(|k| {
                class_metrics(
                    acc.offered[k],
                    acc.admitted[k],
                    acc.lost[k],
                    acc.departed[k],
                    acc.response_sum[k],
                    acc.busy_by_class[k],
                    acc.area_in_system[k],
                    window,
                    capacity_time,
                )
            })
            .collect();
        let total = class_metrics(
            classes.iter().map(|c| c.offered).sum(),
            classes.iter().map(|c| c.admitted).sum(),
            classes.iter().map(|c| c.lost).sum(),
            classes.iter().map(|c| c.departed).sum(),
            classes.iter().map(|c| c.response_sum).sum(),
            classes.iter().map(|c| c.busy_time).sum(),
            acc.area_in_system.iter().sum(),
            window,
            capacity_time,
        );
        Ok(NodeMetrics {
            window,
            servers,
            classes,
            total,
            server_utilization: acc.busy_by_server.iter().map(|b| b / window).collect(),
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn class_metrics(
    offered: u64,
    admitted: u64,
    lost: u64,
    departed: u64,
    response_sum: f64,
    busy_time: f64,
    area: f64,
    window: f64,
    capacity_time: f64,
) -> ClassMetrics {
    ClassMetrics {
        offered,
        admitted,
        lost,
        departed,
        response_sum,
        busy_time,
        mean_response: ratio(response_sum, departed as f64),
        mean_in_system: ratio(area, window),
        loss_probability: ratio(lost as f64, offered as f64),
        utilization: ratio(busy_time, capacity_time),
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}
