//! Deterministic Pregel-semantics simulator.
//!
//! [`run_job`] executes a [`VertexProgram`] over an [`InputGraph`] split
//! across workers by a [`Partition`], and records the per-superstep traffic
//! and a modelled compute time for each worker as a [`TraceJob`].
//!
//! Semantics follow Pregel: every vertex is active in superstep 1; a vertex
//! that voted to halt is only invoked again when it receives a message;
//! messages sent in superstep `i` are delivered at `i + 1`. The job ends when
//! all vertices have halted with no messages in flight, or after the
//! program's maximum superstep count.
//!
//! Workers run in label order and vertices within a worker in ascending id,
//! so inbox order and the emitted trace are fully determined by the inputs.

mod graph;
mod partition;
mod programs;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use graph::{Edge, GraphError, InputGraph};
pub use partition::{cut_edges, hash_partition, locality_partition, vertex_hash, Partition, PartitionError};
pub use programs::{
    khop_broadcast_program, pagerank_program, sssp_program, KHopBroadcast, KHopState, PageRank, Sssp,
    DEFAULT_BUGGY_SSSP_SUPERSTEPS, PAGERANK_DAMPING,
};

use crate::trace::{InclusionTree, JobMetadata, SuperstepGraph, TopologyRecord, TraceJob, Traffic};

pub type VertexId = usize;

/// Per-invocation view handed to [`VertexProgram::compute`].
pub struct Context<'a, M> {
    vertex: VertexId,
    superstep: u32,
    graph: &'a InputGraph,
    outbox: Vec<(VertexId, M)>,
    halt: bool,
}

impl<'a, M> Context<'a, M> {
    pub fn vertex(&self) -> VertexId {
        self.vertex
    }

    /// 1-based.
    pub fn superstep(&self) -> u32 {
        self.superstep
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn out_edges(&self) -> &'a [Edge] {
        self.graph.out_edges(self.vertex)
    }

    pub fn send(&mut self, target: VertexId, message: M) {
        self.outbox.push((target, message));
    }

    pub fn vote_to_halt(&mut self) {
        self.halt = true;
    }
}

/// A vertex-centric program.
pub trait VertexProgram {
    type Value: Clone;
    type Message: Clone;

    fn name(&self) -> String;

    /// Serialized size of one message.
    fn payload_bytes(&self) -> u64;

    /// Hard stop after this many supersteps.
    fn max_supersteps(&self) -> Option<u32> {
        None
    }

    fn initial_value(&self, vertex: VertexId, graph: &InputGraph) -> Self::Value;

    fn compute(&self, ctx: &mut Context<'_, Self::Message>, value: &mut Self::Value, inbox: &[Self::Message]);
}

/// Rack × host × worker counts of a generated cluster, written `R:H:W`
/// (hosts per rack, workers per host).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    pub racks: usize,
    pub hosts_per_rack: usize,
    pub workers_per_host: usize,
}

impl TreeShape {
    pub fn new(racks: usize, hosts_per_rack: usize, workers_per_host: usize) -> Self {
        TreeShape { racks, hosts_per_rack, workers_per_host }
    }

    pub fn worker_count(&self) -> usize {
        self.racks * self.hosts_per_rack * self.workers_per_host
    }

    fn width(count: usize) -> usize {
        count.saturating_sub(1).to_string().len()
    }

    /// `(rack, host, worker)` labels, numbered globally and zero-padded so
    /// that label order equals numeric order.
    pub fn labels(&self) -> Vec<(String, String, String)> {
        let hosts = self.racks * self.hosts_per_rack;
        let (rw, hw, ww) = (Self::width(self.racks), Self::width(hosts), Self::width(self.worker_count()));
        let mut out = Vec::with_capacity(self.worker_count());
        for r in 0..self.racks {
            for h in 0..self.hosts_per_rack {
                let host = r * self.hosts_per_rack + h;
                for w in 0..self.workers_per_host {
                    let worker = host * self.workers_per_host + w;
                    out.push((format!("r{r:0rw$}"), format!("h{host:0hw$}"), format!("w{worker:0ww$}")));
                }
            }
        }
        out
    }

    pub fn worker_labels(&self) -> Vec<String> {
        self.labels().into_iter().map(|(_, _, w)| w).collect()
    }

    pub fn host_labels(&self) -> Vec<String> {
        let mut hosts: Vec<String> = self.labels().into_iter().map(|(_, h, _)| h).collect();
        hosts.dedup();
        hosts
    }
}

impl FromStr for TreeShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(':')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad tree shape `{s}`: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [r, h, w] if r > 0 && h > 0 && w > 0 => Ok(TreeShape::new(r, h, w)),
            _ => Err(format!("tree shape `{s}` must be R:H:W with positive counts")),
        }
    }
}

impl fmt::Display for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.racks, self.hosts_per_rack, self.workers_per_host)
    }
}

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_GAMMA: f64 = 0.01;
pub const DEFAULT_MESSAGE_CAP: u64 = 100_000_000;

/// Cluster shape and cost model.
///
/// A worker's time in a superstep is
/// `round(slowdown(host) × round(α·active + β·sent + γ·received))` ms, where
/// `active` counts invoked vertices, `sent` the messages its vertices sent and
/// `received` the messages delivered to them. The inner rounding makes an
/// integer slowdown an exact multiple of the unthrottled time.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub shape: TreeShape,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Multiplicative factor (≥ 1) per host label; absent hosts run at 1.
    pub host_slowdown: BTreeMap<String, f64>,
    pub seed: u64,
    /// Upper bound on messages sent over the whole job.
    pub message_cap: u64,
    pub job_id: String,
}

impl SimConfig {
    pub fn new(shape: TreeShape) -> Self {
        SimConfig {
            shape,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            gamma: DEFAULT_GAMMA,
            host_slowdown: BTreeMap::new(),
            seed: 0,
            message_cap: DEFAULT_MESSAGE_CAP,
            job_id: "sim".into(),
        }
    }

    pub fn with_slowdown(mut self, host: impl Into<String>, factor: f64) -> Self {
        self.host_slowdown.insert(host.into(), factor);
        self
    }

    fn check(&self) -> Result<(), SimError> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        for (host, &f) in &self.host_slowdown {
            if !(f.is_finite() && f >= 1.0) {
                return Err(SimError::Config(format!("slowdown for `{host}` must be ≥ 1, got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("partition covers {covered} vertices but the graph has {vertices}")]
    PartitionGap { covered: usize, vertices: usize },
    #[error("partition worker `{0}` is not part of the cluster")]
    UnknownWorker(String),
    #[error("vertex {vertex} sent a message to nonexistent vertex {target}")]
    BadTarget { vertex: VertexId, target: VertexId },
    #[error("runaway computation: {sent} messages exceed the cap of {cap}")]
    Runaway { sent: u64, cap: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A finished simulation.
#[derive(Debug, Clone)]
pub struct SimRun<V> {
    pub job: TraceJob,
    /// Final vertex values.
    pub values: Vec<V>,
    pub messages_sent: u64,
    /// Messages consumed by a later superstep. The remainder were sent in the
    /// final superstep of a job stopped by its superstep limit.
    pub messages_delivered: u64,
    /// Messages sent per superstep.
    pub sent_per_superstep: Vec<u64>,
}

pub fn run_job<P: VertexProgram>(
    graph: &InputGraph,
    program: &P,
    partition: &Partition,
    config: &SimConfig,
) -> Result<SimRun<P::Value>, SimError> {
    config.check()?;
    let n = graph.vertex_count();
    if n == 0 {
        return Err(SimError::EmptyGraph);
    }
    if partition.vertex_count() != n {
        return Err(SimError::PartitionGap { covered: partition.vertex_count(), vertices: n });
    }

    let labels = config.shape.labels();
    let host_of: BTreeMap<&str, &str> = labels.iter().map(|(_, h, w)| (w.as_str(), h.as_str())).collect();
    for w in partition.workers() {
        if !host_of.contains_key(w.as_str()) {
            return Err(SimError::UnknownWorker(w.clone()));
        }
    }

    let loads = partition.loads();
    let load_of: BTreeMap<&str, u64> =
        partition.workers().iter().map(String::as_str).zip(loads.iter().copied()).collect();
    let tree = InclusionTree::from_records(
        labels.iter().map(|(r, h, w)| TopologyRecord::new(r, h, w, load_of.get(w.as_str()).copied().unwrap_or(0))),
    )
    .map_err(|e| SimError::Config(e.to_string()))?;

    // Execution order: workers by label, vertices ascending.
    let mut worker_order: Vec<usize> = (0..partition.workers().len()).collect();
    worker_order.sort_by(|&a, &b| partition.workers()[a].cmp(&partition.workers()[b]));
    let vertices_of: Vec<Vec<VertexId>> = (0..partition.workers().len()).map(|w| partition.vertices_of(w)).collect();

    let payload = program.payload_bytes();
    let mut values: Vec<P::Value> = (0..n).map(|v| program.initial_value(v, graph)).collect();
    let mut halted = vec![false; n];
    let mut inbox: Vec<Vec<P::Message>> = vec![Vec::new(); n];
    let mut supersteps = Vec::new();
    let mut sent_per_superstep = Vec::new();
    let mut total_sent = 0u64;
    let mut delivered = 0u64;
    let mut start = 0i64;
    let mut superstep = 1u32;

    loop {
        let mut next_inbox: Vec<Vec<P::Message>> = vec![Vec::new(); n];
        let mut step = SuperstepGraph::new(superstep, start);
        let mut step_sent = 0u64;

        // Workers in the cluster without vertices still report 0 ms.
        for (_, _, w) in &labels {
            step.vertex_weights.insert(w.clone(), 0);
        }

        for &w in &worker_order {
            let worker = &partition.workers()[w];
            let (mut active, mut sent, mut received) = (0u64, 0u64, 0u64);
            let mut traffic: BTreeMap<usize, u64> = BTreeMap::new();
            for &v in &vertices_of[w] {
                let messages = std::mem::take(&mut inbox[v]);
                if halted[v] && messages.is_empty() {
                    continue;
                }
                received += messages.len() as u64;
                active += 1;
                let mut ctx = Context { vertex: v, superstep, graph, outbox: Vec::new(), halt: false };
                program.compute(&mut ctx, &mut values[v], &messages);
                halted[v] = ctx.halt;
                for (target, msg) in ctx.outbox {
                    if target >= n {
                        return Err(SimError::BadTarget { vertex: v, target });
                    }
                    *traffic.entry(partition.worker_index(target)).or_default() += 1;
                    next_inbox[target].push(msg);
                    sent += 1;
                }
            }
            for (dst, count) in traffic {
                step.add_traffic(worker.clone(), partition.workers()[dst].clone(), Traffic::new(count, count * payload));
            }

            let base = (config.alpha * active as f64 + config.beta * sent as f64 + config.gamma * received as f64).round();
            let slowdown = config.host_slowdown.get(host_of[worker.as_str()]).copied().unwrap_or(1.0);
            step.vertex_weights.insert(worker.clone(), (slowdown * base).round() as u64);
            delivered += received;
            step_sent += sent;
        }

        total_sent += step_sent;
        if total_sent > config.message_cap {
            return Err(SimError::Runaway { sent: total_sent, cap: config.message_cap });
        }
        sent_per_superstep.push(step_sent);
        let elapsed = step.max_time() as i64;
        supersteps.push(step);

        let at_limit = program.max_supersteps().is_some_and(|m| superstep >= m);
        let quiescent = step_sent == 0 && halted.iter().all(|&h| h);
        if at_limit || quiescent {
            break;
        }
        inbox = next_inbox;
        start += elapsed;
        superstep += 1;
    }

    let mut tags = BTreeMap::new();
    tags.insert("alpha".into(), config.alpha.to_string());
    tags.insert("beta".into(), config.beta.to_string());
    tags.insert("gamma".into(), config.gamma.to_string());
    tags.insert("seed".into(), config.seed.to_string());
    tags.insert("shape".into(), config.shape.to_string());
    for (host, f) in &config.host_slowdown {
        tags.insert(format!("slowdown.{host}"), f.to_string());
    }

    Ok(SimRun {
        job: TraceJob {
            job_id: config.job_id.clone(),
            tree,
            supersteps,
            metadata: JobMetadata { algorithm: program.name(), input_graph: graph.name().to_string(), tags },
        },
        values,
        messages_sent: total_sent,
        messages_delivered: delivered,
        sent_per_superstep,
    })
}
