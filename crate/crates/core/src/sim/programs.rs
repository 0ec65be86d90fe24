use std::collections::BTreeSet;

use super::{Context, InputGraph, VertexId, VertexProgram};

/// Superstep limit of buggy SSSP unless overridden; it never quiesces.
pub const DEFAULT_BUGGY_SSSP_SUPERSTEPS: u32 = 50;

pub const PAGERANK_DAMPING: f64 = 0.85;

/// Single-source shortest paths.
///
/// The correct variant relays a distance only when it strictly improves and
/// always votes to halt. The buggy variant keeps every reached vertex active
/// and relays its current distance in every superstep. Both converge to the
/// same distances; only the traffic differs.
#[derive(Debug, Clone, PartialEq)]
pub struct Sssp {
    pub source: VertexId,
    pub buggy: bool,
    max_supersteps: Option<u32>,
}

pub fn sssp_program(source: VertexId, buggy: bool) -> Sssp {
    Sssp { source, buggy, max_supersteps: buggy.then_some(DEFAULT_BUGGY_SSSP_SUPERSTEPS) }
}

impl Sssp {
    pub fn with_max_supersteps(mut self, limit: Option<u32>) -> Self {
        self.max_supersteps = limit;
        self
    }
}

impl VertexProgram for Sssp {
    type Value = f64;
    type Message = f64;

    fn name(&self) -> String {
        if self.buggy { "sssp-buggy".into() } else { "sssp".into() }
    }

    fn payload_bytes(&self) -> u64 {
        8
    }

    fn max_supersteps(&self) -> Option<u32> {
        self.max_supersteps
    }

    fn initial_value(&self, _vertex: VertexId, _graph: &InputGraph) -> f64 {
        f64::INFINITY
    }

    fn compute(&self, ctx: &mut Context<'_, f64>, dist: &mut f64, inbox: &[f64]) {
        let mut candidate = inbox.iter().copied().fold(f64::INFINITY, f64::min);
        if ctx.superstep() == 1 && ctx.vertex() == self.source {
            candidate = 0.0;
        }
        let improved = candidate < *dist;
        if improved {
            *dist = candidate;
        }
        let relay = if self.buggy { dist.is_finite() } else { improved };
        if relay {
            for e in ctx.out_edges() {
                ctx.send(e.target, *dist + e.weight);
            }
        }
        if !(self.buggy && dist.is_finite()) {
            ctx.vote_to_halt();
        }
    }
}

/// Classic vertex-centric PageRank with damping 0.85.
///
/// Runs exactly `iterations` supersteps. Superstep 1 sets every rank to
/// `1/n`; each later superstep sets it to `0.15/n + 0.85·Σ inbox`. Every
/// superstep, including the last, sends `rank / deg_out` along each out-edge.
/// Rank reaching a sink is not redistributed.
#[derive(Debug, Clone, PartialEq)]
pub struct PageRank {
    pub iterations: u32,
}

pub fn pagerank_program(iterations: u32) -> PageRank {
    assert!(iterations > 0, "PageRank needs at least one iteration");
    PageRank { iterations }
}

impl VertexProgram for PageRank {
    type Value = f64;
    type Message = f64;

    fn name(&self) -> String {
        "pagerank".into()
    }

    fn payload_bytes(&self) -> u64 {
        8
    }

    fn max_supersteps(&self) -> Option<u32> {
        Some(self.iterations)
    }

    fn initial_value(&self, _vertex: VertexId, graph: &InputGraph) -> f64 {
        1.0 / graph.vertex_count() as f64
    }

    fn compute(&self, ctx: &mut Context<'_, f64>, rank: &mut f64, inbox: &[f64]) {
        let n = ctx.vertex_count() as f64;
        if ctx.superstep() > 1 {
            *rank = (1.0 - PAGERANK_DAMPING) / n + PAGERANK_DAMPING * inbox.iter().sum::<f64>();
        }
        let edges = ctx.out_edges();
        if !edges.is_empty() {
            let share = *rank / edges.len() as f64;
            for e in edges {
                ctx.send(e.target, share);
            }
        }
        if ctx.superstep() >= self.iterations {
            ctx.vote_to_halt();
        }
    }
}

/// Periodic controlled flooding.
///
/// Each period lasts `hops` supersteps. In its first superstep every vertex
/// sends its own token to all out-neighbors; in each following superstep a
/// vertex forwards, once, every token it sees for the first time in the
/// period. A token therefore reaches exactly the vertices within `hops`
/// steps of its origin. The job runs `rounds` periods.
#[derive(Debug, Clone, PartialEq)]
pub struct KHopBroadcast {
    pub hops: u32,
    pub rounds: u32,
}

pub fn khop_broadcast_program(hops: u32, rounds: u32) -> KHopBroadcast {
    assert!(hops >= 1 && rounds >= 1, "k-hop broadcast needs hops ≥ 1 and rounds ≥ 1");
    KHopBroadcast { hops, rounds }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KHopState {
    /// Tokens seen in the current period, including the vertex's own.
    pub seen: BTreeSet<u32>,
    /// Token arrivals over the whole job, duplicates included.
    pub received: u64,
}

impl VertexProgram for KHopBroadcast {
    type Value = KHopState;
    type Message = u32;

    fn name(&self) -> String {
        "khop".into()
    }

    fn payload_bytes(&self) -> u64 {
        4
    }

    fn max_supersteps(&self) -> Option<u32> {
        Some(self.hops * self.rounds)
    }

    fn initial_value(&self, _vertex: VertexId, _graph: &InputGraph) -> KHopState {
        KHopState::default()
    }

    fn compute(&self, ctx: &mut Context<'_, u32>, state: &mut KHopState, inbox: &[u32]) {
        state.received += inbox.len() as u64;
        let hop = (ctx.superstep() - 1) % self.hops + 1;
        let edges = ctx.out_edges();
        if hop == 1 {
            // Whatever arrives now is the previous period's last hop.
            let own = ctx.vertex() as u32;
            state.seen.clear();
            state.seen.insert(own);
            for e in edges {
                ctx.send(e.target, own);
            }
        } else {
            let fresh: BTreeSet<u32> = inbox.iter().copied().filter(|t| !state.seen.contains(t)).collect();
            for &token in &fresh {
                for e in edges {
                    ctx.send(e.target, token);
                }
            }
            state.seen.extend(fresh);
        }
        if ctx.superstep() >= self.hops * self.rounds {
            ctx.vote_to_halt();
        }
    }
}
