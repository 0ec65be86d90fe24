//! Vertex → worker assignments.
//!
//! Cut sizes count *directed* edges `(u, v)` of the input graph whose
//! endpoints sit on different workers. A graph that stores each undirected
//! edge once therefore counts each cut edge once.

use std::collections::VecDeque;

use super::graph::InputGraph;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("partition needs at least one worker")]
    NoWorkers,
    #[error("duplicate worker `{0}`")]
    DuplicateWorker(String),
    #[error("vertex {vertex} is assigned to worker #{worker}, but only {workers} workers exist")]
    BadWorker { vertex: usize, worker: usize, workers: usize },
}

/// Every vertex assigned to exactly one of an ordered list of workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    workers: Vec<String>,
    assignment: Vec<usize>,
}

impl Partition {
    /// `assignment[v]` is the index into `workers` of the worker owning `v`.
    pub fn new(workers: Vec<String>, assignment: Vec<usize>) -> Result<Self, PartitionError> {
        if workers.is_empty() {
            return Err(PartitionError::NoWorkers);
        }
        for (i, w) in workers.iter().enumerate() {
            if workers[..i].contains(w) {
                return Err(PartitionError::DuplicateWorker(w.clone()));
            }
        }
        if let Some((vertex, &worker)) = assignment.iter().enumerate().find(|(_, &w)| w >= workers.len()) {
            return Err(PartitionError::BadWorker { vertex, worker, workers: workers.len() });
        }
        Ok(Partition { workers, assignment })
    }

    pub fn workers(&self) -> &[String] {
        &self.workers
    }

    pub fn vertex_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn worker_index(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn worker_of(&self, v: usize) -> &str {
        &self.workers[self.assignment[v]]
    }

    /// Vertex count per worker, aligned with [`Partition::workers`].
    pub fn loads(&self) -> Vec<u64> {
        let mut loads = vec![0; self.workers.len()];
        for &w in &self.assignment {
            loads[w] += 1;
        }
        loads
    }

    /// Vertices of worker `w`, ascending.
    pub fn vertices_of(&self, w: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&v| self.assignment[v] == w).collect()
    }
}

/// The fixed integer hash behind [`hash_partition`]: the SplitMix64
/// finalizer applied to the vertex id.
pub fn vertex_hash(v: u64) -> u64 {
    let mut z = v.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `v → workers[vertex_hash(v) mod |workers|]`.
pub fn hash_partition(graph: &InputGraph, workers: &[String]) -> Result<Partition, PartitionError> {
    let count = workers.len() as u64;
    if count == 0 {
        return Err(PartitionError::NoWorkers);
    }
    let assignment = (0..graph.vertex_count()).map(|v| (vertex_hash(v as u64) % count) as usize).collect();
    Partition::new(workers.to_vec(), assignment)
}

/// Greedy BFS chunking.
///
/// Chunks of `⌈n / |workers|⌉` vertices are grown by breadth-first search
/// over edges in either direction and handed to workers in order. The first
/// chunk starts at vertex `seed mod n`; when a search runs dry (or a new
/// chunk begins) it restarts at the lowest unassigned vertex.
pub fn locality_partition(graph: &InputGraph, workers: &[String], seed: u64) -> Result<Partition, PartitionError> {
    if workers.is_empty() {
        return Err(PartitionError::NoWorkers);
    }
    let n = graph.vertex_count();
    let target = n.div_ceil(workers.len()).max(1);
    let adj = graph.undirected_neighbors();
    let mut assignment = vec![usize::MAX; n];
    let mut assigned = 0;
    let mut next_free = 0;
    let mut start = Some((seed % n as u64) as usize);

    for worker in 0..workers.len() {
        let mut size = 0;
        let mut queue = VecDeque::new();
        while size < target && assigned < n {
            if queue.is_empty() {
                let s = start.take().unwrap_or_else(|| {
                    while assignment[next_free] != usize::MAX {
                        next_free += 1;
                    }
                    next_free
                });
                assignment[s] = worker;
                size += 1;
                assigned += 1;
                queue.push_back(s);
                continue;
            }
            let u = queue.pop_front().expect("queue is non-empty");
            for &v in &adj[u] {
                if size == target {
                    break;
                }
                if assignment[v] == usize::MAX {
                    assignment[v] = worker;
                    size += 1;
                    assigned += 1;
                    queue.push_back(v);
                }
            }
        }
    }
    Partition::new(workers.to_vec(), assignment)
}

/// Number of directed edges whose endpoints lie on different workers.
pub fn cut_edges(graph: &InputGraph, partition: &Partition) -> usize {
    graph
        .edges()
        .filter(|(u, e)| partition.worker_index(*u) != partition.worker_index(e.target))
        .count()
}
