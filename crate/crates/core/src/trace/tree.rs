use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Level, UnitId, PATH_SEPARATOR};

/// One line of `topology.jsonl`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyRecord {
    pub rack: String,
    pub host: String,
    pub worker: String,
    pub vertices: u64,
}

impl TopologyRecord {
    pub fn new(rack: &str, host: &str, worker: &str, vertices: u64) -> Self {
        TopologyRecord { rack: rack.into(), host: host.into(), worker: worker.into(), vertices }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("topology has no workers")]
    Empty,
    #[error("label `{0}` is empty or contains `{PATH_SEPARATOR}`")]
    BadLabel(String),
    #[error("worker `{0}` is listed more than once")]
    DuplicateWorker(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Worker {
    pub label: String,
    pub vertices: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Host {
    pub label: String,
    pub workers: Vec<Worker>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rack {
    pub label: String,
    pub hosts: Vec<Host>,
}

/// The static rack → host → worker hierarchy of a job.
///
/// Racks, hosts within a rack and workers within a host are kept sorted by
/// label, so iteration order is canonical. Host labels need only be unique
/// within their rack; worker labels are globally unique.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InclusionTree {
    racks: Vec<Rack>,
    workers: Vec<UnitId>,
    by_label: HashMap<String, usize>,
}

fn check_label(label: &str) -> Result<(), TreeError> {
    if label.is_empty() || label.contains(PATH_SEPARATOR) {
        Err(TreeError::BadLabel(label.to_string()))
    } else {
        Ok(())
    }
}

impl InclusionTree {
    pub fn from_records(records: impl IntoIterator<Item = TopologyRecord>) -> Result<Self, TreeError> {
        let mut nested: BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>> = BTreeMap::new();
        let mut seen = HashMap::new();
        for rec in records {
            check_label(&rec.rack)?;
            check_label(&rec.host)?;
            check_label(&rec.worker)?;
            if seen.insert(rec.worker.clone(), ()).is_some() {
                return Err(TreeError::DuplicateWorker(rec.worker));
            }
            nested
                .entry(rec.rack)
                .or_default()
                .entry(rec.host)
                .or_default()
                .insert(rec.worker, rec.vertices);
        }
        if seen.is_empty() {
            return Err(TreeError::Empty);
        }

        let racks: Vec<Rack> = nested
            .into_iter()
            .map(|(rack, hosts)| Rack {
                label: rack,
                hosts: hosts
                    .into_iter()
                    .map(|(host, workers)| Host {
                        label: host,
                        workers: workers
                            .into_iter()
                            .map(|(label, vertices)| Worker { label, vertices })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();

        let mut workers = Vec::new();
        let mut by_label = HashMap::new();
        for rack in &racks {
            for host in &rack.hosts {
                for w in &host.workers {
                    by_label.insert(w.label.clone(), workers.len());
                    workers.push(UnitId::worker(&rack.label, &host.label, &w.label));
                }
            }
        }
        Ok(InclusionTree { racks, workers, by_label })
    }

    pub fn racks(&self) -> &[Rack] {
        &self.racks
    }

    /// All workers in tree order.
    pub fn workers(&self) -> &[UnitId] {
        &self.workers
    }

    pub fn worker_count(&self) -> usize {
        self.workers.len()
    }

    pub fn contains_worker(&self, label: &str) -> bool {
        self.by_label.contains_key(label)
    }

    /// Full id of the worker with this label.
    /// Position of worker `label` in [`InclusionTree::workers`].
    pub fn worker_index(&self, label: &str) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    pub fn worker_unit(&self, label: &str) -> Option<&UnitId> {
        self.by_label.get(label).map(|&i| &self.workers[i])
    }

    /// The unit at `level` that contains the worker `label`.
    pub fn unit_of_worker(&self, label: &str, level: Level) -> Option<UnitId> {
        self.worker_unit(label)?.ancestor_at(level)
    }

    /// Every unit at `level`, in tree order.
    pub fn units(&self, level: Level) -> Vec<UnitId> {
        match level {
            Level::Worker => self.workers.clone(),
            Level::Host => self
                .racks
                .iter()
                .flat_map(|r| r.hosts.iter().map(move |h| UnitId::host(&r.label, &h.label)))
                .collect(),
            Level::Rack => self.racks.iter().map(|r| UnitId::rack(&r.label)).collect(),
        }
    }

    pub fn contains_unit(&self, unit: &UnitId) -> bool {
        match unit.level() {
            Level::Worker => unit
                .worker_label()
                .and_then(|w| self.worker_unit(w))
                .is_some_and(|found| found == unit),
            _ => self.units(unit.level()).contains(unit),
        }
    }

    pub fn vertex_count(&self, worker: &str) -> Option<u64> {
        self.racks
            .iter()
            .flat_map(|r| &r.hosts)
            .flat_map(|h| &h.workers)
            .find(|w| w.label == worker)
            .map(|w| w.vertices)
    }

    /// The flat record list in canonical (tree) order.
    pub fn records(&self) -> Vec<TopologyRecord> {
        let mut out = Vec::with_capacity(self.workers.len());
        for rack in &self.racks {
            for host in &rack.hosts {
                for w in &host.workers {
                    out.push(TopologyRecord::new(&rack.label, &host.label, &w.label, w.vertices));
                }
            }
        }
        out
    }
}
