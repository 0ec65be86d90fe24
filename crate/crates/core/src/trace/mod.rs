//! Data model for a profiled job.
//!
//! A job runs on a static rack → host → worker hierarchy ([`InclusionTree`])
//! and is recorded as one weighted digraph per superstep ([`SuperstepGraph`]):
//! vertices are workers weighted by their compute time, edges carry the
//! message count and byte total sent between two workers.

mod format;
mod tree;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use format::{parse_topology, parse_trace, write_topology, write_trace, ParseError};
pub use tree::{Host, InclusionTree, Rack, TopologyRecord, TreeError, Worker};
pub use validate::{validate_trace, ValidationReport, Violation};

/// Separator between labels in the textual form of a [`UnitId`].
pub const PATH_SEPARATOR: char = '/';

/// Granularity of a computing unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Worker,
    Host,
    Rack,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Worker, Level::Host, Level::Rack];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Worker => "worker",
            Level::Host => "host",
            Level::Rack => "rack",
        }
    }

    /// The level directly above this one, if any.
    pub fn parent(self) -> Option<Level> {
        match self {
            Level::Worker => Some(Level::Host),
            Level::Host => Some(Level::Rack),
            Level::Rack => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "worker" => Ok(Level::Worker),
            "host" => Ok(Level::Host),
            "rack" => Ok(Level::Rack),
            other => Err(format!("unknown level `{other}` (expected worker, host or rack)")),
        }
    }
}

/// Identifies a worker, host or rack by its full path of labels.
///
/// The textual form is `rack`, `rack/host` or `rack/host/worker`. Ordering
/// is by level first, then lexicographically by path, which matches the
/// order of the [`InclusionTree`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitId {
    level: Level,
    rack: String,
    host: Option<String>,
    worker: Option<String>,
}

impl UnitId {
    pub fn rack(rack: impl Into<String>) -> Self {
        UnitId { level: Level::Rack, rack: rack.into(), host: None, worker: None }
    }

    pub fn host(rack: impl Into<String>, host: impl Into<String>) -> Self {
        UnitId { level: Level::Host, rack: rack.into(), host: Some(host.into()), worker: None }
    }

    pub fn worker(rack: impl Into<String>, host: impl Into<String>, worker: impl Into<String>) -> Self {
        UnitId {
            level: Level::Worker,
            rack: rack.into(),
            host: Some(host.into()),
            worker: Some(worker.into()),
        }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn rack_label(&self) -> &str {
        &self.rack
    }

    pub fn host_label(&self) -> Option<&str> {
        self.host.as_deref()
    }

    pub fn worker_label(&self) -> Option<&str> {
        self.worker.as_deref()
    }

    /// Label of the unit itself (the last path segment).
    pub fn label(&self) -> &str {
        self.worker.as_deref().or(self.host.as_deref()).unwrap_or(&self.rack)
    }

    /// The enclosing unit one level up.
    pub fn parent(&self) -> Option<UnitId> {
        match self.level {
            Level::Worker => Some(UnitId::host(self.rack.clone(), self.host.clone()?)),
            Level::Host => Some(UnitId::rack(self.rack.clone())),
            Level::Rack => None,
        }
    }

    /// The ancestor (or self) at `level`; `None` when `level` is finer than this unit.
    pub fn ancestor_at(&self, level: Level) -> Option<UnitId> {
        if level < self.level {
            return None;
        }
        let mut unit = self.clone();
        while unit.level < level {
            unit = unit.parent()?;
        }
        Some(unit)
    }

    /// True when `other` is this unit or one of its ancestors.
    pub fn is_within(&self, other: &UnitId) -> bool {
        self.ancestor_at(other.level).as_ref() == Some(other)
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rack)?;
        if let Some(host) = &self.host {
            write!(f, "{PATH_SEPARATOR}{host}")?;
        }
        if let Some(worker) = &self.worker {
            write!(f, "{PATH_SEPARATOR}{worker}")?;
        }
        Ok(())
    }
}

impl FromStr for UnitId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(PATH_SEPARATOR).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(format!("unit id `{s}` has an empty label"));
        }
        match parts.as_slice() {
            [rack] => Ok(UnitId::rack(*rack)),
            [rack, host] => Ok(UnitId::host(*rack, *host)),
            [rack, host, worker] => Ok(UnitId::worker(*rack, *host, *worker)),
            _ => Err(format!("unit id `{s}` has more than three labels")),
        }
    }
}

impl Serialize for UnitId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UnitId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Message count and byte total on one directed edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Traffic {
    pub messages: u64,
    pub bytes: u64,
}

impl Traffic {
    pub fn new(messages: u64, bytes: u64) -> Self {
        Traffic { messages, bytes }
    }

    pub fn is_zero(&self) -> bool {
        self.messages == 0 && self.bytes == 0
    }
}

impl AddAssign for Traffic {
    fn add_assign(&mut self, rhs: Self) {
        self.messages += rhs.messages;
        self.bytes += rhs.bytes;
    }
}

/// One superstep's digraph `G_i`, keyed by worker label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SuperstepGraph {
    /// 1-based superstep number.
    pub index: u32,
    /// Start instant in ms since job start. Signed so that corrupt traces
    /// can be represented and reported instead of rejected at parse time.
    pub start: i64,
    /// Compute time per worker in ms. Absent workers took 0 ms.
    pub vertex_weights: BTreeMap<String, u64>,
    pub edge_weights: BTreeMap<(String, String), Traffic>,
}

impl SuperstepGraph {
    pub fn new(index: u32, start: i64) -> Self {
        SuperstepGraph { index, start, ..Default::default() }
    }

    pub fn time_of(&self, worker: &str) -> u64 {
        self.vertex_weights.get(worker).copied().unwrap_or(0)
    }

    pub fn max_time(&self) -> u64 {
        self.vertex_weights.values().copied().max().unwrap_or(0)
    }

    /// Adds traffic on `src → dst`, merging with any existing record.
    pub fn add_traffic(&mut self, src: impl Into<String>, dst: impl Into<String>, traffic: Traffic) {
        *self.edge_weights.entry((src.into(), dst.into())).or_default() += traffic;
    }

    pub fn total_traffic(&self) -> Traffic {
        let mut total = Traffic::default();
        for t in self.edge_weights.values() {
            total += *t;
        }
        total
    }
}

/// Descriptive metadata attached to a job.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobMetadata {
    #[serde(default)]
    pub algorithm: String,
    #[serde(default)]
    pub input_graph: String,
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

/// A complete profiled job.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceJob {
    pub job_id: String,
    pub tree: InclusionTree,
    pub supersteps: Vec<SuperstepGraph>,
    pub metadata: JobMetadata,
}

impl TraceJob {
    pub fn superstep_count(&self) -> usize {
        self.supersteps.len()
    }
}

/// High-level figures shown in the aggregation panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobStats {
    pub total_runtime_ms: u64,
    pub superstep_count: u32,
    pub total_messages: u64,
    pub total_bytes: u64,
}

#[derive(Debug, thiserror::Error)]
#[error("trace is invalid: {report}")]
pub struct InvalidTrace {
    pub report: ValidationReport,
}

/// Totals over a valid job. Rejects jobs with a non-empty validation report.
pub fn job_stats(job: &TraceJob) -> Result<JobStats, InvalidTrace> {
    let report = validate_trace(job);
    if !report.is_empty() {
        return Err(InvalidTrace { report });
    }
    let mut traffic = Traffic::default();
    for step in &job.supersteps {
        traffic += step.total_traffic();
    }
    // Validation guarantees k ≥ 1 and non-negative starts.
    let last = job.supersteps.last().expect("validated job has supersteps");
    Ok(JobStats {
        total_runtime_ms: last.start as u64 + last.max_time(),
        superstep_count: job.supersteps.len() as u32,
        total_messages: traffic.messages,
        total_bytes: traffic.bytes,
    })
}
