//! Temporal and hierarchy aggregation of superstep graphs.
//!
//! A [`FrameGraph`] sums a run of consecutive supersteps `i..=j` into one
//! digraph, at worker level or merged up to hosts or racks. Frame time at
//! host and rack level is the *sum* of member-worker times, so beyond worker
//! level it no longer reads as wall-clock time.

mod trend;
mod treemap;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use trend::{trend_series, FrameBounds, TrendSeries, UnitSeries};
pub use treemap::{treemap_weights, TreemapWeights, WeightNode};

use crate::trace::{InclusionTree, Level, TraceJob, Traffic, UnitId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregationError {
    #[error("frame size {frame_size} is outside 1..={supersteps}")]
    FrameSize { frame_size: usize, supersteps: usize },
    #[error("expected a worker-level frame, got {0}")]
    NotWorkerLevel(Level),
    #[error("unit `{0}` is not in the inclusion tree")]
    MissingUnit(UnitId),
    #[error("frame {frame} has a different unit set or level than frame 0")]
    InconsistentUnits { frame: usize },
}

/// The aggregated digraph `G_ij` of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameGraph {
    /// First superstep of the frame (1-based, inclusive).
    pub first: u32,
    /// Last superstep of the frame (inclusive).
    pub last: u32,
    pub level: Level,
    /// Summed time per unit. The key set is the frame's unit set.
    pub times: BTreeMap<UnitId, u64>,
    /// Summed traffic per ordered unit pair; self-loops allowed.
    pub edges: BTreeMap<(UnitId, UnitId), Traffic>,
}

impl FrameGraph {
    pub fn units(&self) -> impl Iterator<Item = &UnitId> {
        self.times.keys()
    }

    pub fn unit_count(&self) -> usize {
        self.times.len()
    }

    pub fn total_traffic(&self) -> Traffic {
        let mut total = Traffic::default();
        for t in self.edges.values() {
            total += *t;
        }
        total
    }

    pub fn total_time(&self) -> u64 {
        self.times.values().sum()
    }

    pub fn traffic(&self, src: &UnitId, dst: &UnitId) -> Traffic {
        self.edges.get(&(src.clone(), dst.clone())).copied().unwrap_or_default()
    }
}

/// Groups supersteps into frames of `frame_size`; the last frame takes the
/// remainder when `frame_size` does not divide `k`.
pub fn temporal_aggregate(job: &TraceJob, frame_size: usize) -> Result<Vec<FrameGraph>, AggregationError> {
    let k = job.supersteps.len();
    if frame_size < 1 || frame_size > k {
        return Err(AggregationError::FrameSize { frame_size, supersteps: k });
    }
    let index = |label: &str| {
        job.tree
            .worker_index(label)
            .ok_or_else(|| AggregationError::MissingUnit(UnitId::worker("?", "?", label)))
    };
    let workers = job.tree.workers();

    job.supersteps
        .chunks(frame_size)
        .map(|chunk| {
            // Accumulate by worker index; units are materialized once per frame.
            let mut times = vec![0u64; workers.len()];
            let mut edges: BTreeMap<(usize, usize), Traffic> = BTreeMap::new();
            for step in chunk {
                for (label, &t) in &step.vertex_weights {
                    times[index(label)?] += t;
                }
                for ((src, dst), &t) in &step.edge_weights {
                    *edges.entry((index(src)?, index(dst)?)).or_default() += t;
                }
            }
            Ok(FrameGraph {
                first: chunk[0].index,
                last: chunk[chunk.len() - 1].index,
                level: Level::Worker,
                times: workers.iter().cloned().zip(times).collect(),
                edges: edges.into_iter().map(|((s, d), t)| ((workers[s].clone(), workers[d].clone()), t)).collect(),
            })
        })
        .collect()
}

/// Merges a worker-level frame into units of `level`. Traffic inside a unit
/// becomes a self-loop on it. The result holds the units that contain at
/// least one of the frame's workers.
pub fn hierarchy_aggregate(
    frame: &FrameGraph,
    level: Level,
    tree: &InclusionTree,
) -> Result<FrameGraph, AggregationError> {
    if frame.level != Level::Worker {
        return Err(AggregationError::NotWorkerLevel(frame.level));
    }
    for unit in frame.units() {
        if !tree.contains_unit(unit) {
            return Err(AggregationError::MissingUnit(unit.clone()));
        }
    }
    if level == Level::Worker {
        return Ok(frame.clone());
    }
    let up = |u: &UnitId| u.ancestor_at(level).expect("a worker has ancestors at every level");
    let mut times = BTreeMap::new();
    for (unit, &t) in &frame.times {
        *times.entry(up(unit)).or_default() += t;
    }
    let mut edges = BTreeMap::new();
    for ((src, dst), &t) in &frame.edges {
        *edges.entry((up(src), up(dst))).or_default() += t;
    }
    Ok(FrameGraph { first: frame.first, last: frame.last, level, times, edges })
}

/// Units to hide.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Units of any level. A unit is hidden when it or any ancestor is listed.
    #[serde(default)]
    pub excluded: BTreeSet<UnitId>,
    /// Units whose whole-job traffic (in + out) is below this are hidden.
    #[serde(default)]
    pub min_total_messages: u64,
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        self.excluded.is_empty() && self.min_total_messages == 0
    }

    pub fn excludes(&self, unit: &UnitId) -> bool {
        self.excluded.iter().any(|e| unit.is_within(e))
    }

    fn exclusions_only(&self) -> FilterSpec {
        FilterSpec { excluded: self.excluded.clone(), min_total_messages: 0 }
    }
}

/// Messages in plus messages out per unit; a self-loop counts in both.
pub fn unit_message_totals(frame: &FrameGraph) -> BTreeMap<UnitId, u64> {
    let mut totals: BTreeMap<UnitId, u64> = frame.units().map(|u| (u.clone(), 0)).collect();
    for ((src, dst), t) in &frame.edges {
        *totals.entry(src.clone()).or_default() += t.messages;
        *totals.entry(dst.clone()).or_default() += t.messages;
    }
    totals
}

/// Removes excluded units and those below the traffic threshold, together
/// with their incident edges. `totals` are whole-job totals at the frame's
/// level (see [`unit_message_totals`]).
pub fn apply_filter(frame: &FrameGraph, spec: &FilterSpec, totals: &BTreeMap<UnitId, u64>) -> FrameGraph {
    if spec.is_empty() {
        return frame.clone();
    }
    let keep = |u: &UnitId| {
        !spec.excludes(u) && totals.get(u).copied().unwrap_or(0) >= spec.min_total_messages
    };
    FrameGraph {
        first: frame.first,
        last: frame.last,
        level: frame.level,
        times: frame.times.iter().filter(|(u, _)| keep(u)).map(|(u, &t)| (u.clone(), t)).collect(),
        edges: frame
            .edges
            .iter()
            .filter(|((s, d), _)| keep(s) && keep(d))
            .map(|(k, &t)| (k.clone(), t))
            .collect(),
    }
}

/// Everything that shapes a displayed frame sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct View {
    pub frame_size: usize,
    pub level: Level,
    pub filter: FilterSpec,
}

impl View {
    pub fn new(frame_size: usize, level: Level) -> Self {
        View { frame_size, level, filter: FilterSpec::default() }
    }
}

/// The frames a user sees for `view`.
///
/// Exclusions act on workers before merging, so hiding a worker also removes
/// its share from its host and rack. The traffic threshold then applies at
/// the displayed level against whole-job totals computed through the same
/// pipeline, so a unit is either shown in every frame or in none.
pub fn view_frames(job: &TraceJob, view: &View) -> Result<Vec<FrameGraph>, AggregationError> {
    let exclusions = view.filter.exclusions_only();
    let no_totals = BTreeMap::new();
    let shape = |frame: &FrameGraph| -> Result<FrameGraph, AggregationError> {
        let kept = apply_filter(frame, &exclusions, &no_totals);
        hierarchy_aggregate(&kept, view.level, &job.tree)
    };

    let frames = temporal_aggregate(job, view.frame_size)?
        .iter()
        .map(shape)
        .collect::<Result<Vec<_>, _>>()?;
    if view.filter.min_total_messages == 0 {
        return Ok(frames);
    }
    let whole = temporal_aggregate(job, job.supersteps.len())?;
    let totals = unit_message_totals(&shape(&whole[0])?);
    Ok(frames.iter().map(|f| apply_filter(f, &view.filter, &totals)).collect())
}
