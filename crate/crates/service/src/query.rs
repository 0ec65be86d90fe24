//! Request parameters and response bodies, independent of HTTP.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use bspprof_core::aggregate::{
    trend_series, treemap_weights, FilterSpec, FrameGraph, TreemapWeights, TrendSeries, View,
};
use bspprof_core::layout::{chord_layout_or_degenerate, ChordLayout, GapConfig, WeightKind};
use bspprof_core::trace::{JobMetadata, JobStats, Level, UnitId};
use serde::Serialize;

use crate::registry::LoadedJob;

pub const DEFAULT_PER_PAGE: usize = 20;
pub const MAX_PER_PAGE: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("{0}")]
    BadParam(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Internal(String),
}

fn bad(msg: impl Into<String>) -> QueryError {
    QueryError::BadParam(msg.into())
}

/// Parsed query string shared by the frame and chord endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryParams {
    pub frame_size: usize,
    pub level: Level,
    pub kind: WeightKind,
    pub filter: FilterSpec,
    /// 1-based.
    pub page: usize,
    pub per_page: usize,
}

impl QueryParams {
    /// Reads `frame_size`, `level`, `kind`, `exclude` (comma-separated unit
    /// paths), `min_msgs`, `page` and `per_page`. Other keys are ignored.
    pub fn parse(pairs: &BTreeMap<String, String>, job: &LoadedJob) -> Result<Self, QueryError> {
        let number = |name: &str, default: usize| -> Result<usize, QueryError> {
            match pairs.get(name) {
                None => Ok(default),
                Some(v) => v.parse().map_err(|_| bad(format!("`{name}` must be a non-negative integer, got `{v}`"))),
            }
        };
        let k = job.job.supersteps.len();
        let frame_size = number("frame_size", 1)?;
        if frame_size < 1 || frame_size > k {
            return Err(bad(format!("`frame_size` must be between 1 and {k}, got {frame_size}")));
        }
        let level = match pairs.get("level") {
            None => Level::Worker,
            Some(v) => v.parse().map_err(|_| bad(format!("unknown level `{v}`")))?,
        };
        let kind = match pairs.get("kind") {
            None => WeightKind::Messages,
            Some(v) => v.parse().map_err(bad)?,
        };
        let mut excluded = BTreeSet::new();
        if let Some(list) = pairs.get("exclude") {
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let unit: UnitId = item.parse().map_err(|_| bad(format!("malformed unit `{item}`")))?;
                if !job.job.tree.contains_unit(&unit) {
                    return Err(bad(format!("unknown unit `{item}`")));
                }
                excluded.insert(unit);
            }
        }
        let min_total_messages = match pairs.get("min_msgs") {
            None => 0,
            Some(v) => v.parse().map_err(|_| bad(format!("`min_msgs` must be a non-negative integer, got `{v}`")))?,
        };
        let page = number("page", 1)?;
        if page < 1 {
            return Err(bad("`page` starts at 1"));
        }
        let per_page = number("per_page", DEFAULT_PER_PAGE)?;
        if per_page < 1 || per_page > MAX_PER_PAGE {
            return Err(bad(format!("`per_page` must be between 1 and {MAX_PER_PAGE}, got {per_page}")));
        }
        Ok(QueryParams {
            frame_size,
            level,
            kind,
            filter: FilterSpec { excluded, min_total_messages },
            page,
            per_page,
        })
    }

    fn view(&self) -> View {
        View { frame_size: self.frame_size, level: self.level, filter: self.filter.clone() }
    }

    /// Canonical text of the parameters that shape a chord layout.
    pub fn chord_key(&self) -> String {
        let excluded: Vec<String> = self.filter.excluded.iter().map(UnitId::to_string).collect();
        format!(
            "{}|{}|{}|{}|{}",
            self.frame_size,
            self.level,
            self.kind,
            excluded.join(","),
            self.filter.min_total_messages
        )
    }
}

#[derive(Debug, Serialize)]
pub struct JobSummary<'a> {
    pub job_id: &'a str,
    pub metadata: &'a JobMetadata,
    pub stats: JobStats,
    pub worker_count: usize,
    pub content_hash: &'a str,
}

#[derive(Debug, Serialize)]
pub struct JobList<'a> {
    pub jobs: Vec<JobSummary<'a>>,
}

pub fn summary(job: &LoadedJob) -> JobSummary<'_> {
    let r = &job.record;
    JobSummary {
        job_id: &r.job_id,
        metadata: &r.metadata,
        stats: r.stats,
        worker_count: r.worker_count,
        content_hash: &r.content_hash,
    }
}

#[derive(Debug, Serialize)]
pub struct TreeResponse<'a> {
    pub job_id: &'a str,
    pub workers: &'a [UnitId],
    pub weights: TreemapWeights,
}

pub fn tree(job: &LoadedJob) -> TreeResponse<'_> {
    TreeResponse { job_id: &job.record.job_id, workers: job.job.tree.workers(), weights: treemap_weights(&job.job.tree) }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameDescriptor {
    /// 1-based frame number, as used by the chord endpoint.
    pub frame: usize,
    pub first: u32,
    pub last: u32,
    pub messages: u64,
    pub bytes: u64,
    pub time: u64,
    pub units: usize,
}

#[derive(Debug, Serialize)]
pub struct FilterEcho {
    pub exclude: Vec<UnitId>,
    pub min_msgs: u64,
}

#[derive(Debug, Serialize)]
pub struct FramesPage<'a> {
    pub job_id: &'a str,
    pub frame_size: usize,
    pub level: Level,
    pub kind: WeightKind,
    pub filter: FilterEcho,
    pub stats: JobStats,
    pub frame_count: usize,
    pub page: usize,
    pub per_page: usize,
    pub page_count: usize,
    pub frames: Vec<FrameDescriptor>,
    pub series: TrendSeries,
}

fn frames_of(job: &LoadedJob, params: &QueryParams) -> Result<Arc<Vec<FrameGraph>>, QueryError> {
    job.frames(&params.view()).map_err(|e| QueryError::Internal(e.to_string()))
}

pub fn frames_page<'a>(job: &'a LoadedJob, params: &QueryParams) -> Result<FramesPage<'a>, QueryError> {
    let frames = frames_of(job, params)?;
    let page_count = frames.len().div_ceil(params.per_page);
    if params.page > page_count {
        return Err(bad(format!("`page` must be between 1 and {page_count}, got {}", params.page)));
    }
    let start = (params.page - 1) * params.per_page;
    let slice = &frames[start..(start + params.per_page).min(frames.len())];
    let descriptors = slice
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let t = f.total_traffic();
            FrameDescriptor {
                frame: start + i + 1,
                first: f.first,
                last: f.last,
                messages: t.messages,
                bytes: t.bytes,
                time: f.total_time(),
                units: f.unit_count(),
            }
        })
        .collect();
    let series = trend_series(slice).map_err(|e| QueryError::Internal(e.to_string()))?;
    Ok(FramesPage {
        job_id: &job.record.job_id,
        frame_size: params.frame_size,
        level: params.level,
        kind: params.kind,
        filter: FilterEcho {
            exclude: params.filter.excluded.iter().cloned().collect(),
            min_msgs: params.filter.min_total_messages,
        },
        stats: job.record.stats,
        frame_count: frames.len(),
        page: params.page,
        per_page: params.per_page,
        page_count,
        frames: descriptors,
        series,
    })
}

#[derive(Debug, Serialize)]
pub struct ChordResponse<'a> {
    pub job_id: &'a str,
    pub frame: usize,
    pub frame_count: usize,
    #[serde(flatten)]
    pub layout: ChordLayout,
}

/// Layout of 1-based frame `n` under the job's precomputed order.
pub fn chord<'a>(job: &'a LoadedJob, n: usize, params: &QueryParams) -> Result<ChordResponse<'a>, QueryError> {
    let frames = frames_of(job, params)?;
    if n < 1 || n > frames.len() {
        return Err(QueryError::NotFound(format!("frame {n} does not exist (1..={})", frames.len())));
    }
    let order = &job.record.orders[&params.kind];
    let layout = chord_layout_or_degenerate(&frames[n - 1], order, params.kind, &GapConfig::default())
        .map_err(|e| QueryError::Internal(e.to_string()))?;
    Ok(ChordResponse { job_id: &job.record.job_id, frame: n, frame_count: frames.len(), layout })
}
