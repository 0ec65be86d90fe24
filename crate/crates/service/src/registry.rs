//! Ingested jobs and their persisted form.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use bspprof_core::aggregate::{temporal_aggregate, view_frames, AggregationError, FrameGraph, View};
use bspprof_core::layout::{circular_order, CircularOrder, LayoutError, WeightKind};
use bspprof_core::trace::{
    job_stats, parse_topology, parse_trace, validate_trace, write_topology, write_trace, JobMetadata, JobStats,
    TraceJob, ValidationReport,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::store::{DocumentStore, StoreError};

/// What the registry remembers about one ingested job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub metadata: JobMetadata,
    /// SHA-256 over the canonical topology and trace files.
    pub content_hash: String,
    pub stats: JobStats,
    pub worker_count: usize,
    /// Worker-level order from the whole-job graph, per weight kind.
    pub orders: BTreeMap<WeightKind, CircularOrder>,
}

#[derive(Debug)]
pub struct LoadedJob {
    pub record: JobRecord,
    pub job: TraceJob,
    views: Mutex<HashMap<String, Arc<Vec<FrameGraph>>>>,
}

impl LoadedJob {
    pub fn new(record: JobRecord, job: TraceJob) -> Self {
        LoadedJob { record, job, views: Mutex::new(HashMap::new()) }
    }

    /// The frames of `view`, aggregated once per distinct view.
    pub fn frames(&self, view: &View) -> Result<Arc<Vec<FrameGraph>>, AggregationError> {
        let excluded: Vec<String> = view.filter.excluded.iter().map(ToString::to_string).collect();
        let key = format!("{}|{}|{}|{}", view.frame_size, view.level, excluded.join(","), view.filter.min_total_messages);
        if let Some(hit) = self.views.lock().expect("view cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let frames = Arc::new(view_frames(&self.job, view)?);
        self.views.lock().expect("view cache lock").entry(key).or_insert(frames.clone());
        Ok(frames)
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestRequest {
    pub topology: String,
    pub trace: String,
    /// Derived from the content hash when absent.
    pub job_id: Option<String>,
    pub metadata: JobMetadata,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{document} line {line}: {message}")]
    Parse { document: &'static str, line: usize, message: String },
    #[error("trace failed validation: {0}")]
    Invalid(ValidationReport),
    #[error("job `{0}` already exists with different content")]
    Conflict(String),
    #[error("invalid job id `{0}`")]
    BadJobId(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("stored record for `{job_id}` is unusable: {reason}")]
    Corrupt { job_id: String, reason: String },
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

fn valid_job_id(id: &str) -> bool {
    (1..=64).contains(&id.len())
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

fn key(job_id: &str, doc: &str) -> String {
    format!("jobs/{job_id}/{doc}")
}

fn content_hash(topology: &str, trace: &str) -> String {
    let mut h = Sha256::new();
    h.update(topology.as_bytes());
    h.update([0u8]);
    h.update(trace.as_bytes());
    hex::encode(h.finalize())
}

/// Parsed files in canonical form, plus their hash.
struct Canonical {
    job: TraceJob,
    topology: String,
    trace: String,
    hash: String,
}

fn canonicalize(topology: &str, trace: &str, job_id: &str, metadata: JobMetadata) -> Result<Canonical, IngestError> {
    let tree = parse_topology(topology).map_err(|e| IngestError::Parse {
        document: "topology",
        line: e.line,
        message: e.message,
    })?;
    let supersteps =
        parse_trace(trace).map_err(|e| IngestError::Parse { document: "trace", line: e.line, message: e.message })?;
    let job = TraceJob { job_id: job_id.to_string(), tree, supersteps, metadata };
    let report = validate_trace(&job);
    if !report.is_empty() {
        return Err(IngestError::Invalid(report));
    }
    let topology = write_topology(&job.tree);
    let trace = write_trace(&job);
    let hash = content_hash(&topology, &trace);
    Ok(Canonical { job, topology, trace, hash })
}

fn build_record(job: &TraceJob, hash: String) -> Result<JobRecord, IngestError> {
    let stats = job_stats(job).map_err(|e| IngestError::Invalid(e.report))?;
    let whole = temporal_aggregate(job, job.supersteps.len())?.remove(0);
    let mut orders = BTreeMap::new();
    for kind in WeightKind::ALL {
        orders.insert(kind, circular_order(&whole, kind)?);
    }
    Ok(JobRecord {
        job_id: job.job_id.clone(),
        metadata: job.metadata.clone(),
        content_hash: hash,
        stats,
        worker_count: job.tree.worker_count(),
        orders,
    })
}

/// The registry of jobs over a document store.
///
/// Reads take a shared lock on the job map; ingests are serialized and a job
/// becomes visible only after all of its documents are persisted.
pub struct Registry {
    store: Box<dyn DocumentStore>,
    jobs: RwLock<BTreeMap<String, Arc<LoadedJob>>>,
    ingest_lock: Mutex<()>,
    // TODO: bound this cache (LRU) for long-running servers with many jobs.
    cache: Mutex<HashMap<String, Arc<Vec<u8>>>>,
}

impl Registry {
    /// Loads every job persisted in `store`.
    pub fn open(store: Box<dyn DocumentStore>) -> Result<Self, IngestError> {
        let mut jobs = BTreeMap::new();
        for k in store.keys("jobs/")? {
            let Some(job_id) = k.strip_prefix("jobs/").and_then(|r| r.strip_suffix("/record.json")) else {
                continue;
            };
            let corrupt = |reason: String| IngestError::Corrupt { job_id: job_id.to_string(), reason };
            let read = |doc: &str| -> Result<String, IngestError> {
                let bytes = store.get(&key(job_id, doc))?.ok_or_else(|| corrupt(format!("missing {doc}")))?;
                String::from_utf8(bytes).map_err(|_| corrupt(format!("{doc} is not UTF-8")))
            };
            let record: JobRecord =
                serde_json::from_str(&read("record.json")?).map_err(|e| corrupt(e.to_string()))?;
            let canonical = canonicalize(&read("topology.jsonl")?, &read("trace.jsonl")?, job_id, record.metadata.clone())?;
            if canonical.hash != record.content_hash {
                return Err(corrupt("content hash mismatch".into()));
            }
            jobs.insert(job_id.to_string(), Arc::new(LoadedJob::new(record, canonical.job)));
        }
        Ok(Registry { store, jobs: RwLock::new(jobs), ingest_lock: Mutex::new(()), cache: Mutex::new(HashMap::new()) })
    }

    pub fn list(&self) -> Vec<Arc<LoadedJob>> {
        self.jobs.read().expect("job map lock").values().cloned().collect()
    }

    pub fn get(&self, job_id: &str) -> Option<Arc<LoadedJob>> {
        self.jobs.read().expect("job map lock").get(job_id).cloned()
    }

    /// Stores a job. Returns the job and whether it was newly created;
    /// identical content yields the existing job.
    pub fn ingest(&self, req: IngestRequest) -> Result<(Arc<LoadedJob>, bool), IngestError> {
        if let Some(id) = &req.job_id {
            if !valid_job_id(id) {
                return Err(IngestError::BadJobId(id.clone()));
            }
        }
        let _guard = self.ingest_lock.lock().expect("ingest lock");
        let provisional = req.job_id.clone().unwrap_or_default();
        let canonical = canonicalize(&req.topology, &req.trace, &provisional, req.metadata)?;

        let job_id = match &req.job_id {
            Some(id) => {
                if let Some(existing) = self.get(id) {
                    if existing.record.content_hash == canonical.hash {
                        return Ok((existing, false));
                    }
                    return Err(IngestError::Conflict(id.clone()));
                }
                id.clone()
            }
            None => {
                if let Some(existing) = self.list().into_iter().find(|j| j.record.content_hash == canonical.hash) {
                    return Ok((existing, false));
                }
                let id = format!("job-{}", &canonical.hash[..12]);
                if self.get(&id).is_some() {
                    return Err(IngestError::Conflict(id));
                }
                id
            }
        };

        let job = TraceJob { job_id: job_id.clone(), ..canonical.job };
        let record = build_record(&job, canonical.hash)?;
        let record_json = serde_json::to_vec_pretty(&record).expect("records serialize");
        self.store.put(&key(&job_id, "topology.jsonl"), canonical.topology.as_bytes())?;
        self.store.put(&key(&job_id, "trace.jsonl"), canonical.trace.as_bytes())?;
        // The record goes last: it marks the job as complete.
        self.store.put(&key(&job_id, "record.json"), &record_json)?;

        let loaded = Arc::new(LoadedJob::new(record, job));
        self.jobs.write().expect("job map lock").insert(job_id, loaded.clone());
        Ok((loaded, true))
    }

    /// Returns the cached body for `key`, computing and storing it on a miss.
    /// Errors are not cached.
    pub fn cached<E>(&self, key: String, compute: impl FnOnce() -> Result<Vec<u8>, E>) -> Result<Arc<Vec<u8>>, E> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let body = Arc::new(compute()?);
        self.cache.lock().expect("cache lock").entry(key).or_insert(body.clone());
        Ok(body)
    }
}
