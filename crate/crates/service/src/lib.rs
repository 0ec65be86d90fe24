//! Trace ingestion, persistence and the HTTP API of the profiler.

pub mod api;
pub mod query;
pub mod registry;
pub mod simulate;
pub mod store;

pub use api::router;
pub use registry::{IngestError, IngestRequest, JobRecord, LoadedJob, Registry};
pub use store::{DocumentStore, FsStore, MemStore};
