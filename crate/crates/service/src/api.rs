//! HTTP/JSON interface.
//!
//! | route | body |
//! |---|---|
//! | `GET /jobs` | [`JobList`](crate::query::JobList) |
//! | `GET /jobs/{id}/stats` | `JobStats` |
//! | `GET /jobs/{id}/tree` | [`TreeResponse`](crate::query::TreeResponse) |
//! | `GET /jobs/{id}/frames` | [`FramesPage`](crate::query::FramesPage) |
//! | `GET /jobs/{id}/frame/{n}/chord` | [`ChordResponse`](crate::query::ChordResponse) |
//! | `POST /jobs` | `JobRecord`, multipart fields `topology`, `trace`, optional `job_id`, `algorithm`, `graph`, `tags` (JSON object) or `meta` (JSON metadata) |
//!
//! Errors are `{"error": "..."}` with 400, 404, 409, 422 (plus `violations`)
//! or 500.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use bspprof_core::trace::JobMetadata;
use serde::Serialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::query::{self, JobList, QueryError, QueryParams};
use crate::registry::{IngestError, IngestRequest, LoadedJob, Registry};

const MAX_UPLOAD_BYTES: usize = 512 * 1024 * 1024;

fn json_bytes(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], Body::from(body)).into_response()
}

fn json<T: Serialize>(status: StatusCode, value: &T) -> Response {
    json_bytes(status, serde_json::to_vec(value).expect("responses serialize"))
}

fn error(status: StatusCode, message: impl std::fmt::Display) -> Response {
    json(status, &json!({ "error": message.to_string() }))
}

impl IntoResponse for QueryError {
    fn into_response(self) -> Response {
        let status = match self {
            QueryError::BadParam(_) => StatusCode::BAD_REQUEST,
            QueryError::NotFound(_) => StatusCode::NOT_FOUND,
            QueryError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        error(status, self)
    }
}

fn ingest_error(e: IngestError) -> Response {
    match &e {
        IngestError::Parse { document, line, message } => json(
            StatusCode::BAD_REQUEST,
            &json!({ "error": e.to_string(), "document": document, "line": line, "message": message }),
        ),
        IngestError::Invalid(report) => json(
            StatusCode::UNPROCESSABLE_ENTITY,
            &json!({ "error": e.to_string(), "violations": report.violations }),
        ),
        IngestError::Conflict(_) => error(StatusCode::CONFLICT, e),
        IngestError::BadJobId(_) => error(StatusCode::BAD_REQUEST, e),
        _ => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

type Params = Query<BTreeMap<String, String>>;

fn job(registry: &Registry, id: &str) -> Result<Arc<LoadedJob>, QueryError> {
    registry.get(id).ok_or_else(|| QueryError::NotFound(format!("unknown job `{id}`")))
}

async fn list_jobs(State(registry): State<Arc<Registry>>) -> Response {
    let jobs = registry.list();
    json(StatusCode::OK, &JobList { jobs: jobs.iter().map(|j| query::summary(j)).collect() })
}

async fn stats(State(registry): State<Arc<Registry>>, Path(id): Path<String>) -> Result<Response, QueryError> {
    Ok(json(StatusCode::OK, &job(&registry, &id)?.record.stats))
}

async fn tree(State(registry): State<Arc<Registry>>, Path(id): Path<String>) -> Result<Response, QueryError> {
    let job = job(&registry, &id)?;
    Ok(json(StatusCode::OK, &query::tree(&job)))
}

async fn frames(
    State(registry): State<Arc<Registry>>,
    Path(id): Path<String>,
    Query(pairs): Params,
) -> Result<Response, QueryError> {
    let job = job(&registry, &id)?;
    let params = QueryParams::parse(&pairs, &job)?;
    Ok(json(StatusCode::OK, &query::frames_page(&job, &params)?))
}

async fn chord(
    State(registry): State<Arc<Registry>>,
    Path((id, n)): Path<(String, String)>,
    Query(pairs): Params,
) -> Result<Response, QueryError> {
    let job = job(&registry, &id)?;
    let n: usize = n.parse().map_err(|_| QueryError::NotFound(format!("frame `{n}` does not exist")))?;
    let params = QueryParams::parse(&pairs, &job)?;
    let key = format!("{id}|{n}|{}", params.chord_key());
    let body = registry.cached(key, || {
        query::chord(&job, n, &params).map(|r| serde_json::to_vec(&r).expect("responses serialize"))
    })?;
    Ok(json_bytes(StatusCode::OK, body.to_vec()))
}

async fn read_ingest(mut form: Multipart) -> Result<IngestRequest, Response> {
    let mut req = IngestRequest::default();
    let (mut topology, mut trace) = (None, None);
    let bad = |m: String| error(StatusCode::BAD_REQUEST, m);
    while let Some(field) = form.next_field().await.map_err(|e| bad(e.to_string()))? {
        let name = field.name().unwrap_or_default().to_string();
        let text = field.text().await.map_err(|e| bad(format!("field `{name}`: {e}")))?;
        match name.as_str() {
            "topology" => topology = Some(text),
            "trace" => trace = Some(text),
            "job_id" if !text.is_empty() => req.job_id = Some(text),
            "algorithm" => req.metadata.algorithm = text,
            "graph" => req.metadata.input_graph = text,
            "tags" => {
                req.metadata.tags =
                    serde_json::from_str(&text).map_err(|e| bad(format!("`tags` must be a JSON object: {e}")))?
            }
            "meta" => {
                req.metadata = serde_json::from_str::<JobMetadata>(&text)
                    .map_err(|e| bad(format!("`meta` must be job metadata JSON: {e}")))?
            }
            _ => {}
        }
    }
    req.topology = topology.ok_or_else(|| bad("missing multipart field `topology`".into()))?;
    req.trace = trace.ok_or_else(|| bad("missing multipart field `trace`".into()))?;
    Ok(req)
}

async fn create_job(State(registry): State<Arc<Registry>>, form: Multipart) -> Response {
    let req = match read_ingest(form).await {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let outcome = tokio::task::spawn_blocking(move || registry.ingest(req)).await;
    match outcome {
        Ok(Ok((job, created))) => {
            let status = if created { StatusCode::CREATED } else { StatusCode::OK };
            json(status, &job.record)
        }
        Ok(Err(e)) => ingest_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

/// The service routes, optionally serving a static UI bundle for other paths.
pub fn router(registry: Arc<Registry>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/jobs", get(list_jobs).post(create_job))
        .route("/jobs/{id}/stats", get(stats))
        .route("/jobs/{id}/tree", get(tree))
        .route("/jobs/{id}/frames", get(frames))
        .route("/jobs/{id}/frame/{n}/chord", get(chord))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(registry);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
