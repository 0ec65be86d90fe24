//! The `simulate` subcommand, usable as a library call.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use bspprof_core::sim::{
    hash_partition, khop_broadcast_program, locality_partition, pagerank_program, run_job, sssp_program, GraphError,
    InputGraph, PartitionError, SimConfig, SimError,
};
use bspprof_core::trace::{write_topology, write_trace, TraceJob};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("partition: {0}")]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// A built-in graph (`grid:WxH`, `path:N`, `cycle:N`) or an edge-list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    Grid(usize, usize),
    Path(usize),
    Cycle(usize),
    File(String),
}

impl FromStr for GraphSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |v: &str| v.parse::<usize>().map_err(|_| format!("bad size `{v}` in graph `{s}`"));
        match s.split_once(':') {
            Some(("grid", dims)) => {
                let (w, h) = dims.split_once('x').ok_or_else(|| format!("grid needs WxH, got `{dims}`"))?;
                Ok(GraphSpec::Grid(num(w)?, num(h)?))
            }
            Some(("path", n)) => Ok(GraphSpec::Path(num(n)?)),
            Some(("cycle", n)) => Ok(GraphSpec::Cycle(num(n)?)),
            _ => Ok(GraphSpec::File(s.to_string())),
        }
    }
}

impl GraphSpec {
    pub fn load(&self) -> Result<InputGraph, SimulateError> {
        Ok(match self {
            GraphSpec::Grid(w, h) => InputGraph::grid(*w, *h)?.with_name(format!("grid:{w}x{h}")),
            GraphSpec::Path(n) => InputGraph::path(*n)?.with_name(format!("path:{n}")),
            GraphSpec::Cycle(n) => InputGraph::cycle(*n)?.with_name(format!("cycle:{n}")),
            GraphSpec::File(path) => {
                let text =
                    fs::read_to_string(path).map_err(|source| SimulateError::Io { path: path.clone(), source })?;
                let name = Path::new(path).file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                InputGraph::parse_edge_list(&text)?.with_name(name)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProgramKind {
    Sssp,
    SsspBuggy,
    Pagerank,
    Khop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PartitionerKind {
    Hash,
    Locality,
}

#[derive(Debug, Clone)]
pub struct SimulateSpec {
    pub graph: GraphSpec,
    pub program: ProgramKind,
    pub source: usize,
    pub iterations: u32,
    pub hops: u32,
    pub rounds: u32,
    /// Overrides the program's own limit when set.
    pub max_supersteps: Option<u32>,
    pub partitioner: PartitionerKind,
    pub config: SimConfig,
}

pub fn simulate(spec: &SimulateSpec) -> Result<TraceJob, SimulateError> {
    let graph = spec.graph.load()?;
    let workers = spec.config.shape.worker_labels();
    let partition = match spec.partitioner {
        PartitionerKind::Hash => hash_partition(&graph, &workers)?,
        PartitionerKind::Locality => locality_partition(&graph, &workers, spec.config.seed)?,
    };
    if spec.source >= graph.vertex_count() {
        return Err(SimulateError::Spec(format!("source {} is not a vertex of the graph", spec.source)));
    }
    let job = match spec.program {
        ProgramKind::Sssp | ProgramKind::SsspBuggy => {
            let mut program = sssp_program(spec.source, spec.program == ProgramKind::SsspBuggy);
            if spec.max_supersteps.is_some() {
                program = program.with_max_supersteps(spec.max_supersteps);
            }
            run_job(&graph, &program, &partition, &spec.config)?.job
        }
        ProgramKind::Pagerank => {
            let iterations = spec.max_supersteps.unwrap_or(spec.iterations);
            if iterations == 0 {
                return Err(SimulateError::Spec("PageRank needs at least one iteration".into()));
            }
            run_job(&graph, &pagerank_program(iterations), &partition, &spec.config)?.job
        }
        ProgramKind::Khop => {
            if spec.hops == 0 || spec.rounds == 0 {
                return Err(SimulateError::Spec("k-hop needs hops ≥ 1 and rounds ≥ 1".into()));
            }
            run_job(&graph, &khop_broadcast_program(spec.hops, spec.rounds), &partition, &spec.config)?.job
        }
    };
    Ok(job)
}

#[derive(Serialize)]
struct Meta<'a> {
    job_id: &'a str,
    #[serde(flatten)]
    metadata: &'a bspprof_core::trace::JobMetadata,
}

/// Writes `topology.jsonl`, `trace.jsonl` and `meta.json` into `dir`.
pub fn write_outputs(job: &TraceJob, dir: &Path) -> Result<(), SimulateError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| SimulateError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let meta = serde_json::to_string_pretty(&Meta { job_id: &job.job_id, metadata: &job.metadata })
        .expect("metadata serializes");
    for (name, body) in [("topology.jsonl", write_topology(&job.tree)), ("trace.jsonl", write_trace(job)), ("meta.json", meta + "\n")] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(&path))?;
    }
    Ok(())
}
