use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use bspprof_core::aggregate::{temporal_aggregate, view_frames, View};
use bspprof_core::layout::{
    chord_layout_or_degenerate, circular_order_traced, svg, ChordLayout, CircularOrder, GapConfig, OrderTrace,
    WeightKind,
};
use bspprof_core::sim::{SimConfig, TreeShape, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_GAMMA, DEFAULT_MESSAGE_CAP};
use bspprof_core::trace::{parse_topology, parse_trace, JobMetadata, Level, TraceJob};
use bspprof_service::query::{self, QueryParams};
use bspprof_service::simulate::{simulate, write_outputs, GraphSpec, PartitionerKind, ProgramKind, SimulateSpec};
use bspprof_service::{router, FsStore, IngestError, IngestRequest, Registry};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

type Error = Box<dyn std::error::Error>;

/// Profiler for BSP graph-processing jobs.
#[derive(Parser)]
#[command(name = "bspprof", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a vertex program on a simulated cluster and write its trace files.
    Simulate(SimulateArgs),
    /// Validate and store a trace.
    Ingest(IngestArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Print the circular order and per-frame chord geometry of a trace as JSON.
    Layout(LayoutArgs),
    /// Render one frame of a stored job as SVG.
    ExportSvg(ExportSvgArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// `grid:WxH`, `path:N`, `cycle:N` or an edge-list file (`u v [w]` per line).
    #[arg(long, default_value = "grid:10x10")]
    graph: GraphSpec,
    #[arg(long, value_enum, default_value = "sssp")]
    program: ProgramKind,
    /// SSSP source vertex.
    #[arg(long, default_value_t = 0)]
    source: usize,
    /// PageRank supersteps.
    #[arg(long, default_value_t = 10)]
    iterations: u32,
    /// k-hop period length.
    #[arg(long, default_value_t = 2)]
    hops: u32,
    /// k-hop periods.
    #[arg(long, default_value_t = 3)]
    rounds: u32,
    #[arg(long)]
    max_supersteps: Option<u32>,
    /// Cluster shape as racks:hosts-per-rack:workers-per-host.
    #[arg(long, default_value = "1:2:2")]
    tree: TreeShape,
    #[arg(long, value_enum, default_value = "hash")]
    partitioner: PartitionerKind,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    /// Host throttling as `host=factor`; repeatable.
    #[arg(long = "slowdown", value_parser = parse_slowdown)]
    slowdowns: Vec<(String, f64)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MESSAGE_CAP)]
    message_cap: u64,
    #[arg(long, default_value = "sim")]
    job_id: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_slowdown(s: &str) -> Result<(String, f64), String> {
    let (host, f) = s.split_once('=').ok_or_else(|| format!("expected host=factor, got `{s}`"))?;
    let f: f64 = f.parse().map_err(|_| format!("bad factor in `{s}`"))?;
    Ok((host.to_string(), f))
}

#[derive(Args)]
struct StoreArg {
    /// Store directory.
    #[arg(long, env = "BSPPROF_STORE", default_value = "bspprof-store")]
    store: PathBuf,
}

#[derive(Args)]
struct TraceFiles {
    /// Directory holding topology.jsonl, trace.jsonl and optionally meta.json.
    #[arg(long, conflicts_with_all = ["topology", "trace"])]
    dir: Option<PathBuf>,
    #[arg(long, requires = "trace")]
    topology: Option<PathBuf>,
    #[arg(long, requires = "topology")]
    trace: Option<PathBuf>,
    /// Metadata JSON (`algorithm`, `input_graph`, `tags`, optional `job_id`).
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    store: StoreArg,
    #[command(flatten)]
    files: TraceFiles,
    #[arg(long)]
    job_id: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    store: StoreArg,
    #[arg(long, env = "BSPPROF_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "BSPPROF_BIND", default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    /// Static UI bundle served for paths outside the API.
    #[arg(long, env = "BSPPROF_UI_DIR")]
    ui_dir: Option<PathBuf>,
}

#[derive(Args)]
struct LayoutArgs {
    #[command(flatten)]
    files: TraceFiles,
    #[arg(long, default_value = "messages")]
    kind: WeightKind,
    #[arg(long, default_value_t = 1)]
    frame_size: usize,
    #[arg(long, default_value = "worker")]
    level: Level,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportSvgArgs {
    #[command(flatten)]
    store: StoreArg,
    #[arg(long)]
    job: String,
    /// 1-based frame number.
    #[arg(long)]
    frame: usize,
    #[arg(long, default_value_t = 1)]
    frame_size: usize,
    #[arg(long, default_value = "worker")]
    level: Level,
    #[arg(long, default_value = "messages")]
    kind: WeightKind,
    #[arg(long, default_value_t = 800)]
    size: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Deserialize, Default)]
struct MetaFile {
    job_id: Option<String>,
    #[serde(flatten)]
    metadata: JobMetadata,
}

struct Loaded {
    topology: String,
    trace: String,
    meta: MetaFile,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

impl TraceFiles {
    fn load(&self) -> Result<Loaded, Error> {
        let (topology, trace, meta) = match (&self.dir, &self.topology, &self.trace) {
            (Some(dir), _, _) => {
                let meta = dir.join("meta.json");
                (dir.join("topology.jsonl"), dir.join("trace.jsonl"), self.meta.clone().or(meta.exists().then_some(meta)))
            }
            (None, Some(t), Some(r)) => (t.clone(), r.clone(), self.meta.clone()),
            _ => return Err("pass --dir or both --topology and --trace".into()),
        };
        let meta = match meta {
            Some(p) => serde_json::from_str(&read(&p)?).map_err(|e| format!("{}: {e}", p.display()))?,
            None => MetaFile::default(),
        };
        Ok(Loaded { topology: read(&topology)?, trace: read(&trace)?, meta })
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn run_simulate(args: SimulateArgs) -> Result<(), Error> {
    let mut config = SimConfig::new(args.tree);
    config.alpha = args.alpha;
    config.beta = args.beta;
    config.gamma = args.gamma;
    config.seed = args.seed;
    config.message_cap = args.message_cap;
    config.job_id = args.job_id;
    config.host_slowdown = args.slowdowns.into_iter().collect::<BTreeMap<_, _>>();
    let spec = SimulateSpec {
        graph: args.graph,
        program: args.program,
        source: args.source,
        iterations: args.iterations,
        hops: args.hops,
        rounds: args.rounds,
        max_supersteps: args.max_supersteps,
        partitioner: args.partitioner,
        config,
    };
    let job = simulate(&spec)?;
    write_outputs(&job, &args.out)?;
    eprintln!("wrote {} supersteps to {}", job.supersteps.len(), args.out.display());
    Ok(())
}

fn open_registry(store: &StoreArg) -> Result<Registry, Error> {
    Ok(Registry::open(Box::new(FsStore::open(&store.store)?))?)
}

fn run_ingest(args: IngestArgs) -> Result<(), Error> {
    let registry = open_registry(&args.store)?;
    let loaded = args.files.load()?;
    let req = IngestRequest {
        topology: loaded.topology,
        trace: loaded.trace,
        job_id: args.job_id.or(loaded.meta.job_id),
        metadata: loaded.meta.metadata,
    };
    match registry.ingest(req) {
        Ok((job, created)) => {
            eprintln!("{} job `{}`", if created { "stored" } else { "already stored:" }, job.record.job_id);
            print!("{}", to_json(&job.record));
            Ok(())
        }
        Err(IngestError::Invalid(report)) => Err(format!("trace failed validation:\n{}", to_json(&report.violations)).into()),
        Err(e) => Err(e.into()),
    }
}

async fn run_serve(args: ServeArgs) -> Result<(), Error> {
    let registry = Arc::new(open_registry(&args.store)?);
    let addr = SocketAddr::new(args.bind, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(address = %listener.local_addr()?, jobs = registry.list().len(), "serving");
    axum::serve(listener, router(registry, args.ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Output of the `layout` subcommand.
#[derive(Serialize)]
struct LayoutDocument {
    job_id: String,
    kind: WeightKind,
    level: Level,
    frame_size: usize,
    /// Worker-level order from the whole-job graph.
    order: CircularOrder,
    crossings: OrderTrace,
    frames: Vec<ChordLayout>,
}

fn run_layout(args: LayoutArgs) -> Result<(), Error> {
    let loaded = args.files.load()?;
    let job = TraceJob {
        job_id: loaded.meta.job_id.unwrap_or_else(|| "trace".into()),
        tree: parse_topology(&loaded.topology).map_err(|e| format!("topology {e}"))?,
        supersteps: parse_trace(&loaded.trace).map_err(|e| format!("trace {e}"))?,
        metadata: loaded.meta.metadata,
    };
    let report = bspprof_core::trace::validate_trace(&job);
    if !report.is_empty() {
        return Err(format!("trace failed validation: {report}").into());
    }
    let whole = temporal_aggregate(&job, job.supersteps.len())?.remove(0);
    let (order, crossings) = circular_order_traced(&whole, args.kind)?;
    let gaps = GapConfig::default();
    let frames = view_frames(&job, &View::new(args.frame_size, args.level))?
        .iter()
        .map(|f| chord_layout_or_degenerate(f, &order, args.kind, &gaps))
        .collect::<Result<Vec<_>, _>>()?;
    let doc = LayoutDocument {
        job_id: job.job_id.clone(),
        kind: args.kind,
        level: args.level,
        frame_size: args.frame_size,
        order,
        crossings,
        frames,
    };
    let text = to_json(&doc);
    match args.out {
        Some(path) => fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_export_svg(args: ExportSvgArgs) -> Result<(), Error> {
    let registry = open_registry(&args.store)?;
    let job = registry.get(&args.job).ok_or_else(|| format!("unknown job `{}`", args.job))?;
    let mut pairs = BTreeMap::new();
    pairs.insert("frame_size".to_string(), args.frame_size.to_string());
    pairs.insert("level".to_string(), args.level.to_string());
    pairs.insert("kind".to_string(), args.kind.to_string());
    let params = QueryParams::parse(&pairs, &job)?;
    let chord = query::chord(&job, args.frame, &params)?;
    fs::write(&args.out, svg::render(&chord.layout, args.size)).map_err(|e| format!("{}: {e}", args.out.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Ingest(a) => run_ingest(a),
        Command::Serve(a) => tokio::runtime::Runtime::new().map_err(Error::from).and_then(|rt| rt.block_on(run_serve(a))),
        Command::Layout(a) => run_layout(a),
        Command::ExportSvg(a) => run_export_svg(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
