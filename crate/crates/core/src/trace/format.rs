//! Line-oriented JSON trace files.
//!
//! `topology.jsonl` holds one [`TopologyRecord`] per line. `trace.jsonl`
//! holds `time` and `msg` records:
//!
//! ```text
//! {"kind":"time","superstep":1,"start":0,"worker":"w0","ms":12}
//! {"kind":"msg","superstep":1,"src":"w0","dst":"w1","count":3,"bytes":24}
//! ```
//!
//! The canonical form sorts records by superstep, then `time` before `msg`,
//! then by worker label or `(src, dst)`. Writers always emit canonical form
//! with compact JSON and a trailing newline, so parsing and re-writing a
//! canonical file reproduces it byte for byte.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::tree::TopologyRecord;
use super::{InclusionTree, SuperstepGraph, TraceJob, Traffic, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// 1-based; 0 when the problem concerns the file as a whole.
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum TraceRecord {
    Time { superstep: u32, start: i64, worker: String, ms: u64 },
    Msg { superstep: u32, src: String, dst: String, count: u64, bytes: u64 },
}

fn records<'a>(text: &'a str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_topology(text: &str) -> Result<InclusionTree, ParseError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in records(text) {
        let rec: TopologyRecord =
            serde_json::from_str(raw).map_err(|e| ParseError::new(line, e.to_string()))?;
        for label in [&rec.rack, &rec.host, &rec.worker] {
            if label.is_empty() || label.contains(super::PATH_SEPARATOR) {
                return Err(ParseError::new(line, TreeError::BadLabel(label.clone()).to_string()));
            }
        }
        if !seen.insert(rec.worker.clone()) {
            return Err(ParseError::new(line, TreeError::DuplicateWorker(rec.worker).to_string()));
        }
        out.push(rec);
    }
    InclusionTree::from_records(out).map_err(|e| ParseError::new(0, e.to_string()))
}

pub fn write_topology(tree: &InclusionTree) -> String {
    let mut out = String::new();
    for rec in tree.records() {
        out.push_str(&serde_json::to_string(&rec).expect("topology record serializes"));
        out.push('\n');
    }
    out
}

/// Parses `trace.jsonl` into supersteps sorted by index.
///
/// Every superstep needs at least one `time` record (it carries `start`),
/// and all of its `time` records must agree on `start`. A worker may have at
/// most one `time` record per superstep; repeated `msg` records for the same
/// edge are summed.
pub fn parse_trace(text: &str) -> Result<Vec<SuperstepGraph>, ParseError> {
    let mut steps: BTreeMap<u32, SuperstepGraph> = BTreeMap::new();
    let mut first_msg_line: BTreeMap<u32, usize> = BTreeMap::new();
    let mut started: HashSet<u32> = HashSet::new();

    for (line, raw) in records(text) {
        let rec: TraceRecord =
            serde_json::from_str(raw).map_err(|e| ParseError::new(line, e.to_string()))?;
        match rec {
            TraceRecord::Time { superstep, start, worker, ms } => {
                let step = steps.entry(superstep).or_insert_with(|| SuperstepGraph::new(superstep, start));
                if started.insert(superstep) {
                    step.start = start;
                } else if step.start != start {
                    return Err(ParseError::new(
                        line,
                        format!("superstep {superstep} start {start} differs from earlier {}", step.start),
                    ));
                }
                if step.vertex_weights.insert(worker.clone(), ms).is_some() {
                    return Err(ParseError::new(
                        line,
                        format!("duplicate time record for worker `{worker}` in superstep {superstep}"),
                    ));
                }
            }
            TraceRecord::Msg { superstep, src, dst, count, bytes } => {
                first_msg_line.entry(superstep).or_insert(line);
                steps
                    .entry(superstep)
                    .or_insert_with(|| SuperstepGraph::new(superstep, 0))
                    .add_traffic(src, dst, Traffic::new(count, bytes));
            }
        }
    }

    if let Some((&superstep, &line)) = first_msg_line.iter().find(|(s, _)| !started.contains(s)) {
        return Err(ParseError::new(line, format!("superstep {superstep} has no time record")));
    }
    Ok(steps.into_values().collect())
}

/// Canonical `trace.jsonl` for a job.
pub fn write_trace(job: &TraceJob) -> String {
    let mut out = String::new();
    let mut emit = |rec: &TraceRecord| {
        // serde_json never fails on these records.
        let _ = writeln!(out, "{}", serde_json::to_string(rec).expect("trace record serializes"));
    };
    for step in &job.supersteps {
        if step.vertex_weights.is_empty() {
            // An idle superstep still needs its start instant on record.
            let worker = job.tree.workers()[0].label().to_string();
            emit(&TraceRecord::Time { superstep: step.index, start: step.start, worker, ms: 0 });
        }
        for (worker, &ms) in &step.vertex_weights {
            emit(&TraceRecord::Time { superstep: step.index, start: step.start, worker: worker.clone(), ms });
        }
        for ((src, dst), t) in &step.edge_weights {
            emit(&TraceRecord::Msg {
                superstep: step.index,
                src: src.clone(),
                dst: dst.clone(),
                count: t.messages,
                bytes: t.bytes,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::JobMetadata;

    const TOPOLOGY: &str = "{\"rack\":\"r0\",\"host\":\"h0\",\"worker\":\"w0\",\"vertices\":2}\n\
                            {\"rack\":\"r0\",\"host\":\"h0\",\"worker\":\"w1\",\"vertices\":3}\n";
    const TRACE: &str = "{\"kind\":\"time\",\"superstep\":1,\"start\":0,\"worker\":\"w0\",\"ms\":5}\n\
                         {\"kind\":\"time\",\"superstep\":1,\"start\":0,\"worker\":\"w1\",\"ms\":7}\n\
                         {\"kind\":\"msg\",\"superstep\":1,\"src\":\"w0\",\"dst\":\"w1\",\"count\":3,\"bytes\":24}\n\
                         {\"kind\":\"msg\",\"superstep\":1,\"src\":\"w1\",\"dst\":\"w1\",\"count\":1,\"bytes\":8}\n\
                         {\"kind\":\"time\",\"superstep\":2,\"start\":7,\"worker\":\"w0\",\"ms\":1}\n";

    fn job() -> TraceJob {
        TraceJob {
            job_id: "j".into(),
            tree: parse_topology(TOPOLOGY).unwrap(),
            supersteps: parse_trace(TRACE).unwrap(),
            metadata: JobMetadata::default(),
        }
    }

    #[test]
    fn canonical_files_round_trip() {
        let job = job();
        assert_eq!(write_topology(&job.tree), TOPOLOGY);
        assert_eq!(write_trace(&job), TRACE);
    }

    #[test]
    fn tolerates_whitespace_and_order() {
        let shuffled: Vec<&str> = TRACE.lines().rev().collect();
        let steps = parse_trace(&shuffled.join("\n\n")).unwrap();
        assert_eq!(steps, job().supersteps);
        let spaced = "{\"rack\": \"r0\", \"host\": \"h0\", \"worker\": \"w0\", \"vertices\": 2}";
        assert_eq!(parse_topology(spaced).unwrap().worker_count(), 1);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = format!("{TRACE}{{\"kind\":\"time\",\"superstep\":2,\"start\":8,\"worker\":\"w1\",\"ms\":1}}\n");
        assert_eq!(parse_trace(&bad).unwrap_err().line, 6);

        let dup = format!("{TRACE}{{\"kind\":\"time\",\"superstep\":2,\"start\":7,\"worker\":\"w0\",\"ms\":1}}\n");
        assert_eq!(parse_trace(&dup).unwrap_err().line, 6);

        let junk = "{\"kind\":\"time\",\"superstep\":1,\"start\":0,\"worker\":\"w0\",\"ms\":-5}";
        assert_eq!(parse_trace(junk).unwrap_err().line, 1);

        let orphan = "{\"kind\":\"msg\",\"superstep\":4,\"src\":\"a\",\"dst\":\"b\",\"count\":1,\"bytes\":1}";
        assert_eq!(parse_trace(orphan).unwrap_err().line, 1);

        let dup_worker = format!("{TOPOLOGY}{{\"rack\":\"r1\",\"host\":\"h9\",\"worker\":\"w0\",\"vertices\":2}}\n");
        assert_eq!(parse_topology(&dup_worker).unwrap_err().line, 3);
        assert_eq!(parse_topology("").unwrap_err().line, 0);
    }

    #[test]
    fn duplicate_msg_records_are_summed() {
        let twice = format!(
            "{TRACE}{{\"kind\":\"msg\",\"superstep\":1,\"src\":\"w0\",\"dst\":\"w1\",\"count\":2,\"bytes\":16}}\n"
        );
        let steps = parse_trace(&twice).unwrap();
        assert_eq!(steps[0].edge_weights[&("w0".to_string(), "w1".to_string())], Traffic::new(5, 40));
    }

    #[test]
    fn idle_superstep_keeps_its_start() {
        let mut job = job();
        job.supersteps[1].vertex_weights.clear();
        let text = write_trace(&job);
        let back = parse_trace(&text).unwrap();
        assert_eq!(back[1].start, 7);
        assert_eq!(back[1].max_time(), 0);
    }
}
