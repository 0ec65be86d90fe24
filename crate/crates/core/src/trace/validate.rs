use std::fmt;

use serde::Serialize;

use super::TraceJob;

/// A single broken invariant, located by superstep and offending unit or edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoSupersteps,
    /// The superstep at `position` (0-based) carries `found` instead of `expected`.
    IndexGap { position: usize, expected: u32, found: u32 },
    NegativeStart { superstep: u32, start: i64 },
    /// `s_i + max_v t_i(v) > s_{i+1}`.
    Barrier { superstep: u32, start: i64, max_time: u64, next_start: i64 },
    UnknownWorker { superstep: u32, worker: String },
    UnknownEdgeEndpoint { superstep: u32, src: String, dst: String, worker: String },
    /// Exactly one of message count and byte total is zero.
    MessageByteMismatch { superstep: u32, src: String, dst: String, messages: u64, bytes: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoSupersteps => write!(f, "job has no supersteps"),
            Violation::IndexGap { position, expected, found } => {
                write!(f, "superstep #{position} has index {found}, expected {expected}")
            }
            Violation::NegativeStart { superstep, start } => {
                write!(f, "superstep {superstep}: negative start {start}")
            }
            Violation::Barrier { superstep, start, max_time, next_start } => write!(
                f,
                "superstep {superstep}: start {start} + max time {max_time} exceeds next start {next_start}"
            ),
            Violation::UnknownWorker { superstep, worker } => {
                write!(f, "superstep {superstep}: worker `{worker}` is not in the topology")
            }
            Violation::UnknownEdgeEndpoint { superstep, src, dst, worker } => write!(
                f,
                "superstep {superstep}: edge {src}->{dst} references unknown worker `{worker}`"
            ),
            Violation::MessageByteMismatch { superstep, src, dst, messages, bytes } => write!(
                f,
                "superstep {superstep}: edge {src}->{dst} has {messages} messages but {bytes} bytes"
            ),
        }
    }
}

/// Every violation found in a job, in superstep order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks a parsed job against the model invariants. Never fails: every
/// problem is returned as data.
pub fn validate_trace(job: &TraceJob) -> ValidationReport {
    let mut violations = Vec::new();
    if job.supersteps.is_empty() {
        violations.push(Violation::NoSupersteps);
    }

    for (position, step) in job.supersteps.iter().enumerate() {
        let expected = position as u32 + 1;
        if step.index != expected {
            violations.push(Violation::IndexGap { position, expected, found: step.index });
        }
        if step.start < 0 {
            violations.push(Violation::NegativeStart { superstep: step.index, start: step.start });
        }
        for worker in step.vertex_weights.keys() {
            if !job.tree.contains_worker(worker) {
                violations.push(Violation::UnknownWorker { superstep: step.index, worker: worker.clone() });
            }
        }
        for ((src, dst), traffic) in &step.edge_weights {
            for end in [src, dst] {
                if !job.tree.contains_worker(end) {
                    violations.push(Violation::UnknownEdgeEndpoint {
                        superstep: step.index,
                        src: src.clone(),
                        dst: dst.clone(),
                        worker: end.clone(),
                    });
                    if src == dst {
                        break;
                    }
                }
            }
            if (traffic.messages == 0) != (traffic.bytes == 0) {
                violations.push(Violation::MessageByteMismatch {
                    superstep: step.index,
                    src: src.clone(),
                    dst: dst.clone(),
                    messages: traffic.messages,
                    bytes: traffic.bytes,
                });
            }
        }
        if let Some(next) = job.supersteps.get(position + 1) {
            let max_time = step.max_time();
            if step.start.saturating_add(max_time as i64) > next.start {
                violations.push(Violation::Barrier {
                    superstep: step.index,
                    start: step.start,
                    max_time,
                    next_start: next.start,
                });
            }
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{InclusionTree, JobMetadata, SuperstepGraph, TopologyRecord, Traffic};

    fn job(steps: Vec<SuperstepGraph>) -> TraceJob {
        TraceJob {
            job_id: "j".into(),
            tree: InclusionTree::from_records(vec![
                TopologyRecord::new("r0", "h0", "w0", 1),
                TopologyRecord::new("r0", "h0", "w1", 1),
            ])
            .unwrap(),
            supersteps: steps,
            metadata: JobMetadata::default(),
        }
    }

    fn step(index: u32, start: i64, times: &[(&str, u64)]) -> SuperstepGraph {
        let mut s = SuperstepGraph::new(index, start);
        for (w, t) in times {
            s.vertex_weights.insert(w.to_string(), *t);
        }
        s
    }

    #[test]
    fn tight_barrier_is_valid() {
        let j = job(vec![step(1, 0, &[("w0", 4), ("w1", 7)]), step(2, 7, &[("w0", 1)])]);
        assert!(validate_trace(&j).is_empty());
    }

    #[test]
    fn barrier_short_by_one() {
        let j = job(vec![step(1, 0, &[("w0", 4), ("w1", 7)]), step(2, 6, &[("w0", 1)])]);
        let report = validate_trace(&j);
        assert_eq!(
            report.violations,
            vec![Violation::Barrier { superstep: 1, start: 0, max_time: 7, next_start: 6 }]
        );
    }

    #[test]
    fn unknown_edge_endpoint() {
        let mut s = step(1, 0, &[("w0", 1)]);
        s.add_traffic("w0", "ghost", Traffic::new(1, 8));
        let report = validate_trace(&job(vec![s]));
        assert_eq!(report.len(), 1);
        assert!(matches!(&report.violations[0], Violation::UnknownEdgeEndpoint { worker, .. } if worker == "ghost"));
    }

    #[test]
    fn unknown_self_loop_reported_once() {
        let mut s = step(1, 0, &[]);
        s.add_traffic("ghost", "ghost", Traffic::new(1, 8));
        assert_eq!(validate_trace(&job(vec![s])).len(), 1);
    }

    #[test]
    fn bytes_without_messages() {
        let mut s = step(1, 0, &[("w0", 1)]);
        s.edge_weights.insert(("w0".into(), "w1".into()), Traffic::new(0, 16));
        let report = validate_trace(&job(vec![s]));
        assert!(matches!(report.violations[..], [Violation::MessageByteMismatch { .. }]));
    }

    #[test]
    fn index_gap_and_empty() {
        let report = validate_trace(&job(vec![step(1, 0, &[]), step(3, 0, &[])]));
        assert_eq!(report.violations, vec![Violation::IndexGap { position: 1, expected: 2, found: 3 }]);
        assert_eq!(validate_trace(&job(vec![])).violations, vec![Violation::NoSupersteps]);
    }

    #[test]
    fn negative_start() {
        let report = validate_trace(&job(vec![step(1, -1, &[])]));
        assert_eq!(report.violations, vec![Violation::NegativeStart { superstep: 1, start: -1 }]);
    }
}
