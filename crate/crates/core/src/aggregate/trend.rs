use serde::Serialize;

use super::{AggregationError, FrameGraph};
use crate::trace::{Level, UnitId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameBounds {
    pub first: u32,
    pub last: u32,
}

/// One unit's row of the trend view, one entry per frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnitSeries {
    pub unit: UnitId,
    pub time: Vec<u64>,
    pub msgs_in: Vec<u64>,
    pub msgs_out: Vec<u64>,
    pub bytes_in: Vec<u64>,
    pub bytes_out: Vec<u64>,
}

impl UnitSeries {
    fn new(unit: UnitId, frames: usize) -> Self {
        UnitSeries {
            unit,
            time: vec![0; frames],
            msgs_in: vec![0; frames],
            msgs_out: vec![0; frames],
            bytes_in: vec![0; frames],
            bytes_out: vec![0; frames],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrendSeries {
    pub level: Level,
    pub frames: Vec<FrameBounds>,
    pub units: Vec<UnitSeries>,
}

/// Per-unit time and in/out traffic over a frame sequence.
///
/// A self-loop counts once as incoming and once as outgoing for its unit.
/// All frames must share the level and unit set of the first.
pub fn trend_series(frames: &[FrameGraph]) -> Result<TrendSeries, AggregationError> {
    let Some(head) = frames.first() else {
        return Ok(TrendSeries { level: Level::Worker, frames: Vec::new(), units: Vec::new() });
    };
    let units: Vec<&UnitId> = head.units().collect();
    for (i, f) in frames.iter().enumerate().skip(1) {
        if f.level != head.level || !f.units().eq(units.iter().copied()) {
            return Err(AggregationError::InconsistentUnits { frame: i });
        }
    }

    let mut rows: Vec<UnitSeries> = units.iter().map(|&u| UnitSeries::new(u.clone(), frames.len())).collect();
    let row_of = |u: &UnitId| units.binary_search(&u).ok();
    for (i, f) in frames.iter().enumerate() {
        for (r, t) in rows.iter_mut().zip(f.times.values()) {
            r.time[i] = *t;
        }
        for ((src, dst), t) in &f.edges {
            if let Some(s) = row_of(src) {
                rows[s].msgs_out[i] += t.messages;
                rows[s].bytes_out[i] += t.bytes;
            }
            if let Some(d) = row_of(dst) {
                rows[d].msgs_in[i] += t.messages;
                rows[d].bytes_in[i] += t.bytes;
            }
        }
    }
    Ok(TrendSeries {
        level: head.level,
        frames: frames.iter().map(|f| FrameBounds { first: f.first, last: f.last }).collect(),
        units: rows,
    })
}
