use std::collections::HashMap;

use super::WeightKind;
use crate::aggregate::FrameGraph;
use crate::trace::UnitId;

/// Chords as `(position, position, weight)`; self-loops, zero weights and
/// edges touching units outside `order` are dropped.
pub(crate) fn chords(order: &[UnitId], frame: &FrameGraph, kind: WeightKind) -> Vec<(usize, usize, u64)> {
    let pos: HashMap<&UnitId, usize> = order.iter().enumerate().map(|(i, u)| (u, i)).collect();
    frame
        .edges
        .iter()
        .filter(|((s, d), t)| s != d && kind.of(t) > 0)
        .filter_map(|((s, d), t)| Some((*pos.get(s)?, *pos.get(d)?, kind.of(t))))
        .collect()
}

fn cross(a: (usize, usize), b: (usize, usize)) -> bool {
    let (lo, hi) = if a.0 < a.1 { (a.0, a.1) } else { (a.1, a.0) };
    if b.0 == lo || b.0 == hi || b.1 == lo || b.1 == hi {
        return false;
    }
    let inside = |p: usize| lo < p && p < hi;
    inside(b.0) != inside(b.1)
}

/// Weighted crossings of a chord list; the hot loop of layout search.
pub(crate) fn chord_crossings(chords: &[(usize, usize, u64)]) -> u64 {
    let mut total = 0;
    for (i, a) in chords.iter().enumerate() {
        for b in &chords[i + 1..] {
            if cross((a.0, a.1), (b.0, b.1)) {
                total += a.2 + b.2;
            }
        }
    }
    total
}

/// Sum over crossing chord pairs of the two edge weights.
///
/// Every directed edge is one chord, so `a→b` and `b→a` are two chords
/// sharing the same endpoints. Units missing from `order` contribute nothing.
pub fn weighted_crossings(order: &[UnitId], frame: &FrameGraph, kind: WeightKind) -> u64 {
    chord_crossings(&chords(order, frame, kind))
}

/// Number of crossing chord pairs, ignoring their weights.
pub fn crossing_pairs(order: &[UnitId], frame: &FrameGraph, kind: WeightKind) -> u64 {
    let chords = chords(order, frame, kind);
    let mut pairs = 0;
    for (i, a) in chords.iter().enumerate() {
        for b in &chords[i + 1..] {
            if cross((a.0, a.1), (b.0, b.1)) {
                pairs += 1;
            }
        }
    }
    pairs
}
