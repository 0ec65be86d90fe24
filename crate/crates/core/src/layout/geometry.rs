use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{grouping_levels, CircularOrder, LayoutError, WeightKind};
use crate::aggregate::FrameGraph;
use crate::trace::{Level, UnitId};

/// Gaps between neighboring arcs, as fractions of the full circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    /// Between units sharing a host.
    pub unit: f64,
    /// Between units of different hosts in one rack.
    pub host: f64,
    /// Between units of different racks.
    pub rack: f64,
    /// Upper bound on the summed gaps; larger totals are scaled down to it.
    pub max_total: f64,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig { unit: 0.005, host: 0.015, rack: 0.025, max_total: 0.5 }
    }
}

impl GapConfig {
    pub fn none() -> Self {
        GapConfig { unit: 0.0, host: 0.0, rack: 0.0, max_total: 0.0 }
    }

    /// Gap in radians after each unit of `seq` (the last one wraps to the first).
    fn boundaries(&self, seq: &[UnitId]) -> Vec<f64> {
        let n = seq.len();
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                let (a, b) = (&seq[i], &seq[(i + 1) % n]);
                let differs = |level| a.ancestor_at(level) != b.ancestor_at(level);
                if differs(Level::Rack) {
                    self.rack
                } else if a.level() <= Level::Host && differs(Level::Host) {
                    self.host
                } else {
                    self.unit
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let scale = if total > self.max_total && total > 0.0 { self.max_total / total } else { 1.0 };
        raw.into_iter().map(|g| g * scale * TAU).collect()
    }
}

/// A clockwise angular interval in radians, measured from twelve o'clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    fn at(start: f64, span: f64) -> Self {
        Interval { start, end: start + span }
    }

    pub fn span(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitArc {
    pub unit: UnitId,
    pub arc: Interval,
    /// Leading part of the arc drawn thickened for intra-unit traffic.
    pub self_loop: Interval,
    pub incoming: Interval,
    pub outgoing: Interval,
    pub self_weight: u64,
    pub in_weight: u64,
    pub out_weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ribbon {
    pub source: UnitId,
    pub target: UnitId,
    pub weight: u64,
    pub messages: u64,
    pub bytes: u64,
    pub source_anchor: Interval,
    pub target_anchor: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub unit: UnitId,
    pub span: Interval,
}

/// One concentric circle of enclosing units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ring {
    pub level: Level,
    pub bands: Vec<Band>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChordLayout {
    pub level: Level,
    pub kind: WeightKind,
    pub first: u32,
    pub last: u32,
    /// Set when no unit carries weight; arcs are then equal and ribbonless.
    pub degenerate: bool,
    pub total_gap: f64,
    pub arcs: Vec<UnitArc>,
    pub ribbons: Vec<Ribbon>,
    /// Innermost first: hosts, then racks.
    pub rings: Vec<Ring>,
}

impl ChordLayout {
    /// Equal arcs and no ribbons, for frames where every weight is zero.
    pub fn degenerate(
        frame: &FrameGraph,
        order: &CircularOrder,
        kind: WeightKind,
        gaps: &GapConfig,
    ) -> Result<ChordLayout, LayoutError> {
        let seq = visible_sequence(frame, order)?;
        let boundaries = gaps.boundaries(&seq);
        let total_gap: f64 = boundaries.iter().sum();
        let span = if seq.is_empty() { 0.0 } else { (TAU - total_gap) / seq.len() as f64 };
        let mut cursor = 0.0;
        let mut arcs = Vec::with_capacity(seq.len());
        for (u, gap) in seq.iter().zip(&boundaries) {
            let empty = Interval::at(cursor, 0.0);
            arcs.push(UnitArc {
                unit: u.clone(),
                arc: Interval::at(cursor, span),
                self_loop: empty,
                incoming: empty,
                outgoing: empty,
                self_weight: 0,
                in_weight: 0,
                out_weight: 0,
            });
            cursor += span + gap;
        }
        let rings = rings(frame.level, &arcs);
        Ok(ChordLayout {
            level: frame.level,
            kind,
            first: frame.first,
            last: frame.last,
            degenerate: true,
            total_gap,
            arcs,
            ribbons: Vec::new(),
            rings,
        })
    }
}

/// The order at the frame's level, restricted to the frame's units.
fn visible_sequence(frame: &FrameGraph, order: &CircularOrder) -> Result<Vec<UnitId>, LayoutError> {
    let projected = order.project(frame.level)?;
    if let Some(u) = frame.units().find(|u| projected.position(u).is_none()) {
        return Err(LayoutError::NotInOrder(u.clone()));
    }
    Ok(projected.restrict(frame.units()))
}

/// Computes arcs, ribbons and hierarchy rings for one frame.
///
/// `order` may be finer than the frame; it is projected to the frame's level
/// and filtered units are skipped, so the survivors keep their relative order.
pub fn chord_geometry(
    frame: &FrameGraph,
    order: &CircularOrder,
    kind: WeightKind,
    gaps: &GapConfig,
) -> Result<ChordLayout, LayoutError> {
    let seq = visible_sequence(frame, order)?;
    let n = seq.len();
    let pos: BTreeMap<&UnitId, usize> = seq.iter().enumerate().map(|(i, u)| (u, i)).collect();

    let mut self_w = vec![0u64; n];
    let mut in_w = vec![0u64; n];
    let mut out_w = vec![0u64; n];
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for ((s, d), t) in &frame.edges {
        let w = kind.of(t);
        let (Some(&a), Some(&b)) = (pos.get(s), pos.get(d)) else { continue };
        if w == 0 {
            continue;
        }
        if a == b {
            self_w[a] += w;
            continue;
        }
        out_w[a] += w;
        in_w[b] += w;
        outgoing[a].push(edges.len());
        incoming[b].push(edges.len());
        edges.push((a, b, w, *t));
    }
    let totals: Vec<u64> = (0..n).map(|i| self_w[i] + in_w[i] + out_w[i]).collect();
    let grand: u64 = totals.iter().sum();
    if grand == 0 {
        return Err(LayoutError::Degenerate);
    }

    let boundaries = gaps.boundaries(&seq);
    let total_gap: f64 = boundaries.iter().sum();
    let usable = TAU - total_gap;
    let mut cursor = 0.0;
    let mut arcs = Vec::with_capacity(n);
    for i in 0..n {
        let span = usable * totals[i] as f64 / grand as f64;
        let part = |w: u64| if totals[i] == 0 { 0.0 } else { span * w as f64 / totals[i] as f64 };
        let self_loop = Interval::at(cursor, part(self_w[i]));
        let inc = Interval::at(self_loop.end, part(in_w[i]));
        let out = Interval::at(inc.end, part(out_w[i]));
        arcs.push(UnitArc {
            unit: seq[i].clone(),
            arc: Interval::at(cursor, span),
            self_loop,
            incoming: inc,
            outgoing: out,
            self_weight: self_w[i],
            in_weight: in_w[i],
            out_weight: out_w[i],
        });
        cursor += span + boundaries[i];
    }

    // Within an interval, the opposite end farthest clockwise comes first, so
    // ribbons to near neighbors sit on the side facing them.
    let offset = |from: usize, to: usize| (to + n - from) % n;
    let mut source_anchor = vec![None; edges.len()];
    let mut target_anchor = vec![None; edges.len()];
    for i in 0..n {
        outgoing[i].sort_by_key(|&e| std::cmp::Reverse(offset(i, edges[e].1)));
        let mut at = arcs[i].outgoing.start;
        for &e in &outgoing[i] {
            let width = arcs[i].outgoing.span() * edges[e].2 as f64 / out_w[i] as f64;
            source_anchor[e] = Some(Interval::at(at, width));
            at += width;
        }
        incoming[i].sort_by_key(|&e| std::cmp::Reverse(offset(i, edges[e].0)));
        let mut at = arcs[i].incoming.start;
        for &e in &incoming[i] {
            let width = arcs[i].incoming.span() * edges[e].2 as f64 / in_w[i] as f64;
            target_anchor[e] = Some(Interval::at(at, width));
            at += width;
        }
    }
    let ribbons = edges
        .iter()
        .enumerate()
        .map(|(e, &(a, b, w, t))| Ribbon {
            source: seq[a].clone(),
            target: seq[b].clone(),
            weight: w,
            messages: t.messages,
            bytes: t.bytes,
            source_anchor: source_anchor[e].expect("every edge is anchored"),
            target_anchor: target_anchor[e].expect("every edge is anchored"),
        })
        .collect();

    let rings = rings(frame.level, &arcs);
    Ok(ChordLayout {
        level: frame.level,
        kind,
        first: frame.first,
        last: frame.last,
        degenerate: false,
        total_gap,
        arcs,
        ribbons,
        rings,
    })
}

/// [`chord_geometry`], falling back to [`ChordLayout::degenerate`].
pub fn chord_layout_or_degenerate(
    frame: &FrameGraph,
    order: &CircularOrder,
    kind: WeightKind,
    gaps: &GapConfig,
) -> Result<ChordLayout, LayoutError> {
    match chord_geometry(frame, order, kind, gaps) {
        Err(LayoutError::Degenerate) => ChordLayout::degenerate(frame, order, kind, gaps),
        other => other,
    }
}

fn rings(level: Level, arcs: &[UnitArc]) -> Vec<Ring> {
    let mut levels = grouping_levels(level);
    levels.reverse();
    levels
        .into_iter()
        .map(|ring_level| {
            let mut bands: Vec<Band> = Vec::new();
            for arc in arcs {
                let unit = arc.unit.ancestor_at(ring_level).expect("coarser level");
                match bands.last_mut() {
                    Some(b) if b.unit == unit => b.span.end = arc.arc.end,
                    _ => bands.push(Band { unit, span: arc.arc }),
                }
            }
            Ring { level: ring_level, bands }
        })
        .collect()
}

/// A layout whose unit sequence departs from the job order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilityViolation {
    /// Position of the layout in the checked slice.
    pub layout: usize,
    pub expected: Vec<UnitId>,
    pub found: Vec<UnitId>,
}

/// Checks that every layout shows its units in the job order.
pub fn layout_stability(order: &CircularOrder, layouts: &[ChordLayout]) -> Vec<StabilityViolation> {
    let mut out = Vec::new();
    for (i, layout) in layouts.iter().enumerate() {
        let found: Vec<UnitId> = layout.arcs.iter().map(|a| a.unit.clone()).collect();
        let expected = match order.project(layout.level) {
            Ok(p) => p.restrict(&found),
            Err(_) => Vec::new(),
        };
        if expected != found {
            out.push(StabilityViolation { layout: i, expected, found });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Traffic;
    use std::f64::consts::PI;

    fn frame(units: &[UnitId], edges: &[(usize, usize, u64)]) -> FrameGraph {
        FrameGraph {
            first: 1,
            last: 2,
            level: units[0].level(),
            times: units.iter().map(|u| (u.clone(), 1)).collect(),
            edges: edges
                .iter()
                .map(|&(s, d, m)| ((units[s].clone(), units[d].clone()), Traffic::new(m, 4 * m)))
                .collect(),
        }
    }

    fn workers(n: usize) -> Vec<UnitId> {
        (0..n).map(|i| UnitId::worker("r", &format!("h{}", i / 2), &format!("w{i}"))).collect()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn single_edge_splits_circle_evenly() {
        let u = workers(2);
        let f = frame(&u, &[(0, 1, 10)]);
        let order = CircularOrder::new(u.clone()).unwrap();
        let l = chord_geometry(&f, &order, WeightKind::Messages, &GapConfig::none()).unwrap();
        assert!(close(l.arcs[0].arc.span(), PI) && close(l.arcs[1].arc.span(), PI));
        assert!(close(l.arcs[0].outgoing.span(), PI) && close(l.arcs[1].incoming.span(), PI));
        assert_eq!(l.ribbons.len(), 1);
        assert_eq!(l.ribbons[0].bytes, 40);
        assert_eq!(l.rings.len(), 2);
    }

    #[test]
    fn self_loop_only_fills_usable_circle() {
        let u = workers(1);
        let f = frame(&u, &[(0, 0, 3)]);
        let order = CircularOrder::new(u).unwrap();
        let gaps = GapConfig::default();
        let l = chord_geometry(&f, &order, WeightKind::Messages, &gaps).unwrap();
        assert!(l.ribbons.is_empty());
        assert!(close(l.arcs[0].self_loop.span(), TAU - l.total_gap));
        assert!(close(l.total_gap, 0.005 * TAU));
    }

    #[test]
    fn gaps_grow_at_host_boundaries() {
        let u = workers(4);
        let f = frame(&u, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)]);
        let order = CircularOrder::new(u).unwrap();
        let l = chord_geometry(&f, &order, WeightKind::Messages, &GapConfig::default()).unwrap();
        assert!(close(l.total_gap, (0.005 * 2.0 + 0.015 * 2.0) * TAU));
        let gap = l.arcs[2].arc.start - l.arcs[1].arc.end;
        assert!(close(gap, 0.015 * TAU));
    }

    #[test]
    fn all_zero_is_degenerate() {
        let u = workers(3);
        let f = frame(&u, &[]);
        let order = CircularOrder::new(u).unwrap();
        let gaps = GapConfig::none();
        assert_eq!(chord_geometry(&f, &order, WeightKind::Messages, &gaps), Err(LayoutError::Degenerate));
        let l = chord_layout_or_degenerate(&f, &order, WeightKind::Messages, &gaps).unwrap();
        assert!(l.degenerate && l.ribbons.is_empty());
        assert!(close(l.arcs[2].arc.span(), TAU / 3.0));
    }

    #[test]
    fn stability_flags_reordered_layouts() {
        let u = workers(4);
        let f = frame(&u, &[(0, 2, 1), (1, 3, 2)]);
        let order = CircularOrder::new(u.clone()).unwrap();
        let good = chord_geometry(&f, &order, WeightKind::Messages, &GapConfig::none()).unwrap();
        let swapped = CircularOrder::new(vec![u[1].clone(), u[0].clone(), u[2].clone(), u[3].clone()]).unwrap();
        let bad = chord_geometry(&f, &swapped, WeightKind::Messages, &GapConfig::none()).unwrap();
        let v = layout_stability(&order, &[good.clone(), bad, good]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].layout, 1);
    }

    #[test]
    fn hosts_layout_from_worker_order_has_rack_ring() {
        let u = workers(4);
        let order = CircularOrder::new(u).unwrap();
        let hosts = vec![UnitId::host("r", "h0"), UnitId::host("r", "h1")];
        let f = frame(&hosts, &[(0, 1, 2), (1, 1, 1)]);
        let l = chord_geometry(&f, &order, WeightKind::Messages, &GapConfig::default()).unwrap();
        assert_eq!(l.rings.len(), 1);
        assert_eq!(l.rings[0].bands.len(), 1);
        assert_eq!(l.arcs[1].self_weight, 1);
    }
}
