use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;

use serde::Serialize;

use super::crossings::{chord_crossings, chords};
use super::{grouping_levels, CircularOrder, LayoutError, WeightKind};
use crate::aggregate::FrameGraph;
use crate::trace::{Level, UnitId};

/// Objective values observed while building an order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderTrace {
    /// Weighted crossings after greedy insertion.
    pub greedy: u64,
    /// Weighted crossings after each sifting pass, the last one unchanged.
    pub passes: Vec<u64>,
}

impl OrderTrace {
    pub fn final_crossings(&self) -> u64 {
        self.passes.last().copied().unwrap_or(self.greedy)
    }
}

/// Computes the job-wide order from the whole-job graph.
///
/// Hosts (and racks) stay contiguous throughout. Racks enclosing the laid out
/// units are placed by descending total traffic, then by label.
pub fn circular_order(g1k: &FrameGraph, kind: WeightKind) -> Result<CircularOrder, LayoutError> {
    circular_order_traced(g1k, kind).map(|(order, _)| order)
}

pub fn circular_order_traced(g1k: &FrameGraph, kind: WeightKind) -> Result<(CircularOrder, OrderTrace), LayoutError> {
    let units: Vec<UnitId> = g1k.units().cloned().collect();
    if units.is_empty() {
        return Err(LayoutError::Empty);
    }
    let level = units[0].level();
    if let Some(u) = units.iter().find(|u| u.level() != level) {
        return Err(LayoutError::MixedLevels(level, u.level()));
    }
    let search = Search::new(g1k, kind, level);
    let mut order = search.greedy(&units);
    let greedy = search.objective(&order);
    let mut passes = Vec::new();
    loop {
        let improved = search.sift_pass(&mut order);
        passes.push(search.objective(&order));
        if !improved {
            break;
        }
    }
    Ok((CircularOrder::new(order)?, OrderTrace { greedy, passes }))
}

struct Search<'a> {
    frame: &'a FrameGraph,
    kind: WeightKind,
    levels: Vec<Level>,
    top_rank: HashMap<UnitId, usize>,
    /// Chords with a nonzero weight, as unit pairs.
    edges: Vec<(UnitId, UnitId, u64)>,
}

impl<'a> Search<'a> {
    fn new(frame: &'a FrameGraph, kind: WeightKind, level: Level) -> Self {
        let levels = grouping_levels(level);
        let edges: Vec<(UnitId, UnitId, u64)> = frame
            .edges
            .iter()
            .filter(|((s, d), t)| s != d && kind.of(t) > 0)
            .map(|((s, d), t)| (s.clone(), d.clone(), kind.of(t)))
            .collect();
        let mut top_rank = HashMap::new();
        if let Some(&top) = levels.first() {
            let mut traffic: BTreeMap<UnitId, u64> =
                frame.units().map(|u| (u.ancestor_at(top).expect("coarser level"), 0)).collect();
            for ((s, d), t) in &frame.edges {
                let (a, b) = (s.ancestor_at(top).expect("coarser level"), d.ancestor_at(top).expect("coarser level"));
                *traffic.entry(a.clone()).or_default() += kind.of(t);
                if a != b {
                    *traffic.entry(b).or_default() += kind.of(t);
                }
            }
            let mut ranked: Vec<(UnitId, u64)> = traffic.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            top_rank = ranked.into_iter().enumerate().map(|(i, (u, _))| (u, i)).collect();
        }
        Search { frame, kind, levels, top_rank, edges }
    }

    fn objective(&self, order: &[UnitId]) -> u64 {
        chord_crossings(&chords(order, self.frame, self.kind))
    }

    /// Crossings between chords at `unit` and all chords not touching it.
    /// Moving `unit` leaves every other crossing unchanged.
    fn incident_cost(&self, order: &[UnitId], unit: &UnitId) -> u64 {
        let pos: HashMap<&UnitId, usize> = order.iter().enumerate().map(|(i, u)| (u, i)).collect();
        let mut mine = Vec::new();
        let mut rest = Vec::new();
        for (s, d, w) in &self.edges {
            let (Some(&a), Some(&b)) = (pos.get(s), pos.get(d)) else { continue };
            if s == unit || d == unit {
                mine.push((a, b, *w));
            } else {
                rest.push((a, b, *w));
            }
        }
        let mut cost = 0;
        for m in &mine {
            for r in &rest {
                if chord_crossings(&[*m, *r]) > 0 {
                    cost += m.2 + r.2;
                }
            }
        }
        cost
    }

    /// Positions where `unit` may be inserted into a contiguous partial order.
    fn candidates(&self, order: &[UnitId], unit: &UnitId) -> Vec<usize> {
        let mut range = 0..order.len();
        for (j, &level) in self.levels.iter().enumerate() {
            let group = unit.ancestor_at(level).expect("coarser level");
            match run_of(order, range.clone(), &group, level) {
                Some(run) => range = run,
                None if j == 0 => {
                    let rank = self.top_rank[&group];
                    let at = order
                        .iter()
                        .position(|u| self.top_rank[&u.ancestor_at(level).expect("coarser level")] > rank)
                        .unwrap_or(order.len());
                    return vec![at];
                }
                None => return vec![range.start, range.end],
            }
        }
        vec![range.start, range.end]
    }

    fn greedy(&self, units: &[UnitId]) -> Vec<UnitId> {
        let mut neighbors: BTreeMap<&UnitId, BTreeSet<&UnitId>> = units.iter().map(|u| (u, BTreeSet::new())).collect();
        for (s, d, _) in &self.edges {
            if let (true, true) = (neighbors.contains_key(s), neighbors.contains_key(d)) {
                neighbors.get_mut(s).expect("present").insert(d);
                neighbors.get_mut(d).expect("present").insert(s);
            }
        }
        let mut unplaced: BTreeSet<&UnitId> = units.iter().collect();
        let mut order: Vec<UnitId> = Vec::with_capacity(units.len());
        while !unplaced.is_empty() {
            // BTreeSet iteration is label order, so min_by_key keeps the first label on ties.
            let next = *unplaced
                .iter()
                .min_by_key(|u| neighbors[*u].iter().filter(|v| unplaced.contains(*v)).count())
                .expect("non-empty");
            unplaced.remove(next);

            let mut best: Option<(u64, Vec<UnitId>)> = None;
            let mut cands = self.candidates(&order, next);
            cands.dedup();
            // Back first, so that ties keep the back.
            for &at in cands.iter().rev() {
                let mut trial = order.clone();
                trial.insert(at, next.clone());
                let cost = self.incident_cost(&trial, next);
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    best = Some((cost, trial));
                }
            }
            order = best.expect("at least one candidate").1;
        }
        order
    }

    /// Moves each unit, in label order, to its cheapest slot within its
    /// finest enclosing group. Returns whether anything moved.
    fn sift_pass(&self, order: &mut Vec<UnitId>) -> bool {
        let mut improved = false;
        let mut units = order.clone();
        units.sort();
        for unit in &units {
            let at = order.iter().position(|u| u == unit).expect("unit is placed");
            let range = match self.levels.last() {
                Some(&level) => {
                    let group = unit.ancestor_at(level).expect("coarser level");
                    run_of(order, 0..order.len(), &group, level).expect("unit is placed")
                }
                None => 0..order.len(),
            };
            let current = self.incident_cost(order, unit);
            let mut rest = order.clone();
            rest.remove(at);
            let mut best = (current, at);
            for p in range.start..range.end {
                if p == at {
                    continue;
                }
                let mut trial = rest.clone();
                trial.insert(p, unit.clone());
                let cost = self.incident_cost(&trial, unit);
                if cost < best.0 {
                    best = (cost, p);
                }
            }
            if best.1 != at {
                order.remove(at);
                order.insert(best.1, unit.clone());
                improved = true;
            }
        }
        improved
    }
}

/// The run of members of `group` inside `range`, if any are placed.
fn run_of(order: &[UnitId], range: Range<usize>, group: &UnitId, level: Level) -> Option<Range<usize>> {
    let inside = |i: &usize| order[*i].ancestor_at(level).as_ref() == Some(group);
    let start = range.clone().find(inside)?;
    let end = (start..range.end).find(|i| !inside(i)).unwrap_or(range.end);
    Some(start..end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::weighted_crossings;
    use crate::trace::Traffic;

    fn frame(units: &[UnitId], edges: &[(usize, usize, u64)]) -> FrameGraph {
        FrameGraph {
            first: 1,
            last: 1,
            level: units[0].level(),
            times: units.iter().map(|u| (u.clone(), 1)).collect(),
            edges: edges
                .iter()
                .map(|&(s, d, m)| ((units[s].clone(), units[d].clone()), Traffic::new(m, m)))
                .collect(),
        }
    }

    #[test]
    fn triangle_on_one_host_has_no_crossings() {
        let u: Vec<UnitId> = (0..3).map(|i| UnitId::worker("r", "h", &format!("w{i}"))).collect();
        let f = frame(&u, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]);
        let (order, trace) = circular_order_traced(&f, WeightKind::Messages).unwrap();
        assert_eq!(order.len(), 3);
        assert_eq!(trace.final_crossings(), 0);
    }

    #[test]
    fn hosts_stay_contiguous_against_heavy_interleaving_edges() {
        // Two heavy chords a1-b1 and a2-b2 plus a1-a2, b1-b2 would prefer
        // a1 b1 | a2 b2 style interleaving if hosts were free.
        let u = vec![
            UnitId::worker("r", "a", "a1"),
            UnitId::worker("r", "a", "a2"),
            UnitId::worker("r", "b", "b1"),
            UnitId::worker("r", "b", "b2"),
        ];
        let f = frame(&u, &[(0, 2, 100), (1, 3, 100), (0, 3, 1), (1, 2, 1), (0, 1, 50), (2, 3, 50)]);
        let order = circular_order(&f, WeightKind::Messages).unwrap();
        let hosts: Vec<String> = order.units().iter().map(|w| w.host_label().unwrap().to_string()).collect();
        let changes = (0..4).filter(|&i| hosts[i] != hosts[(i + 1) % 4]).count();
        assert_eq!(changes, 2);
        assert_eq!(weighted_crossings(order.units(), &f, WeightKind::Messages), 2);
    }

    #[test]
    fn racks_ordered_by_traffic_and_hosts_kept_in_rack() {
        let u = vec![
            UnitId::host("quiet", "q1"),
            UnitId::host("busy", "b1"),
            UnitId::host("busy", "b2"),
            UnitId::host("quiet", "q2"),
        ];
        let f = frame(&u, &[(1, 2, 10), (0, 3, 1)]);
        let order = circular_order(&f, WeightKind::Messages).unwrap();
        let racks: Vec<&str> = order.units().iter().map(|h| h.rack_label()).collect();
        assert_eq!(racks, vec!["busy", "busy", "quiet", "quiet"]);
    }

    #[test]
    fn deterministic_and_rejects_empty() {
        let u: Vec<UnitId> = (0..6).map(|i| UnitId::worker("r", &format!("h{}", i % 2), &format!("w{i}"))).collect();
        let f = frame(&u, &[(0, 3, 4), (1, 4, 2), (2, 5, 7), (0, 5, 1), (3, 2, 3)]);
        assert_eq!(circular_order(&f, WeightKind::Messages), circular_order(&f, WeightKind::Messages));
        let empty = FrameGraph { times: BTreeMap::new(), edges: BTreeMap::new(), ..f };
        assert_eq!(circular_order(&empty, WeightKind::Messages), Err(LayoutError::Empty));
    }
}
