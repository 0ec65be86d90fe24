use std::f64::consts::PI;

use bspprof_core::aggregate::FrameGraph;
use bspprof_core::layout::{
    chord_geometry, circular_order, crossing_pairs, weighted_crossings, CircularOrder, GapConfig, WeightKind,
};
use bspprof_core::trace::{Level, Traffic, UnitId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn units(n: usize) -> Vec<UnitId> {
    (0..n).map(|i| UnitId::worker("r", "h", format!("w{i}"))).collect()
}

fn frame(units: &[UnitId], edges: &[(usize, usize, u64)]) -> FrameGraph {
    FrameGraph {
        first: 1,
        last: 1,
        level: Level::Worker,
        times: units.iter().map(|u| (u.clone(), 0)).collect(),
        edges: edges.iter().map(|&(s, d, m)| ((units[s].clone(), units[d].clone()), Traffic::new(m, m))).collect(),
    }
}

/// Counts crossing pairs by placing points on a real circle and testing
/// segment intersection.
fn geometric_pairs(order: &[UnitId], edges: &[(UnitId, UnitId)]) -> usize {
    let pos = |u: &UnitId| {
        let i = order.iter().position(|x| x == u).unwrap() as f64;
        let a = 2.0 * PI * i / order.len() as f64;
        (a.cos(), a.sin())
    };
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
    let mut count = 0;
    for (i, (a, b)) in edges.iter().enumerate() {
        for (c, d) in &edges[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            let (p1, p2, p3, p4) = (pos(a), pos(b), pos(c), pos(d));
            if orient(p1, p2, p3) * orient(p1, p2, p4) < 0.0 && orient(p3, p4, p1) * orient(p3, p4, p2) < 0.0 {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn k5_has_five_crossings_in_any_order() {
    let u = units(5);
    let mut edges = Vec::new();
    for a in 0..5 {
        for b in a + 1..5 {
            edges.push((a, b, 1));
        }
    }
    let f = frame(&u, &edges);
    let pairs: Vec<(UnitId, UnitId)> = edges.iter().map(|&(a, b, _)| (u[a].clone(), u[b].clone())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let mut order = u.clone();
        order.shuffle(&mut rng);
        assert_eq!(geometric_pairs(&order, &pairs), 5);
        assert_eq!(crossing_pairs(&order, &f, WeightKind::Messages), 5);
        assert_eq!(weighted_crossings(&order, &f, WeightKind::Messages), 10);
    }
}

#[test]
fn random_graphs_agree_with_geometric_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let u = units(9);
    for _ in 0..20 {
        let mut edges = Vec::new();
        for a in 0..9 {
            for b in 0..9 {
                if a != b && rand::Rng::random_bool(&mut rng, 0.3) {
                    edges.push((a, b, 1));
                }
            }
        }
        let f = frame(&u, &edges);
        let pairs: Vec<(UnitId, UnitId)> = edges.iter().map(|&(a, b, _)| (u[a].clone(), u[b].clone())).collect();
        let mut order = u.clone();
        order.shuffle(&mut rng);
        assert_eq!(crossing_pairs(&order, &f, WeightKind::Messages) as usize, geometric_pairs(&order, &pairs));
    }
}

#[test]
fn stars_and_triangles_never_cross() {
    let u = units(7);
    let star: Vec<(usize, usize, u64)> = (1..7).flat_map(|l| [(0, l, 3), (l, 0, 2)]).collect();
    let f = frame(&u, &star);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let mut order = u.clone();
        order.shuffle(&mut rng);
        assert_eq!(weighted_crossings(&order, &f, WeightKind::Messages), 0);
    }
    let t = frame(&u[..3], &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]);
    let order = circular_order(&t, WeightKind::Messages).unwrap();
    assert_eq!(weighted_crossings(order.units(), &t, WeightKind::Messages), 0);
}

#[test]
fn spans_match_hand_computed_shares() {
    // A: in 10, out 30. B: in 30, out 10. No gaps, so each gets half the circle.
    let u = units(2);
    let f = frame(&u, &[(0, 1, 30), (1, 0, 10)]);
    let order = CircularOrder::new(u).unwrap();
    let l = chord_geometry(&f, &order, WeightKind::Messages, &GapConfig::none()).unwrap();

    let share = |part: f64, whole: f64, span: f64| span * part / whole;
    let a_span = share(40.0, 80.0, 2.0 * PI);
    assert!((l.arcs[0].arc.span() - a_span).abs() < 1e-12);
    assert!((l.arcs[0].incoming.span() - share(10.0, 40.0, a_span)).abs() < 1e-12);
    assert!((l.arcs[0].outgoing.span() - share(30.0, 40.0, a_span)).abs() < 1e-12);
    assert!((l.arcs[0].incoming.span() - PI / 4.0).abs() < 1e-12);
    assert!((l.arcs[0].outgoing.span() - 3.0 * PI / 4.0).abs() < 1e-12);
    assert_eq!(l.arcs[0].incoming.end, l.arcs[0].outgoing.start);
    for r in &l.ribbons {
        assert!((r.source_anchor.span() - r.target_anchor.span()).abs() < 1e-12);
    }
}

#[test]
fn filtered_units_keep_relative_order() {
    let u = units(5);
    let f = frame(&u, &[(0, 2, 1), (1, 3, 1), (2, 4, 1), (3, 0, 1)]);
    let order = circular_order(&f, WeightKind::Messages).unwrap();
    let mut reduced = f.clone();
    reduced.times.remove(&u[2]);
    reduced.edges.retain(|(s, d), _| *s != u[2] && *d != u[2]);
    let l = chord_geometry(&reduced, &order, WeightKind::Messages, &GapConfig::default()).unwrap();
    let shown: Vec<UnitId> = l.arcs.iter().map(|a| a.unit.clone()).collect();
    let expected: Vec<UnitId> = order.units().iter().filter(|x| **x != u[2]).cloned().collect();
    assert_eq!(shown, expected);
}
