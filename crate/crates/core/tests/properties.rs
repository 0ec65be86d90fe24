use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use bspprof_core::aggregate::{
    apply_filter, hierarchy_aggregate, temporal_aggregate, trend_series, FilterSpec, FrameGraph,
};
use bspprof_core::layout::{
    chord_geometry, circular_order_traced, weighted_crossings, CircularOrder, GapConfig, WeightKind,
};
use bspprof_core::sim::{
    hash_partition, khop_broadcast_program, locality_partition, pagerank_program, run_job, sssp_program, InputGraph,
    SimConfig, TreeShape,
};
use bspprof_core::trace::{job_stats, parse_trace, write_trace, Level, TraceJob, Traffic, UnitId};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simulated_job(seed: u64) -> TraceJob {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = TreeShape::new(rng.random_range(1..=2), rng.random_range(1..=3), rng.random_range(1..=3));
    let n = rng.random_range(2..40);
    let mut edges = BTreeSet::new();
    for _ in 0..rng.random_range(1..3 * n) {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v {
            edges.insert((u, v));
        }
    }
    let graph = InputGraph::from_edges(n, edges.into_iter().map(|(u, v)| (u, v, None))).unwrap();
    let mut config = SimConfig::new(shape);
    config.seed = seed;
    let workers = shape.worker_labels();
    let partition = if rng.random_bool(0.5) {
        hash_partition(&graph, &workers).unwrap()
    } else {
        locality_partition(&graph, &workers, seed).unwrap()
    };
    match rng.random_range(0..3) {
        0 => run_job(&graph, &pagerank_program(rng.random_range(1..12)), &partition, &config).unwrap().job,
        1 => run_job(&graph, &sssp_program(0, rng.random_bool(0.5)).with_max_supersteps(Some(30)), &partition, &config)
            .unwrap()
            .job,
        _ => run_job(&graph, &khop_broadcast_program(rng.random_range(1..4), 3), &partition, &config).unwrap().job,
    }
}

fn random_frame(rng: &mut ChaCha8Rng, units: usize, hosts: usize) -> FrameGraph {
    let ids: Vec<UnitId> =
        (0..units).map(|i| UnitId::worker("r0", format!("h{}", i % hosts), format!("w{i}"))).collect();
    let mut edges = BTreeMap::new();
    for s in &ids {
        for d in &ids {
            if rng.random_bool(0.4) {
                let m = rng.random_range(1..50u64);
                edges.insert((s.clone(), d.clone()), Traffic::new(m, m * rng.random_range(1..9u64)));
            }
        }
    }
    FrameGraph { first: 1, last: 1, level: Level::Worker, times: ids.iter().map(|u| (u.clone(), 1)).collect(), edges }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn aggregation_conserves_traffic_and_time(seed in any::<u64>()) {
        let job = simulated_job(seed);
        let stats = job_stats(&job).unwrap();
        let k = job.superstep_count();
        let time: u64 = job.supersteps.iter().flat_map(|s| s.vertex_weights.values()).sum();
        for frame_size in [1, 7.min(k), k] {
            let frames = temporal_aggregate(&job, frame_size).unwrap();
            for level in Level::ALL {
                let merged: Vec<FrameGraph> =
                    frames.iter().map(|f| hierarchy_aggregate(f, level, &job.tree).unwrap()).collect();
                let total = merged.iter().fold(Traffic::default(), |mut acc, f| { acc += f.total_traffic(); acc });
                prop_assert_eq!(total.messages, stats.total_messages);
                prop_assert_eq!(total.bytes, stats.total_bytes);
                prop_assert_eq!(merged.iter().map(FrameGraph::total_time).sum::<u64>(), time);
                let trend = trend_series(&merged).unwrap();
                for f in 0..merged.len() {
                    let inn: u64 = trend.units.iter().map(|u| u.msgs_in[f]).sum();
                    let out: u64 = trend.units.iter().map(|u| u.msgs_out[f]).sum();
                    prop_assert_eq!(inn, out);
                }
            }
        }
    }

    #[test]
    fn stats_ignore_record_order(seed in any::<u64>(), shuffle in any::<u64>()) {
        let job = simulated_job(seed);
        let text = write_trace(&job);
        let mut lines: Vec<&str> = text.lines().collect();
        lines.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let reparsed = TraceJob { supersteps: parse_trace(&lines.join("\n")).unwrap(), ..job.clone() };
        prop_assert_eq!(job_stats(&reparsed).unwrap(), job_stats(&job).unwrap());
        prop_assert_eq!(write_trace(&reparsed), text);
    }

    #[test]
    fn filtering_commutes_with_merging(seed in any::<u64>(), pick in any::<u64>()) {
        let job = simulated_job(seed);
        let frame = temporal_aggregate(&job, job.superstep_count()).unwrap().remove(0);
        let mut rng = ChaCha8Rng::seed_from_u64(pick);
        for level in [Level::Host, Level::Rack] {
            let mut coarse: Vec<UnitId> = job.tree.units(level);
            if level == Level::Host {
                coarse.extend(job.tree.units(Level::Rack));
            }
            let excluded: BTreeSet<UnitId> = coarse.into_iter().filter(|_| rng.random_bool(0.3)).collect();
            let spec = FilterSpec { excluded, min_total_messages: 0 };
            let none = BTreeMap::new();
            let filter_first = hierarchy_aggregate(&apply_filter(&frame, &spec, &none), level, &job.tree).unwrap();
            let merge_first = apply_filter(&hierarchy_aggregate(&frame, level, &job.tree).unwrap(), &spec, &none);
            prop_assert_eq!(filter_first, merge_first);
        }
    }

    #[test]
    fn crossings_ignore_rotation_and_reflection(seed in any::<u64>(), turn in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = random_frame(&mut rng, 8, 1);
        let mut order: Vec<UnitId> = frame.units().cloned().collect();
        order.shuffle(&mut rng);
        for kind in WeightKind::ALL {
            let base = weighted_crossings(&order, &frame, kind);
            let mut rotated = order.clone();
            rotated.rotate_left(turn);
            prop_assert_eq!(weighted_crossings(&rotated, &frame, kind), base);
            rotated.reverse();
            prop_assert_eq!(weighted_crossings(&rotated, &frame, kind), base);
        }
    }

    #[test]
    fn sifting_never_increases_crossings(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units = rng.random_range(2..10);
        let hosts = rng.random_range(1..=3.min(units));
        let frame = random_frame(&mut rng, units, hosts);
        for kind in WeightKind::ALL {
            let (order, trace) = circular_order_traced(&frame, kind).unwrap();
            let mut previous = trace.greedy;
            for &p in &trace.passes {
                prop_assert!(p <= previous);
                previous = p;
            }
            prop_assert_eq!(weighted_crossings(order.units(), &frame, kind), trace.final_crossings());
            prop_assert_eq!(order.len(), units);
            let groups = order.groups(Level::Host);
            let distinct: BTreeSet<&UnitId> = groups.iter().map(|(g, _)| g).collect();
            prop_assert_eq!(groups.len(), distinct.len());
        }
    }

    #[test]
    fn arc_spans_follow_weight_shares(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units = rng.random_range(1..12);
        let hosts = rng.random_range(1..=units);
        let frame = random_frame(&mut rng, units, hosts);
        let Ok(order) = CircularOrder::new(frame.units().cloned().collect()) else { return Ok(()) };
        let Ok(layout) = chord_geometry(&frame, &order, WeightKind::Bytes, &GapConfig::default()) else {
            return Ok(());
        };
        let spans: f64 = layout.arcs.iter().map(|a| a.arc.span()).sum();
        prop_assert!(((spans + layout.total_gap) - TAU).abs() <= 1e-9 * TAU);
        let grand: u64 = layout.arcs.iter().map(|a| a.self_weight + a.in_weight + a.out_weight).sum();
        let usable = TAU - layout.total_gap;
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-300);
        for a in &layout.arcs {
            prop_assert!(a.arc.start >= 0.0 && a.arc.start < TAU);
            let total = a.self_weight + a.in_weight + a.out_weight;
            prop_assert!(rel(a.arc.span(), usable * total as f64 / grand as f64));
            if total > 0 {
                for (part, w) in [(a.self_loop, a.self_weight), (a.incoming, a.in_weight), (a.outgoing, a.out_weight)] {
                    prop_assert!((part.span() / a.arc.span() - w as f64 / total as f64).abs() <= 1e-9);
                }
            }
        }
    }
}
