use std::collections::VecDeque;

use bspprof_core::sim::{
    hash_partition, khop_broadcast_program, locality_partition, pagerank_program, run_job, sssp_program, InputGraph,
    SimConfig, TreeShape,
};
use bspprof_core::trace::{job_stats, validate_trace};

fn bfs_distances(graph: &InputGraph, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; graph.vertex_count()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for e in graph.out_edges(u) {
            if dist[e.target].is_none() {
                dist[e.target] = Some(dist[u].unwrap() + 1);
                queue.push_back(e.target);
            }
        }
    }
    dist
}

fn config(shape: &str) -> SimConfig {
    SimConfig::new(shape.parse::<TreeShape>().unwrap())
}

fn random_graph(n: usize, edges: usize, seed: u64) -> InputGraph {
    let mut state = seed;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) as usize
    };
    let mut list = std::collections::BTreeSet::new();
    while list.len() < edges {
        let (u, v) = (next() % n, next() % n);
        if u != v {
            list.insert((u, v));
        }
    }
    InputGraph::from_edges(n, list.into_iter().map(|(u, v)| (u, v, None))).unwrap()
}

#[test]
fn unit_weight_sssp_traffic_matches_reachable_out_degrees() {
    for seed in 0..8 {
        let graph = random_graph(40, 90, seed);
        let cfg = config("1:2:2");
        let partition = hash_partition(&graph, &cfg.shape.worker_labels()).unwrap();
        let run = run_job(&graph, &sssp_program(0, false), &partition, &cfg).unwrap();
        let dist = bfs_distances(&graph, 0);
        let expected: u64 =
            (0..graph.vertex_count()).filter(|&v| dist[v].is_some()).map(|v| graph.out_degree(v) as u64).sum();
        assert_eq!(run.messages_sent, expected, "seed {seed}");
        assert_eq!(*run.sent_per_superstep.last().unwrap(), 0);
        for v in 0..graph.vertex_count() {
            match dist[v] {
                Some(d) => assert_eq!(run.values[v], d as f64),
                None => assert!(run.values[v].is_infinite()),
            }
        }
        // Per superstep, the frontier at depth i-1 relays its out-degree.
        for (i, &sent) in run.sent_per_superstep.iter().enumerate() {
            let frontier: u64 =
                (0..graph.vertex_count()).filter(|&v| dist[v] == Some(i)).map(|v| graph.out_degree(v) as u64).sum();
            assert_eq!(sent, frontier, "seed {seed} superstep {}", i + 1);
        }
    }
}

#[test]
fn pagerank_on_star_matches_dense_power_iteration() {
    let n = 7;
    let mut edges = Vec::new();
    for leaf in 1..n {
        edges.push((0, leaf, None));
        edges.push((leaf, 0, None));
    }
    let graph = InputGraph::from_edges(n, edges.clone()).unwrap();
    let iterations = 30;
    let cfg = config("1:2:1");
    let partition = hash_partition(&graph, &cfg.shape.worker_labels()).unwrap();
    let run = run_job(&graph, &pagerank_program(iterations), &partition, &cfg).unwrap();

    let mut matrix = vec![vec![0.0; n]; n];
    for &(u, v, _) in &edges {
        let deg = edges.iter().filter(|e| e.0 == u).count() as f64;
        matrix[v][u] = 1.0 / deg;
    }
    let mut rank = vec![1.0 / n as f64; n];
    for _ in 1..iterations {
        rank = (0..n).map(|v| 0.15 / n as f64 + 0.85 * (0..n).map(|u| matrix[v][u] * rank[u]).sum::<f64>()).collect();
    }
    for v in 0..n {
        assert!((run.values[v] - rank[v]).abs() < 1e-9, "vertex {v}: {} vs {}", run.values[v], rank[v]);
    }
    assert_eq!(run.sent_per_superstep, vec![graph.edge_count() as u64; iterations as usize]);
}

#[test]
fn khop_traffic_matches_frontier_oracle() {
    let graph = random_graph(30, 70, 11);
    let hops = 3;
    let rounds = 2;
    let cfg = config("1:2:2");
    let partition = locality_partition(&graph, &cfg.shape.worker_labels(), 3).unwrap();
    let run = run_job(&graph, &khop_broadcast_program(hops, rounds), &partition, &cfg).unwrap();

    let dist: Vec<Vec<Option<usize>>> = (0..graph.vertex_count()).map(|t| bfs_distances(&graph, t)).collect();
    let mut expected = Vec::new();
    for _ in 0..rounds {
        for h in 1..=hops as usize {
            let mut sent = 0u64;
            for v in 0..graph.vertex_count() {
                let tokens = (0..graph.vertex_count()).filter(|&t| dist[t][v] == Some(h - 1)).count();
                sent += (tokens * graph.out_degree(v)) as u64;
            }
            expected.push(sent);
        }
    }
    assert_eq!(run.sent_per_superstep, expected);
}

#[test]
fn hash_partition_matches_independent_splitmix() {
    fn splitmix(v: u64) -> u64 {
        let mut z = v.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
    let graph = InputGraph::path(1000).unwrap();
    let workers: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
    let partition = hash_partition(&graph, &workers).unwrap();
    for v in 0..1000 {
        assert_eq!(partition.worker_of(v), workers[(splitmix(v as u64) % 10) as usize]);
    }
    let loads = partition.loads();
    assert_eq!(loads.iter().sum::<u64>(), 1000);
    assert!(loads.iter().all(|&l| (60..=140).contains(&l)), "{loads:?}");
}

#[test]
fn cost_model_and_barrier_hold_on_every_superstep() {
    let graph = InputGraph::grid(6, 5).unwrap();
    let cfg = config("1:3:2").with_slowdown("h1", 3.0);
    let partition = hash_partition(&graph, &cfg.shape.worker_labels()).unwrap();
    let run = run_job(&graph, &khop_broadcast_program(2, 3), &partition, &cfg).unwrap();
    assert!(validate_trace(&run.job).is_empty());

    let mut unthrottled = cfg.clone();
    unthrottled.host_slowdown.clear();
    let base = run_job(&graph, &khop_broadcast_program(2, 3), &partition, &unthrottled).unwrap();
    for (slow, fast) in run.job.supersteps.iter().zip(&base.job.supersteps) {
        for w in ["w02", "w03"] {
            assert_eq!(slow.time_of(w), 3 * fast.time_of(w));
        }
        assert_eq!(slow.edge_weights, fast.edge_weights);
    }
    for pair in run.job.supersteps.windows(2) {
        assert_eq!(pair[1].start, pair[0].start + pair[0].max_time() as i64);
    }
    let stats = job_stats(&run.job).unwrap();
    assert_eq!(stats.total_messages, run.messages_sent);
    assert_eq!(stats.total_bytes, run.messages_sent * 4);
}
