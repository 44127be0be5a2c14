#![allow(dead_code)]

use catgraph::graph::AdjacencyGraph;
use catgraph::tape::{CatalyticTape, TapeProfile};
use rand::seq::SliceRandom;
use rand::Rng;

pub const PROFILES: [TapeProfile; 3] = [
    TapeProfile::Zeros,
    TapeProfile::Ones,
    TapeProfile::Random(0x5eed),
];

/// The graph whose edge set is the bit pattern `mask` over the `n²` (or,
/// without loops, `n² − n`) ordered pairs.
pub fn graph_from_mask(n: usize, mask: u64, loops: bool) -> AdjacencyGraph {
    let pairs = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| loops || u != v);
    let edges = pairs
        .enumerate()
        .filter(|&(i, _)| mask >> i & 1 == 1)
        .map(|(_, e)| e);
    AdjacencyGraph::from_edges(n, edges).unwrap()
}

pub fn pair_count(n: usize, loops: bool) -> u32 {
    (if loops { n * n } else { n * n - n }) as u32
}

/// Each ordered pair (self-loops included) is an edge with probability `p`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> AdjacencyGraph {
    let edges: Vec<_> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|_| rng.gen_bool(p))
        .collect();
    AdjacencyGraph::from_edges(n, edges).unwrap()
}

/// Random DAG: edges go forward in a random vertex order.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, p: f64) -> AdjacencyGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    AdjacencyGraph::from_edges(n, edges).unwrap()
}

/// Every vertex gets `d` distinct out-neighbors (self allowed).
pub fn random_out_regular<R: Rng>(rng: &mut R, n: usize, d: usize) -> AdjacencyGraph {
    let all: Vec<usize> = (0..n).collect();
    let edges: Vec<_> = (0..n)
        .flat_map(|u| {
            all.choose_multiple(rng, d)
                .map(move |&v| (u, v))
                .collect::<Vec<_>>()
        })
        .collect();
    AdjacencyGraph::from_edges(n, edges).unwrap()
}

/// 3-out-regular, strongly connected through the cycle `i → i+1`, and
/// aperiodic through a self-loop at vertex 0.
pub fn random_ergodic<R: Rng>(rng: &mut R, n: usize) -> AdjacencyGraph {
    assert!(n >= 3);
    let mut edges = Vec::new();
    for u in 0..n {
        let mut outs = vec![(u + 1) % n];
        if u == 0 {
            outs.push(0);
        }
        while outs.len() < 3 {
            let v = rng.gen_range(0..n);
            if !outs.contains(&v) {
                outs.push(v);
            }
        }
        edges.extend(outs.into_iter().map(|v| (u, v)));
    }
    AdjacencyGraph::from_edges(n, edges).unwrap()
}

pub fn fresh_tape(len: usize, profile: TapeProfile) -> CatalyticTape {
    CatalyticTape::with_profile(len.max(1), profile)
}

pub fn directed_cycle(n: usize) -> AdjacencyGraph {
    AdjacencyGraph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n))).unwrap()
}

/// The 8-vertex layered DAG with vertices `00, 10, 11, 20, 21, 22, 30, 31`
/// numbered 0..8.
pub fn grid_dag() -> AdjacencyGraph {
    AdjacencyGraph::from_edges(
        8,
        [
            (0, 1),
            (0, 2),
            (1, 3),
            (1, 4),
            (2, 4),
            (2, 5),
            (3, 6),
            (3, 7),
            (4, 6),
            (4, 7),
            (5, 6),
            (5, 7),
        ],
    )
    .unwrap()
}

/// Initial rotors for the 8-vertex example: all 0 except vertex `20`.
pub const GRID_ROTORS: [u64; 8] = [0, 0, 0, 1, 0, 0, 0, 0];

/// The 5-vertex graph `00, 10, 11, 20, 21` on which two rotor settings
/// end in the same state.
pub fn collision_graph() -> AdjacencyGraph {
    AdjacencyGraph::from_edges(5, [(0, 1), (0, 2), (1, 0), (2, 3), (2, 4), (3, 2)]).unwrap()
}
