mod common;

use catgraph::graph::{lift_layered, loop_sinks, AdjacencyGraph, GraphOracle};
use catgraph::oracles::{dag_reach_probabilities, stationary_exact, walk_distribution};
use catgraph::random_walk::*;
use catgraph::tape::{CatalyticTape, Modulus, RegisterFile, TapeProfile, WorkspaceMeter};
use common::*;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rotor_tape(values: &[u64], width: u32) -> CatalyticTape {
    let mut tape = CatalyticTape::new(values.len() * width as usize);
    for (v, &x) in values.iter().enumerate() {
        tape.write_bits(v * width as usize, width as usize, x);
    }
    tape
}

fn grid_run(rotors: &[u64]) -> WalkRun {
    let g = grid_dag();
    let mut tape = rotor_tape(rotors, 2);
    let mut regs = RegisterFile::allocate(&mut tape, 0, 8, 2, Modulus::PowerOfTwo).unwrap();
    run_walks(&g, 0, 7, 3, &mut regs, &mut WorkspaceMeter::new()).unwrap()
}

#[test]
fn grid_dag_visit_and_edge_counts() {
    let run = grid_run(&GRID_ROTORS);
    assert_eq!(run.counters.visits, vec![3, 2, 1, 1, 2, 0, 1, 2]);
    assert_eq!(
        run.counters.edge_counts(),
        vec![2, 1, 1, 1, 1, 0, 0, 1, 1, 1, 0, 0]
    );
    assert_eq!(run.counters.reach, 2);
}

#[test]
fn grid_dag_counts_pin_down_the_rotors_that_matter() {
    // Among all up/down settings, the counts arise exactly when vertices
    // 00 and 11 point up and 20 points down; 10 and 21 are free.
    for bits in 0u64..256 {
        let rotors: Vec<u64> = (0..8).map(|v| bits >> v & 1).collect();
        let run = grid_run(&rotors);
        let matches = run.counters.visits == [3, 2, 1, 1, 2, 0, 1, 2];
        let expected = rotors[0] == 0 && rotors[2] == 0 && rotors[3] == 1;
        assert_eq!(matches, expected, "rotors {rotors:?}");
    }
}

#[test]
fn grid_dag_reach_probabilities_are_halves() {
    let g = grid_dag();
    let p = dag_reach_probabilities(&g, 0).unwrap();
    let half = BigRational::new(1.into(), 2.into());
    let quarter = BigRational::new(1.into(), 4.into());
    assert_eq!(p[6], half);
    assert_eq!(p[7], half);
    assert_eq!(p[3], quarter);
    assert_eq!(p[4], half);
    assert_eq!(p[5], quarter);
    for t in [6, 7] {
        let mut tape = fresh_tape(64, TapeProfile::Random(3));
        let est = estimate_dag(&g, 0, t, 0.1, &mut tape).unwrap();
        assert!((est.rho - 0.5).abs() <= 0.1);
        assert!(est.metrics.tape_restored);
    }
}

#[test]
fn collision_rotor_settings_collide() {
    let g = collision_graph();
    let config = StationaryConfig {
        v_star: 0,
        mix_time: 1,
        delta: 1.0,
        walk_length: 4,
    };
    let mut finals = Vec::new();
    for rotors in [[0, 0, 1, 0, 0], [1, 0, 0, 0, 0]] {
        let mut tape = rotor_tape(&rotors, 1);
        let mut regs = RegisterFile::allocate(&mut tape, 0, 5, 1, Modulus::PowerOfTwo).unwrap();
        let run = stationary_walk(&g, &config, &mut regs).unwrap();
        assert_eq!(run.final_vertex, 4);
        drop(regs);
        assert_ne!(tape, rotor_tape(&rotors, 1));
        finals.push(tape);
    }
    assert_eq!(finals[0], finals[1]);
}

#[test]
fn forward_then_reverse_restores_registers() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in [0u64, 1, 2, 5, 50] {
        for _ in 0..20 {
            let n = rng.gen_range(2..16);
            let g = random_dag(&mut rng, n, 0.3);
            let width = (64 - k.max(2).saturating_sub(1).leading_zeros()).max(1);
            let mut tape = fresh_tape(n * width as usize, TapeProfile::Random(rng.gen()));
            let before = tape.clone();
            let mut regs =
                RegisterFile::allocate(&mut tape, 0, n, width, Modulus::PowerOfTwo).unwrap();
            let run = run_walks(&g, 0, n - 1, k, &mut regs, &mut WorkspaceMeter::new()).unwrap();
            drop(regs);
            assert_eq!(tape, before);
            assert!(run.counters.max_fairness_gap() <= 2);
            for v in 0..n {
                if g.outdeg(v) > 0 {
                    let out: u64 = run.counters.transitions[v].iter().sum();
                    assert_eq!(out, run.counters.visits[v]);
                }
            }
            if k == 0 {
                assert!(run.counters.visits.iter().all(|&c| c == 0));
            }
        }
    }
}

#[test]
fn interior_visits_equal_incoming_transitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_dag(&mut rng, 12, 0.4);
    let mut tape = fresh_tape(12 * 8, TapeProfile::Random(4));
    let mut regs = RegisterFile::allocate(&mut tape, 0, 12, 8, Modulus::PowerOfTwo).unwrap();
    let run = run_walks(&g, 0, 11, 100, &mut regs, &mut WorkspaceMeter::new()).unwrap();
    for v in 1..12 {
        let incoming: u64 = (0..g.indeg(v))
            .map(|j| {
                let u = g.innbr(v, j).unwrap();
                let r = (0..g.outdeg(u)).find(|&r| g.outnbr(u, r) == Some(v)).unwrap();
                run.counters.transitions[u][r]
            })
            .sum();
        assert_eq!(incoming, run.counters.visits[v], "vertex {v}");
    }
}

#[test]
fn trivial_walks() {
    let single = AdjacencyGraph::empty(1);
    let mut tape = fresh_tape(8, TapeProfile::Ones);
    assert_eq!(estimate_dag(&single, 0, 0, 0.5, &mut tape).unwrap().rho, 1.0);

    let edge = AdjacencyGraph::from_edges(2, [(0, 1)]).unwrap();
    assert!(matches!(
        estimate_dag(&edge, 0, 0, 0.5, &mut tape),
        Err(WalkError::NotASink(0))
    ));

    let looped = AdjacencyGraph::from_edges(1, [(0, 0)]).unwrap();
    for steps in [0, 1, 5] {
        let mut tape = tape_for_general(&looped, steps, 0.1);
        assert_eq!(estimate_general(&looped, 0, 0, steps, 0.1, &mut tape).unwrap().rho, 1.0);
    }

    let two_cycle = directed_cycle(2);
    let mut tape = tape_for_general(&two_cycle, 1, 0.1);
    assert!(estimate_general(&two_cycle, 0, 1, 1, 0.1, &mut tape).unwrap().rho >= 0.9);
}

fn tape_for_general(g: &AdjacencyGraph, steps: usize, eps: f64) -> CatalyticTape {
    let lift = lift_layered(loop_sinks(g), steps);
    let (_, width) = walk_parameters(lift.edge_count(), eps).unwrap();
    fresh_tape(lift.vertex_count() * width as usize, TapeProfile::Random(11))
}

#[test]
fn general_walk_is_the_dag_walk_on_the_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let n = rng.gen_range(2..8);
        let g = random_graph(&mut rng, n, 0.3);
        let steps = rng.gen_range(0..5);
        let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let mut a = tape_for_general(&g, steps, 0.2);
        let mut b = a.clone();
        let general = estimate_general(&g, s, t, steps, 0.2, &mut a).unwrap();
        let lift = lift_layered(loop_sinks(&g), steps);
        let manual = estimate_dag(&lift, lift.encode(0, s), lift.encode(steps, t), 0.2, &mut b).unwrap();
        assert_eq!(general.counters, manual.counters);
        assert_eq!(general.rho, manual.rho);
        let exact = walk_distribution(&loop_sinks(&g), s, steps).unwrap().values[t];
        assert!((general.rho - exact).abs() <= 0.2);
    }
}

#[test]
fn stationary_examples() {
    let looped = AdjacencyGraph::from_edges(1, [(0, 0)]).unwrap();
    let mut tape = fresh_tape(4, TapeProfile::Random(1));
    let est = estimate_stationary(&looped, 0, 3, 0.1, &mut tape).unwrap();
    assert_eq!(est.rho, 1.0);

    let cycle = directed_cycle(4);
    let pi = stationary_exact(&cycle, 1e-12).unwrap();
    assert!(pi.values.iter().all(|&p| (p - 0.25).abs() < 1e-9));
    for delta in [0.1, 0.05, 0.02] {
        let mut tape = fresh_tape(4, TapeProfile::Random(2));
        let before = tape.digest();
        let est = estimate_stationary(&cycle, 1, 1, delta, &mut tape).unwrap();
        assert_eq!(est.config.walk_length, (6.0 / delta).ceil() as u64);
        assert!((est.rho - 0.25).abs() <= delta);
        assert_eq!(tape.digest(), before);
        assert!(!est.in_band_reversible);
    }

    let with_sink = AdjacencyGraph::from_edges(2, [(0, 1)]).unwrap();
    assert!(matches!(
        estimate_stationary(&with_sink, 0, 1, 0.1, &mut tape),
        Err(WalkError::DeadEnd(1))
    ));
}

#[test]
fn dag_estimates_match_exact_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let n = rng.gen_range(2..20);
        let g = random_dag(&mut rng, n, 0.25);
        let sinks: Vec<_> = (0..n).filter(|&v| g.outdeg(v) == 0).collect();
        let t = sinks[rng.gen_range(0..sinks.len())];
        let s = rng.gen_range(0..n);
        let p = dag_reach_probabilities(&g, s).unwrap()[t].to_f64().unwrap();
        let (_, width) = walk_parameters(g.edge_count(), 0.05).unwrap();
        let mut tape = fresh_tape(n * width as usize, TapeProfile::Random(rng.gen()));
        let est = estimate_dag(&g, s, t, 0.05, &mut tape).unwrap();
        assert!((est.rho - p).abs() <= 0.05, "rho {} p {p}", est.rho);
        assert!(est.metrics.tape_restored);
    }
}
