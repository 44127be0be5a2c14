//! Brute-force ground truth for the catalytic algorithms.
//!
//! Everything here uses as much memory as it likes: BFS, exact big-integer
//! path counts, exact rational walk distributions and power iteration. These
//! functions back the test suites and the CLI's `--verify` mode.

use std::collections::VecDeque;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::graph::{GraphOracle, Vertex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("vertex {0} has no out-edges; the walk is undefined there")]
    SinkVertex(Vertex),
    #[error("graph has a cycle")]
    Cyclic,
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Rational arithmetic is used up to this many vertices and steps.
pub const EXACT_LIMIT: usize = 20;

/// Reflexive, transitive reachability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl ReachMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reaches(&self, s: Vertex, t: Vertex) -> bool {
        self.bits[s * self.n + t]
    }
}

pub fn bfs_reach<G: GraphOracle>(g: &G) -> ReachMatrix {
    let n = g.vertex_count();
    let mut bits = vec![false; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut bits[s * n..(s + 1) * n];
        row[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for i in 0..g.outdeg(u) {
                let v = g.outnbr(u, i).expect("outnbr within outdeg");
                if !row[v] {
                    row[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    ReachMatrix { n, bits }
}

/// Reachability by repeated boolean squaring of `I + A`; independent of BFS.
pub fn closure_by_squaring<G: GraphOracle>(g: &G) -> ReachMatrix {
    let n = g.vertex_count();
    let mut m = vec![false; n * n];
    for u in 0..n {
        m[u * n + u] = true;
        for i in 0..g.outdeg(u) {
            m[u * n + g.outnbr(u, i).unwrap()] = true;
        }
    }
    let mut len = 1;
    while len < n {
        let mut next = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if m[i * n + k] {
                    for j in 0..n {
                        next[i * n + j] |= m[k * n + j];
                    }
                }
            }
        }
        m = next;
        len *= 2;
    }
    ReachMatrix { n, bits: m }
}

/// Number of length-`steps` walks from `s` to every vertex.
pub fn count_paths<G: GraphOracle>(g: &G, s: Vertex, steps: usize) -> Vec<BigUint> {
    let n = g.vertex_count();
    let mut cur = vec![BigUint::zero(); n];
    cur[s] = BigUint::one();
    for _ in 0..steps {
        let mut next = vec![BigUint::zero(); n];
        for u in 0..n {
            if cur[u].is_zero() {
                continue;
            }
            for i in 0..g.outdeg(u) {
                let v = g.outnbr(u, i).unwrap();
                next[v] += &cur[u];
            }
        }
        cur = next;
    }
    cur
}

/// The two-bank quantity `ζ_{(σ_T, v), T}` for every `v`: `ζ_0 = 1_s`,
/// `ζ_{-1} = 0` and `ζ_{i+1}(v) = ζ_{i-1}(v) + ζ_i(v) + Σ_{(u,v)∈E} ζ_i(u)`,
/// where the middle term is the dummy self-edge every vertex receives.
pub fn zeta_values<G: GraphOracle>(g: &G, s: Vertex, steps: usize) -> Vec<BigUint> {
    let n = g.vertex_count();
    let mut prev = vec![BigUint::zero(); n];
    let mut cur = vec![BigUint::zero(); n];
    cur[s] = BigUint::one();
    for _ in 0..steps {
        let mut next = prev;
        for v in 0..n {
            next[v] += &cur[v];
            for i in 0..g.indeg(v) {
                next[v] += &cur[g.innbr(v, i).unwrap()];
            }
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// A probability vector; `exact` is present when computed in rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionVector {
    pub values: Vec<f64>,
    pub exact: Option<Vec<BigRational>>,
}

impl DistributionVector {
    fn from_exact(exact: Vec<BigRational>) -> Self {
        let values = exact.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
        DistributionVector {
            values,
            exact: Some(exact),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|x| x.abs()).sum()
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        l1_distance(&self.values, other)
    }
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Distribution of a `steps`-step random walk from `s`.
///
/// Exact (rational) for up to [`EXACT_LIMIT`] vertices and steps; floating
/// point beyond that.
pub fn walk_distribution<G: GraphOracle>(
    g: &G,
    s: Vertex,
    steps: usize,
) -> Result<DistributionVector, OracleError> {
    let n = g.vertex_count();
    if let Some(v) = (0..n).find(|&v| g.outdeg(v) == 0) {
        return Err(OracleError::SinkVertex(v));
    }
    if n <= EXACT_LIMIT && steps <= EXACT_LIMIT {
        let mut cur = vec![BigRational::zero(); n];
        cur[s] = BigRational::one();
        for _ in 0..steps {
            let mut next = vec![BigRational::zero(); n];
            for u in 0..n {
                if cur[u].is_zero() {
                    continue;
                }
                let share = &cur[u] / BigRational::from_integer(BigInt::from(g.outdeg(u)));
                for i in 0..g.outdeg(u) {
                    next[g.outnbr(u, i).unwrap()] += &share;
                }
            }
            cur = next;
        }
        Ok(DistributionVector::from_exact(cur))
    } else {
        let mut cur = vec![0.0; n];
        cur[s] = 1.0;
        for _ in 0..steps {
            cur = apply_walk_matrix(g, &cur);
        }
        Ok(DistributionVector {
            values: cur,
            exact: None,
        })
    }
}

/// Topological order, or `None` if `g` has a cycle.
pub fn topological_order<G: GraphOracle>(g: &G) -> Option<Vec<Vertex>> {
    let n = g.vertex_count();
    let mut indeg: Vec<usize> = (0..n).map(|v| g.indeg(v)).collect();
    let mut queue: VecDeque<Vertex> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for i in 0..g.outdeg(u) {
            let v = g.outnbr(u, i).unwrap();
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Probability that a random walk from `s` on an acyclic graph ever visits
/// each vertex, in exact rationals.
pub fn dag_reach_probabilities<G: GraphOracle>(
    g: &G,
    s: Vertex,
) -> Result<Vec<BigRational>, OracleError> {
    let order = topological_order(g).ok_or(OracleError::Cyclic)?;
    let n = g.vertex_count();
    let mut p = vec![BigRational::zero(); n];
    p[s] = BigRational::one();
    for u in order {
        let d = g.outdeg(u);
        if d == 0 || p[u].is_zero() {
            continue;
        }
        let share = &p[u] / BigRational::from_integer(BigInt::from(d));
        for i in 0..d {
            let v = g.outnbr(u, i).unwrap();
            p[v] += &share;
        }
    }
    Ok(p)
}

/// `W·x` for the column-stochastic walk matrix of `g`.
pub fn apply_walk_matrix<G: GraphOracle>(g: &G, x: &[f64]) -> Vec<f64> {
    let n = g.vertex_count();
    let mut out = vec![0.0; n];
    for u in 0..n {
        let d = g.outdeg(u);
        if d == 0 || x[u] == 0.0 {
            continue;
        }
        let share = x[u] / d as f64;
        for i in 0..d {
            out[g.outnbr(u, i).unwrap()] += share;
        }
    }
    out
}

pub const STATIONARY_MAX_ITERATIONS: usize = 1_000_000;

/// Stationary distribution by power iteration on the lazy chain `(I + W)/2`,
/// which has the same fixed points as `W` and converges for periodic
/// irreducible chains too. Stops once `‖Wπ − π‖₁ ≤ tol`.
pub fn stationary_exact<G: GraphOracle>(g: &G, tol: f64) -> Result<DistributionVector, OracleError> {
    let n = g.vertex_count();
    if let Some(v) = (0..n).find(|&v| g.outdeg(v) == 0) {
        return Err(OracleError::SinkVertex(v));
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..STATIONARY_MAX_ITERATIONS {
        let w = apply_walk_matrix(g, &pi);
        residual = l1_distance(&w, &pi);
        if residual <= tol {
            return Ok(DistributionVector {
                values: pi,
                exact: None,
            });
        }
        let total: f64 = pi.iter().zip(&w).map(|(a, b)| 0.5 * (a + b)).sum();
        pi = pi.iter().zip(&w).map(|(a, b)| 0.5 * (a + b) / total).collect();
    }
    Err(OracleError::NoConvergence {
        iterations: STATIONARY_MAX_ITERATIONS,
        residual,
    })
}

/// `max_i ‖W^T e_i − π‖₁`: the worst-case distance from stationarity after
/// `steps` steps over point-mass starts (the extreme points of the simplex).
pub fn mixing_error<G: GraphOracle>(g: &G, pi: &[f64], steps: usize) -> f64 {
    let n = g.vertex_count();
    (0..n)
        .map(|i| {
            let mut x = vec![0.0; n];
            x[i] = 1.0;
            for _ in 0..steps {
                x = apply_walk_matrix(g, &x);
            }
            l1_distance(&x, pi)
        })
        .fold(0.0, f64::max)
}
