//! Random-walk estimation with rotor registers.
//!
//! Each vertex `v` owns a register `R_v` on the catalytic tape. A walk
//! leaves `v` along out-edge `R_v mod outdeg(v)` and bumps `R_v`, so
//! repeated visits spread over the out-edges almost evenly and the number
//! of walks ending at `t` tracks `K · Pr[walk reaches t]`. On an acyclic
//! graph, re-running every walk with decrement-then-read undoes all
//! register changes exactly.

use std::collections::BTreeMap;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{lift_layered, loop_sinks, GraphOracle, Vertex};
use crate::metrics::{RunClock, RunMetrics};
use crate::tape::{bits_for_range, CatalyticTape, Modulus, RegisterFile, TapeError, WorkspaceMeter};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("vertex {v} out of range for a graph on {n} vertices")]
    VertexOutOfRange { v: Vertex, n: usize },
    #[error("target {0} is not a sink")]
    NotASink(Vertex),
    #[error("walk from {start} took more than {steps} steps; the graph has a cycle")]
    CycleDetected { start: Vertex, steps: usize },
    #[error("walk reached vertex {0}, which has no out-edges")]
    DeadEnd(Vertex),
    #[error("accuracy must be a positive finite number, got {0}")]
    InvalidAccuracy(f64),
    #[error("catalytic tape has {have} bits but the run needs {need}")]
    TapeTooSmall { need: usize, have: usize },
}

pub type Result<T, E = WalkError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkMode {
    /// Read `R_v`, then increment.
    Fwd,
    /// Decrement `R_v`, then read.
    Rev,
}

/// Visit and transition counts of the forward phase.
///
/// These are instrumentation for tests and reports; the algorithms
/// themselves keep only `reach` in workspace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VisitCounters {
    /// `N_v`: walks that passed through `v`, including walks ending there.
    pub visits: Vec<u64>,
    /// `N_v^r`: walks that left `v` along its `r`-th out-edge.
    pub transitions: Vec<Vec<u64>>,
    /// Walks that ended at the target.
    pub reach: u64,
}

impl VisitCounters {
    pub fn new<G: GraphOracle>(g: &G) -> Self {
        let n = g.vertex_count();
        VisitCounters {
            visits: vec![0; n],
            transitions: (0..n).map(|v| vec![0; g.outdeg(v)]).collect(),
            reach: 0,
        }
    }

    /// `max_{r,r'} |N_v^r − N_v^{r'}|`.
    pub fn fairness_gap(&self, v: Vertex) -> u64 {
        let row = &self.transitions[v];
        match (row.iter().max(), row.iter().min()) {
            (Some(hi), Some(lo)) => hi - lo,
            _ => 0,
        }
    }

    pub fn max_fairness_gap(&self) -> u64 {
        (0..self.visits.len())
            .map(|v| self.fairness_gap(v))
            .max()
            .unwrap_or(0)
    }

    /// Transition counts flattened in (vertex, out-edge index) order.
    pub fn edge_counts(&self) -> Vec<u64> {
        self.transitions.iter().flatten().copied().collect()
    }
}

impl Serialize for VisitCounters {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let visits: BTreeMap<String, u64> = self
            .visits
            .iter()
            .enumerate()
            .map(|(v, &c)| (v.to_string(), c))
            .collect();
        let transitions: BTreeMap<String, u64> = self
            .transitions
            .iter()
            .enumerate()
            .flat_map(|(v, row)| row.iter().enumerate().map(move |(r, &c)| (format!("{v},{r}"), c)))
            .collect();
        let mut s = serializer.serialize_struct("VisitCounters", 3)?;
        s.serialize_field("visits", &visits)?;
        s.serialize_field("transitions", &transitions)?;
        s.serialize_field("reach", &self.reach)?;
        s.end()
    }
}

/// `K = ⌈2m/ε⌉` (at least 1) and `ℓ = ⌈log₂ K⌉` (at least 1).
pub fn walk_parameters(m: usize, eps: f64) -> Result<(u64, u32)> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(WalkError::InvalidAccuracy(eps));
    }
    let k = ceil_tolerant(2.0 * m as f64 / eps).max(1);
    Ok((k, bits_for_range(k as u128)))
}

/// `⌈x⌉`, treating values within rounding noise of an integer as that integer.
fn ceil_tolerant(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Tape bits [`estimate_dag`] lays registers over.
pub fn dag_tape_bits<G: GraphOracle>(g: &G, eps: f64) -> Result<usize> {
    let (_, width) = walk_parameters(g.edge_count(), eps)?;
    Ok(g.vertex_count() * width as usize)
}

/// Tape bits [`estimate_general`] lays registers over.
pub fn general_tape_bits<G: GraphOracle>(g: &G, steps: usize, eps: f64) -> Result<usize> {
    dag_tape_bits(&lift_layered(loop_sinks(g), steps), eps)
}

/// Tape bits [`estimate_stationary`] lays registers over.
pub fn stationary_tape_bits<G: GraphOracle>(g: &G) -> usize {
    g.vertex_count() * rotor_width(g) as usize
}

fn check_vertex(n: usize, v: Vertex) -> Result<()> {
    if v < n {
        Ok(())
    } else {
        Err(WalkError::VertexOutOfRange { v, n })
    }
}

/// One rotor walk from `s` to a sink. Returns the sink and the number of
/// edges taken.
fn walk_counted<G: GraphOracle>(
    g: &G,
    s: Vertex,
    mode: WalkMode,
    regs: &mut RegisterFile<'_>,
    mut counters: Option<&mut VisitCounters>,
) -> Result<(Vertex, u64)> {
    let n = g.vertex_count();
    let mut v = s;
    let mut steps = 0;
    loop {
        if let Some(c) = counters.as_deref_mut() {
            c.visits[v] += 1;
        }
        let d = g.outdeg(v);
        if d == 0 {
            return Ok((v, steps));
        }
        steps += 1;
        if steps > n as u64 {
            return Err(WalkError::CycleDetected { start: s, steps: n });
        }
        let r = match mode {
            WalkMode::Fwd => {
                let r = regs.value(v)? % d as u64;
                regs.reg_add_mod(v, 1)?;
                r
            }
            WalkMode::Rev => {
                regs.reg_sub_mod(v, 1)?;
                regs.value(v)? % d as u64
            }
        } as usize;
        if let Some(c) = counters.as_deref_mut() {
            c.transitions[v][r] += 1;
        }
        v = g.outnbr(v, r).expect("out-neighbor below out-degree");
    }
}

/// One rotor walk from `s` on an acyclic graph; returns the sink reached.
///
/// `regs` holds one register per vertex. A `Fwd` walk followed by a `Rev`
/// walk from the same start visits the same vertices and restores every
/// register. More than `n` steps means the graph has a cycle; the walk
/// stops with an error and the registers are left as they are.
pub fn walk_once<G: GraphOracle>(
    g: &G,
    s: Vertex,
    mode: WalkMode,
    regs: &mut RegisterFile<'_>,
    counters: Option<&mut VisitCounters>,
) -> Result<Vertex> {
    check_vertex(g.vertex_count(), s)?;
    walk_counted(g, s, mode, regs, counters).map(|(sink, _)| sink)
}

/// Result of `K` forward walks followed by `K` reverse walks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkRun {
    pub counters: VisitCounters,
    /// Edges taken over both phases.
    pub steps: u64,
}

/// Runs `k` forward walks from `s`, counting those that end at `t`, then
/// `k` reverse walks that restore the registers.
pub fn run_walks<G: GraphOracle>(
    g: &G,
    s: Vertex,
    t: Vertex,
    k: u64,
    regs: &mut RegisterFile<'_>,
    meter: &mut WorkspaceMeter,
) -> Result<WalkRun> {
    let n = g.vertex_count();
    check_vertex(n, s)?;
    check_vertex(n, t)?;
    let max_out = (0..n).map(|v| g.outdeg(v)).max().unwrap_or(0);
    // walk index, reach count, current vertex, edge index, step guard
    let charged = meter.charge_vars(&[
        k as u128 + 1,
        k as u128 + 1,
        n as u128,
        max_out as u128 + 1,
        n as u128 + 2,
    ])?;
    let mut counters = VisitCounters::new(g);
    let mut steps = 0;
    for _ in 0..k {
        let (sink, taken) = walk_counted(g, s, WalkMode::Fwd, regs, Some(&mut counters))?;
        steps += taken;
        if sink == t {
            counters.reach += 1;
        }
    }
    for _ in 0..k {
        steps += walk_counted(g, s, WalkMode::Rev, regs, None)?.1;
    }
    meter.release(charged)?;
    Ok(WalkRun { counters, steps })
}

/// A walk-probability estimate and its run record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkEstimate {
    /// `ρ = N_reach / K`.
    pub rho: f64,
    pub walks: u64,
    pub register_bits: u32,
    pub counters: VisitCounters,
    pub metrics: RunMetrics,
}

/// Returns the counters of a finished run.
pub fn collect_counters(run: &WalkEstimate) -> &VisitCounters {
    &run.counters
}

/// Estimates the probability that a random walk from `s` on the acyclic
/// graph `g` ends at the sink `t`, to within `eps`.
pub fn estimate_dag<G: GraphOracle>(
    g: &G,
    s: Vertex,
    t: Vertex,
    eps: f64,
    tape: &mut CatalyticTape,
) -> Result<WalkEstimate> {
    let n = g.vertex_count();
    check_vertex(n, s)?;
    check_vertex(n, t)?;
    if g.outdeg(t) != 0 {
        return Err(WalkError::NotASink(t));
    }
    let (k, width) = walk_parameters(g.edge_count(), eps)?;
    let need = n * width as usize;
    if tape.len() < need {
        return Err(WalkError::TapeTooSmall {
            need,
            have: tape.len(),
        });
    }
    let clock = RunClock::start(tape);
    let mut meter = WorkspaceMeter::new();
    // s, t, K, ℓ
    let charged = meter.charge_vars(&[n as u128, n as u128, k as u128 + 1, 65])?;
    let mut regs = RegisterFile::allocate(tape, 0, n, width, Modulus::PowerOfTwo)?;
    let run = run_walks(g, s, t, k, &mut regs, &mut meter)?;
    drop(regs);
    meter.release(charged)?;

    let mut metrics = RunMetrics {
        elapsed_steps: run.steps,
        workspace_peak_bits: meter.peak_bits(),
        catalytic_bits: need as u64,
        ..RunMetrics::default()
    };
    clock.finish(tape, &mut metrics);
    Ok(WalkEstimate {
        rho: run.counters.reach as f64 / k as f64,
        walks: k,
        register_bits: width,
        counters: run.counters,
        metrics,
    })
}

/// Estimates the probability that a `steps`-step random walk from `s` on
/// any graph ends at `t`, by walking the layered lift.
///
/// Sinks of `g` get a virtual self-loop first so every walk can take
/// `steps` steps. Counters are indexed by lifted vertex `layer·n + v`.
pub fn estimate_general<G: GraphOracle>(
    g: &G,
    s: Vertex,
    t: Vertex,
    steps: usize,
    eps: f64,
    tape: &mut CatalyticTape,
) -> Result<WalkEstimate> {
    let n = g.vertex_count();
    check_vertex(n, s)?;
    check_vertex(n, t)?;
    let looped = loop_sinks(g);
    let added = looped.loops_added();
    let lift = lift_layered(&looped, steps);
    let mut estimate = estimate_dag(&lift, lift.encode(0, s), lift.encode(steps, t), eps, tape)?;
    if added > 0 {
        estimate
            .metrics
            .normalizations
            .push(format!("virtual self-loops at {added} sinks"));
    }
    Ok(estimate)
}

/// Parameters of the stationary-distribution walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryConfig {
    pub v_star: Vertex,
    pub mix_time: usize,
    pub delta: f64,
    /// `T' = ⌈T(m+2)/δ⌉`, at least 1.
    pub walk_length: u64,
}

impl StationaryConfig {
    pub fn new<G: GraphOracle>(g: &G, v_star: Vertex, mix_time: usize, delta: f64) -> Result<Self> {
        check_vertex(g.vertex_count(), v_star)?;
        if !(delta.is_finite() && delta > 0.0) {
            return Err(WalkError::InvalidAccuracy(delta));
        }
        let walk_length =
            ceil_tolerant(mix_time as f64 * (g.edge_count() + 2) as f64 / delta).max(1);
        Ok(StationaryConfig {
            v_star,
            mix_time,
            delta,
            walk_length,
        })
    }
}

/// Outcome of one long rotor walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryRun {
    /// Departures from each vertex over the `T'` steps (`c_before`).
    pub counters: VisitCounters,
    pub final_vertex: Vertex,
}

/// The stationary walk without any tape protection: `T'` rotor steps from
/// `v*` with each `R_v` cycling through `0..outdeg(v)`.
///
/// The rotors are overwritten in place, and different initial rotor values
/// can lead to the same final values, so the original registers are not in
/// general recoverable from the final ones.
pub fn stationary_walk<G: GraphOracle>(
    g: &G,
    config: &StationaryConfig,
    regs: &mut RegisterFile<'_>,
) -> Result<StationaryRun> {
    check_vertex(g.vertex_count(), config.v_star)?;
    let full = if regs.width() >= 64 {
        u64::MAX
    } else {
        (1u64 << regs.width()) - 1
    };
    let mut counters = VisitCounters::new(g);
    let mut v = config.v_star;
    for _ in 0..config.walk_length {
        let d = g.outdeg(v) as u64;
        if d == 0 {
            return Err(WalkError::DeadEnd(v));
        }
        counters.visits[v] += 1;
        let current = regs.value(v)?;
        let r = current % d;
        let next = (r + 1) % d;
        regs.reg_add_mod(v, next.wrapping_sub(current) & full)?;
        counters.transitions[v][r as usize] += 1;
        v = g.outnbr(v, r as usize).expect("out-neighbor below out-degree");
    }
    counters.reach = counters.visits[config.v_star];
    Ok(StationaryRun {
        counters,
        final_vertex: v,
    })
}

/// A stationary-probability estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryEstimate {
    /// Fraction of the `T'` steps spent at `v*`.
    pub rho: f64,
    pub config: StationaryConfig,
    pub counters: VisitCounters,
    /// Always false: the walk itself cannot undo its register changes.
    /// The tape is restored from an out-of-band snapshot instead.
    pub in_band_reversible: bool,
    pub metrics: RunMetrics,
}

/// Register width for the stationary walk: enough for `0..max outdeg`.
fn rotor_width<G: GraphOracle>(g: &G) -> u32 {
    let max_out = (0..g.vertex_count()).map(|v| g.outdeg(v)).max().unwrap_or(1);
    bits_for_range(max_out as u128)
}

/// Estimates `π(v*)` with one `T'`-step rotor walk.
///
/// The register span is copied aside before the walk and written back
/// afterwards, so the tape is returned intact even though the walk is not
/// reversible.
pub fn estimate_stationary<G: GraphOracle>(
    g: &G,
    v_star: Vertex,
    mix_time: usize,
    delta: f64,
    tape: &mut CatalyticTape,
) -> Result<StationaryEstimate> {
    let n = g.vertex_count();
    let config = StationaryConfig::new(g, v_star, mix_time, delta)?;
    if let Some(sink) = (0..n).find(|&v| g.outdeg(v) == 0) {
        return Err(WalkError::DeadEnd(sink));
    }
    let width = rotor_width(g);
    let span = n * width as usize;
    if tape.len() < span {
        return Err(WalkError::TapeTooSmall {
            need: span,
            have: tape.len(),
        });
    }
    let clock = RunClock::start(tape);
    let snapshot: Vec<u64> = (0..span)
        .step_by(64)
        .map(|offset| tape.read_bits(offset, (span - offset).min(64)))
        .collect();

    let max_out = (0..n).map(|v| g.outdeg(v)).max().unwrap_or(1);
    let mut meter = WorkspaceMeter::new();
    // v*, T', step counter, current vertex, rotor value, visit count
    meter.charge_vars(&[
        n as u128,
        config.walk_length as u128 + 1,
        config.walk_length as u128 + 1,
        n as u128,
        max_out as u128,
        config.walk_length as u128 + 1,
    ])?;
    let mut regs = RegisterFile::allocate(tape, 0, n, width, Modulus::PowerOfTwo)?;
    let run = stationary_walk(g, &config, &mut regs);
    drop(regs);
    for (i, &word) in snapshot.iter().enumerate() {
        let offset = i * 64;
        tape.write_bits(offset, (span - offset).min(64), word);
    }
    let run = run?;

    let mut metrics = RunMetrics {
        elapsed_steps: config.walk_length,
        workspace_peak_bits: meter.peak_bits(),
        catalytic_bits: span as u64,
        normalizations: vec!["rotor registers restored from an out-of-band snapshot".to_owned()],
        ..RunMetrics::default()
    };
    clock.finish(tape, &mut metrics);
    Ok(StationaryEstimate {
        rho: run.counters.reach as f64 / config.walk_length as f64,
        config,
        counters: run.counters,
        in_band_reversible: false,
        metrics,
    })
}
