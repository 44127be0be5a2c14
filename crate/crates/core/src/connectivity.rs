//! s→t connectivity by pushing register values along edges.
//!
//! Both register programs here follow the same pattern. Registers hold
//! arbitrary initial values `τ`. A push sequence `P_b` adds `b` to the
//! source register and then, layer by layer, adds every register's residue
//! into the registers of its out-neighbors. The reverse sequence `R_b`
//! undoes this exactly. Because every push is linear, the value of a
//! register after `P_1` minus its value after `P_0` no longer depends on
//! `τ`: it is the number of walks from the source, modulo `q`.
//!
//! * [`PushStateLayered`] keeps one register per (layer, vertex). Since
//!   earlier layers are never modified while later ones hold pushed values,
//!   any original register value can be recomputed on the spot from its
//!   in-neighbors ([`RevertQuery`]).
//! * [`PushStateParity`] keeps two banks of registers and alternates between
//!   them, with a dummy self-edge at every vertex. It uses far fewer
//!   registers but cannot answer original-value queries mid-run.
//!
//! The drivers [`connect_det`], [`connect_rand`] and [`connect_revertible`]
//! wrap these programs into full decision procedures.

use std::ops::Range;

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{add_virtual_self_loop, reduce_degree, DegreeReducedView, GraphOracle, Vertex};
use crate::metrics::{RunClock, RunMetrics};
use crate::tape::{
    bits_for_range, CatalyticTape, Modulus, RegisterFile, Sign, TapeError, WorkspaceMeter,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConnectivityError {
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("vertex {v} out of range for a graph on {n} vertices")]
    VertexOutOfRange { v: Vertex, n: usize },
    #[error("catalytic tape has {have} bits but the run needs {need}")]
    TapeTooSmall { need: usize, have: usize },
    #[error("register file holds {have} registers but the program needs {need}")]
    RegisterCount { need: usize, have: usize },
    #[error("register width {0} exceeds the 64-bit limit for residue registers")]
    WidthTooLarge(u32),
}

pub type Result<T, E = ConnectivityError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Path,
    NoPath,
    /// A randomized driver drew a shift that left some register invalid.
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityAnswer {
    pub verdict: Verdict,
    /// Randomized iterations started (0 for the deterministic driver).
    pub iterations: usize,
    pub metrics: RunMetrics,
}

/// `⌈log₂ x⌉`, with `⌈log₂ 0⌉ = ⌈log₂ 1⌉ = 0`.
pub fn ceil_log2(x: &BigUint) -> u32 {
    if *x <= BigUint::one() {
        0
    } else {
        (x - 1u32).bits() as u32
    }
}

/// Path-count bounds used to size registers and draw moduli.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathBoundConstants {
    /// `n^T`: bound on length-`T` walks between two vertices.
    pub path_bound: BigUint,
    /// `B = (b+1)^T + 1`, strictly above every two-bank value `ζ`.
    pub zeta_bound: BigUint,
    /// `P = ⌈log₂ B⌉`.
    pub zeta_bits: u32,
    /// `p = ⌈log₂ n^T⌉`.
    pub path_bits: u32,
}

impl PathBoundConstants {
    /// `degree_base` is the larger of `n` and the maximum in-degree of the
    /// pushed graph counting the dummy self-edge; `ζ ≤ (degree_base+1)^T`.
    pub fn new(n: usize, degree_base: usize, steps: usize) -> Self {
        let path_bound = Pow::pow(BigUint::from(n), steps);
        let zeta_bound: BigUint = Pow::pow(BigUint::from(degree_base + 1), steps) + 1u32;
        PathBoundConstants {
            zeta_bits: ceil_log2(&zeta_bound),
            path_bits: ceil_log2(&path_bound),
            path_bound,
            zeta_bound,
        }
    }
}

fn check_vertex(n: usize, v: Vertex) -> Result<()> {
    if v < n {
        Ok(())
    } else {
        Err(ConnectivityError::VertexOutOfRange { v, n })
    }
}

#[inline]
fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Iteration order over the vertices whose registers a program touches.
///
/// Iteration is cursor-based (`next(after)`) so a run only has to remember
/// the current vertex. `key` is strictly increasing along the order.
pub trait VertexSchedule {
    fn next(&self, after: Option<Vertex>) -> Option<Vertex>;
    fn key(&self, v: Vertex) -> usize;
    fn contains(&self, v: Vertex) -> bool;
}

/// Every vertex `0..n` in ascending order.
#[derive(Debug, Clone, Copy)]
pub struct AllVertices(pub usize);

impl VertexSchedule for AllVertices {
    fn next(&self, after: Option<Vertex>) -> Option<Vertex> {
        let v = after.map_or(0, |v| v + 1);
        (v < self.0).then_some(v)
    }
    fn key(&self, v: Vertex) -> usize {
        v
    }
    fn contains(&self, v: Vertex) -> bool {
        v < self.0
    }
}

/// Non-isolated vertices of a degree-reduced view plus `s` and `t`, in
/// (base vertex, tree index) order.
#[derive(Debug)]
pub struct RelevantVertices<'v, G> {
    view: &'v DegreeReducedView<G>,
    s: Vertex,
    t: Vertex,
}

impl<'v, G: GraphOracle> RelevantVertices<'v, G> {
    pub fn new(view: &'v DegreeReducedView<G>, s: Vertex, t: Vertex) -> Self {
        RelevantVertices { view, s, t }
    }
}

impl<G: GraphOracle> VertexSchedule for RelevantVertices<'_, G> {
    fn next(&self, after: Option<Vertex>) -> Option<Vertex> {
        let n = self.view.base_vertex_count();
        let (mut v, mut i) = match after {
            None => (0, 0),
            Some(x) => {
                let (v, i) = self.view.decode(x);
                (v, i + 1)
            }
        };
        while v < n {
            while i <= self.view.max_index(v) {
                let x = self.view.encode(v, i);
                if self.contains(x) {
                    return Some(x);
                }
                i += 1;
            }
            v += 1;
            i = 0;
        }
        None
    }

    fn key(&self, x: Vertex) -> usize {
        let (v, i) = self.view.decode(x);
        v * self.view.base_vertex_count() + i
    }

    fn contains(&self, x: Vertex) -> bool {
        x == self.s || x == self.t || !self.view.is_isolated(x)
    }
}

/// Read-only access to the original tape contents while a run is paused.
pub trait RevertQuery {
    /// Original (pre-run) value of the register for `(layer, v)`.
    fn original_register(&self, layer: usize, v: Vertex) -> Result<u64>;
    /// Original value of a tape bit.
    fn original_bit(&self, tape_index: usize) -> Result<bool>;
    /// The tape as it currently is.
    fn current_tape(&self) -> &CatalyticTape;
}

/// Called at every pause point of a locally revertible run: after each edge
/// push, register shift and source injection.
pub trait PauseHook {
    fn on_pause(&mut self, point: u64, run: &dyn RevertQuery);
}

impl<F: FnMut(u64, &dyn RevertQuery)> PauseHook for F {
    fn on_pause(&mut self, point: u64, run: &dyn RevertQuery) {
        self(point, run)
    }
}

/// Where a layered push sequence currently stands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PushPhase {
    /// No layer holds pushed values.
    Clean,
    /// Pushing `layer → layer+1`; in-edges `< edge` of the target with
    /// schedule key `key`, and every target with a smaller key, are done.
    Forward { layer: usize, key: usize, edge: usize },
    /// Every layer has been pushed.
    Pushed,
    /// Reverse-pushing `layer → layer+1`, cursor as in `Forward`.
    Reverse { layer: usize, key: usize, edge: usize },
}

/// Which registers currently carry the random shift `β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShiftState {
    Unshifted,
    /// Registers before the `(layer, key)` cursor are shifted.
    Shifting(usize, usize),
    Shifted,
    /// Registers before the cursor are unshifted again.
    Unshifting(usize, usize),
}

/// Registers `R_(i,v)` for `i ∈ 0..=T` over a graph's vertices, indexed
/// `i·n + v` in the register file.
pub struct PushStateLayered<'a, 't, G, S> {
    graph: G,
    schedule: S,
    n: usize,
    layers: usize,
    s: Vertex,
    t: Vertex,
    regs: &'a mut RegisterFile<'t>,
    meter: &'a mut WorkspaceMeter,
    hook: Option<&'a mut dyn PauseHook>,
    phase: PushPhase,
    injected: u64,
    shift: ShiftState,
    beta: u64,
    ops: u64,
    pauses: u64,
    charged: u64,
}

impl<'a, 't, G: GraphOracle, S: VertexSchedule> PushStateLayered<'a, 't, G, S> {
    pub fn new(
        graph: G,
        schedule: S,
        s: Vertex,
        t: Vertex,
        layers: usize,
        regs: &'a mut RegisterFile<'t>,
        meter: &'a mut WorkspaceMeter,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        check_vertex(n, s)?;
        check_vertex(n, t)?;
        let need = (layers + 1) * n;
        if regs.count() < need {
            return Err(ConnectivityError::RegisterCount {
                need,
                have: regs.count(),
            });
        }
        // layer, target, in-edge index, source, injected amount, cursor
        let n = n as u128;
        let charged = meter.charge_vars(&[
            layers as u128 + 1,
            n,
            n + 2,
            n,
            2,
            layers as u128 + 1,
            n * n,
            n + 2,
        ])?;
        Ok(PushStateLayered {
            n: graph.vertex_count(),
            graph,
            schedule,
            layers,
            s,
            t,
            regs,
            meter,
            hook: None,
            phase: PushPhase::Clean,
            injected: 0,
            shift: ShiftState::Unshifted,
            beta: 0,
            ops: 0,
            pauses: 0,
            charged,
        })
    }

    pub fn with_hook(mut self, hook: &'a mut dyn PauseHook) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn register_index(&self, layer: usize, v: Vertex) -> usize {
        layer * self.n + v
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// Register operations performed so far.
    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn pause_points(&self) -> u64 {
        self.pauses
    }

    pub fn registers(&self) -> &RegisterFile<'t> {
        self.regs
    }

    pub fn modulus(&self) -> Modulus {
        self.regs.modulus()
    }

    pub fn set_modulus(&mut self, modulus: Modulus) -> Result<()> {
        debug_assert_eq!(self.phase, PushPhase::Clean);
        self.regs.reconfigure(modulus)?;
        Ok(())
    }

    /// Releases the workspace charged at construction; returns the op count.
    pub fn finish(self) -> Result<u64> {
        self.meter.release(self.charged)?;
        Ok(self.ops)
    }

    fn pause(&mut self) {
        self.pauses += 1;
        if let Some(hook) = self.hook.take() {
            hook.on_pause(self.pauses, &*self);
            self.hook = Some(hook);
        }
    }

    /// `R_(0,s) ← R_(0,s) ± b`.
    pub fn inject(&mut self, b: u64, sign: Sign) -> Result<()> {
        let idx = self.register_index(0, self.s);
        match sign {
            Sign::Plus => {
                self.regs.reg_add_mod(idx, b)?;
                self.injected = b;
            }
            Sign::Minus => {
                self.regs.reg_sub_mod(idx, b)?;
                self.injected = 0;
            }
        }
        self.ops += 1;
        self.pause();
        Ok(())
    }

    /// Pushes (or reverse-pushes) every edge from layer `layer` into layer
    /// `layer + 1`, iterating targets in schedule order and their in-edges
    /// in oracle order.
    pub fn layer_push(&mut self, layer: usize, reverse: bool) -> Result<()> {
        assert!(layer < self.layers, "layer {layer} has no successor layer");
        let sign = if reverse { Sign::Minus } else { Sign::Plus };
        self.phase = if reverse {
            PushPhase::Reverse {
                layer,
                key: 0,
                edge: 0,
            }
        } else {
            PushPhase::Forward {
                layer,
                key: 0,
                edge: 0,
            }
        };
        let mut cursor = self.schedule.next(None);
        while let Some(v) = cursor {
            let key = self.schedule.key(v);
            let dst = self.register_index(layer + 1, v);
            for j in 0..self.graph.indeg(v) {
                let u = self.graph.innbr(v, j).expect("in-neighbor below in-degree");
                let src = self.register_index(layer, u);
                self.regs.reg_add_reg(dst, src, sign)?;
                self.ops += 1;
                let edge = j + 1;
                self.phase = if reverse {
                    PushPhase::Reverse { layer, key, edge }
                } else {
                    PushPhase::Forward { layer, key, edge }
                };
                self.pause();
            }
            cursor = self.schedule.next(Some(v));
        }
        Ok(())
    }

    /// `P_b`: inject `b`, then push layers `0 … T-1` in order.
    pub fn run_forward(&mut self, b: u64) -> Result<()> {
        self.inject(b, Sign::Plus)?;
        for layer in 0..self.layers {
            self.layer_push(layer, false)?;
        }
        self.phase = PushPhase::Pushed;
        Ok(())
    }

    /// `R_b`: reverse-push layers `T-1 … 0`, then remove `b`.
    pub fn run_reverse(&mut self, b: u64) -> Result<()> {
        for layer in (0..self.layers).rev() {
            self.layer_push(layer, true)?;
        }
        self.phase = PushPhase::Clean;
        self.inject(b, Sign::Minus)
    }

    fn key_before(&self, layer: usize, v: Vertex, cursor: (usize, usize)) -> bool {
        (layer, self.schedule.key(v)) < cursor
    }

    fn is_shifted(&self, layer: usize, v: Vertex) -> bool {
        match self.shift {
            ShiftState::Unshifted => false,
            ShiftState::Shifted => true,
            ShiftState::Shifting(l, k) => self.key_before(layer, v, (l, k)),
            ShiftState::Unshifting(l, k) => !self.key_before(layer, v, (l, k)),
        }
    }

    /// Adds `beta` (mod `2^ℓ`) to every scheduled register of every layer.
    pub fn shift_scheduled(&mut self, beta: u64) -> Result<()> {
        self.beta = beta;
        self.walk_scheduled(|this, layer, v| {
            let idx = this.register_index(layer, v);
            this.regs.shift(idx, beta)?;
            this.shift = ShiftState::Shifting(layer, this.schedule.key(v) + 1);
            Ok(())
        })?;
        self.shift = ShiftState::Shifted;
        Ok(())
    }

    /// Inverse of [`Self::shift_scheduled`].
    pub fn unshift_scheduled(&mut self) -> Result<()> {
        let beta = self.beta;
        self.walk_scheduled(|this, layer, v| {
            let idx = this.register_index(layer, v);
            this.regs.unshift(idx, beta)?;
            this.shift = ShiftState::Unshifting(layer, this.schedule.key(v) + 1);
            Ok(())
        })?;
        self.shift = ShiftState::Unshifted;
        self.beta = 0;
        Ok(())
    }

    fn walk_scheduled<F>(&mut self, mut step: F) -> Result<()>
    where
        F: FnMut(&mut Self, usize, Vertex) -> Result<()>,
    {
        for layer in 0..=self.layers {
            let mut cursor = self.schedule.next(None);
            while let Some(v) = cursor {
                step(self, layer, v)?;
                self.ops += 1;
                self.pause();
                cursor = self.schedule.next(Some(v));
            }
        }
        Ok(())
    }

    /// Whether every scheduled register is valid for the current modulus.
    pub fn scheduled_valid(&mut self) -> Result<bool> {
        for layer in 0..=self.layers {
            let mut cursor = self.schedule.next(None);
            while let Some(v) = cursor {
                self.ops += 1;
                if !self.regs.is_valid(self.register_index(layer, v))? {
                    return Ok(false);
                }
                cursor = self.schedule.next(Some(v));
            }
        }
        Ok(true)
    }

    /// In-edge indices of `v` whose push is currently reflected in `R_(layer,v)`.
    fn applied_edges(&self, layer: usize, v: Vertex) -> Range<usize> {
        let deg = self.graph.indeg(v);
        if layer == 0 {
            return 0..0;
        }
        let key = self.schedule.key(v);
        match self.phase {
            PushPhase::Clean => 0..0,
            PushPhase::Pushed => 0..deg,
            PushPhase::Forward {
                layer: p,
                key: k,
                edge,
            } => {
                if layer <= p {
                    0..deg
                } else if layer > p + 1 || key > k {
                    0..0
                } else if key == k {
                    0..edge.min(deg)
                } else {
                    0..deg
                }
            }
            PushPhase::Reverse {
                layer: p,
                key: k,
                edge,
            } => {
                if layer <= p {
                    0..deg
                } else if layer > p + 1 || key < k {
                    0..0
                } else if key == k {
                    edge.min(deg)..deg
                } else {
                    0..deg
                }
            }
        }
    }

    /// The original value of `R_(layer,v)`, recovered from its current value
    /// and the current values of its in-neighbors one layer down. Reads only.
    pub fn revert_query(&self, layer: usize, v: Vertex) -> Result<u64> {
        let idx = self.register_index(layer, v);
        let current = self.regs.value(idx)?;
        if !self.schedule.contains(v) {
            return Ok(current);
        }
        let applied = self.applied_edges(layer, v);
        let injected = if layer == 0 && v == self.s {
            self.injected
        } else {
            0
        };
        let width = self.regs.width();
        let shifted = if applied.is_empty() && injected == 0 {
            current
        } else {
            match self.regs.modulus() {
                Modulus::Residue(q) => {
                    let mut sum = injected as u128 % q as u128;
                    for j in applied {
                        let u = self.graph.innbr(v, j).expect("in-neighbor below in-degree");
                        sum += self.regs.residue(self.register_index(layer - 1, u))? as u128;
                    }
                    let (a, b) = (current / q, (current % q) as u128);
                    let q128 = q as u128;
                    a * q + ((b + q128 - sum % q128) % q128) as u64
                }
                Modulus::PowerOfTwo => {
                    let mut value = current.wrapping_sub(injected);
                    for j in applied {
                        let u = self.graph.innbr(v, j).expect("in-neighbor below in-degree");
                        value = value.wrapping_sub(self.regs.value(self.register_index(layer - 1, u))?);
                    }
                    value & width_mask(width)
                }
            }
        };
        if self.is_shifted(layer, v) {
            Ok(shifted.wrapping_sub(self.beta) & width_mask(width))
        } else {
            Ok(shifted)
        }
    }
}

impl<G: GraphOracle, S: VertexSchedule> RevertQuery for PushStateLayered<'_, '_, G, S> {
    fn original_register(&self, layer: usize, v: Vertex) -> Result<u64> {
        self.revert_query(layer, v)
    }

    fn original_bit(&self, tape_index: usize) -> Result<bool> {
        match self.regs.locate(tape_index) {
            Some((idx, bit)) => {
                let (layer, v) = (idx / self.n, idx % self.n);
                if layer > self.layers {
                    return Ok(self.regs.tape().bit(tape_index));
                }
                Ok((self.revert_query(layer, v)? >> bit) & 1 == 1)
            }
            None => Ok(self.regs.tape().bit(tape_index)),
        }
    }

    fn current_tape(&self) -> &CatalyticTape {
        self.regs.tape()
    }
}

/// Two banks of registers `R_(σ,v)`, indexed `σ·n + v`.
pub struct PushStateParity<'a, 't, G> {
    graph: G,
    n: usize,
    layers: usize,
    s: Vertex,
    t: Vertex,
    regs: &'a mut RegisterFile<'t>,
    meter: &'a mut WorkspaceMeter,
    ops: u64,
    charged: u64,
}

impl<'a, 't, G: GraphOracle> PushStateParity<'a, 't, G> {
    pub fn new(
        graph: G,
        s: Vertex,
        t: Vertex,
        layers: usize,
        regs: &'a mut RegisterFile<'t>,
        meter: &'a mut WorkspaceMeter,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        check_vertex(n, s)?;
        check_vertex(n, t)?;
        if regs.count() < 2 * n {
            return Err(ConnectivityError::RegisterCount {
                need: 2 * n,
                have: regs.count(),
            });
        }
        // phase counter, parity, target, in-edge index, source, injected amount
        let charged = meter.charge_vars(&[
            layers as u128 + 1,
            2,
            n as u128,
            n as u128 + 3,
            n as u128,
            2,
        ])?;
        Ok(PushStateParity {
            graph,
            n,
            layers,
            s,
            t,
            regs,
            meter,
            ops: 0,
            charged,
        })
    }

    pub fn register_index(&self, parity: usize, v: Vertex) -> usize {
        parity * self.n + v
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn registers(&self) -> &RegisterFile<'t> {
        self.regs
    }

    pub fn set_modulus(&mut self, modulus: Modulus) -> Result<()> {
        self.regs.reconfigure(modulus)?;
        Ok(())
    }

    pub fn finish(self) -> Result<u64> {
        self.meter.release(self.charged)?;
        Ok(self.ops)
    }

    /// Phase `phase` reads bank `σ = phase mod 2` and accumulates into the
    /// other bank: `R_(¬σ,v) ± = R_(σ,u)` for the dummy edge `(v,v)` and
    /// every in-edge `(u,v)`.
    pub fn phase_push(&mut self, phase: usize, reverse: bool) -> Result<()> {
        let sigma = phase % 2;
        let sign = if reverse { Sign::Minus } else { Sign::Plus };
        for v in 0..self.n {
            let dst = self.register_index(1 - sigma, v);
            self.regs.reg_add_reg(dst, self.register_index(sigma, v), sign)?;
            self.ops += 1;
            for j in 0..self.graph.indeg(v) {
                let u = self.graph.innbr(v, j).expect("in-neighbor below in-degree");
                self.regs.reg_add_reg(dst, self.register_index(sigma, u), sign)?;
                self.ops += 1;
            }
        }
        Ok(())
    }

    pub fn run_forward(&mut self, b: u64) -> Result<()> {
        let src = self.register_index(0, self.s);
        self.regs.reg_add_mod(src, b)?;
        self.ops += 1;
        for phase in 0..self.layers {
            self.phase_push(phase, false)?;
        }
        Ok(())
    }

    pub fn run_reverse(&mut self, b: u64) -> Result<()> {
        for phase in (0..self.layers).rev() {
            self.phase_push(phase, true)?;
        }
        let src = self.register_index(0, self.s);
        self.regs.reg_sub_mod(src, b)?;
        self.ops += 1;
        Ok(())
    }

    pub fn shift_all(&mut self, beta: u64) {
        self.regs.shift_all(beta);
        self.ops += 2 * self.n as u64;
    }

    pub fn unshift_all(&mut self, beta: u64) {
        self.regs.unshift_all(beta);
        self.ops += 2 * self.n as u64;
    }

    pub fn all_valid(&mut self) -> Result<bool> {
        for idx in 0..2 * self.n {
            self.ops += 1;
            if !self.regs.is_valid(idx)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A register program with a push sequence, its reverse, and one output
/// register whose `P_1` − `P_0` difference is the answer.
trait PushProgram {
    fn forward(&mut self, b: u64) -> Result<()>;
    fn reverse(&mut self, b: u64) -> Result<()>;
    fn modulus(&self) -> Modulus;
    fn width(&self) -> u32;
    fn output_residue(&self) -> Result<u64>;
    fn output_field(&self, offset: u32, len: u32) -> Result<u64>;
    fn meter(&mut self) -> &mut WorkspaceMeter;
}

impl<G: GraphOracle, S: VertexSchedule> PushProgram for PushStateLayered<'_, '_, G, S> {
    fn forward(&mut self, b: u64) -> Result<()> {
        self.run_forward(b)
    }
    fn reverse(&mut self, b: u64) -> Result<()> {
        self.run_reverse(b)
    }
    fn modulus(&self) -> Modulus {
        self.regs.modulus()
    }
    fn width(&self) -> u32 {
        self.regs.width()
    }
    fn output_residue(&self) -> Result<u64> {
        Ok(self.regs.residue(self.register_index(self.layers, self.t))?)
    }
    fn output_field(&self, offset: u32, len: u32) -> Result<u64> {
        Ok(self
            .regs
            .read_field(self.register_index(self.layers, self.t), offset, len)?)
    }
    fn meter(&mut self) -> &mut WorkspaceMeter {
        self.meter
    }
}

impl<G: GraphOracle> PushProgram for PushStateParity<'_, '_, G> {
    fn forward(&mut self, b: u64) -> Result<()> {
        self.run_forward(b)
    }
    fn reverse(&mut self, b: u64) -> Result<()> {
        self.run_reverse(b)
    }
    fn modulus(&self) -> Modulus {
        self.regs.modulus()
    }
    fn width(&self) -> u32 {
        self.regs.width()
    }
    fn output_residue(&self) -> Result<u64> {
        Ok(self
            .regs
            .residue(self.register_index(self.layers % 2, self.t))?)
    }
    fn output_field(&self, offset: u32, len: u32) -> Result<u64> {
        Ok(self
            .regs
            .read_field(self.register_index(self.layers % 2, self.t), offset, len)?)
    }
    fn meter(&mut self) -> &mut WorkspaceMeter {
        self.meter
    }
}

/// Computes `(output after P_1) − (output after P_0)` modulo `q`.
///
/// Residue files hold `q < 2^64`, so the two residues fit in workspace and
/// one round of `P_0, R_0, P_1, R_1` suffices. Power-of-two files may be
/// wider than any workspace word; their difference is produced
/// `group_bits` bits at a time, least significant group first, re-running
/// the four sequences per group and carrying one borrow bit. With
/// `stop_at_nonzero`, the first nonzero group ends the computation (the
/// returned value is then only known to be nonzero).
fn extract_difference<P: PushProgram>(
    program: &mut P,
    group_bits: u32,
    stop_at_nonzero: bool,
) -> Result<BigUint> {
    match program.modulus() {
        Modulus::Residue(q) => {
            let charged = program.meter().charge_vars(&[q as u128, q as u128])?;
            program.forward(0)?;
            let b0 = program.output_residue()?;
            program.reverse(0)?;
            program.forward(1)?;
            let b1 = program.output_residue()?;
            program.reverse(1)?;
            program.meter().release(charged)?;
            Ok(BigUint::from((b1 + q - b0) % q))
        }
        Modulus::PowerOfTwo => {
            let width = program.width();
            let group_bits = group_bits.clamp(1, 63);
            let groups = width.div_ceil(group_bits);
            let digit_range = 1u128 << group_bits;
            // two digits, borrow, group index
            let charged = program
                .meter()
                .charge_vars(&[digit_range, digit_range, 2, groups as u128 + 1])?;
            let mut result = BigUint::zero();
            let mut borrow = 0u64;
            for group in 0..groups {
                let offset = group * group_bits;
                let len = group_bits.min(width - offset);
                program.forward(0)?;
                let d0 = program.output_field(offset, len)?;
                program.reverse(0)?;
                program.forward(1)?;
                let d1 = program.output_field(offset, len)?;
                program.reverse(1)?;
                let sub = d0 + borrow;
                let (digit, next_borrow) = if d1 >= sub {
                    (d1 - sub, 0)
                } else {
                    (d1 + (1u64 << len) - sub, 1)
                };
                borrow = next_borrow;
                // The digits go straight to the output; they are not workspace.
                result += BigUint::from(digit) << offset;
                if stop_at_nonzero && digit != 0 {
                    break;
                }
            }
            program.meter().release(charged)?;
            Ok(result)
        }
    }
}

/// Default digit-group width for wide readouts: `⌈log₂(n + m + 2)⌉` bits.
fn group_bits_for<G: GraphOracle>(g: &G) -> u32 {
    bits_for_range((g.vertex_count() + g.edge_count() + 2) as u128)
}

/// Output of a bare register program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramOutput {
    pub value: BigUint,
    /// Register operations performed.
    pub ops: u64,
}

/// `(#length-T s→t walks) mod q`, on registers `R_(i,v)`, `i ∈ 0..=T`.
///
/// `regs` must hold at least `(T+1)·n` registers, all valid for its
/// modulus. The registers are restored on return.
pub fn st_count_mod<G: GraphOracle>(
    g: &G,
    s: Vertex,
    t: Vertex,
    steps: usize,
    regs: &mut RegisterFile<'_>,
    meter: &mut WorkspaceMeter,
) -> Result<ProgramOutput> {
    let n = g.vertex_count();
    let mut state = PushStateLayered::new(g, AllVertices(n), s, t, steps, regs, meter)?;
    let value = extract_difference(&mut state, group_bits_for(g), false)?;
    let ops = state.finish()?;
    Ok(ProgramOutput { value, ops })
}

/// `ζ_{G,s,t} mod q` over two register banks `R_(σ,v)`.
///
/// `ζ` is nonzero exactly when `g` has an s→t path of length at most `T`.
/// `regs` must hold at least `2n` registers, all valid for its modulus.
pub fn st_nonzero_mod<G: GraphOracle>(
    g: &G,
    s: Vertex,
    t: Vertex,
    steps: usize,
    regs: &mut RegisterFile<'_>,
    meter: &mut WorkspaceMeter,
) -> Result<ProgramOutput> {
    let mut state = PushStateParity::new(g, s, t, steps, regs, meter)?;
    let value = extract_difference(&mut state, group_bits_for(g), false)?;
    let ops = state.finish()?;
    Ok(ProgramOutput { value, ops })
}

/// Register layout a driver needs on the catalytic tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    pub registers: usize,
    pub width: u32,
    /// Register count of the layered program's `(T+1)` layers, if layered.
    pub steps: usize,
}

impl RegisterLayout {
    pub fn tape_bits(&self) -> usize {
        self.registers * self.width as usize
    }
}

/// Largest in-degree of `g` plus one for the dummy self-edge.
fn max_indeg_with_dummy<G: GraphOracle>(g: &G) -> usize {
    (0..g.vertex_count()).map(|v| g.indeg(v)).max().unwrap_or(0) + 1
}

fn two_bank_bounds<G: GraphOracle>(g: &G, t: Vertex) -> PathBoundConstants {
    let n = g.vertex_count();
    let looped = add_virtual_self_loop(g, t);
    let base = n.max(max_indeg_with_dummy(&looped));
    PathBoundConstants::new(n, base, n)
}

/// Layout of [`connect_det`]: `2n` registers of `⌈log₂ B⌉` bits.
pub fn det_layout<G: GraphOracle>(g: &G, t: Vertex) -> RegisterLayout {
    let n = g.vertex_count();
    RegisterLayout {
        registers: 2 * n,
        width: two_bank_bounds(g, t).zeta_bits.max(1),
        steps: n,
    }
}

/// Layout of [`connect_rand`]: `2n` registers of `5⌈log₂ P⌉` bits.
pub fn rand_layout<G: GraphOracle>(g: &G, t: Vertex) -> RegisterLayout {
    let n = g.vertex_count();
    let p = two_bank_bounds(g, t).zeta_bits.max(2);
    RegisterLayout {
        registers: 2 * n,
        width: 5 * ceil_log2(&BigUint::from(p)).max(1),
        steps: n,
    }
}

/// Length bound for the degree-reduced graph: a shortest s→t path has at
/// most `n-1` edges, each expanding to at most `⌊log₂(2d-1)⌋` edges through
/// the in-tree of its head, `d` the largest in-degree.
pub fn reduced_path_length<G: GraphOracle>(g: &G) -> usize {
    let n = g.vertex_count();
    let dmax = (0..n).map(|v| g.indeg(v)).max().unwrap_or(0);
    let hops = if dmax <= 1 {
        1
    } else {
        (usize::BITS - 1 - (2 * dmax - 1).leading_zeros()) as usize
    };
    (n.saturating_sub(1) * hops.max(1)).max(1)
}

/// Layout of [`connect_revertible`] over the degree-reduced view.
pub fn revertible_layout<G: GraphOracle>(g: &G) -> RegisterLayout {
    let view = reduce_degree(g);
    let n_prime = view.vertex_count();
    let steps = reduced_path_length(g);
    let p = PathBoundConstants::new(n_prime, n_prime, steps).path_bits.max(2);
    RegisterLayout {
        registers: (steps + 1) * n_prime,
        width: 5 * ceil_log2(&BigUint::from(p)).max(1),
        steps,
    }
}

/// Settings for the randomized drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizedConfig {
    /// Iterations are `⌈kappa · log₂ n⌉`.
    pub kappa: f64,
    pub seed: u64,
}

impl Default for RandomizedConfig {
    fn default() -> Self {
        RandomizedConfig {
            kappa: DEFAULT_KAPPA,
            seed: 0,
        }
    }
}

pub const DEFAULT_KAPPA: f64 = 8.0;

pub fn iteration_count(n: usize, kappa: f64) -> usize {
    ((kappa * (n.max(2) as f64).log2()).ceil() as usize).max(1)
}

fn ensure_tape(tape: &CatalyticTape, layout: &RegisterLayout) -> Result<()> {
    if tape.len() < layout.tape_bits() {
        Err(ConnectivityError::TapeTooSmall {
            need: layout.tape_bits(),
            have: tape.len(),
        })
    } else {
        Ok(())
    }
}

fn trivial_path(tape: &CatalyticTape) -> ConnectivityAnswer {
    let clock = RunClock::start(tape);
    let mut metrics = RunMetrics {
        normalizations: vec!["s = t: empty path".to_owned()],
        ..RunMetrics::default()
    };
    clock.finish(tape, &mut metrics);
    ConnectivityAnswer {
        verdict: Verdict::Path,
        iterations: 0,
        metrics,
    }
}

/// Deterministic connectivity: two-bank pushes with `q = 2^ℓ`, `ℓ` large
/// enough that `ζ` never wraps, so every register is valid as it stands.
pub fn connect_det<G: GraphOracle>(
    g: &G,
    s: Vertex,
    t: Vertex,
    tape: &mut CatalyticTape,
) -> Result<ConnectivityAnswer> {
    let n = g.vertex_count();
    check_vertex(n, s)?;
    check_vertex(n, t)?;
    if s == t {
        return Ok(trivial_path(tape));
    }
    let layout = det_layout(g, t);
    ensure_tape(tape, &layout)?;
    let clock = RunClock::start(tape);
    let looped = add_virtual_self_loop(g, t);
    let mut meter = WorkspaceMeter::new();
    // s, t, T, ℓ
    let charged = meter.charge_vars(&[n as u128, n as u128, n as u128 + 1, 1 << 16])?;

    let mut regs = RegisterFile::allocate(tape, 0, layout.registers, layout.width, Modulus::PowerOfTwo)?;
    let mut state = PushStateParity::new(&looped, s, t, n, &mut regs, &mut meter)?;
    let nonzero = !extract_difference(&mut state, group_bits_for(&looped), true)?.is_zero();
    let ops = state.finish()?;
    drop(regs);
    meter.release(charged)?;

    let mut metrics = RunMetrics {
        elapsed_steps: ops,
        workspace_peak_bits: meter.peak_bits(),
        catalytic_bits: layout.tape_bits() as u64,
        normalizations: vec![format!("virtual self-loop at t = {t}")],
        ..RunMetrics::default()
    };
    clock.finish(tape, &mut metrics);
    Ok(ConnectivityAnswer {
        verdict: if nonzero { Verdict::Path } else { Verdict::NoPath },
        iterations: 0,
        metrics,
    })
}

/// Randomized connectivity: two-bank pushes modulo random small `q`, with
/// registers made valid by a random shift `β`.
///
/// Never reports a path that does not exist. Aborts (restoring the tape)
/// if a shift leaves some register invalid.
pub fn connect_rand<G: GraphOracle>(
    g: &G,
    s: Vertex,
    t: Vertex,
    tape: &mut CatalyticTape,
    config: RandomizedConfig,
) -> Result<ConnectivityAnswer> {
    let n = g.vertex_count();
    check_vertex(n, s)?;
    check_vertex(n, t)?;
    if s == t {
        return Ok(trivial_path(tape));
    }
    let layout = rand_layout(g, t);
    if layout.width > 64 {
        return Err(ConnectivityError::WidthTooLarge(layout.width));
    }
    ensure_tape(tape, &layout)?;
    let clock = RunClock::start(tape);
    let looped = add_virtual_self_loop(g, t);
    let p = two_bank_bounds(g, t).zeta_bits.max(2) as u64;
    let q_range = 2..p * p;
    let iterations = iteration_count(n, config.kappa);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let full = 1u128 << layout.width;

    let mut meter = WorkspaceMeter::new();
    // s, t, iteration, ℓ, q, d, β
    let charged = meter.charge_vars(&[
        n as u128,
        n as u128,
        iterations as u128 + 1,
        65,
        (p * p) as u128,
        full,
        full,
    ])?;

    let mut regs = RegisterFile::allocate(tape, 0, layout.registers, layout.width, Modulus::PowerOfTwo)?;
    let mut state = PushStateParity::new(&looped, s, t, n, &mut regs, &mut meter)?;
    let mut verdict = Verdict::NoPath;
    let mut started = 0;
    for _ in 0..iterations {
        started += 1;
        let q = rng.gen_range(q_range.clone());
        let beta = rng.gen_range(0..full) as u64;
        state.set_modulus(Modulus::Residue(q))?;
        state.shift_all(beta);
        if !state.all_valid()? {
            state.unshift_all(beta);
            verdict = Verdict::Abort;
            break;
        }
        let zeta = extract_difference(&mut state, 0, false)?;
        state.unshift_all(beta);
        if !zeta.is_zero() {
            verdict = Verdict::Path;
            break;
        }
    }
    let ops = state.finish()?;
    drop(regs);
    meter.release(charged)?;

    let mut metrics = RunMetrics {
        elapsed_steps: ops,
        workspace_peak_bits: meter.peak_bits(),
        catalytic_bits: layout.tape_bits() as u64,
        aborted: verdict == Verdict::Abort,
        normalizations: vec![format!("virtual self-loop at t = {t}")],
        ..RunMetrics::default()
    };
    clock.finish(tape, &mut metrics);
    Ok(ConnectivityAnswer {
        verdict,
        iterations: started,
        metrics,
    })
}

/// Locally revertible randomized connectivity.
///
/// Runs the layered program on the degree-reduced graph (plus a self-loop
/// at `t`), touching only registers of non-isolated vertices and `s`, `t`.
/// At every pause point `hook` may ask for original tape bits; each answer
/// costs a constant number of register reads since the reduced graph has
/// in-degree at most 3.
pub fn connect_revertible<G: GraphOracle>(
    g: &G,
    s: Vertex,
    t: Vertex,
    tape: &mut CatalyticTape,
    config: RandomizedConfig,
    hook: Option<&mut dyn PauseHook>,
) -> Result<ConnectivityAnswer> {
    let n = g.vertex_count();
    check_vertex(n, s)?;
    check_vertex(n, t)?;
    if s == t {
        return Ok(trivial_path(tape));
    }
    let layout = revertible_layout(g);
    if layout.width > 64 {
        return Err(ConnectivityError::WidthTooLarge(layout.width));
    }
    ensure_tape(tape, &layout)?;
    let clock = RunClock::start(tape);

    let view = reduce_degree(g);
    let looped = add_virtual_self_loop(&view, t);
    let schedule = RelevantVertices::new(&view, s, t);
    let n_prime = view.vertex_count();
    let p = PathBoundConstants::new(n_prime, n_prime, layout.steps)
        .path_bits
        .max(2) as u64;
    let q_range = 2..p * p;
    let iterations = iteration_count(n, config.kappa);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let full = 1u128 << layout.width;

    let mut meter = WorkspaceMeter::new();
    // s, t, iteration, ℓ, q, d, β
    let charged = meter.charge_vars(&[
        n as u128,
        n as u128,
        iterations as u128 + 1,
        65,
        (p * p) as u128,
        full,
        full,
    ])?;

    let mut touched = 0u64;
    let mut cursor = schedule.next(None);
    while let Some(v) = cursor {
        touched += 1;
        cursor = schedule.next(Some(v));
    }
    touched *= (layout.steps as u64 + 1) * layout.width as u64;

    let mut regs = RegisterFile::allocate(tape, 0, layout.registers, layout.width, Modulus::PowerOfTwo)?;
    let mut state =
        PushStateLayered::new(&looped, schedule, s, t, layout.steps, &mut regs, &mut meter)?;
    if let Some(hook) = hook {
        state = state.with_hook(hook);
    }
    let mut verdict = Verdict::NoPath;
    let mut started = 0;
    for _ in 0..iterations {
        started += 1;
        let q = rng.gen_range(q_range.clone());
        let beta = rng.gen_range(0..full) as u64;
        state.set_modulus(Modulus::Residue(q))?;
        state.shift_scheduled(beta)?;
        if !state.scheduled_valid()? {
            state.unshift_scheduled()?;
            verdict = Verdict::Abort;
            break;
        }
        let count = extract_difference(&mut state, 0, false)?;
        state.unshift_scheduled()?;
        if !count.is_zero() {
            verdict = Verdict::Path;
            break;
        }
    }
    let ops = state.finish()?;
    drop(regs);
    meter.release(charged)?;

    let mut metrics = RunMetrics {
        elapsed_steps: ops,
        workspace_peak_bits: meter.peak_bits(),
        catalytic_bits: touched,
        aborted: verdict == Verdict::Abort,
        normalizations: vec![
            "in-degree reduced to 2".to_owned(),
            format!("virtual self-loop at t = {t}"),
        ],
        ..RunMetrics::default()
    };
    clock.finish(tape, &mut metrics);
    Ok(ConnectivityAnswer {
        verdict,
        iterations: started,
        metrics,
    })
}
