//! Query-access directed graphs.
//!
//! Every algorithm in this crate reads its input through [`GraphOracle`]:
//! degree queries plus "i-th in/out-neighbor" queries. Transformations
//! ([`DegreeReducedView`], [`LayeredLiftView`], [`SelfLoopView`],
//! [`SinkLoopView`]) are lazy wrappers that answer queries about the
//! transformed graph by querying the base graph; none of them materializes
//! anything.

use std::cell::Cell;
use std::fmt;

use thiserror::Error;

pub type Vertex = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("edge ({u}, {v}) appears more than once")]
    DuplicateEdge { u: Vertex, v: Vertex },
    #[error("vertex {v} out of range for a graph on {n} vertices")]
    VertexOutOfRange { v: Vertex, n: usize },
    #[error("header declares {declared} edges but {found} were listed")]
    EdgeCountMismatch { declared: usize, found: usize },
    #[error("missing `n m` header line")]
    MissingHeader,
}

/// Oracle access to a digraph on vertices `0..n`.
///
/// `innbr`/`outnbr` return `None` (the absent sentinel) when `i` is not
/// below the corresponding degree.
pub trait GraphOracle {
    fn vertex_count(&self) -> usize;
    fn indeg(&self, v: Vertex) -> usize;
    fn outdeg(&self, v: Vertex) -> usize;
    fn innbr(&self, v: Vertex, i: usize) -> Option<Vertex>;
    fn outnbr(&self, v: Vertex, i: usize) -> Option<Vertex>;

    /// Number of edges, by summing out-degrees.
    fn edge_count(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.outdeg(v)).sum()
    }

    fn is_sink(&self, v: Vertex) -> bool {
        self.outdeg(v) == 0
    }
}

impl<G: GraphOracle + ?Sized> GraphOracle for &G {
    fn vertex_count(&self) -> usize {
        (**self).vertex_count()
    }
    fn indeg(&self, v: Vertex) -> usize {
        (**self).indeg(v)
    }
    fn outdeg(&self, v: Vertex) -> usize {
        (**self).outdeg(v)
    }
    fn innbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        (**self).innbr(v, i)
    }
    fn outnbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        (**self).outnbr(v, i)
    }
    fn edge_count(&self) -> usize {
        (**self).edge_count()
    }
}

/// In-memory adjacency-list graph. Out-lists are sorted by target and
/// in-lists by source, so neighbor indices are deterministic.
#[derive(Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    out: Vec<Vec<Vertex>>,
    inn: Vec<Vec<Vertex>>,
    m: usize,
}

impl fmt::Debug for AdjacencyGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdjacencyGraph")
            .field("n", &self.out.len())
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl AdjacencyGraph {
    pub fn empty(n: usize) -> Self {
        AdjacencyGraph {
            out: vec![Vec::new(); n],
            inn: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Builds a graph, rejecting duplicate edges and out-of-range endpoints.
    /// Self-loops are accepted.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::VertexOutOfRange { v: x, n });
                }
            }
            g.out[u].push(v);
            g.inn[v].push(u);
            g.m += 1;
        }
        for (u, list) in g.out.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge { u, v: w[0] });
            }
        }
        g.inn.iter_mut().for_each(|list| list.sort_unstable());
        Ok(g)
    }

    /// Parses the text graph format: optional `#` comment lines, a header
    /// line `n m`, then exactly `m` lines `u v`. Blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(GraphError::MissingHeader)?;
        let (n, m) = parse_pair(hline, header)?;
        let mut edges = Vec::with_capacity(m);
        for (line, text) in lines {
            let (u, v) = parse_pair(line, text)?;
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::VertexOutOfRange { v: x, n });
                }
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(GraphError::EdgeCountMismatch {
                declared: m,
                found: edges.len(),
            });
        }
        Self::from_edges(n, edges)
    }

    /// Serializes to the text format; `parse(g.to_text()) == g`.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.out.len(), self.m);
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u, v)))
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.out[u].binary_search(&v).is_ok()
    }

    pub fn out_neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.out[v]
    }

    pub fn in_neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.inn[v]
    }

    /// Copies any oracle into adjacency lists.
    pub fn materialize<G: GraphOracle>(g: &G) -> Result<Self, GraphError> {
        let n = g.vertex_count();
        let edges = (0..n).flat_map(|u| (0..g.outdeg(u)).filter_map(move |i| g.outnbr(u, i).map(|v| (u, v))));
        Self::from_edges(n, edges.collect::<Vec<_>>())
    }
}

fn parse_pair(line: usize, text: &str) -> Result<(usize, usize), GraphError> {
    let mut it = text.split_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let tok = it.next().ok_or_else(|| GraphError::Malformed {
            line,
            msg: format!("expected two integers, got {text:?}"),
        })?;
        tok.parse().map_err(|_| GraphError::Malformed {
            line,
            msg: format!("{tok:?} is not a non-negative integer"),
        })
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(GraphError::Malformed {
            line,
            msg: format!("trailing tokens in {text:?}"),
        });
    }
    Ok(pair)
}

impl GraphOracle for AdjacencyGraph {
    fn vertex_count(&self) -> usize {
        self.out.len()
    }
    fn indeg(&self, v: Vertex) -> usize {
        self.inn[v].len()
    }
    fn outdeg(&self, v: Vertex) -> usize {
        self.out[v].len()
    }
    fn innbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        self.inn[v].get(i).copied()
    }
    fn outnbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        self.out[v].get(i).copied()
    }
    fn edge_count(&self) -> usize {
        self.m
    }
}

/// Counts oracle queries made through it.
#[derive(Debug)]
pub struct CountingOracle<G> {
    inner: G,
    queries: Cell<u64>,
}

impl<G: GraphOracle> CountingOracle<G> {
    pub fn new(inner: G) -> Self {
        CountingOracle {
            inner,
            queries: Cell::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.queries.get()
    }

    fn tick(&self) {
        self.queries.set(self.queries.get() + 1);
    }
}

impl<G: GraphOracle> GraphOracle for CountingOracle<G> {
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }
    fn indeg(&self, v: Vertex) -> usize {
        self.tick();
        self.inner.indeg(v)
    }
    fn outdeg(&self, v: Vertex) -> usize {
        self.tick();
        self.inner.outdeg(v)
    }
    fn innbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        self.tick();
        self.inner.innbr(v, i)
    }
    fn outnbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        self.tick();
        self.inner.outnbr(v, i)
    }
}

/// `G` with one extra self-loop at `t`, appended as the last in- and
/// out-neighbor of `t`.
#[derive(Debug, Clone)]
pub struct SelfLoopView<G> {
    base: G,
    t: Vertex,
}

pub fn add_virtual_self_loop<G: GraphOracle>(base: G, t: Vertex) -> SelfLoopView<G> {
    assert!(t < base.vertex_count(), "self-loop target out of range");
    SelfLoopView { base, t }
}

impl<G: GraphOracle> SelfLoopView<G> {
    pub fn base(&self) -> &G {
        &self.base
    }

    pub fn loop_vertex(&self) -> Vertex {
        self.t
    }
}

impl<G: GraphOracle> GraphOracle for SelfLoopView<G> {
    fn vertex_count(&self) -> usize {
        self.base.vertex_count()
    }
    fn indeg(&self, v: Vertex) -> usize {
        self.base.indeg(v) + usize::from(v == self.t)
    }
    fn outdeg(&self, v: Vertex) -> usize {
        self.base.outdeg(v) + usize::from(v == self.t)
    }
    fn innbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        let d = self.base.indeg(v);
        match i.cmp(&d) {
            std::cmp::Ordering::Less => self.base.innbr(v, i),
            std::cmp::Ordering::Equal if v == self.t => Some(v),
            _ => None,
        }
    }
    fn outnbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        let d = self.base.outdeg(v);
        match i.cmp(&d) {
            std::cmp::Ordering::Less => self.base.outnbr(v, i),
            std::cmp::Ordering::Equal if v == self.t => Some(v),
            _ => None,
        }
    }
    fn edge_count(&self) -> usize {
        self.base.edge_count() + 1
    }
}

/// `G` with a self-loop added at every sink, making every walk infinite.
#[derive(Debug, Clone)]
pub struct SinkLoopView<G> {
    base: G,
}

pub fn loop_sinks<G: GraphOracle>(base: G) -> SinkLoopView<G> {
    SinkLoopView { base }
}

impl<G: GraphOracle> SinkLoopView<G> {
    /// Number of base-graph sinks that received a loop.
    pub fn loops_added(&self) -> usize {
        (0..self.base.vertex_count())
            .filter(|&v| self.base.outdeg(v) == 0)
            .count()
    }
}

impl<G: GraphOracle> GraphOracle for SinkLoopView<G> {
    fn vertex_count(&self) -> usize {
        self.base.vertex_count()
    }
    fn indeg(&self, v: Vertex) -> usize {
        self.base.indeg(v) + usize::from(self.base.outdeg(v) == 0)
    }
    fn outdeg(&self, v: Vertex) -> usize {
        self.base.outdeg(v).max(1)
    }
    fn innbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        let d = self.base.indeg(v);
        if i < d {
            self.base.innbr(v, i)
        } else if i == d && self.base.outdeg(v) == 0 {
            Some(v)
        } else {
            None
        }
    }
    fn outnbr(&self, v: Vertex, i: usize) -> Option<Vertex> {
        if self.base.outdeg(v) == 0 {
            (i == 0).then_some(v)
        } else {
            self.base.outnbr(v, i)
        }
    }
}

/// The acyclic unrolling of `G` over `T + 1` layers.
///
/// Vertex `(i, v)` is encoded as `i·n + v`; there is an edge
/// `(i, u) → (i+1, v)` for every edge `(u, v)` of `G` and `i < T`.
#[derive(Debug, Clone)]
pub struct LayeredLiftView<G> {
    base: G,
    n: usize,
    steps: usize,
}

pub fn lift_layered<G: GraphOracle>(base: G, steps: usize) -> LayeredLiftView<G> {
    let n = base.vertex_count();
    LayeredLiftView { base, n, steps }
}

impl<G: GraphOracle> LayeredLiftView<G> {
    pub fn encode(&self, layer: usize, v: Vertex) -> Vertex {
        layer * self.n + v
    }

    pub fn decode(&self, x: Vertex) -> (usize, Vertex) {
        (x / self.n, x % self.n)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn base(&self) -> &G {
        &self.base
    }
}

impl<G: GraphOracle> GraphOracle for LayeredLiftView<G> {
    fn vertex_count(&self) -> usize {
        (self.steps + 1) * self.n
    }
    fn indeg(&self, x: Vertex) -> usize {
        let (layer, v) = self.decode(x);
        if layer == 0 {
            0
        } else {
            self.base.indeg(v)
        }
    }
    fn outdeg(&self, x: Vertex) -> usize {
        let (layer, v) = self.decode(x);
        if layer == self.steps {
            0
        } else {
            self.base.outdeg(v)
        }
    }
    fn innbr(&self, x: Vertex, i: usize) -> Option<Vertex> {
        let (layer, v) = self.decode(x);
        if layer == 0 {
            return None;
        }
        self.base.innbr(v, i).map(|u| self.encode(layer - 1, u))
    }
    fn outnbr(&self, x: Vertex, i: usize) -> Option<Vertex> {
        let (layer, v) = self.decode(x);
        if layer == self.steps {
            return None;
        }
        self.base.outnbr(v, i).map(|w| self.encode(layer + 1, w))
    }
    fn edge_count(&self) -> usize {
        self.base.edge_count() * self.steps
    }
}

/// `G` with every vertex of in-degree ≥ 2 replaced by a binary in-tree.
///
/// A vertex `v` with in-neighbors `u_0 < … < u_{d-1}` (`d ≥ 2`) becomes the
/// heap-indexed internal nodes `(v, 0) … (v, d-2)` with root `(v, 0)`. The
/// in-edges of `(v, i)` come from heap positions `k = 2i+1` and `k = 2i+2`:
/// position `k < d-1` is the internal node `(v, k)`, and position
/// `k ≥ d-1` is the leaf `(u_{k+1-d}, 0)`. Vertices with `d < 2` keep the
/// single node `(v, 0)` and their original in-edges. Node `(v, i)` is
/// encoded as `v + n·i`, so `(v, 0) = v` and the view has `n·(n-1)`
/// vertex ids, most of them isolated.
///
/// Live nodes are those with `i ≤ max(d-2, 0)`; every other id is isolated.
#[derive(Debug, Clone)]
pub struct DegreeReducedView<G> {
    base: G,
    n: usize,
}

pub fn reduce_degree<G: GraphOracle>(base: G) -> DegreeReducedView<G> {
    let n = base.vertex_count();
    debug_assert!((0..n).all(|v| base.indeg(v) <= n));
    DegreeReducedView { base, n }
}

impl<G: GraphOracle> DegreeReducedView<G> {
    pub fn base(&self) -> &G {
        &self.base
    }

    pub fn base_vertex_count(&self) -> usize {
        self.n
    }

    pub fn encode(&self, v: Vertex, i: usize) -> Vertex {
        v + self.n * i
    }

    pub fn decode(&self, x: Vertex) -> (Vertex, usize) {
        (x % self.n, x / self.n)
    }

    /// Largest live tree index for base vertex `v`.
    pub fn max_index(&self, v: Vertex) -> usize {
        self.base.indeg(v).saturating_sub(2)
    }

    fn live(&self, x: Vertex) -> Option<(Vertex, usize)> {
        if x >= self.vertex_count() {
            return None;
        }
        let (v, i) = self.decode(x);
        (i <= self.max_index(v)).then_some((v, i))
    }

    pub fn is_isolated(&self, x: Vertex) -> bool {
        match self.live(x) {
            None => true,
            Some((v, 0)) => self.base.indeg(v) == 0 && self.base.outdeg(v) == 0,
            Some(_) => false,
        }
    }

    /// Yields every non-isolated vertex once, grouped by base vertex and in
    /// ascending tree index within each group.
    pub fn enumerate_nonisolated(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.enumerate_live_where(|_| false)
    }

    /// Like [`Self::enumerate_nonisolated`] but also yields `(v, 0)` for
    /// every base vertex `v` with `keep(v)`.
    pub fn enumerate_live_where<'a, F>(&'a self, keep: F) -> impl Iterator<Item = Vertex> + 'a
    where
        F: Fn(Vertex) -> bool + 'a,
    {
        (0..self.n).flat_map(move |v| {
            let top = self.max_index(v);
            let keep_root = keep(v);
            (0..=top)
                .map(move |i| self.encode(v, i))
                .filter(move |&x| keep_root && x < self.n || !self.is_isolated(x))
        })
    }

    /// Out-neighbors of a view vertex by exhaustive search over every
    /// vertex's in-list, in lexicographic (target, in-index) order.
    ///
    /// Costs `Θ(n')` queries; the connectivity drivers never call it.
    fn scan_out(&self, x: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.vertex_count()).flat_map(move |y| {
            (0..self.indeg(y)).filter_map(move |j| (self.innbr(y, j) == Some(x)).then_some(y))
        })
    }
}

impl<G: GraphOracle> GraphOracle for DegreeReducedView<G> {
    fn vertex_count(&self) -> usize {
        self.n * self.n.saturating_sub(1).max(1)
    }

    fn indeg(&self, x: Vertex) -> usize {
        match self.live(x) {
            None => 0,
            Some((v, _)) => self.base.indeg(v).min(2),
        }
    }

    fn outdeg(&self, x: Vertex) -> usize {
        match self.live(x) {
            None => 0,
            Some((v, 0)) => self.base.outdeg(v),
            Some(_) => 1,
        }
    }

    fn innbr(&self, x: Vertex, j: usize) -> Option<Vertex> {
        let (v, i) = self.live(x)?;
        let d = self.base.indeg(v);
        if d < 2 {
            return if j < d {
                self.base.innbr(v, j).map(|u| self.encode(u, 0))
            } else {
                None
            };
        }
        if j >= 2 {
            return None;
        }
        let k = 2 * i + 1 + j;
        if k >= d - 1 {
            self.base.innbr(v, k + 1 - d).map(|u| self.encode(u, 0))
        } else {
            Some(self.encode(v, k))
        }
    }

    fn outnbr(&self, x: Vertex, j: usize) -> Option<Vertex> {
        let (v, i) = self.live(x)?;
        if i > 0 {
            // Internal node: its single out-edge goes to its heap parent.
            return (j == 0).then(|| self.encode(v, (i - 1) / 2));
        }
        self.scan_out(x).nth(j)
    }

    fn edge_count(&self) -> usize {
        self.base.edge_count() + (0..self.n).map(|v| self.base.indeg(v).saturating_sub(2)).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> AdjacencyGraph {
        AdjacencyGraph::parse("3 2\n0 1\n1 2").unwrap()
    }

    #[test]
    fn parses_path_graph() {
        let g = path3();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.outnbr(0, 0), Some(1));
        assert_eq!(g.innbr(2, 0), Some(1));
        assert_eq!(g.innbr(2, 1), None);
    }

    #[test]
    fn parses_isolated_vertices_and_comments() {
        let g = AdjacencyGraph::parse("# two lonely vertices\n2 0\n").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            AdjacencyGraph::parse("2 1\n0 5").unwrap_err(),
            GraphError::VertexOutOfRange { v: 5, n: 2 }
        );
        assert_eq!(
            AdjacencyGraph::parse("2 2\n0 1\n0 1").unwrap_err(),
            GraphError::DuplicateEdge { u: 0, v: 1 }
        );
        assert!(matches!(
            AdjacencyGraph::parse("2 1\n0 x"),
            Err(GraphError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            AdjacencyGraph::parse("2 2\n0 1"),
            Err(GraphError::EdgeCountMismatch { .. })
        ));
        assert_eq!(AdjacencyGraph::parse("# only\n").unwrap_err(), GraphError::MissingHeader);
    }

    #[test]
    fn in_lists_sorted_by_source() {
        let g = AdjacencyGraph::from_edges(4, [(3, 0), (1, 0), (2, 0)]).unwrap();
        let ins: Vec<_> = (0..3).map(|i| g.innbr(0, i).unwrap()).collect();
        assert_eq!(ins, vec![1, 2, 3]);
    }

    #[test]
    fn text_round_trip() {
        let g = AdjacencyGraph::from_edges(5, [(0, 1), (4, 4), (3, 1), (1, 3)]).unwrap();
        assert_eq!(AdjacencyGraph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn star_tree_reduction() {
        // u1..u4 = 0..3 feed v = 4.
        let g = AdjacencyGraph::from_edges(5, [(0, 4), (1, 4), (2, 4), (3, 4)]).unwrap();
        let view = reduce_degree(&g);
        let v = |i| view.encode(4, i);
        let leaf = |u| view.encode(u, 0);
        let ins = |x| (0..view.indeg(x)).map(|j| view.innbr(x, j).unwrap()).collect::<Vec<_>>();
        assert_eq!(ins(v(0)), vec![v(1), v(2)]);
        assert_eq!(ins(v(1)), vec![leaf(0), leaf(1)]);
        assert_eq!(ins(v(2)), vec![leaf(2), leaf(3)]);
        assert!(view.is_isolated(v(3)));

        let mut live: Vec<_> = view.enumerate_nonisolated().collect();
        live.sort_unstable();
        let mut expected = vec![leaf(0), leaf(1), leaf(2), leaf(3), v(0), v(1), v(2)];
        expected.sort_unstable();
        assert_eq!(live, expected);

        assert_eq!(view.outdeg(v(1)), 1);
        assert_eq!(view.outnbr(v(1), 0), Some(v(0)));
        assert_eq!(view.outnbr(v(2), 0), Some(v(0)));
        assert_eq!(view.outnbr(leaf(2), 0), Some(v(2)));
    }

    #[test]
    fn low_indegree_vertices_are_unchanged() {
        let g = path3();
        let view = reduce_degree(&g);
        for v in 0..3 {
            assert_eq!(view.indeg(v), g.indeg(v));
            assert_eq!(view.outdeg(v), g.outdeg(v));
            for j in 0..g.indeg(v) {
                assert_eq!(view.innbr(v, j), g.innbr(v, j));
            }
            for j in 0..g.outdeg(v) {
                assert_eq!(view.outnbr(v, j), g.outnbr(v, j));
            }
        }
        assert!(view.enumerate_nonisolated().all(|x| x < 3));
    }

    #[test]
    fn edgeless_view_has_no_live_vertices() {
        let g = AdjacencyGraph::empty(4);
        assert_eq!(reduce_degree(&g).enumerate_nonisolated().count(), 0);
    }

    #[test]
    fn lift_of_path_unrolls_edges() {
        let g = AdjacencyGraph::from_edges(2, [(0, 1)]).unwrap();
        let lift = lift_layered(&g, 2);
        assert_eq!(lift.vertex_count(), 6);
        assert_eq!(lift.outnbr(lift.encode(0, 0), 0), Some(lift.encode(1, 1)));
        assert_eq!(lift.outdeg(lift.encode(1, 1)), 0);
        assert_eq!(lift.outdeg(lift.encode(1, 0)), 1);
        assert!((0..2).all(|v| lift.is_sink(lift.encode(2, v))));
        assert_eq!(lift.edge_count(), 2);

        let flat = lift_layered(&g, 0);
        assert!((0..2).all(|v| flat.is_sink(v) && flat.indeg(v) == 0));
    }

    #[test]
    fn self_loop_view_appends_loop() {
        let g = AdjacencyGraph::empty(1);
        let looped = add_virtual_self_loop(&g, 0);
        assert_eq!(looped.indeg(0), 1);
        assert_eq!(looped.outnbr(0, 0), Some(0));
        assert_eq!(looped.innbr(0, 1), None);
        assert_eq!(looped.edge_count(), 1);
    }

    #[test]
    fn sink_loops_make_walks_total() {
        let g = path3();
        let looped = loop_sinks(&g);
        assert_eq!(looped.loops_added(), 1);
        assert_eq!(looped.outnbr(2, 0), Some(2));
        assert_eq!(looped.indeg(2), 2);
        assert_eq!(looped.innbr(2, 1), Some(2));
        assert_eq!(looped.outdeg(0), 1);
        assert_eq!(looped.outnbr(0, 0), Some(1));
    }

    #[test]
    fn counting_oracle_counts() {
        let g = path3();
        let counted = CountingOracle::new(&g);
        counted.indeg(1);
        counted.innbr(1, 0);
        assert_eq!(counted.queries(), 2);
    }
}
