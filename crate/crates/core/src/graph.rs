//! The bipartite graph `G` between `I = [0, 1]` and `J = [α, 1 + α]`: an
//! `I`-point `x` is joined to the `J`-point `γ(x)` for each generator `γ`.
//!
//! The graph is never materialized. Neighbors are computed on demand from
//! exact points, and every traversal keeps its own visited set.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{rational_serde, AlgebraicPoint, AlphaContext, Rational};
use crate::group::Generator;

/// Denominator bound for randomly sampled rational points.
pub const SAMPLE_DENOMINATOR: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    I,
    J,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::I => "I",
            Side::J => "J",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "i" => Ok(Side::I),
            "J" | "j" => Ok(Side::J),
            other => Err(format!("unknown side {other:?}; expected I or J")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GVertex {
    pub side: Side,
    pub point: AlgebraicPoint,
}

impl GVertex {
    pub fn new(side: Side, point: AlgebraicPoint) -> Self {
        GVertex { side, point }
    }

    pub fn i(point: AlgebraicPoint) -> Self {
        GVertex::new(Side::I, point)
    }

    pub fn j(point: AlgebraicPoint) -> Self {
        GVertex::new(Side::J, point)
    }
}

impl fmt::Display for GVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.side, self.point)
    }
}

#[derive(Serialize, Deserialize)]
struct VertexRepr {
    side: Side,
    #[serde(with = "rational_serde")]
    u: Rational,
    #[serde(with = "rational_serde")]
    v: Rational,
}

impl Serialize for GVertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        VertexRepr {
            side: self.side,
            u: self.point.u.clone(),
            v: self.point.v.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GVertex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = VertexRepr::deserialize(d)?;
        Ok(GVertex::new(r.side, AlgebraicPoint::new(r.u, r.v)))
    }
}

/// An edge `(x, y) ∈ I × J` with every generator mapping `x` to `y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GEdge {
    pub i_point: AlgebraicPoint,
    pub j_point: AlgebraicPoint,
    pub labels: BTreeSet<Generator>,
}

impl GEdge {
    /// The endpoint opposite to `v`.
    pub fn other(&self, v: &GVertex) -> GVertex {
        match v.side {
            Side::I => GVertex::j(self.j_point.clone()),
            Side::J => GVertex::i(self.i_point.clone()),
        }
    }
}

/// A run-time witness contradicting the expected structure of `G`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum GraphFinding {
    /// A finite path component with an even number of edges.
    EvenPathComponent { start: GVertex, edge_count: usize },
    /// An odd cycle, impossible in a bipartite graph.
    OddCycle { start: GVertex, length: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {0} lies outside its side's interval")]
    VertexOutOfRange(Box<GVertex>),
    #[error("finding: {0:?}")]
    Finding(Box<GraphFinding>),
}

/// Shape of a component as far as a budgeted walk could tell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentKind<V> {
    EvenCycle {
        length: usize,
    },
    FinitePath {
        edge_count: usize,
    },
    /// Walk stopped at the budget. `frontier` holds the unexpanded ends;
    /// `endpoints` the degree-one ends that were reached.
    Partial {
        frontier: Vec<V>,
        endpoints: Vec<V>,
    },
    /// Only produced by the parity check on malformed input graphs.
    OddCycle {
        length: usize,
    },
}

impl<V> ComponentKind<V> {
    pub fn name(&self) -> &'static str {
        match self {
            ComponentKind::EvenCycle { .. } => "even_cycle",
            ComponentKind::FinitePath { .. } => "finite_path",
            ComponentKind::Partial { .. } => "partial",
            ComponentKind::OddCycle { .. } => "odd_cycle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentView<V> {
    pub kind: ComponentKind<V>,
    /// Vertices in path order: second arm reversed, the start, then the arm
    /// through the first listed neighbor.
    pub vertices: Vec<V>,
    pub budget: usize,
    pub budget_used: usize,
}

impl<V> ComponentView<V> {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }
}

/// Any graph of maximum degree two that can be walked lazily.
pub trait DegreeTwoGraph {
    type Vertex: Clone + Eq + Hash;
    type Error;

    fn adjacent(&self, v: &Self::Vertex) -> Result<Vec<Self::Vertex>, Self::Error>;
}

/// Walks the component of `start` in both directions, expanding at most
/// `budget` vertices.
pub fn walk_component<G: DegreeTwoGraph>(
    graph: &G,
    start: &G::Vertex,
    budget: usize,
) -> Result<ComponentView<G::Vertex>, G::Error> {
    if budget == 0 {
        return Ok(ComponentView {
            kind: ComponentKind::Partial {
                frontier: vec![start.clone()],
                endpoints: vec![],
            },
            vertices: vec![start.clone()],
            budget,
            budget_used: 0,
        });
    }
    let first = graph.adjacent(start)?;
    let mut used = 1;
    let mut seen: HashSet<G::Vertex> = HashSet::from([start.clone()]);
    let mut arms: Vec<Vec<G::Vertex>> = Vec::new();
    let mut frontier = Vec::new();
    let mut endpoints = Vec::new();
    if first.len() <= 1 {
        endpoints.push(start.clone());
    }

    let closed = |arms: Vec<Vec<G::Vertex>>, length: usize, used: usize| {
        let kind = if length.is_multiple_of(2) {
            ComponentKind::EvenCycle { length }
        } else {
            ComponentKind::OddCycle { length }
        };
        ComponentView {
            kind,
            vertices: assemble(start, arms),
            budget,
            budget_used: used,
        }
    };

    for next in first {
        if seen.contains(&next) {
            // The second neighbor of `start` lies on the first arm.
            return Ok(closed(arms, seen.len(), used));
        }
        let mut arm = Vec::new();
        let mut prev = start.clone();
        let mut cur = next;
        loop {
            if seen.contains(&cur) {
                arms.push(arm);
                return Ok(closed(arms, seen.len(), used));
            }
            seen.insert(cur.clone());
            arm.push(cur.clone());
            if used >= budget {
                frontier.push(cur);
                break;
            }
            let adj = graph.adjacent(&cur)?;
            used += 1;
            let mut onward = adj.into_iter().filter(|w| *w != prev);
            match onward.next() {
                None => {
                    endpoints.push(cur);
                    break;
                }
                Some(w) => {
                    prev = std::mem::replace(&mut cur, w);
                }
            }
        }
        arms.push(arm);
    }

    let vertices = assemble(start, arms);
    let kind = if frontier.is_empty() {
        ComponentKind::FinitePath {
            edge_count: vertices.len() - 1,
        }
    } else {
        ComponentKind::Partial { frontier, endpoints }
    };
    Ok(ComponentView {
        kind,
        vertices,
        budget,
        budget_used: used,
    })
}

fn assemble<V: Clone>(start: &V, mut arms: Vec<Vec<V>>) -> Vec<V> {
    let mut out = Vec::new();
    if arms.len() == 2 {
        let back = arms.pop().unwrap();
        out.extend(back.into_iter().rev());
    }
    out.push(start.clone());
    if let Some(fwd) = arms.pop() {
        out.extend(fwd);
    }
    out
}

/// Parity of fully explored components: cycles must be even, finite paths
/// must have an odd number of edges.
pub fn parity_violation<V>(view: &ComponentView<V>) -> Option<(&'static str, usize)> {
    match view.kind {
        ComponentKind::FinitePath { edge_count } if edge_count % 2 == 0 => Some(("even_path", edge_count)),
        ComponentKind::OddCycle { length } => Some(("odd_cycle", length)),
        _ => None,
    }
}

/// The graph `G` for a fixed `α`.
#[derive(Debug, Clone)]
pub struct SchreierGraph {
    ctx: AlphaContext,
    zero: AlgebraicPoint,
    one: AlgebraicPoint,
    alpha: AlgebraicPoint,
    one_plus_alpha: AlgebraicPoint,
}

impl SchreierGraph {
    pub fn new(ctx: AlphaContext) -> Self {
        SchreierGraph {
            ctx,
            zero: AlgebraicPoint::zero(),
            one: AlgebraicPoint::one(),
            alpha: AlgebraicPoint::alpha(),
            one_plus_alpha: AlgebraicPoint::from_ints(1, 1),
        }
    }

    pub fn ctx(&self) -> &AlphaContext {
        &self.ctx
    }

    pub fn in_i(&self, x: &AlgebraicPoint) -> bool {
        self.ctx.within(x, &self.zero, &self.one)
    }

    pub fn in_j(&self, y: &AlgebraicPoint) -> bool {
        self.ctx.within(y, &self.alpha, &self.one_plus_alpha)
    }

    pub fn contains(&self, v: &GVertex) -> bool {
        match v.side {
            Side::I => self.in_i(&v.point),
            Side::J => self.in_j(&v.point),
        }
    }

    /// The degree-one vertices `(I,0)`, `(I,1)`, `(J,α)`, `(J,1+α)`.
    pub fn degree_one_vertices(&self) -> [GVertex; 4] {
        [
            GVertex::i(self.zero.clone()),
            GVertex::i(self.one.clone()),
            GVertex::j(self.alpha.clone()),
            GVertex::j(self.one_plus_alpha.clone()),
        ]
    }

    /// Incident edges of `v`, with coinciding generator images merged into
    /// one labelled edge. Ordered by the opposite endpoint.
    pub fn neighbors(&self, v: &GVertex) -> Result<Vec<GEdge>, GraphError> {
        if !self.contains(v) {
            return Err(GraphError::VertexOutOfRange(Box::new(v.clone())));
        }
        let mut edges: BTreeMap<AlgebraicPoint, BTreeSet<Generator>> = BTreeMap::new();
        for gen in Generator::ALL {
            let other = match v.side {
                Side::I => gen.apply(&v.point),
                Side::J => gen.apply_inverse(&v.point),
            };
            let keep = match v.side {
                Side::I => self.in_j(&other),
                Side::J => self.in_i(&other),
            };
            if keep {
                edges.entry(other).or_default().insert(gen);
            }
        }
        Ok(edges
            .into_iter()
            .map(|(other, labels)| match v.side {
                Side::I => GEdge {
                    i_point: v.point.clone(),
                    j_point: other,
                    labels,
                },
                Side::J => GEdge {
                    i_point: other,
                    j_point: v.point.clone(),
                    labels,
                },
            })
            .collect())
    }

    pub fn degree(&self, v: &GVertex) -> Result<usize, GraphError> {
        Ok(self.neighbors(v)?.len())
    }

    /// Shortest path from `from` to `to`, expanding at most `budget` vertices
    /// and, when given, searching no deeper than `max_depth` edges.
    pub fn shortest_path(
        &self,
        from: &GVertex,
        to: &GVertex,
        budget: usize,
        max_depth: Option<usize>,
    ) -> Result<Option<Vec<GVertex>>, GraphError> {
        for v in [from, to] {
            if !self.contains(v) {
                return Err(GraphError::VertexOutOfRange(Box::new(v.clone())));
            }
        }
        if from == to {
            return Ok(Some(vec![from.clone()]));
        }
        let mut parent: HashMap<GVertex, Option<GVertex>> = HashMap::from([(from.clone(), None)]);
        let mut queue = VecDeque::from([(from.clone(), 0usize)]);
        let mut expanded = 0;
        while let Some((v, depth)) = queue.pop_front() {
            if expanded >= budget || max_depth.is_some_and(|m| depth >= m) {
                continue;
            }
            expanded += 1;
            for e in self.neighbors(&v)? {
                let w = e.other(&v);
                if parent.contains_key(&w) {
                    continue;
                }
                parent.insert(w.clone(), Some(v.clone()));
                if &w == to {
                    let mut path = vec![w];
                    while let Some(Some(p)) = parent.get(path.last().unwrap()) {
                        path.push(p.clone());
                    }
                    path.reverse();
                    return Ok(Some(path));
                }
                queue.push_back((w, depth + 1));
            }
        }
        Ok(None)
    }

    /// Graph distance if found within `budget` vertex expansions.
    pub fn bfs_distance(&self, from: &GVertex, to: &GVertex, budget: usize) -> Result<Option<usize>, GraphError> {
        Ok(self.shortest_path(from, to, budget, None)?.map(|p| p.len() - 1))
    }

    /// Walks the component of `v`. Fully explored components must be even
    /// cycles or paths with an odd number of edges; anything else is
    /// returned as a [`GraphFinding`].
    pub fn explore_component(&self, v: &GVertex, budget: usize) -> Result<ComponentView<GVertex>, GraphError> {
        if !self.contains(v) {
            return Err(GraphError::VertexOutOfRange(Box::new(v.clone())));
        }
        let view = walk_component(self, v, budget)?;
        match parity_violation(&view) {
            Some(("even_path", edge_count)) => Err(GraphError::Finding(Box::new(GraphFinding::EvenPathComponent {
                start: v.clone(),
                edge_count,
            }))),
            Some((_, length)) => Err(GraphError::Finding(Box::new(GraphFinding::OddCycle {
                start: v.clone(),
                length,
            }))),
            None => Ok(view),
        }
    }

    /// Samples `n` random rational points (denominator at most
    /// [`SAMPLE_DENOMINATOR`]), alternating between `(I, t)` and `(J, t + α)`,
    /// and tabulates degrees and component kinds.
    pub fn classify_sample(&self, n: usize, budget: usize, seed: u64) -> Result<SampleReport, GraphError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = SampleReport {
            samples: n,
            budget,
            seed,
            ..SampleReport::default()
        };
        for k in 0..n {
            let t = random_unit_rational(&mut rng);
            let vertex = if k % 2 == 0 {
                GVertex::i(t)
            } else {
                GVertex::j(&t + &self.alpha)
            };
            let degree = self.degree(&vertex)?;
            *report.degree_counts.entry(degree).or_default() += 1;
            if degree == 1 {
                report.degree_one.push(vertex.clone());
            }
            let view = self.explore_component(&vertex, budget)?;
            report.tally.record(&view.kind);
            report.records.push(ComponentRecord::new(vertex, degree, &view));
        }
        Ok(report)
    }

    /// The four segments of `E(G) ⊆ I × J`, one per generator, as exact
    /// endpoint pairs `((x₀, γ(x₀)), (x₁, γ(x₁)))` with `x₀ < x₁`.
    pub fn edge_segments(&self) -> Vec<(Generator, [(AlgebraicPoint, AlgebraicPoint); 2])> {
        Generator::ALL
            .iter()
            .filter_map(|&gen| {
                let a = gen.apply_inverse(&self.alpha);
                let b = gen.apply_inverse(&self.one_plus_alpha);
                let (lo, hi) = (self.ctx.min(&a, &b), self.ctx.max(&a, &b));
                let lo = self.ctx.max(lo, &self.zero).clone();
                let hi = self.ctx.min(hi, &self.one).clone();
                if self.ctx.compare(&lo, &hi) == std::cmp::Ordering::Greater {
                    return None;
                }
                let start = (lo.clone(), gen.apply(&lo));
                let end = (hi.clone(), gen.apply(&hi));
                Some((gen, [start, end]))
            })
            .collect()
    }

    /// `E(G)` as a closed polygon (first point repeated at the end), starting
    /// at the corner on `x = 0` and chaining segments through shared corners.
    pub fn edge_polygon(&self) -> Vec<(AlgebraicPoint, AlgebraicPoint)> {
        let mut segments = self.edge_segments();
        let start_idx = segments.iter().position(|(_, [s, _])| s.0 == self.zero).unwrap_or(0);
        let (_, [first, second]) = segments.remove(start_idx);
        let mut polygon = vec![first, second];
        while !segments.is_empty() {
            let last = polygon.last().unwrap().clone();
            let Some(idx) = segments.iter().position(|(_, [s, e])| *s == last || *e == last) else {
                break;
            };
            let (_, [s, e]) = segments.remove(idx);
            polygon.push(if s == last { e } else { s });
        }
        polygon
    }
}

impl DegreeTwoGraph for SchreierGraph {
    type Vertex = GVertex;
    type Error = GraphError;

    fn adjacent(&self, v: &GVertex) -> Result<Vec<GVertex>, GraphError> {
        Ok(self.neighbors(v)?.iter().map(|e| e.other(v)).collect())
    }
}

/// Uniform `k / 10⁶` with `0 ≤ k ≤ 10⁶`.
pub fn random_unit_rational<R: Rng>(rng: &mut R) -> AlgebraicPoint {
    let k = rng.gen_range(0..=SAMPLE_DENOMINATOR);
    AlgebraicPoint::ratio(k, SAMPLE_DENOMINATOR)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ComponentTally {
    pub even_cycles: usize,
    pub odd_paths: usize,
    /// Budget ran out; one end reached a degree-one vertex.
    pub partial_one_end: usize,
    /// Budget ran out with no endpoint in sight.
    pub partial_no_end: usize,
}

impl ComponentTally {
    pub fn record<V>(&mut self, kind: &ComponentKind<V>) {
        match kind {
            ComponentKind::EvenCycle { .. } => self.even_cycles += 1,
            ComponentKind::FinitePath { .. } => self.odd_paths += 1,
            ComponentKind::Partial { endpoints, .. } if !endpoints.is_empty() => self.partial_one_end += 1,
            ComponentKind::Partial { .. } => self.partial_no_end += 1,
            ComponentKind::OddCycle { .. } => {}
        }
    }

    pub fn finite(&self) -> usize {
        self.even_cycles + self.odd_paths
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentRecord {
    pub vertex: GVertex,
    pub degree: usize,
    pub kind: &'static str,
    pub size: usize,
    pub budget: usize,
}

impl ComponentRecord {
    pub fn new(vertex: GVertex, degree: usize, view: &ComponentView<GVertex>) -> Self {
        ComponentRecord {
            vertex,
            degree,
            kind: view.kind.name(),
            size: view.size(),
            budget: view.budget,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SampleReport {
    pub seed: u64,
    pub samples: usize,
    pub budget: usize,
    pub degree_counts: BTreeMap<usize, usize>,
    pub degree_one: Vec<GVertex>,
    pub tally: ComponentTally,
    pub records: Vec<ComponentRecord>,
}
