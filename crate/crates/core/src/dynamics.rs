//! Matching-improvement dynamics on a finite system of bi-infinite paths.
//!
//! Each path is a copy of ℤ. Even coordinates form class `A`, odd
//! coordinates class `B`, and `H` joins `i` to `i + 1`. A matching of `H^K`
//! pairs every `a ∈ A` with some `M(a) ∈ B` at odd distance at most `K`; it
//! may differ from the standard shift `a ↦ a + 1` only inside a finite
//! window per path.
//!
//! The ray `r(x)` starts at `x` and runs through `M(x)`. Two `A`-vertices at
//! distance two whose rays face each other are φ-partners; `S(M)` is the set
//! of vertices that have one. Rewiring every φ-pair at once strictly lowers
//! the cost `Σ (|a − M(a)| − 1)` by at least `|S(M)|`, so iterating reaches
//! `S = ∅` in finitely many steps, at which point all rays point the same
//! way and `a ↦ a + dir(r(a))` is a perfect matching of `H`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{ComponentKind, ComponentView, GVertex, GraphError, SchreierGraph, Side};
use crate::group::GroupElement;

pub type PathId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum DynamicsFinding {
    /// A rewired φ-pair broke the K bound or the `−2` inequality.
    RewireViolation {
        path: PathId,
        left: i64,
        right: i64,
        old_distances: [i64; 2],
        new_distances: [i64; 2],
        k: u32,
    },
    /// The cost failed to drop by at least `|S|`.
    CostNotDecreasing { before: u64, after: u64, s_size: usize },
    /// A vertex of `S` without exactly one φ-partner.
    PartnerNotUnique { path: PathId, vertex: i64 },
    /// A group-element piece moved a vertex farther than `2|b| + 1`.
    BridgeBoundExceeded {
        coord: i64,
        partner: i64,
        element: GroupElement,
        bound: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("K = {0} must be an odd positive integer")]
    InvalidK(u32),
    #[error("window must have even positive length at least K (got {window}, K = {k})")]
    InvalidWindow { window: usize, k: u32 },
    #[error("invalid matching on path {path}: {reason}")]
    InvalidMatching { path: PathId, reason: String },
    #[error("improve requires a nonempty S(M)")]
    EmptyS,
    #[error("extraction requires S(M) to be empty ({0} vertices remain)")]
    SNotEmpty(usize),
    #[error("iteration cap {0} reached before S(M) became empty")]
    IterationCap(usize),
    #[error("assignment is not a matching: {0}")]
    NotAMatching(String),
    #[error(transparent)]
    Graph(Box<GraphError>),
    #[error("finding: {0:?}")]
    Finding(Box<DynamicsFinding>),
}

impl From<GraphError> for DynamicsError {
    fn from(e: GraphError) -> Self {
        DynamicsError::Graph(Box::new(e))
    }
}

fn finding(f: DynamicsFinding) -> DynamicsError {
    DynamicsError::Finding(Box::new(f))
}

/// The matching on one path: `targets[i] = M(lo + 2i)`; standard outside
/// `[lo, hi]` with `lo` even and `hi = lo + 2·len − 1` odd.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathMatching {
    lo: i64,
    targets: Vec<i64>,
}

impl PathMatching {
    pub fn standard(lo: i64, a_count: usize) -> Self {
        PathMatching {
            lo,
            targets: (0..a_count as i64).map(|i| lo + 2 * i + 1).collect(),
        }
    }

    /// Unvalidated; see [`KMatching::new`].
    pub fn from_targets(lo: i64, targets: Vec<i64>) -> Self {
        PathMatching { lo, targets }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + 2 * self.targets.len() as i64 - 1
    }

    pub fn targets(&self) -> &[i64] {
        &self.targets
    }

    pub fn in_window(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi()
    }

    fn index(&self, a: i64) -> Option<usize> {
        (a.rem_euclid(2) == 0 && self.in_window(a)).then(|| ((a - self.lo) / 2) as usize)
    }

    /// `A`-coordinates inside the window.
    pub fn a_coords(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.targets.len() as i64).map(move |i| self.lo + 2 * i)
    }

    /// `M(a)` for an even coordinate.
    pub fn partner_of_a(&self, a: i64) -> i64 {
        self.index(a).map_or(a + 1, |i| self.targets[i])
    }

    /// `M(x)` for any coordinate.
    pub fn partner(&self, x: i64) -> i64 {
        if x.rem_euclid(2) == 0 {
            return self.partner_of_a(x);
        }
        if !self.in_window(x) {
            return x - 1;
        }
        let i = self.targets.iter().position(|&t| t == x).expect("validated bijection");
        self.lo + 2 * i as i64
    }

    /// Direction `±1` of the ray `r(x)`.
    pub fn direction(&self, x: i64) -> i64 {
        (self.partner(x) - x).signum()
    }

    fn set(&mut self, a: i64, target: i64) {
        let i = self.index(a).expect("rewired vertex inside window");
        self.targets[i] = target;
    }

    fn cost(&self) -> u64 {
        self.a_coords()
            .zip(&self.targets)
            .map(|(a, &t)| (a - t).unsigned_abs() - 1)
            .sum()
    }

    fn validate(&self, path: PathId, k: u32) -> Result<(), DynamicsError> {
        let bad = |reason: String| Err(DynamicsError::InvalidMatching { path, reason });
        if self.lo.rem_euclid(2) != 0 {
            return bad(format!("window start {} is odd", self.lo));
        }
        let mut hit = vec![false; self.targets.len()];
        for (a, &t) in self.a_coords().zip(&self.targets) {
            if t.rem_euclid(2) != 1 {
                return bad(format!("M({a}) = {t} is not in class B"));
            }
            if !self.in_window(t) {
                return bad(format!("M({a}) = {t} leaves the window [{}, {}]", self.lo, self.hi()));
            }
            if (a - t).unsigned_abs() > u64::from(k) {
                return bad(format!("|{a} − M({a})| = {} exceeds K = {k}", (a - t).abs()));
            }
            let slot = ((t - self.lo - 1) / 2) as usize;
            if std::mem::replace(&mut hit[slot], true) {
                return bad(format!("B-vertex {t} matched twice"));
            }
        }
        Ok(())
    }
}

/// A perfect matching of `H^K` on the path system, standard outside the
/// per-path windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KMatching {
    k: u32,
    paths: BTreeMap<PathId, PathMatching>,
}

impl KMatching {
    pub fn new(k: u32, paths: BTreeMap<PathId, PathMatching>) -> Result<Self, DynamicsError> {
        if k.is_multiple_of(2) {
            return Err(DynamicsError::InvalidK(k));
        }
        let m = KMatching { k, paths };
        m.validate()?;
        Ok(m)
    }

    /// The standard shift on `path_count` paths with windows `[0, window)`.
    pub fn standard(k: u32, path_count: u32, window: usize) -> Result<Self, DynamicsError> {
        check_window(window, k)?;
        let paths = (0..path_count)
            .map(|p| (p, PathMatching::standard(0, window / 2)))
            .collect();
        KMatching::new(k, paths)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn paths(&self) -> &BTreeMap<PathId, PathMatching> {
        &self.paths
    }

    pub fn path(&self, id: PathId) -> Option<&PathMatching> {
        self.paths.get(&id)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.k.is_multiple_of(2) {
            return Err(DynamicsError::InvalidK(self.k));
        }
        self.paths.iter().try_for_each(|(&id, p)| p.validate(id, self.k))
    }

    pub fn is_standard(&self) -> bool {
        self.paths
            .values()
            .all(|p| p.a_coords().zip(&p.targets).all(|(a, &t)| t == a + 1))
    }

    /// Window bounds per path, the vertex set on which the matching may deviate.
    pub fn windows(&self) -> BTreeMap<PathId, (i64, i64)> {
        self.paths.iter().map(|(&id, p)| (id, (p.lo(), p.hi()))).collect()
    }

    /// Ray of `x` on `path`.
    pub fn ray(&self, path: PathId, x: i64) -> Ray {
        let direction = self
            .paths
            .get(&path)
            .map_or(if x.rem_euclid(2) == 0 { 1 } else { -1 }, |p| p.direction(x));
        Ray {
            path,
            start: x,
            direction,
        }
    }
}

fn check_window(window: usize, k: u32) -> Result<(), DynamicsError> {
    if window == 0 || !window.is_multiple_of(2) || window < k as usize {
        return Err(DynamicsError::InvalidWindow { window, k });
    }
    Ok(())
}

/// `{start, start + dir, start + 2·dir, …}` on one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ray {
    pub path: PathId,
    pub start: i64,
    pub direction: i64,
}

impl Ray {
    pub fn contains(&self, path: PathId, x: i64) -> bool {
        path == self.path && (x - self.start) * self.direction >= 0
    }

    /// Whether `self ⊇ other`.
    pub fn contains_ray(&self, other: &Ray) -> bool {
        self.direction == other.direction && self.contains(other.path, other.start)
    }
}

/// Σ over `A` of `dist(a, M(a)) − 1`.
pub fn cost(m: &KMatching) -> u64 {
    m.paths.values().map(PathMatching::cost).sum()
}

/// `x` and `y` are `A`-vertices at distance two whose rays face each other.
pub fn phi(m: &KMatching, path: PathId, x: i64, y: i64) -> bool {
    if x.rem_euclid(2) != 0 || y.rem_euclid(2) != 0 || (x - y).abs() != 2 {
        return false;
    }
    m.ray(path, x).contains(path, y) && m.ray(path, y).contains(path, x)
}

/// Disjoint φ-pairs `(path, a, a + 2)`; `a` points up and `a + 2` down.
/// Both members always lie inside the window.
pub fn phi_pairs(m: &KMatching) -> Vec<(PathId, i64, i64)> {
    let mut pairs = Vec::new();
    for (&id, p) in &m.paths {
        for a in p.a_coords() {
            if p.direction(a) > 0 && p.direction(a + 2) < 0 {
                pairs.push((id, a, a + 2));
            }
        }
    }
    pairs
}

/// `S(M)`, the `A`-vertices having a φ-partner.
pub fn compute_s(m: &KMatching) -> BTreeSet<(PathId, i64)> {
    phi_pairs(m)
        .into_iter()
        .flat_map(|(id, a, b)| [(id, a), (id, b)])
        .collect()
}

/// Bookkeeping for one rewiring step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    /// 1-based iteration number.
    pub n: usize,
    pub s_size: usize,
    /// Cost before the step.
    pub cost: u64,
    pub cost_after: u64,
    pub rewired_pairs: Vec<(PathId, i64, i64)>,
}

/// Rewires every φ-pair `(a, a')` at once: `a ↦ M(a')`, `a' ↦ M(a)`.
pub fn improve(m: &KMatching) -> Result<KMatching, DynamicsError> {
    improve_step(m, 0).map(|(next, _)| next)
}

fn improve_step(m: &KMatching, n: usize) -> Result<(KMatching, StepRecord), DynamicsError> {
    let pairs = phi_pairs(m);
    if pairs.is_empty() {
        return Err(DynamicsError::EmptyS);
    }
    check_partners_unique(m, &pairs)?;
    let mut next = m.clone();
    for &(id, a, b) in &pairs {
        let p = &m.paths[&id];
        let (ma, mb) = (p.partner_of_a(a), p.partner_of_a(b));
        let old = [(a - ma).abs(), (b - mb).abs()];
        let new = [(a - mb).abs(), (b - ma).abs()];
        let k = i64::from(m.k);
        if new[0] > k || new[1] > k || new[0] + new[1] > old[0] + old[1] - 2 {
            return Err(finding(DynamicsFinding::RewireViolation {
                path: id,
                left: a,
                right: b,
                old_distances: old,
                new_distances: new,
                k: m.k,
            }));
        }
        let q = next.paths.get_mut(&id).expect("path exists");
        q.set(a, mb);
        q.set(b, ma);
    }
    next.validate()?;
    let before = cost(m);
    let after = cost(&next);
    let s_size = 2 * pairs.len();
    if after + s_size as u64 > before {
        return Err(finding(DynamicsFinding::CostNotDecreasing { before, after, s_size }));
    }
    let record = StepRecord {
        n,
        s_size,
        cost: before,
        cost_after: after,
        rewired_pairs: pairs,
    };
    Ok((next, record))
}

fn check_partners_unique(m: &KMatching, pairs: &[(PathId, i64, i64)]) -> Result<(), DynamicsError> {
    let mut count: HashMap<(PathId, i64), usize> = HashMap::new();
    for &(id, a, b) in pairs {
        *count.entry((id, a)).or_default() += 1;
        *count.entry((id, b)).or_default() += 1;
    }
    for (&(id, x), &c) in &count {
        let partners = [x - 2, x + 2].into_iter().filter(|&y| phi(m, id, x, y)).count();
        if c != 1 || partners != 1 {
            return Err(finding(DynamicsFinding::PartnerNotUnique { path: id, vertex: x }));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DynamicsTrace {
    pub initial_cost: u64,
    pub final_cost: u64,
    pub steps: Vec<StepRecord>,
}

impl DynamicsTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    /// `Σₙ |S(Mₙ)|`.
    pub fn total_s(&self) -> u64 {
        self.steps.iter().map(|s| s.s_size as u64).sum()
    }
}

/// Iterates [`improve`] until `S(M)` is empty.
pub fn run_dynamics(m0: &KMatching, max_iters: usize) -> Result<(KMatching, DynamicsTrace), DynamicsError> {
    m0.validate()?;
    let mut trace = DynamicsTrace {
        initial_cost: cost(m0),
        ..DynamicsTrace::default()
    };
    let mut current = m0.clone();
    loop {
        if phi_pairs(&current).is_empty() {
            break;
        }
        if trace.steps.len() >= max_iters {
            return Err(DynamicsError::IterationCap(max_iters));
        }
        let (next, record) = improve_step(&current, trace.steps.len() + 1)?;
        trace.steps.push(record);
        current = next;
    }
    trace.final_cost = cost(&current);
    Ok((current, trace))
}

/// All rays on each path point the same way. On a bi-infinite path with a
/// standard tail this is the same as every two rays being nested.
pub fn check_nested_rays(m: &KMatching) -> bool {
    m.paths.values().all(|p| p.a_coords().all(|a| p.direction(a) == 1))
}

/// Matches each `a` to its neighbor on `r(a)`. The result is a perfect
/// matching of `H` (a 1-matching).
pub fn extract_matching(m: &KMatching) -> Result<KMatching, DynamicsError> {
    let s = compute_s(m).len();
    if s != 0 {
        return Err(DynamicsError::SNotEmpty(s));
    }
    let paths = m
        .paths
        .iter()
        .map(|(&id, p)| {
            let targets = p.a_coords().map(|a| a + p.direction(a)).collect();
            (id, PathMatching::from_targets(p.lo, targets))
        })
        .collect();
    KMatching::new(1, paths)
}

/// Parameters for [`random_kmatching`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RandomSpec {
    pub paths: u32,
    /// Number of coordinates per window, `[0, window)`.
    pub window: usize,
    pub k: u32,
    /// Attempted transpositions per path.
    pub transpositions: usize,
}

impl RandomSpec {
    pub fn new(window: usize, k: u32) -> Self {
        RandomSpec {
            paths: 1,
            window,
            k,
            transpositions: window,
        }
    }
}

/// The standard matching perturbed by seeded random transpositions, each
/// kept only if both rewired pairs stay within distance `K`.
pub fn random_kmatching(spec: &RandomSpec, seed: u64) -> Result<KMatching, DynamicsError> {
    if spec.k.is_multiple_of(2) {
        return Err(DynamicsError::InvalidK(spec.k));
    }
    check_window(spec.window, spec.k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a_count = spec.window / 2;
    let reach = (spec.k as i64 + 1) / 2;
    let mut paths = BTreeMap::new();
    for id in 0..spec.paths {
        let mut p = PathMatching::standard(0, a_count);
        for _ in 0..spec.transpositions {
            let i = rng.gen_range(0..a_count) as i64;
            let j = i + rng.gen_range(-reach..=reach);
            if j == i || j < 0 || j >= a_count as i64 {
                continue;
            }
            let (ti, tj) = (p.targets[i as usize], p.targets[j as usize]);
            let (ai, aj) = (2 * i, 2 * j);
            if (ai - tj).abs() <= spec.k as i64 && (aj - ti).abs() <= spec.k as i64 {
                p.targets.swap(i as usize, j as usize);
            }
        }
        paths.insert(id, p);
    }
    KMatching::new(spec.k, paths)
}

/// An odd `K` covering every piece moved by an element with `|b| ≤ radius`:
/// `2|b|` edges between `I`-points plus one edge to the `J` side.
pub fn bridge_k_bound(radius: u32) -> u32 {
    2 * radius + 1
}

/// A finite stretch of a path component of `G`, with `I`-vertices at even
/// and `J`-vertices at odd coordinates.
#[derive(Debug, Clone)]
pub struct ComponentCoordinates {
    vertices: Vec<GVertex>,
    offset: i64,
    index: HashMap<GVertex, i64>,
}

impl ComponentCoordinates {
    /// `vertices` must alternate sides and consecutive entries must be adjacent.
    pub fn from_path(vertices: Vec<GVertex>) -> Result<Self, DynamicsError> {
        let first = vertices
            .first()
            .ok_or_else(|| DynamicsError::NotAMatching("empty segment".into()))?;
        let offset = if first.side == Side::I { 0 } else { 1 };
        if vertices.windows(2).any(|w| w[0].side == w[1].side) {
            return Err(DynamicsError::NotAMatching("segment does not alternate sides".into()));
        }
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as i64 + offset))
            .collect();
        Ok(ComponentCoordinates {
            vertices,
            offset,
            index,
        })
    }

    pub fn from_view(view: &ComponentView<GVertex>) -> Result<Self, DynamicsError> {
        ComponentCoordinates::from_path(view.vertices.clone())
    }

    pub fn coord(&self, v: &GVertex) -> Option<i64> {
        self.index.get(v).copied()
    }

    pub fn vertex(&self, coord: i64) -> Option<&GVertex> {
        usize::try_from(coord - self.offset)
            .ok()
            .and_then(|i| self.vertices.get(i))
    }

    /// First and last coordinate.
    pub fn span(&self) -> (i64, i64) {
        (self.offset, self.offset + self.vertices.len() as i64 - 1)
    }

    /// The group element carrying the point at `from` to the point at `to`,
    /// composed from edge labels along the segment. Both coordinates must be
    /// in the segment.
    pub fn element_between(&self, graph: &SchreierGraph, from: i64, to: i64) -> Result<GroupElement, DynamicsError> {
        let missing = |c: i64| DynamicsError::NotAMatching(format!("coordinate {c} outside segment"));
        self.vertex(from).ok_or_else(|| missing(from))?;
        self.vertex(to).ok_or_else(|| missing(to))?;
        let step = if to >= from { 1 } else { -1 };
        let mut element = GroupElement::IDENTITY;
        let mut c = from;
        while c != to {
            let (u, v) = (
                &self.vertices[(c - self.offset) as usize],
                &self.vertices[(c + step - self.offset) as usize],
            );
            let edge = graph
                .neighbors(u)?
                .into_iter()
                .find(|e| e.other(u) == *v)
                .ok_or_else(|| DynamicsError::NotAMatching(format!("{u} and {v} are not adjacent")))?;
            let gen = *edge.labels.iter().next().expect("edges carry a label");
            let hop = match u.side {
                Side::I => gen.element(),
                Side::J => gen.element().inverse(),
            };
            element = hop.compose(&element);
            c += step;
        }
        Ok(element)
    }
}

/// `A`-coordinates `start..=end` (even ones only) moved by `element`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Piece {
    pub start: i64,
    pub end: i64,
    pub element: GroupElement,
}

/// The matching induced on one path component by pieces of group elements:
/// `a ↦ coord(element(point(a)))`. Unassigned window vertices stay standard.
/// `K` is [`bridge_k_bound`] of the largest `|b|` among the pieces.
pub fn kmatching_from_assignment(
    coords: &ComponentCoordinates,
    pieces: &[Piece],
    path: PathId,
) -> Result<KMatching, DynamicsError> {
    let not = |s: String| DynamicsError::NotAMatching(s);
    let max_b = pieces.iter().map(|p| p.element.b.unsigned_abs()).max().unwrap_or(0);
    let k = bridge_k_bound(u32::try_from(max_b).map_err(|_| not("element too large".into()))?);
    let mut assigned: BTreeMap<i64, i64> = BTreeMap::new();
    for piece in pieces {
        let first = piece.start + piece.start.rem_euclid(2);
        for a in (first..=piece.end).step_by(2) {
            let v = coords
                .vertex(a)
                .ok_or_else(|| not(format!("coordinate {a} outside segment")))?;
            let image = GVertex::j(piece.element.apply(&v.point));
            let partner = coords.coord(&image).ok_or_else(|| {
                not(format!(
                    "image of coordinate {a} under {} is not in the segment",
                    piece.element
                ))
            })?;
            if assigned.insert(a, partner).is_some() {
                return Err(not(format!("coordinate {a} is covered by two pieces")));
            }
        }
    }
    let Some((&first_a, _)) = assigned.iter().next() else {
        return KMatching::new(k, BTreeMap::from([(path, PathMatching::standard(0, 1))]));
    };
    let mut lo = first_a;
    let mut hi = first_a + 1;
    for (&a, &t) in &assigned {
        lo = lo.min(a).min(t);
        hi = hi.max(a + 1).max(t);
    }
    lo -= lo.rem_euclid(2);
    hi += 1 - hi.rem_euclid(2);
    let targets = (lo..=hi)
        .step_by(2)
        .map(|a| assigned.get(&a).copied().unwrap_or(a + 1))
        .collect();
    KMatching::new(k, BTreeMap::from([(path, PathMatching::from_targets(lo, targets))])).map_err(|e| not(e.to_string()))
}

/// Outcome of one bridge instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BridgeOutcome {
    pub start: GVertex,
    pub segment: (i64, i64),
    pub pieces: usize,
    pub max_abs_b: u64,
    pub bridge_k: u32,
    pub max_displacement: i64,
    pub initial_cost: u64,
    pub iterations: usize,
    pub total_s: u64,
    pub extracted_standard: bool,
}

/// Builds a random matching on a segment of the component of `start`,
/// re-expresses every pair as a group-element piece, rebuilds the matching
/// from the pieces, and runs the dynamics on it. Returns `Ok(None)` when
/// the component is not a long two-sided stretch.
pub fn bridge_instance(
    graph: &SchreierGraph,
    start: &GVertex,
    segment_budget: usize,
    spec: &RandomSpec,
    seed: u64,
) -> Result<Option<BridgeOutcome>, DynamicsError> {
    let view = graph.explore_component(start, segment_budget)?;
    let two_sided = matches!(&view.kind, ComponentKind::Partial { frontier, .. } if frontier.len() == 2);
    if !two_sided {
        return Ok(None);
    }
    let coords = ComponentCoordinates::from_view(&view)?;
    let (first, last) = coords.span();
    // A window of `spec.window` coordinates well inside the segment.
    let lo = first + first.rem_euclid(2) + 2 * (spec.k as i64 + 1);
    if lo + spec.window as i64 > last - 2 * (spec.k as i64 + 1) {
        return Ok(None);
    }
    let local = random_kmatching(&RandomSpec { paths: 1, ..*spec }, seed)?;
    let p = &local.paths[&0];

    let mut pieces: Vec<Piece> = Vec::new();
    let mut max_displacement = 0;
    for (a, &t) in p.a_coords().zip(&p.targets) {
        let (ga, gt) = (a + lo, t + lo);
        let element = coords.element_between(graph, ga, gt)?;
        let bound = bridge_k_bound(element.b.unsigned_abs() as u32);
        if (ga - gt).unsigned_abs() > u64::from(bound) {
            return Err(finding(DynamicsFinding::BridgeBoundExceeded {
                coord: ga,
                partner: gt,
                element,
                bound,
            }));
        }
        max_displacement = max_displacement.max((ga - gt).abs());
        match pieces.last_mut() {
            Some(last) if last.element == element && last.end + 2 == ga => last.end = ga,
            _ => pieces.push(Piece {
                start: ga,
                end: ga,
                element,
            }),
        }
    }

    let m0 = kmatching_from_assignment(&coords, &pieces, 0)?;
    let rebuilt = &m0.paths[&0];
    for (a, &t) in p.a_coords().zip(&p.targets) {
        if rebuilt.partner_of_a(a + lo) != t + lo {
            return Err(DynamicsError::NotAMatching(format!(
                "pieces do not reproduce M({})",
                a + lo
            )));
        }
    }
    let initial_cost = cost(&m0);
    let (fin, trace) = run_dynamics(&m0, initial_cost as usize)?;
    let extracted = extract_matching(&fin)?;
    Ok(Some(BridgeOutcome {
        start: start.clone(),
        segment: (first, last),
        pieces: pieces.len(),
        max_abs_b: pieces.iter().map(|p| p.element.b.unsigned_abs()).max().unwrap_or(0),
        bridge_k: m0.k(),
        max_displacement,
        initial_cost,
        iterations: trace.iterations(),
        total_s: trace.total_s(),
        extracted_standard: extracted.is_standard(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_alpha, AlgebraicPoint, AlphaSpec};

    /// `M(0) = 3`, `M(2) = 1`, standard elsewhere.
    fn single_swap(k: u32) -> KMatching {
        KMatching::new(
            k,
            BTreeMap::from([(0, PathMatching::from_targets(0, vec![3, 1, 5, 7]))]),
        )
        .unwrap()
    }

    #[test]
    fn cost_examples() {
        assert_eq!(cost(&KMatching::standard(5, 2, 20).unwrap()), 0);
        assert_eq!(cost(&single_swap(3)), 2);
        assert!(matches!(
            KMatching::new(1, single_swap(3).paths),
            Err(DynamicsError::InvalidMatching { .. })
        ));
    }

    #[test]
    fn validation_errors() {
        let bad = |k, lo, t: Vec<i64>| KMatching::new(k, BTreeMap::from([(0, PathMatching::from_targets(lo, t))]));
        assert_eq!(bad(4, 0, vec![1]), Err(DynamicsError::InvalidK(4)));
        assert!(matches!(bad(3, 1, vec![2]), Err(DynamicsError::InvalidMatching { .. })));
        assert!(matches!(
            bad(3, 0, vec![1, 1]),
            Err(DynamicsError::InvalidMatching { .. })
        ));
        assert!(matches!(
            bad(3, 0, vec![5, 3, 1]),
            Err(DynamicsError::InvalidMatching { .. })
        ));
        assert!(matches!(
            bad(3, 0, vec![7, 1, 3, 5]),
            Err(DynamicsError::InvalidMatching { .. })
        ));
        assert!(matches!(
            bad(9, 0, vec![1, 5]),
            Err(DynamicsError::InvalidMatching { .. })
        ));
        assert!(bad(5, 0, vec![3, 5, 1]).is_ok());
    }

    #[test]
    fn phi_examples() {
        let m = single_swap(3);
        assert!(!phi(&m, 0, 0, 0));
        assert!(phi(&m, 0, 0, 2));
        assert!(phi(&m, 0, 2, 0));
        let std = KMatching::standard(3, 1, 10).unwrap();
        assert!(!phi(&std, 0, 4, 6));
        assert_eq!(m.ray(0, 0).direction, 1);
        assert_eq!(m.ray(0, 2).direction, -1);
        // B-vertices get rays too: M(1) = 2.
        assert_eq!(m.ray(0, 1).direction, 1);
    }

    #[test]
    fn s_examples() {
        assert!(compute_s(&KMatching::standard(3, 1, 10).unwrap()).is_empty());
        assert_eq!(compute_s(&single_swap(3)), BTreeSet::from([(0, 0), (0, 2)]));
        // M(0)=3, M(2)=5, M(4)=1: directions +, +, −.
        let m = KMatching::new(3, BTreeMap::from([(0, PathMatching::from_targets(0, vec![3, 5, 1]))])).unwrap();
        assert_eq!(compute_s(&m), BTreeSet::from([(0, 2), (0, 4)]));
    }

    #[test]
    fn improve_single_swap() {
        let m = single_swap(3);
        let next = improve(&m).unwrap();
        assert!(next.is_standard());
        assert_eq!(cost(&next), 0);
        assert_eq!(improve(&next), Err(DynamicsError::EmptyS));
        let (fin, trace) = run_dynamics(&m, 10).unwrap();
        assert!(fin.is_standard());
        assert_eq!(trace.iterations(), 1);
        assert_eq!(trace.steps[0].s_size, 2);
        assert_eq!(
            run_dynamics(&KMatching::standard(3, 1, 4).unwrap(), 0)
                .unwrap()
                .1
                .iterations(),
            0
        );
    }

    #[test]
    fn iteration_cap() {
        let m = random_kmatching(&RandomSpec::new(60, 7), 3).unwrap();
        assert!(cost(&m) > 0);
        assert_eq!(run_dynamics(&m, 0).unwrap_err(), DynamicsError::IterationCap(0));
    }

    #[test]
    fn nested_rays_and_extraction() {
        let std = KMatching::standard(3, 2, 12).unwrap();
        assert!(check_nested_rays(&std));
        assert_eq!(extract_matching(&std).unwrap().paths(), std.paths());
        let m = single_swap(3);
        assert!(!check_nested_rays(&m));
        assert_eq!(extract_matching(&m), Err(DynamicsError::SNotEmpty(2)));
    }

    #[test]
    fn random_generator() {
        let spec = RandomSpec {
            paths: 2,
            window: 50,
            k: 5,
            transpositions: 0,
        };
        assert!(random_kmatching(&spec, 9).unwrap().is_standard());
        let spec = RandomSpec {
            transpositions: 50,
            ..spec
        };
        let m = random_kmatching(&spec, 1).unwrap();
        m.validate().unwrap();
        assert_eq!(m, random_kmatching(&spec, 1).unwrap());
        assert_eq!(
            random_kmatching(&RandomSpec::new(50, 4), 1),
            Err(DynamicsError::InvalidK(4))
        );
        assert!(matches!(
            random_kmatching(&RandomSpec::new(3, 5), 1),
            Err(DynamicsError::InvalidWindow { .. })
        ));
    }

    #[test]
    fn bridge_bounds() {
        assert_eq!(bridge_k_bound(0), 1);
        assert_eq!(bridge_k_bound(1), 3);
        assert_eq!(bridge_k_bound(4), 9);
    }

    fn segment() -> (SchreierGraph, ComponentCoordinates) {
        let g = SchreierGraph::new(make_alpha(AlphaSpec::SQRT2_MINUS_1).unwrap());
        let view = g
            .explore_component(&GVertex::i(AlgebraicPoint::ratio(3, 10)), 40)
            .unwrap();
        let coords = ComponentCoordinates::from_view(&view).unwrap();
        (g, coords)
    }

    #[test]
    fn elements_along_segment() {
        let (g, coords) = segment();
        let (first, last) = coords.span();
        for from in first..=last {
            for to in [first, (first + last) / 2, last] {
                let e = coords.element_between(&g, from, to).unwrap();
                assert_eq!(
                    &e.apply(&coords.vertex(from).unwrap().point),
                    &coords.vertex(to).unwrap().point
                );
            }
        }
    }

    #[test]
    fn assignments() {
        let (g, coords) = segment();
        let (first, _) = coords.span();
        let a0 = first + first.rem_euclid(2) + 10;
        // Each vertex to its right neighbor: the standard matching.
        let pieces: Vec<Piece> = (0..8)
            .map(|i| {
                let a = a0 + 2 * i;
                Piece {
                    start: a,
                    end: a,
                    element: coords.element_between(&g, a, a + 1).unwrap(),
                }
            })
            .collect();
        let m = kmatching_from_assignment(&coords, &pieces, 0).unwrap();
        assert!(m.is_standard());
        assert_eq!(m.k() % 2, 1);

        // Swap two neighboring blocks of one vertex each.
        let swap = [
            Piece {
                start: a0,
                end: a0,
                element: coords.element_between(&g, a0, a0 + 3).unwrap(),
            },
            Piece {
                start: a0 + 2,
                end: a0 + 2,
                element: coords.element_between(&g, a0 + 2, a0 + 1).unwrap(),
            },
        ];
        let m = kmatching_from_assignment(&coords, &swap, 0).unwrap();
        assert_eq!(cost(&m), 2);
        m.validate().unwrap();

        let overlap = [
            swap[0],
            Piece {
                start: a0 - 2,
                end: a0,
                ..swap[1]
            },
        ];
        assert!(matches!(
            kmatching_from_assignment(&coords, &overlap, 0),
            Err(DynamicsError::NotAMatching(_))
        ));
        let collide = [
            swap[0],
            Piece {
                start: a0 + 2,
                end: a0 + 2,
                element: swap[0].element,
            },
        ];
        assert!(matches!(
            kmatching_from_assignment(&coords, &collide, 0),
            Err(DynamicsError::NotAMatching(_))
        ));
    }

    #[test]
    fn bridge_runs() {
        let g = SchreierGraph::new(make_alpha(AlphaSpec::SQRT2_MINUS_1).unwrap());
        let out = bridge_instance(
            &g,
            &GVertex::i(AlgebraicPoint::ratio(3, 10)),
            200,
            &RandomSpec::new(40, 5),
            2,
        )
        .unwrap()
        .unwrap();
        assert!(out.extracted_standard);
        assert!(out.max_displacement <= out.bridge_k as i64);
        assert!(out.total_s <= out.initial_cost);
    }
}
