//! Explicit paths in `G` between an `I`-point `y` and its image `γ(y)`,
//! of length at most `2|b|` for `γ = (a, b, c)`.
//!
//! The construction peels one unit off `|b|` at a time: `γ(y)` is moved to
//! an intermediate point `z = h(γ(y))` for a short isometry `h` chosen by
//! the sign of `b` and the position of `γ(y)`, so that `h∘γ` has
//! `|b| − 1` and `z` is within two edges of `γ(y)`. At `b = 0` the element
//! fixes `y`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::AlgebraicPoint;
use crate::graph::{random_unit_rational, GVertex, GraphError, SchreierGraph, Side};
use crate::group::{enumerate_ball, GroupElement, GroupError, Sign};

/// Expansion budget for the ≤ 2-edge connector searches.
const CONNECTOR_BUDGET: usize = 16;
pub const DEFAULT_BFS_BUDGET: usize = 10_000;

/// How the intermediate point `z` is obtained from `w = γ(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// `b < 0`, `w ≤ 1 − 2α`: `z = w + 2α`.
    ShiftUp,
    /// `b < 0`, `w > 1 − 2α`: `z = 2 − (w + 2α)`.
    ShiftUpReflect,
    /// `b > 0`, `w > 2α`: `z = w − 2α`.
    ShiftDown,
    /// `b > 0`, `w ≤ 2α`: `z = 2α − w`.
    ReflectAlpha,
    /// `b < 0` and `2 − (w + 2α) < 0` (only for `α > 1/2`): `z = w + 2α − 2`.
    WrapUp,
    /// `b > 0` and `2α − w > 1` (only for `α > 1/2`): `z = w − 2α + 2`.
    WrapDown,
}

impl Reduction {
    /// The isometry `h` with `z = h(w)`.
    pub fn multiplier(self) -> GroupElement {
        match self {
            Reduction::ShiftUp => GroupElement::new(Sign::Plus, 1, 0),
            Reduction::ShiftUpReflect => GroupElement::new(Sign::Minus, -1, 1),
            Reduction::ShiftDown => GroupElement::new(Sign::Plus, -1, 0),
            Reduction::ReflectAlpha => GroupElement::new(Sign::Minus, 1, 0),
            Reduction::WrapUp => GroupElement::new(Sign::Plus, 1, -1),
            Reduction::WrapDown => GroupElement::new(Sign::Plus, -1, 1),
        }
    }

    pub fn is_wrap(self) -> bool {
        matches!(self, Reduction::WrapUp | Reduction::WrapDown)
    }
}

/// One inductive step: `element` sends the anchor to `target`; the reduced
/// element sends it to `z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionStep {
    pub element: GroupElement,
    pub rule: Reduction,
    pub reduced: GroupElement,
    pub z: AlgebraicPoint,
    pub target: AlgebraicPoint,
    pub connector_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertifiedPath {
    pub element: GroupElement,
    pub anchor: AlgebraicPoint,
    /// Alternating `I`/`J` vertices from `(I, y)` to `(I, γ(y))`.
    pub vertices: Vec<GVertex>,
    /// Steps from the outermost element inwards.
    pub steps: Vec<ReductionStep>,
}

impl CertifiedPath {
    pub fn length(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn bound(&self) -> usize {
        2 * self.element.b.unsigned_abs() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum LemmaFinding {
    /// No path of at most two edges joins `z` to `γ(y)`.
    ConnectorMissing {
        element: GroupElement,
        anchor: AlgebraicPoint,
        z: AlgebraicPoint,
        target: AlgebraicPoint,
    },
    /// An element with `b = 0` moves a point of `[0,1]` inside `[0,1]`.
    BaseCaseMoves {
        element: GroupElement,
        anchor: AlgebraicPoint,
    },
    /// No reduction keeps the intermediate point inside `[0,1]`.
    IntermediateOutOfRange {
        element: GroupElement,
        anchor: AlgebraicPoint,
        z: AlgebraicPoint,
    },
    /// A reduction failed to lower `|b|` by exactly one.
    NonMonotoneReduction {
        element: GroupElement,
        reduced: GroupElement,
    },
    /// Graph distance above `2|b|`, or not found within the BFS budget.
    LemmaViolation {
        element: GroupElement,
        anchor: AlgebraicPoint,
        observed: Option<usize>,
        bound: usize,
    },
    /// The constructed path is broken or too long.
    InvalidPath {
        element: GroupElement,
        anchor: AlgebraicPoint,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("precondition violated: anchor {anchor} or its image under {element} lies outside [0, 1]")]
    PreconditionViolated {
        element: GroupElement,
        anchor: Box<AlgebraicPoint>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("finding: {0:?}")]
    Finding(Box<LemmaFinding>),
}

fn finding(f: LemmaFinding) -> CertError {
    CertError::Finding(Box::new(f))
}

/// Chooses the reduction for `element` at the current image `w`, following
/// the threshold cases, and falls back to a wrap rule when the threshold
/// rule's `z` leaves `[0, 1]`.
fn choose_reduction(graph: &SchreierGraph, element: &GroupElement, w: &AlgebraicPoint) -> (Reduction, AlgebraicPoint) {
    let ctx = graph.ctx();
    let primary = if element.b < 0 {
        let threshold = AlgebraicPoint::from_ints(1, -2);
        if ctx.compare(w, &threshold) != Ordering::Greater {
            Reduction::ShiftUp
        } else {
            Reduction::ShiftUpReflect
        }
    } else {
        let threshold = AlgebraicPoint::from_ints(0, 2);
        if ctx.compare(w, &threshold) == Ordering::Greater {
            Reduction::ShiftDown
        } else {
            Reduction::ReflectAlpha
        }
    };
    let z = primary.multiplier().apply(w);
    if graph.in_i(&z) {
        return (primary, z);
    }
    let wrap = if element.b < 0 {
        Reduction::WrapUp
    } else {
        Reduction::WrapDown
    };
    (wrap, wrap.multiplier().apply(w))
}

/// Builds the certified path from `(I, y)` to `(I, γ(y))`.
pub fn build_path(
    graph: &SchreierGraph,
    element: &GroupElement,
    anchor: &AlgebraicPoint,
) -> Result<CertifiedPath, CertError> {
    let image = element.apply(anchor);
    if !graph.in_i(anchor) || !graph.in_i(&image) {
        return Err(CertError::PreconditionViolated {
            element: *element,
            anchor: Box::new(anchor.clone()),
        });
    }

    // Descend to |b| = 0, recording each step's points.
    let mut steps = Vec::new();
    let mut current = *element;
    let mut w = image;
    while current.b != 0 {
        let (rule, z) = choose_reduction(graph, &current, &w);
        let reduced = rule.multiplier().compose(&current);
        if reduced.b.unsigned_abs() + 1 != current.b.unsigned_abs() {
            return Err(finding(LemmaFinding::NonMonotoneReduction {
                element: current,
                reduced,
            }));
        }
        if !graph.in_i(&z) {
            return Err(finding(LemmaFinding::IntermediateOutOfRange {
                element: current,
                anchor: anchor.clone(),
                z,
            }));
        }
        steps.push(ReductionStep {
            element: current,
            rule,
            reduced,
            z: z.clone(),
            target: w,
            connector_len: 0,
        });
        current = reduced;
        w = z;
    }
    if w != *anchor {
        return Err(finding(LemmaFinding::BaseCaseMoves {
            element: current,
            anchor: anchor.clone(),
        }));
    }

    // Ascend: join each z to its target by a connector of at most two edges.
    let mut vertices = vec![GVertex::i(anchor.clone())];
    for step in steps.iter_mut().rev() {
        let from = GVertex::i(step.z.clone());
        let to = GVertex::i(step.target.clone());
        let connector = graph
            .shortest_path(&from, &to, CONNECTOR_BUDGET, Some(2))?
            .ok_or_else(|| {
                finding(LemmaFinding::ConnectorMissing {
                    element: step.element,
                    anchor: anchor.clone(),
                    z: step.z.clone(),
                    target: step.target.clone(),
                })
            })?;
        step.connector_len = connector.len() - 1;
        vertices.extend(connector.into_iter().skip(1));
    }

    Ok(CertifiedPath {
        element: *element,
        anchor: anchor.clone(),
        vertices,
        steps,
    })
}

/// Checks a path edge by edge against the graph, plus its endpoints and the
/// `2|b|` bound.
pub fn validate_path(graph: &SchreierGraph, path: &CertifiedPath) -> Result<(), String> {
    let first = GVertex::i(path.anchor.clone());
    let last = GVertex::i(path.element.apply(&path.anchor));
    if path.vertices.first() != Some(&first) {
        return Err(format!("path starts at {:?}, expected {first}", path.vertices.first()));
    }
    if path.vertices.last() != Some(&last) {
        return Err(format!("path ends at {:?}, expected {last}", path.vertices.last()));
    }
    for pair in path.vertices.windows(2) {
        let (u, v) = (&pair[0], &pair[1]);
        if u.side == v.side {
            return Err(format!("consecutive vertices {u} and {v} on the same side"));
        }
        let adjacent = graph
            .neighbors(u)
            .map_err(|e| e.to_string())?
            .iter()
            .any(|e| e.other(u) == *v);
        if !adjacent {
            return Err(format!("{u} and {v} are not adjacent"));
        }
    }
    if path.length() > path.bound() {
        return Err(format!("length {} exceeds 2|b| = {}", path.length(), path.bound()));
    }
    Ok(())
}

/// `{y ∈ [0,1] : γ(y) ∈ [0,1]}` as a closed interval, if nonempty.
pub fn feasible_anchors(graph: &SchreierGraph, element: &GroupElement) -> Option<(AlgebraicPoint, AlgebraicPoint)> {
    let ctx = graph.ctx();
    let inv = element.inverse();
    let a = inv.apply(&AlgebraicPoint::zero());
    let b = inv.apply(&AlgebraicPoint::one());
    let lo = ctx.max(ctx.min(&a, &b), &AlgebraicPoint::zero()).clone();
    let hi = ctx.min(ctx.max(&a, &b), &AlgebraicPoint::one()).clone();
    (ctx.compare(&lo, &hi) != Ordering::Greater).then_some((lo, hi))
}

/// Deterministic anchor set for `element`: the interval endpoints, the
/// preimages of the thresholds `2α` and `1 − 2α` and their `±1/1000`
/// perturbations, then seeded random points, up to `count` distinct anchors.
pub fn sample_anchors(
    graph: &SchreierGraph,
    element: &GroupElement,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<AlgebraicPoint> {
    let Some((lo, hi)) = feasible_anchors(graph, element) else {
        return Vec::new();
    };
    let mut anchors = BTreeSet::new();
    let mut ordered = Vec::new();
    let mut push = |y: AlgebraicPoint, anchors: &mut BTreeSet<AlgebraicPoint>| {
        if ordered.len() < count && graph.ctx().within(&y, &lo, &hi) && anchors.insert(y.clone()) {
            ordered.push(y);
        }
    };
    push(lo.clone(), &mut anchors);
    push(hi.clone(), &mut anchors);
    let inv = element.inverse();
    let eps = AlgebraicPoint::ratio(1, 1000);
    for threshold in [AlgebraicPoint::from_ints(0, 2), AlgebraicPoint::from_ints(1, -2)] {
        for t in [threshold.clone(), &threshold + &eps, &threshold - &eps] {
            push(inv.apply(&t), &mut anchors);
        }
    }
    if lo != hi {
        let width = &hi - &lo;
        // A bounded number of draws; collisions are vanishingly rare.
        for _ in 0..count.saturating_mul(2) {
            let s = random_unit_rational(rng);
            push(&lo + &width.scale(&s.u), &mut anchors);
        }
    }
    ordered
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub radius: usize,
    pub ball_size: usize,
    pub seed: u64,
    pub samples_per_element: usize,
    pub bfs_budget: usize,
    /// Elements with at least one admissible anchor.
    pub elements_checked: usize,
    pub checks: usize,
    pub violations: Vec<LemmaFinding>,
    /// Largest BFS distance seen, keyed by `|b|`.
    pub max_dist_by_b: BTreeMap<u64, usize>,
    /// Largest certified path length seen, keyed by `|b|`.
    pub max_path_by_b: BTreeMap<u64, usize>,
    pub reductions_used: BTreeMap<Reduction, usize>,
    /// Steps where the threshold rule's intermediate point left `[0,1]`.
    pub wrap_reductions: usize,
}

impl LemmaReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the `2|b|` bound on every element of the ball of radius `radius`
/// and up to `samples` anchors per element, both by BFS and by the
/// constructed path.
pub fn verify_lemma(
    graph: &SchreierGraph,
    radius: usize,
    samples: usize,
    seed: u64,
    bfs_budget: usize,
) -> Result<LemmaReport, CertError> {
    let ball = enumerate_ball(radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LemmaReport {
        radius,
        ball_size: ball.len(),
        seed,
        samples_per_element: samples,
        bfs_budget,
        ..LemmaReport::default()
    };
    for element in &ball {
        let anchors = sample_anchors(graph, element, samples, &mut rng);
        if anchors.is_empty() {
            continue;
        }
        report.elements_checked += 1;
        let abs_b = element.b.unsigned_abs();
        let bound = 2 * abs_b as usize;
        for y in anchors {
            report.checks += 1;
            let from = GVertex::new(Side::I, y.clone());
            let to = GVertex::new(Side::I, element.apply(&y));
            let distance = graph.bfs_distance(&from, &to, bfs_budget)?;
            match distance {
                Some(d) if d <= bound => {
                    let m = report.max_dist_by_b.entry(abs_b).or_default();
                    *m = (*m).max(d);
                }
                observed => report.violations.push(LemmaFinding::LemmaViolation {
                    element: *element,
                    anchor: y.clone(),
                    observed,
                    bound,
                }),
            }
            let path = match build_path(graph, element, &y) {
                Ok(path) => path,
                Err(CertError::Finding(f)) => {
                    report.violations.push(*f);
                    continue;
                }
                Err(e) => return Err(e),
            };
            for step in &path.steps {
                *report.reductions_used.entry(step.rule).or_default() += 1;
                report.wrap_reductions += usize::from(step.rule.is_wrap());
            }
            let problem = validate_path(graph, &path).err().or_else(|| {
                distance
                    .filter(|d| *d > path.length())
                    .map(|d| format!("BFS distance {d} exceeds path length {}", path.length()))
            });
            if let Some(reason) = problem {
                report.violations.push(LemmaFinding::InvalidPath {
                    element: *element,
                    anchor: y,
                    reason,
                });
                continue;
            }
            let m = report.max_path_by_b.entry(abs_b).or_default();
            *m = (*m).max(path.length());
        }
    }
    Ok(report)
}
