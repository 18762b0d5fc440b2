//! Exact model of the four-isometry action on `[0, 1]` and `[α, 1 + α]`:
//! the bipartite Schreier graph between the two intervals, constructive
//! distance certificates for group elements, and the matching-improvement
//! dynamics on systems of bi-infinite paths.

pub mod algebra;
pub mod dynamics;
pub mod graph;
pub mod group;
pub mod pathcert;

pub use algebra::{make_alpha, AlgebraicPoint, AlphaContext, AlphaSpec, Rational};
pub use graph::{GVertex, SchreierGraph, Side};
pub use group::{Generator, GroupElement, Sign};
