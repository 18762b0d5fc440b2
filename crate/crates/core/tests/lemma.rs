use std::time::Instant;

use imatch_core::algebra::{make_alpha, AlgebraicPoint, AlphaSpec};
use imatch_core::graph::{GVertex, SchreierGraph};
use imatch_core::group::{enumerate_ball, Generator, GroupElement};
use imatch_core::pathcert::{build_path, validate_path, verify_lemma, DEFAULT_BFS_BUDGET};

fn graph(spec: AlphaSpec) -> SchreierGraph {
    SchreierGraph::new(make_alpha(spec).unwrap())
}

#[test]
fn radius_eight_is_clean() {
    let g = graph(AlphaSpec::SQRT2_MINUS_1);
    let t = Instant::now();
    let report = verify_lemma(&g, 8, 200, 0, DEFAULT_BFS_BUDGET).unwrap();
    eprintln!(
        "radius 8: {} checks over {} elements in {:?}",
        report.checks,
        report.elements_checked,
        t.elapsed()
    );
    assert_eq!(report.ball_size, 143);
    assert!(report.is_clean(), "{:?}", report.violations);
    assert_eq!(report.wrap_reductions, 0);
    for (b, d) in &report.max_dist_by_b {
        assert!(*d as u64 <= 2 * b);
        assert_eq!(d % 2, 0);
    }
    for (b, len) in &report.max_path_by_b {
        assert!(*len as u64 <= 2 * b);
        assert!(report.max_dist_by_b[b] <= *len);
    }
}

#[test]
fn other_alphas_are_clean() {
    for spec in [AlphaSpec::SQRT3_MINUS_1, AlphaSpec::INV_GOLDEN] {
        let report = verify_lemma(&graph(spec), 6, 60, 11, DEFAULT_BFS_BUDGET).unwrap();
        assert!(report.is_clean(), "{spec}: {:?}", report.violations);
    }
}

#[test]
fn paths_are_even_and_reductions_monotone() {
    let g = graph(AlphaSpec::SQRT2_MINUS_1);
    for element in enumerate_ball(6).unwrap() {
        for k in 0..=20 {
            let y = AlgebraicPoint::ratio(k, 20);
            let Ok(path) = build_path(&g, &element, &y) else {
                continue;
            };
            validate_path(&g, &path).unwrap();
            assert_eq!(path.length() % 2, 0);
            for step in &path.steps {
                assert_eq!(step.reduced.b.unsigned_abs() + 1, step.element.b.unsigned_abs());
                assert!(step.connector_len <= 2);
            }
            let bfs = g
                .bfs_distance(
                    &GVertex::i(y.clone()),
                    &GVertex::i(element.apply(&y)),
                    DEFAULT_BFS_BUDGET,
                )
                .unwrap()
                .unwrap();
            assert!(bfs <= path.length());
        }
    }
}

#[test]
fn translation_distance_matches_bfs() {
    let g = graph(AlphaSpec::SQRT2_MINUS_1);
    let t = Generator::T.element();
    let path = build_path(&g, &t, &AlgebraicPoint::zero()).unwrap();
    assert_eq!(path.length(), 2);
    let d = g
        .bfs_distance(
            &GVertex::i(AlgebraicPoint::zero()),
            &GVertex::i(t.apply(&AlgebraicPoint::zero())),
            100,
        )
        .unwrap();
    assert_eq!(d, Some(2));
    assert_eq!(
        GroupElement::IDENTITY.apply(&AlgebraicPoint::one()),
        AlgebraicPoint::one()
    );
}
