use std::collections::{BTreeMap, BTreeSet};

use imatch_core::dynamics::*;
use proptest::prelude::*;

/// All-pairs scan with rays materialized as finite coordinate sets.
fn brute_force_s(m: &KMatching) -> BTreeSet<(PathId, i64)> {
    let mut s = BTreeSet::new();
    for (&id, p) in m.paths() {
        let (lo, hi) = (p.lo(), p.hi());
        let reach = hi - lo + 10;
        let ray = |x: i64| -> BTreeSet<i64> {
            let d = (p.partner(x) - x).signum();
            (0..=reach).map(|i| x + d * i).collect()
        };
        let a_coords: Vec<i64> = (lo - 4..=hi + 4).filter(|x| x.rem_euclid(2) == 0).collect();
        for &x in &a_coords {
            for &y in &a_coords {
                if (x - y).abs() == 2 && ray(x).contains(&y) && ray(y).contains(&x) {
                    s.insert((id, x));
                }
            }
        }
    }
    s
}

/// Every pair of rays over the window is nested.
fn brute_force_nested(m: &KMatching) -> bool {
    m.paths().iter().all(|(&id, p)| {
        let rays: Vec<Ray> = (p.lo()..=p.hi()).step_by(2).map(|a| m.ray(id, a)).collect();
        rays.iter()
            .all(|r| rays.iter().all(|q| r.contains_ray(q) || q.contains_ray(r)))
    })
}

fn example(k: u32, targets: Vec<i64>) -> KMatching {
    KMatching::new(k, BTreeMap::from([(0, PathMatching::from_targets(0, targets))])).unwrap()
}

#[test]
fn three_vertex_example_against_oracle() {
    let m = example(3, vec![3, 5, 1]);
    assert_eq!(compute_s(&m), brute_force_s(&m));
    assert_eq!(compute_s(&m).len(), 2);
}

#[test]
fn golden_iteration_count() {
    let m0 = random_kmatching(&RandomSpec::new(200, 7), 0).unwrap();
    assert_eq!(cost(&m0), 280);
    let (fin, trace) = run_dynamics(&m0, cost(&m0) as usize).unwrap();
    assert_eq!(trace.iterations(), 6);
    assert_eq!(trace.total_s(), 210);
    assert!(fin.is_standard());
}

#[test]
fn improve_trace_matches_recomputation() {
    let m0 = random_kmatching(&RandomSpec::new(80, 5), 11).unwrap();
    let (_, trace) = run_dynamics(&m0, 1000).unwrap();
    let mut m = m0;
    for step in &trace.steps {
        assert_eq!(cost(&m), step.cost);
        assert_eq!(compute_s(&m).len(), step.s_size);
        m = improve(&m).unwrap();
        assert_eq!(cost(&m), step.cost_after);
    }
    assert!(compute_s(&m).is_empty());
}

#[test]
fn multi_path_systems() {
    let spec = RandomSpec {
        paths: 4,
        window: 60,
        k: 9,
        transpositions: 120,
    };
    let m0 = random_kmatching(&spec, 8).unwrap();
    let (fin, trace) = run_dynamics(&m0, cost(&m0) as usize).unwrap();
    assert_eq!(fin.windows(), m0.windows());
    assert!(trace.total_s() <= cost(&m0));
    assert_eq!(extract_matching(&fin).unwrap().k(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn s_matches_oracle(seed in any::<u64>(), half in 2usize..=20, kk in 0u32..5) {
        let k = 2 * kk + 1;
        let window = (2 * half).max(k as usize + 1);
        let m = random_kmatching(&RandomSpec::new(window, k), seed).unwrap();
        prop_assert_eq!(compute_s(&m), brute_force_s(&m));
        for (_, a, b) in phi_pairs(&m) {
            prop_assert!(phi(&m, 0, a, b) && phi(&m, 0, b, a));
        }
    }

    #[test]
    fn dynamics_invariants(seed in any::<u64>(), half in 2usize..=60, kk in 0u32..5) {
        let k = 2 * kk + 1;
        let window = (2 * half).max(k as usize + 1);
        let m0 = random_kmatching(&RandomSpec::new(window, k), seed).unwrap();
        let c0 = cost(&m0);
        let mut m = m0.clone();
        let mut iters = 0u64;
        let mut total = 0u64;
        while !compute_s(&m).is_empty() {
            let s = compute_s(&m).len() as u64;
            let next = improve(&m).unwrap();
            next.validate().unwrap();
            prop_assert_eq!(next.windows(), m.windows());
            prop_assert!(cost(&next) + s <= cost(&m));
            total += s;
            iters += 1;
            m = next;
        }
        prop_assert!(iters <= c0);
        prop_assert!(total <= c0);
        prop_assert!(check_nested_rays(&m));
        prop_assert!(brute_force_nested(&m));
        prop_assert!(extract_matching(&m).unwrap().is_standard());
        let (fin, trace) = run_dynamics(&m0, c0 as usize).unwrap();
        prop_assert_eq!(fin, m);
        prop_assert_eq!(trace.total_s(), total);
    }

    #[test]
    fn nested_check_matches_pairwise(seed in any::<u64>()) {
        let m = random_kmatching(&RandomSpec::new(30, 5), seed).unwrap();
        prop_assert_eq!(check_nested_rays(&m), brute_force_nested(&m));
    }
}
