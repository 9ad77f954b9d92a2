use proptest::prelude::*;
use strainmap_core::kplane::CurvatureBound;
use strainmap_core::mspace::{sample_euclid_box, sample_sphere, FiniteMetricSpace};
use strainmap_core::strainer::{
    find_strainer, nested_strainers, rlong_radius, strain_quality, strained_set, SearchOptions, Strainer,
    DEFAULT_BUDGET,
};

fn k(v: f64) -> CurvatureBound {
    CurvatureBound::new(v).unwrap()
}

fn quality(space: &FiniteMetricSpace, s: &Strainer) -> f64 {
    strain_quality(space, k(0.0), s).unwrap().delta_star
}

/// Best quality over every strainer with `n` disjoint ordered pairs at `p`.
fn exhaustive_best(space: &FiniteMetricSpace, p: usize, n: usize) -> f64 {
    let others: Vec<usize> = (0..space.len()).filter(|&x| x != p).collect();
    let mut best = f64::INFINITY;
    let mut stack: Vec<(usize, usize)> = Vec::new();
    fn rec(space: &FiniteMetricSpace, p: usize, n: usize, others: &[usize], stack: &mut Vec<(usize, usize)>, best: &mut f64) {
        if stack.len() == n {
            let s = Strainer::new(p, stack.clone());
            *best = best.min(quality(space, &s));
            return;
        }
        for &a in others {
            for &b in others {
                if a == b || stack.iter().any(|&(x, y)| [x, y].contains(&a) || [x, y].contains(&b)) {
                    continue;
                }
                // Pairs in increasing order of `a` up to swapping within a pair.
                if stack.last().is_some_and(|&(x, y)| a.min(b) <= x.min(y)) {
                    continue;
                }
                stack.push((a, b));
                rec(space, p, n, others, stack, best);
                stack.pop();
            }
        }
    }
    rec(space, p, n, &others, &mut stack, &mut best);
    best
}

fn with_corners(n: usize, seed: u64) -> (FiniteMetricSpace, usize) {
    let s = sample_euclid_box(&[1.0, 1.0], n, seed).unwrap();
    let mut pts = s.coords().unwrap().points.clone();
    pts.extend([vec![0.5, 0.5], vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
    (FiniteMetricSpace::from_euclidean_points(vec![1.0, 1.0], pts).unwrap(), n)
}

#[test]
fn box_center_has_a_plane_strainer() {
    let (s, center) = with_corners(200, 1);
    let found = find_strainer(&s, k(0.0), center, 2, 0.2, None, 3, &SearchOptions::default()).unwrap();
    assert!(found.delta_star < 0.2);
    assert_eq!(quality(&s, &found.strainer), found.delta_star);
    assert_eq!(found.rlong_radius, rlong_radius(&s, &found.strainer, 0.2));
}

#[test]
fn box_center_strainer_exists_exhaustively() {
    let (s, center) = with_corners(20, 2);
    assert!(exhaustive_best(&s, center, 2) < 0.2);
    assert!(find_strainer(&s, k(0.0), center, 2, 0.2, None, 3, &SearchOptions::default()).is_some());
}

#[test]
fn plane_has_no_three_frame() {
    let s = sample_euclid_box(&[1.0, 1.0], 12, 4).unwrap();
    for p in [0, 5, 11] {
        assert!(exhaustive_best(&s, p, 3) >= 0.1);
        assert!(find_strainer(&s, k(0.0), p, 3, 0.1, None, 5, &SearchOptions::default()).is_none());
    }
}

#[test]
fn single_pair_matches_exhaustive() {
    let s = sample_euclid_box(&[1.0, 1.0], 30, 6).unwrap();
    for p in 0..s.len() {
        let delta = 0.3;
        let exists = exhaustive_best(&s, p, 1) < delta;
        let found = find_strainer(&s, k(0.0), p, 1, delta, None, 7, &SearchOptions::default());
        assert_eq!(exists, found.is_some(), "point {p}");
    }
}

#[test]
fn sphere_nested_pair_rechecks() {
    let s = sample_sphere(1.0, 600, 8).unwrap();
    let (delta, r) = (0.2, 0.4);
    let pair = nested_strainers(&s, k(1.0), 0, 2, delta, r, 9).expect("nested pair at point 0");
    assert!(pair.verify(&s, k(1.0), delta, r));
    let long = &pair.long.strainer;
    let short = &pair.short.strainer;
    assert!(long.min_arm(&s) > r / delta);
    assert!(short.min_arm(&s) > r);
    assert!(short.max_arm(&s) / long.min_arm(&s) < delta);
    for st in [long, short] {
        assert!(strain_quality(&s, k(1.0), st).unwrap().delta_star < delta);
    }
}

#[test]
fn impossible_length_gives_nothing() {
    let s = sample_sphere(1.0, 200, 10).unwrap();
    assert!(nested_strainers(&s, k(1.0), 0, 2, 0.2, 1.0, 1).is_none());
    assert!(strained_set(&s, k(1.0), 2, 0.2, 1.0, 1, DEFAULT_BUDGET).is_empty());
}

#[test]
fn sphere_is_homogeneous() {
    let s = sample_sphere(1.0, 400, 11).unwrap();
    let set = strained_set(&s, k(1.0), 2, 0.2, 0.4, 12, DEFAULT_BUDGET);
    assert_eq!(set.len(), s.len());
    for sp in &set {
        let q = strain_quality(&s, k(1.0), &sp.witness.strainer).unwrap();
        assert!(q.delta_star < 0.2);
        assert!(rlong_radius(&s, &sp.witness.strainer, 0.2) > 0.4);
    }
}

#[test]
fn box_with_far_arms_has_nested_pair() {
    let base = sample_euclid_box(&[1.0, 1.0], 300, 13).unwrap();
    let mut pts = base.coords().unwrap().points.clone();
    for (x, y) in [(30.0, 0.5), (-29.0, 0.5), (0.5, 30.0), (0.5, -29.0)] {
        pts.push(vec![x, y]);
    }
    let s = FiniteMetricSpace::from_euclidean_points(vec![60.0, 60.0], pts).unwrap();
    let center = (0..300).min_by(|&a, &b| {
        let d = |i: usize| s.coords().unwrap().points[i].iter().map(|c| (c - 0.5) * (c - 0.5)).sum::<f64>();
        d(a).total_cmp(&d(b))
    });
    let pair = nested_strainers(&s, k(0.0), center.unwrap(), 2, 0.2, 0.1, 14).expect("nested pair");
    assert!(pair.verify(&s, k(0.0), 0.2, 0.1));
}

fn strainer_case() -> impl Strategy<Value = (u64, Vec<(usize, usize)>)> {
    (0u64..500, Just(vec![(1usize, 2usize), (3, 4), (5, 6)]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quality_ignores_swaps_and_order((seed, pairs) in strainer_case(), swaps in prop::collection::vec(any::<bool>(), 3), rot in 0usize..3) {
        let s = sample_euclid_box(&[1.0, 1.0, 1.0], 10, seed).unwrap();
        let base = quality(&s, &Strainer::new(0, pairs.clone()));
        let mut moved: Vec<(usize, usize)> = pairs.iter().zip(&swaps).map(|(&(a, b), &sw)| if sw { (b, a) } else { (a, b) }).collect();
        moved.rotate_left(rot);
        let other = quality(&s, &Strainer::new(0, moved));
        prop_assert!((base - other).abs() < 1e-13, "{base} vs {other}");
    }

    #[test]
    fn dropping_a_pair_never_hurts((seed, pairs) in strainer_case(), drop in 0usize..3) {
        let s = sample_euclid_box(&[1.0, 1.0, 1.0], 10, seed).unwrap();
        let full = quality(&s, &Strainer::new(0, pairs.clone()));
        let mut fewer = pairs.clone();
        fewer.remove(drop);
        prop_assert!(quality(&s, &Strainer::new(0, fewer)) <= full);
    }

    #[test]
    fn strained_set_shrinks_with_r(seed in 0u64..50, r1 in 0.01f64..0.6, r2 in 0.01f64..0.6) {
        let s = sample_euclid_box(&[1.0, 1.0], 60, seed).unwrap();
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let small: Vec<usize> = strained_set(&s, k(0.0), 2, 0.5, hi, seed, 2000).into_iter().map(|p| p.point).collect();
        let big: Vec<usize> = strained_set(&s, k(0.0), 2, 0.5, lo, seed, 2000).into_iter().map(|p| p.point).collect();
        prop_assert!(small.iter().all(|p| big.contains(p)));
    }
}
