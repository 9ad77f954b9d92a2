use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strainmap_core::chart::{
    angle_consistency_defect, center_of_mass, distortion, image_angle, mass_vector_residual, Chart, WeightVector,
};
use strainmap_core::kplane::CurvatureBound;
use strainmap_core::mspace::{sample_euclid_box, FiniteMetricSpace};
use strainmap_core::strainer::Strainer;

/// Image-angle envelope for a given arm-angle defect on planar samples with
/// far arms. Frozen from pilot runs (seeds 1–3, 2·10⁵ segment pairs each):
/// observed maxima plus margin.
const KAPPA_HAT: [(f64, f64); 7] =
    [(0.01, 0.025), (0.02, 0.035), (0.05, 0.07), (0.1, 0.125), (0.2, 0.23), (0.5, 0.54), (1.0, 1.05)];

fn kappa_hat(eps: f64) -> f64 {
    KAPPA_HAT.iter().find(|&&(e, _)| eps <= e).map_or(std::f64::consts::PI, |&(_, v)| v)
}

fn k0() -> CurvatureBound {
    CurvatureBound::new(0.0).unwrap()
}

struct Planar {
    space: FiniteMetricSpace,
    /// Number of sample points; arm ids start here.
    n: usize,
}

impl Planar {
    /// Box sample plus far arms: axis-aligned ones at `n..n+4` and ones
    /// rotated by 0.5 rad at `n+4..n+8`, all about the box center.
    fn new(n: usize, seed: u64) -> Self {
        let base = sample_euclid_box(&[1.0, 1.0], n, seed).unwrap();
        let mut pts = base.coords().unwrap().points.clone();
        let (c, s) = (0.5f64.cos() * 100.0, 0.5f64.sin() * 100.0);
        for v in [[100.0, 0.0], [-100.0, 0.0], [0.0, 100.0], [0.0, -100.0], [c, s], [-c, -s], [-s, c], [s, -c]] {
            pts.push(vec![0.5 + v[0], 0.5 + v[1]]);
        }
        let space = FiniteMetricSpace::from_euclidean_points(vec![300.0, 300.0], pts).unwrap();
        Self { space, n }
    }

    fn xy(&self, i: usize) -> [f64; 2] {
        let p = &self.space.coords().unwrap().points[i];
        [p[0], p[1]]
    }

    fn nearest(&self, x: f64, y: f64) -> usize {
        let d = |i: usize| {
            let p = self.xy(i);
            (p[0] - x).powi(2) + (p[1] - y).powi(2)
        };
        (0..self.n).min_by(|&a, &b| d(a).total_cmp(&d(b))).unwrap()
    }

    fn strainer(&self, base: usize) -> Strainer {
        Strainer::new(base, vec![(self.n, self.n + 1), (self.n + 2, self.n + 3)])
    }

    fn rotated_strainer(&self, base: usize) -> Strainer {
        Strainer::new(base, vec![(self.n + 4, self.n + 5), (self.n + 6, self.n + 7)])
    }

    /// Largest distance from a point of the unit square to the sample,
    /// scanned on a 201×201 grid.
    fn fill_distance(&self) -> f64 {
        let pts: Vec<[f64; 2]> = (0..self.n).map(|i| self.xy(i)).collect();
        let mut worst = 0.0f64;
        for gx in 0..=200 {
            for gy in 0..=200 {
                let (x, y) = (gx as f64 / 200.0, gy as f64 / 200.0);
                let near = pts.iter().map(|p| (p[0] - x).powi(2) + (p[1] - y).powi(2)).fold(f64::INFINITY, f64::min);
                worst = worst.max(near.sqrt());
            }
        }
        worst
    }

    fn spacing(&self) -> f64 {
        let sample = FiniteMetricSpace::from_euclidean_points(
            vec![1.0, 1.0],
            (0..self.n).map(|i| self.xy(i).to_vec()).collect(),
        )
        .unwrap();
        sample.mean_spacing()
    }
}

#[test]
fn image_is_translated_coordinates() {
    let p = Planar::new(800, 1);
    let base = p.nearest(0.5, 0.5);
    let chart = Chart::build(&p.space, &p.strainer(base), 0.2).unwrap();
    let [bx, by] = p.xy(base);
    let c = chart.coords(base).unwrap().to_vec();
    for (&q, img) in chart.domain.iter().zip(&chart.image) {
        let [x, y] = p.xy(q);
        // a_1 = base + 100 e_1, so |a_1 q| ≈ c_1 − (x − bx).
        assert!((img[0] - (c[0] - (x - bx))).abs() < 1e-3);
        assert!((img[1] - (c[1] - (y - by))).abs() < 1e-3);
        assert_eq!(img[0], p.space.d(p.n, q));
    }
}

#[test]
fn stepping_toward_an_arm_lowers_its_coordinate() {
    let p = Planar::new(800, 2);
    let base = p.nearest(0.5, 0.5);
    let chart = Chart::build(&p.space, &p.strainer(base), 0.3).unwrap();
    let [bx, by] = p.xy(base);
    let q = p.nearest(bx + 0.2, by);
    let t = p.xy(q)[0] - bx;
    let drop = chart.coords(base).unwrap()[0] - chart.coords(q).unwrap()[0];
    assert!((drop - t).abs() < 0.02, "{drop} vs {t}");
}

#[test]
fn permuted_pairs_permute_coordinates() {
    let p = Planar::new(300, 3);
    let base = p.nearest(0.5, 0.5);
    let s = p.strainer(base);
    let mut swapped = s.clone();
    swapped.pairs.reverse();
    let a = Chart::build(&p.space, &s, 0.2).unwrap();
    let b = Chart::build(&p.space, &swapped, 0.2).unwrap();
    for (u, v) in a.image.iter().zip(&b.image) {
        assert_eq!((u[0], u[1]), (v[1], v[0]));
    }
}

#[test]
fn inverse_of_image_midpoint_is_near_metric_midpoint() {
    let p = Planar::new(2000, 4);
    let base = p.nearest(0.5, 0.5);
    let chart = Chart::build(&p.space, &p.strainer(base), 0.3).unwrap();
    let spacing = p.spacing();
    let fill = p.fill_distance();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let q1 = chart.domain[rng.random_range(0..chart.domain.len())];
        let q2 = chart.domain[rng.random_range(0..chart.domain.len())];
        let (a, b) = (p.xy(q1), p.xy(q2));
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let half = WeightVector::uniform(2);
        let com = center_of_mass(&chart, &[q1, q2], &half).unwrap();
        let got = p.xy(com.point);
        let off = ((got[0] - mid[0]).powi(2) + (got[1] - mid[1]).powi(2)).sqrt();
        assert!(off <= 2.0 * fill, "{off} vs fill distance {fill}");
        assert!(com.accepted(spacing));
    }
}

#[test]
fn far_target_hits_boundary_with_large_residual() {
    let p = Planar::new(500, 6);
    let base = p.nearest(0.5, 0.5);
    let chart = Chart::build(&p.space, &p.strainer(base), 0.1).unwrap();
    let mut v = chart.coords(base).unwrap().to_vec();
    v[0] -= 5.0;
    let pre = chart.inverse(&v).unwrap();
    assert!(pre.residual > 4.8);
    assert!(p.space.d(base, pre.point) > 0.05);
    assert!(!pre.accepted(p.spacing()));
}

#[test]
fn distortion_shrinks_with_radius() {
    // Averaged over several bases; the far-arm curvature error grows with radius.
    let p = Planar::new(1500, 7);
    let mut small = 0.0;
    let mut large = 0.0;
    for (x, y) in [(0.4, 0.4), (0.5, 0.5), (0.6, 0.45), (0.45, 0.6)] {
        let b = p.nearest(x, y);
        let mut s = p.strainer(b);
        s.base = b;
        small += distortion(&p.space, &Chart::build_at(&p.space, b, &s, 0.1).unwrap(), 1).unwrap().max;
        large += distortion(&p.space, &Chart::build_at(&p.space, b, &s, 0.3).unwrap(), 1).unwrap().max;
    }
    assert!(small <= large, "{small} vs {large}");
}

#[test]
fn parallel_and_perpendicular_segments() {
    let base = sample_euclid_box(&[1.0, 1.0], 2000, 8).unwrap();
    let mut pts = base.coords().unwrap().points.clone();
    let n0 = pts.len();
    // Two parallel horizontal segments of length 0.2 and one vertical one.
    for xy in [[0.3, 0.3], [0.5, 0.3], [0.4, 0.65], [0.6, 0.65], [0.4, 0.3], [0.4, 0.5]] {
        pts.push(xy.to_vec());
    }
    let n = pts.len();
    for v in [[100.0, 0.0], [-100.0, 0.0], [0.0, 100.0], [0.0, -100.0]] {
        pts.push(vec![0.5 + v[0], 0.5 + v[1]]);
    }
    let space = FiniteMetricSpace::from_euclidean_points(vec![300.0, 300.0], pts).unwrap();
    let strainer = Strainer::new(n0, vec![(n, n + 1), (n + 2, n + 3)]);
    let chart = Chart::build(&space, &strainer, 0.5).unwrap();
    let arms = [n, n + 2];
    let [x1, y1, x2, y2, x3, y3] = std::array::from_fn(|i| n0 + i);
    let d = angle_consistency_defect(&space, k0(), &arms, x1, y1, x2, y2).unwrap();
    let img = image_angle(&chart, x1, y1, x2, y2).unwrap();
    assert!(d <= 0.05, "{d}");
    assert!(img <= 0.1, "{img}");
    assert_eq!(angle_consistency_defect(&space, k0(), &arms, x1, y1, x1, y1).unwrap(), 0.0);
    let perp = angle_consistency_defect(&space, k0(), &arms, x1, y1, x3, y3).unwrap();
    assert!(perp > 1.0, "{perp}");
}

fn random_segments(p: &Planar, seed: u64, count: usize) -> Vec<[usize; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s: [usize; 4] = std::array::from_fn(|_| rng.random_range(0..p.n));
        if s[0] != s[1] && s[2] != s[3] {
            out.push(s);
        }
    }
    out
}

#[test]
fn small_arm_defect_bounds_image_angle() {
    for seed in [4u64, 5] {
        let p = Planar::new(600, seed);
        let chart = Chart::build_at(&p.space, 0, &p.strainer(0), 2.0).unwrap();
        let arms = [p.n, p.n + 2];
        for [x1, y1, x2, y2] in random_segments(&p, seed, 50_000) {
            let eps = angle_consistency_defect(&p.space, k0(), &arms, x1, y1, x2, y2).unwrap();
            let img = image_angle(&chart, x1, y1, x2, y2).unwrap();
            assert!(img <= kappa_hat(eps), "eps {eps}, image angle {img}");
        }
    }
}

#[test]
fn overlapping_charts_agree_on_consistency() {
    for seed in [4u64, 5] {
        let p = Planar::new(600, seed);
        let (sa, sb) = (p.strainer(0), p.rotated_strainer(0));
        let (aa, ab) = (sa.a_arms(), sb.a_arms());
        for [x1, y1, x2, y2] in random_segments(&p, seed + 100, 50_000) {
            let da = angle_consistency_defect(&p.space, k0(), &aa, x1, y1, x2, y2).unwrap();
            let db = angle_consistency_defect(&p.space, k0(), &ab, x1, y1, x2, y2).unwrap();
            assert!(db <= kappa_hat(da) && da <= kappa_hat(db), "{da} vs {db}");
        }
    }
}

#[test]
fn kappa_table_is_monotone() {
    assert!(KAPPA_HAT.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
    assert!(KAPPA_HAT.iter().all(|&(e, v)| v >= e));
}

#[test]
fn mass_identity_trivial_cases() {
    let qv = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![3.0, 3.0]];
    let rv = vec![vec![1.0, 1.0], vec![0.5, 0.0], vec![-2.0, 4.0]];
    let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
    let w2 = WeightVector::new(vec![0.6, 0.1, 0.3]).unwrap();
    for (a, b, x, y) in [(&qv, &rv, &w, &w), (&qv, &qv, &w, &w2)] {
        let res = mass_vector_residual(a, b, x, y, 1).unwrap();
        assert!(res.iter().all(|v| v.abs() < 1e-14), "{res:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_weights_pick_the_point(seed in 0u64..1000, l in 1usize..6, j in 0usize..6) {
        let p = Planar::new(200, seed);
        let chart = Chart::build_at(&p.space, 0, &p.strainer(0), 2.0).unwrap();
        let q: Vec<usize> = (0..l).map(|i| (i * 37 + seed as usize) % p.n).collect();
        let j = j % l;
        // Exact preimages only when coordinates are unique, which random samples guarantee.
        let com = center_of_mass(&chart, &q, &WeightVector::basis(l, j)).unwrap();
        prop_assert_eq!(com.point, q[j]);
        prop_assert_eq!(com.residual, 0.0);
    }

    #[test]
    fn center_of_mass_is_permutation_equivariant(seed in 0u64..1000, raw in prop::collection::vec(0.01f64..1.0, 4), rot in 0usize..4) {
        let p = Planar::new(300, seed);
        let chart = Chart::build_at(&p.space, 0, &p.strainer(0), 2.0).unwrap();
        let q: Vec<usize> = vec![3, 50, 120, 211];
        let w = WeightVector::normalized(raw.clone()).unwrap();
        let mut q2 = q.clone();
        let mut r2 = raw.clone();
        q2.rotate_left(rot);
        r2.rotate_left(rot);
        let w2 = WeightVector::normalized(r2).unwrap();
        let a = center_of_mass(&chart, &q, &w).unwrap();
        let b = center_of_mass(&chart, &q2, &w2).unwrap();
        prop_assert_eq!(a.point, b.point);
        prop_assert!((a.residual - b.residual).abs() < 1e-9);
    }

    #[test]
    fn inverse_undoes_coords(seed in 0u64..1000) {
        let p = Planar::new(150, seed);
        let chart = Chart::build_at(&p.space, 0, &p.strainer(0), 2.0).unwrap();
        for &q in &chart.domain {
            let pre = chart.inverse(chart.coords(q).unwrap()).unwrap();
            prop_assert_eq!(pre.point, q);
            prop_assert_eq!(pre.residual, 0.0);
        }
    }
}
