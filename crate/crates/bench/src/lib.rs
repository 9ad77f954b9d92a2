//! Fixtures shared by the benchmarks.

use strainmap_core::chart::Chart;
use strainmap_core::mspace::{sample_euclid_box, sample_sphere, FiniteMetricSpace};
use strainmap_core::strainer::Strainer;

/// Unit-square sample with four far arms around the central point, and the
/// chart they define.
pub fn planar_chart(n: usize, seed: u64, radius: f64) -> (FiniteMetricSpace, Chart) {
    let mut pts = sample_euclid_box(&[1.0, 1.0], n, seed).unwrap().coords().unwrap().points.clone();
    let d = |p: &Vec<f64>| (p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2);
    let base = (0..n).min_by(|&a, &b| d(&pts[a]).total_cmp(&d(&pts[b]))).unwrap();
    let (bx, by) = (pts[base][0], pts[base][1]);
    pts.extend([vec![bx + 100.0, by], vec![bx - 100.0, by], vec![bx, by + 100.0], vec![bx, by - 100.0]]);
    let space = FiniteMetricSpace::from_euclidean_points(vec![202.0, 202.0], pts).unwrap();
    let chart = Chart::build(&space, &Strainer::new(base, vec![(n, n + 1), (n + 2, n + 3)]), radius).unwrap();
    (space, chart)
}

pub fn sphere_pair(n: usize) -> (FiniteMetricSpace, FiniteMetricSpace) {
    (sample_sphere(1.0, n, 1).unwrap(), sample_sphere(1.0, n, 2).unwrap())
}
