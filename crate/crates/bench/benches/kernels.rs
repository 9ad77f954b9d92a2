use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use strainmap_bench::{planar_chart, sphere_pair};
use strainmap_core::glue::{gh_distortion, nearest_point_map};
use strainmap_core::kplane::{comparison_angle, CurvatureBound};
use strainmap_core::strainer::{find_strainer, strain_quality, SearchOptions, Strainer};

fn angles(c: &mut Criterion) {
    let mut g = c.benchmark_group("comparison_angle");
    for k in [-1.0, 0.0, 1.0] {
        let kb = CurvatureBound::new(k).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(k), &kb, |b, &kb| {
            b.iter(|| comparison_angle(kb, black_box(0.7), black_box(0.9), black_box(1.1)).unwrap())
        });
    }
    g.finish();
}

fn strainers(c: &mut Criterion) {
    let (s, _) = sphere_pair(500);
    let k = CurvatureBound::new(1.0).unwrap();
    let st = Strainer::new(0, vec![(1, 2), (3, 4), (5, 6)]);
    c.bench_function("strain_quality/n3", |b| b.iter(|| strain_quality(&s, k, black_box(&st)).unwrap()));
    let opts = SearchOptions::default();
    c.bench_function("find_strainer/sphere500_n2", |b| {
        b.iter(|| find_strainer(&s, k, black_box(17), 2, 0.2, None, 3, &opts))
    });
}

fn chart_inverse(c: &mut Criterion) {
    let (_, chart) = planar_chart(5000, 3, 0.3);
    let v = vec![99.8, 99.8];
    c.bench_function("chart_inverse/planar5000", |b| b.iter(|| chart.inverse(black_box(&v)).unwrap()));
}

fn gh(c: &mut Criterion) {
    let mut g = c.benchmark_group("gh_distortion");
    g.sample_size(10);
    for n in [200, 800] {
        let (a, b2) = sphere_pair(n);
        let h = nearest_point_map(&a, &b2).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &h.table, |b, t| {
            b.iter(|| gh_distortion(&a, &b2, black_box(t)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, angles, strainers, chart_inverse, gh);
criterion_main!(benches);
