use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scatter_depth::{
    deepest_scatter, detect, fast_mcd, default_h, shape_depth_on, DepthEngine, DetectConfig,
    DirectionBudget, LocationSpec, SearchOptions, WindowedSeries,
};
use scatter_depth_bench::{probe_scatter, sample, windows};

fn scatter_depth(c: &mut Criterion) {
    let mut group = c.benchmark_group("scatter_depth");
    for &(n, k) in &[(500, 2), (2000, 2), (2000, 4)] {
        let data = sample(n, k, false, 1);
        let sigma = probe_scatter(k);
        let engine = DepthEngine::new(&data, &LocationSpec::Fixed(vec![0.0; k]), &DirectionBudget::uniform(10_000, 1)).unwrap();
        group.bench_with_input(BenchmarkId::new("direct", format!("n{n}_k{k}")), &engine, |b, e| {
            b.iter(|| e.scatter_depth(&sigma).unwrap())
        });
        let cached = engine.clone().cached();
        group.bench_with_input(BenchmarkId::new("cached", format!("n{n}_k{k}")), &cached, |b, e| {
            b.iter(|| e.scatter_depth(&sigma).unwrap())
        });
    }
    let data = sample(500, 2, false, 2);
    let exact = DepthEngine::new(&data, &LocationSpec::Fixed(vec![0.0; 2]), &DirectionBudget::exact_2d()).unwrap();
    group.bench_function("exact2d_n500", |b| b.iter(|| exact.scatter_depth(&probe_scatter(2)).unwrap()));
    group.finish();
}

fn shape_profile(c: &mut Criterion) {
    let data = sample(2000, 3, true, 3);
    let engine = DepthEngine::new(&data, &LocationSpec::Fixed(vec![0.0; 3]), &DirectionBudget::uniform(10_000, 3))
        .unwrap()
        .cached();
    let v = probe_scatter(3);
    c.bench_function("shape_depth_n2000_k3", |b| b.iter(|| shape_depth_on(&engine, &v).unwrap()));
}

fn estimators(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimators");
    group.sample_size(10);
    let data = sample(2000, 2, false, 4);
    group.bench_function("fast_mcd_n2000", |b| b.iter(|| fast_mcd(&data, default_h(2000, 2), 20, 0).unwrap()));
    let small = sample(500, 2, true, 5);
    group.bench_function("deepest_scatter_n500", |b| {
        b.iter(|| {
            deepest_scatter(&small, &LocationSpec::TukeyMedian, &DirectionBudget::uniform(2000, 0), &SearchOptions::default())
                .unwrap()
        })
    });
    let series = WindowedSeries::new(windows(20, 80, 6), 70).unwrap();
    let config = DetectConfig {
        directions: DirectionBudget::uniform(2000, 0),
        ..DetectConfig::default()
    };
    group.bench_function("detect_20x80", |b| b.iter(|| detect(&series, &config).unwrap()));
    group.finish();
}

criterion_group!(benches, scatter_depth, shape_profile, estimators);
criterion_main!(benches);
