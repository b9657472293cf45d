use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mmsar_bench::{lattice_cloud, sphere_scene};
use mmsar_core::{backproject, f_score, icp_align, simulate_signals, ReflectionModel};

fn simulate(c: &mut Criterion) {
    let scene = sphere_scene(64);
    let mut group = c.benchmark_group("simulate_signals");
    group.sample_size(10);
    for model in [ReflectionModel::full(), ReflectionModel::default().with_kind(mmsar_core::ReflectionKind::Edge)] {
        group.bench_function(model.kind.as_str(), |b| {
            b.iter(|| simulate_signals(&scene.mesh, &scene.aperture, &scene.waveform, &model).unwrap())
        });
    }
    group.finish();
}

fn image(c: &mut Criterion) {
    let mut group = c.benchmark_group("backproject");
    group.sample_size(10);
    for n in [16, 64] {
        let scene = sphere_scene(n);
        let signals = simulate_signals(&scene.mesh, &scene.aperture, &scene.waveform, &ReflectionModel::full()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &signals, |b, s| b.iter(|| backproject(s, &scene.grid)));
    }
    group.finish();
}

fn evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("eval");
    for n in [1_000, 20_000] {
        let a = lattice_cloud(n, 1);
        let b = lattice_cloud(n, 2);
        group.bench_with_input(BenchmarkId::new("f_score", n), &n, |bench, _| {
            bench.iter(|| f_score(&a, &b, 0.002).unwrap())
        });
    }
    let a = lattice_cloud(2_000, 3);
    let b = lattice_cloud(2_000, 4);
    group.bench_function("icp_2000", |bench| bench.iter(|| icp_align(&a, &b, 20, 1e-12).unwrap()));
    group.finish();
}

criterion_group!(benches, simulate, image, evaluate);
criterion_main!(benches);
