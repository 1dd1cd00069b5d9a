use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fadr_core::{sim, AllocatorKind, SimConfig};
use std::hint::black_box;

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    for n in [500, 2000] {
        let cfg = SimConfig {
            node_count: n,
            sim_time_s: 3600.0,
            allocator: AllocatorKind::Fadr,
            ..SimConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("fadr_1h", n), &cfg, |b, cfg| {
            b.iter(|| sim::run(black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simulation);
criterion_main!(benches);
