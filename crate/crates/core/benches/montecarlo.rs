use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use aev_core::cycles::bundled;
use aev_core::montecarlo::{run, run_sequential, McSettings};
use aev_core::vehicles::bundled_vehicle;
use aev_core::LidarScenario;

fn ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("montecarlo");
    group.sample_size(10);
    for n in [1_000, 10_000] {
        let settings = McSettings::new(
            bundled_vehicle("model3").unwrap(),
            bundled("composite").unwrap(),
            LidarScenario::WithLidar,
            n,
            42,
        );
        group.bench_with_input(BenchmarkId::new("parallel", n), &settings, |b, s| b.iter(|| run(s).unwrap()));
        group.bench_with_input(BenchmarkId::new("sequential", n), &settings, |b, s| {
            b.iter(|| run_sequential(s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);
