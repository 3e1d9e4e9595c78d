use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use induced_sdr::harness::{lognormal_ratio_grid, piecewise_hazard_grid, run_cell_at, Parallelism};

fn cells(c: &mut Criterion) {
    let mut group = c.benchmark_group("cell_64_reps");
    group.sample_size(10);
    let lognormal = lognormal_ratio_grid(64, 1).remove(1);
    let hazard = piecewise_hazard_grid(64, 1).remove(9);
    for (name, cell, t) in [("lognormal_t30", &lognormal, 0.85), ("hazard_t75", &hazard, 2.13)] {
        for (mode, par) in [
            ("serial", Parallelism::Serial),
            ("parallel", Parallelism::Auto),
        ] {
            group.bench_with_input(BenchmarkId::new(name, mode), &par, |b, &par| {
                b.iter(|| run_cell_at(cell, t, par).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, cells);
criterion_main!(benches);
