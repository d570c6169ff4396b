use bergman_core::{Bergman, BuiltinForm, Domain};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const DOMAINS: [&str; 6] = ["I(2,3)", "II(2)", "III(4)", "IV(4)", "D(3)", "B(3)"];

fn kernel_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel");
    for name in DOMAINS {
        let d: Domain = name.parse().unwrap();
        let b = Bergman::with_volume(d, 1.0);
        let pts = d.sample_uniform(1, 2).unwrap();
        group.bench_with_input(BenchmarkId::new("off_diagonal", name), &pts, |bench, p| {
            bench.iter(|| b.kernel_unchecked(black_box(&p[0]), black_box(&p[1])).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("log_diagonal", name), &pts, |bench, p| {
            bench.iter(|| b.log_kernel_diag(black_box(&p[0])).unwrap())
        });
    }
    group.finish();
}

fn metric_and_forms(c: &mut Criterion) {
    let mut group = c.benchmark_group("metric");
    for name in DOMAINS {
        let d: Domain = name.parse().unwrap();
        let b = Bergman::with_volume(d, 1.0);
        let z = d.sample_uniform(2, 1).unwrap().remove(0);
        group.bench_with_input(BenchmarkId::new("metric_at", name), &z, |bench, z| {
            bench.iter(|| b.metric_at(black_box(z)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dbar_log_k_norm", name), &z, |bench, z| {
            bench.iter(|| b.form_norm_sq(black_box(z), &BuiltinForm::DbarLogK).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernel_evaluation, metric_and_forms);
criterion_main!(benches);
