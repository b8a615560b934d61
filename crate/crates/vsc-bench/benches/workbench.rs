use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use vsc::derive::{infer, InferMode};
use vsc::rewriting::{equiv_class, reduce, Strategy};
use vsc_bench::{church_apply, es_chain, identity_chain};

fn bench_reduce(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduce_open");
    for n in [16usize, 64, 256] {
        let t = identity_chain(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &t, |b, t| {
            b.iter(|| reduce(black_box(t), Strategy::open(), 10_000, false))
        });
    }
    group.finish();
}

fn bench_infer(c: &mut Criterion) {
    let mut group = c.benchmark_group("infer_open");
    for n in [4usize, 8, 16] {
        let t = church_apply(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &t, |b, t| {
            b.iter(|| infer(black_box(t), InferMode::Open, 10_000).unwrap())
        });
    }
    group.finish();
}

fn bench_equiv_class(c: &mut Criterion) {
    let mut group = c.benchmark_group("equiv_class");
    for n in [3usize, 4, 5] {
        let t = es_chain(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &t, |b, t| {
            b.iter(|| equiv_class(black_box(t)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_reduce, bench_infer, bench_equiv_class);
criterion_main!(benches);
