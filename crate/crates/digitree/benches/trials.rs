//! Parallel vs sequential trial throughput.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use digitree::{mc_moments, sample_shapes, sample_shapes_seq, ModelSpec};
use std::hint::black_box;

fn bench_sample_shapes(c: &mut Criterion) {
    let model = ModelSpec::binary_trie(0.5).unwrap();
    let mut group = c.benchmark_group("sample_shapes");
    for &(n, trials) in &[(256u64, 2_000u64), (4096, 500)] {
        group.bench_with_input(
            BenchmarkId::new("parallel", format!("n{n}_t{trials}")),
            &(n, trials),
            |b, &(n, trials)| {
                b.iter(|| black_box(sample_shapes(&model, n, trials, 42).unwrap()))
            },
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", format!("n{n}_t{trials}")),
            &(n, trials),
            |b, &(n, trials)| {
                b.iter(|| black_box(sample_shapes_seq(&model, n, trials, 42).unwrap()))
            },
        );
    }
    group.finish();
}

fn bench_mc_pipeline(c: &mut Criterion) {
    let model = ModelSpec::mary_trie_symmetric(3).unwrap();
    c.bench_function("mc_moments_3ary_n256_t2000", |b| {
        b.iter(|| black_box(mc_moments(&model, 256, 2_000, 7).unwrap()))
    });
}

criterion_group!(benches, bench_sample_shapes, bench_mc_pipeline);
criterion_main!(benches);
