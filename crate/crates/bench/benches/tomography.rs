use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use rpdc_bench::noisy_records;
use rpdc_core::{linear_reconstruct, mle_reconstruct, MleConfig};

fn reconstruction(c: &mut Criterion) {
    let records = noisy_records(1000, 7);
    let config = MleConfig::default();
    c.bench_function("linear_reconstruct", |b| {
        b.iter(|| linear_reconstruct(black_box(&records)))
    });
    c.bench_function("mle_reconstruct", |b| {
        b.iter(|| mle_reconstruct(black_box(&records), &config))
    });
}

criterion_group!(benches, reconstruction);
criterion_main!(benches);
