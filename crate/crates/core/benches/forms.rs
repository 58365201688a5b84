use std::hint::black_box;

use aqec::boolfn::tribes;
use aqec::codespace::{materialize_codeword, sample_codeword, CodeParams, DEFAULT_DENSE_CAP};
use aqec::noise::{bitflip_form, structured_bitflip_form, ControlSet, ControlledBitFlip};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

/// A one-thread pool and a pool with rayon's default size.
fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    [("1t", 1), ("default", 0)]
        .into_iter()
        .map(|(name, t)| {
            (
                name,
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .unwrap(),
            )
        })
        .collect()
}

fn forms(c: &mut Criterion) {
    let mut group = c.benchmark_group("bitflip_form");
    group.sample_size(10);
    for n in [16u32, 20] {
        let params = CodeParams::new(n, 2).unwrap();
        let f = tribes(params.n_prime(), None).unwrap().balance();
        let phi =
            materialize_codeword(&f, &sample_codeword(&params, 1), DEFAULT_DENSE_CAP).unwrap();
        let psi =
            materialize_codeword(&f, &sample_codeword(&params, 2), DEFAULT_DENSE_CAP).unwrap();
        let e = ControlledBitFlip::new(3, ControlSet::seeded(0.5, 7).unwrap()).unwrap();
        for (name, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| {
                    pool.install(|| bitflip_form(black_box(&psi), &e, black_box(&phi)).unwrap())
                })
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("structured_bitflip_form");
    let params = CodeParams::new(64, 4).unwrap();
    let f = tribes(8, None).unwrap().balance();
    let bra = sample_codeword(&params, 1);
    let ket = sample_codeword(&params, 2);
    let e = ControlledBitFlip::full(5).unwrap();
    group.bench_function("n64_B4", |b| {
        b.iter(|| structured_bitflip_form(&f, black_box(&bra), &e, black_box(&ket)).unwrap())
    });
    group.finish();
}

fn influence(c: &mut Criterion) {
    let mut group = c.benchmark_group("influence_profile");
    group.sample_size(10);
    let f = tribes(22, None).unwrap();
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, 22), |b| {
            b.iter(|| pool.install(|| black_box(&f).influence_profile()))
        });
    }
    group.finish();
}

fn materialize(c: &mut Criterion) {
    let mut group = c.benchmark_group("materialize_codeword");
    group.sample_size(10);
    let params = CodeParams::new(20, 2).unwrap();
    let f = tribes(5, None).unwrap().balance();
    let coeffs = sample_codeword(&params, 3);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, 20), |b| {
            b.iter(|| {
                pool.install(|| {
                    materialize_codeword(&f, black_box(&coeffs), DEFAULT_DENSE_CAP).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, forms, influence, materialize);
criterion_main!(benches);
