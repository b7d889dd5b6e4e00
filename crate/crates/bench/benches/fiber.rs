use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use std::hint::black_box;
use tukey_core::fiber::{precompensate, ssfm_propagate};
use tukey_core::rng::trial_rng;
use tukey_core::waveform::synthesize_block;
use tukey_core::{Complex64, FiberParams, TukeyShape};

fn ssfm(c: &mut Criterion) {
    let shape = TukeyShape::new(0.9, 1e-10).unwrap();
    let mut rng = trial_rng(3, 0);
    let syms: Vec<Complex64> = (0..192)
        .map(|_| Complex64::from_polar(3e-2, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    let p = FiberParams::default();
    let x = synthesize_block(&shape, &syms, 20).unwrap();
    let u = precompensate(&x, p.beta2, p.length_km, p.guard_band(shape.period()));
    let mut g = c.benchmark_group("ssfm");
    g.sample_size(10);
    g.bench_function("10 km, 192 symbols, 20 samples/symbol", |b| {
        b.iter(|| ssfm_propagate(black_box(&u), &p).unwrap())
    });
    g.finish();
}

criterion_group!(benches, ssfm);
criterion_main!(benches);
