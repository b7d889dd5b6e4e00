use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tukey_core::classes::{choose_representatives, enumerate_classes};
use tukey_core::constellation::Preset;
use tukey_core::photodetector::{build_noise_model, ApdParams};
use tukey_core::receiver::Scratch;
use tukey_core::rng::trial_rng;
use tukey_core::{dbm_to_watts, LikelihoodContext, TukeyShape};

fn ml_detection(c: &mut Criterion) {
    let table = enumerate_classes(&Preset::Ring2x4.build(), 4).unwrap();
    let blocks = choose_representatives(&table, 256, Some(1)).unwrap();
    let ctx = LikelihoodContext::new(
        blocks.scaled_to_power(dbm_to_watts(-14.0)).unwrap(),
        TukeyShape::new(0.9, 1e-10).unwrap(),
        build_noise_model(&ApdParams::default()).unwrap(),
    )
    .unwrap();
    let mut rng = trial_rng(0, 0);
    let obs = ctx.stored_moments(17).sample(&mut rng);
    let mut scratch = Scratch::default();
    let mut ll = Vec::new();
    c.bench_function("ml_detect 2x4 n=4 M=256", |b| {
        b.iter(|| {
            ctx.ml_detect_with(black_box(&obs), &mut scratch, &mut ll)
                .unwrap()
        })
    });
}

criterion_group!(benches, ml_detection);
criterion_main!(benches);
