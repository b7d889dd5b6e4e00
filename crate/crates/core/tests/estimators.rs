use num_complex::Complex64;
use rand::Rng;
use tukey_core::classes::{choose_representatives, enumerate_classes};
use tukey_core::constellation::Preset;
use tukey_core::metrics::{estimate_mi, power_decomposition, simulate_ber, BerBudget, Prior};
use tukey_core::photodetector::{build_noise_model, ApdParams};
use tukey_core::rng::trial_rng;
use tukey_core::{dbm_to_watts, Constellation, LikelihoodContext, TukeyShape};

fn contexts(n: usize, m: usize, beta: f64, powers: &[f64]) -> Vec<LikelihoodContext> {
    let table = enumerate_classes(&Preset::Ring2x4.build(), n).unwrap();
    let labels = m.is_power_of_two().then_some(1);
    let blocks = choose_representatives(&table, m, labels).unwrap();
    let nm = build_noise_model(&ApdParams::default()).unwrap();
    powers
        .iter()
        .map(|&p| {
            let b = blocks.scaled_to_power(dbm_to_watts(p)).unwrap();
            LikelihoodContext::new(b, TukeyShape::new(beta, 1e-10).unwrap(), nm).unwrap()
        })
        .collect()
}

#[test]
fn mi_stays_in_range_and_grows_with_power() {
    let powers: Vec<f64> = (-40..=-5).step_by(5).map(f64::from).collect();
    let mut last = f64::NEG_INFINITY;
    for ctx in contexts(3, 72, 0.9, &powers) {
        let e = estimate_mi(&ctx, &Prior::Uniform, 3000, 21).unwrap();
        let cap = (72f64).log2() / 3.0;
        assert!(e.value <= cap + 3.0 * e.half_width + 1e-12);
        assert!(e.value >= -3.0 * e.half_width);
        assert!(
            e.value >= last - 3.0 * e.half_width,
            "{} after {last}",
            e.value
        );
        last = e.value;
    }
}

#[test]
fn ber_falls_with_power() {
    let powers = [-26.0, -22.0, -18.0, -14.0];
    let budget = BerBudget {
        max_bits: 2_000_000,
        max_errors: 200,
        batch: 1024,
    };
    let mut last: Option<tukey_core::metrics::BerEstimate> = None;
    for ctx in contexts(3, 64, 0.9, &powers) {
        let r = simulate_ber(&ctx, &budget, 2).unwrap();
        if let Some(prev) = last {
            assert!(r.ber <= prev.ber || r.overlaps(&prev));
        }
        last = Some(r);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let ctx = contexts(3, 64, 0.9, &[-20.0]).remove(0);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let mi = estimate_mi(&ctx, &Prior::Uniform, 2000, 8).unwrap();
                let budget = BerBudget {
                    max_bits: 300_000,
                    max_errors: 150,
                    batch: 512,
                };
                let ber = simulate_ber(&ctx, &budget, 8).unwrap();
                (
                    mi.value.to_bits(),
                    mi.half_width.to_bits(),
                    ber.errors,
                    ber.bits,
                )
            })
    };
    assert_eq!(run(1), run(4));
    assert_eq!(run(1), run(3));
}

fn iid_qam(m: usize, seed: u64, index: u64) -> Vec<Complex64> {
    let k = Constellation::qam16().scale_to_power(1.0).unwrap();
    let mut rng = trial_rng(seed, index);
    (0..m)
        .map(|_| k.points()[rng.random_range(0..16)])
        .collect()
}

#[test]
fn overlap_average_variance_shrinks_like_one_over_m() {
    let shape = TukeyShape::normalized(0.5).unwrap();
    let var = |m: usize, seed: u64| {
        let h: Vec<f64> = (0..200)
            .map(|i| {
                power_decomposition(&iid_qam(m, seed, i), &shape)
                    .unwrap()
                    .h_mean
            })
            .collect();
        let mean = h.iter().sum::<f64>() / h.len() as f64;
        h.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (h.len() - 1) as f64
    };
    let ratio = var(100, 1) / var(400, 2);
    assert!(ratio > 4.0 / 1.5 && ratio < 4.0 * 1.5, "{ratio}");
}
