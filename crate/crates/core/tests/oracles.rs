//! Closed forms checked against independent numerical computations.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tukey_core::classes::{enumerate_classes, upsilon};
use tukey_core::constellation::Preset;
use tukey_core::quadrature::integrate_piecewise;
use tukey_core::waveform::{
    aligned_oversampling, fractional_energy_bandwidth, in_band_energy, shift_inner_product,
    synthesize_block, tukey, tukey_spectrum,
};
use tukey_core::TukeyShape;

/// Composite Simpson on `n` (even) equal cells.
fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    assert_eq!(n % 2, 0);
    let mut s = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

#[test]
fn filtered_rectangle_reproduces_the_pulse() {
    let os = 1024i64;
    let dt = 1.0 / os as f64;
    for beta in [0.25, 0.5, 0.75, 1.0] {
        let shape = TukeyShape::normalized(beta).unwrap();
        let h = |j: i64| shape.impulse_response(j as f64 * dt).unwrap();
        let mut worst: f64 = 0.0;
        // Even grid points only, so every kink lands on a Simpson panel edge.
        for i in (-os..=os).step_by(2) {
            let samples: Vec<f64> = (i - os / 2..=i + os / 2).map(h).collect();
            let conv = simpson(&samples, dt);
            worst = worst.max((conv - shape.evaluate(i as f64 * dt)).abs());
        }
        assert!(worst <= 1e-6, "beta {beta}: {worst}");
    }
}

#[test]
fn impulse_response_area_is_plateau_height() {
    for beta in [0.1, 0.5, 0.9, 1.0] {
        let shape = TukeyShape::normalized(beta).unwrap();
        let area = integrate_piecewise(
            |t| shape.impulse_response(t).unwrap(),
            &[-beta / 2.0, beta / 2.0],
            1e-13,
        )
        .unwrap();
        assert!((area - shape.alpha()).abs() < 1e-10, "beta {beta}: {area}");
    }
}

#[test]
fn pulse_has_unit_energy() {
    for i in 0..=20 {
        let beta = i as f64 / 20.0;
        let (p, s) = ((1.0 - beta) / 2.0, (1.0 + beta) / 2.0);
        let e = integrate_piecewise(|t| tukey(beta, t).powi(2), &[-s, -p, p, s], 1e-14).unwrap();
        assert!((e - 1.0).abs() < 1e-10, "beta {beta}: {e}");
    }
}

#[test]
fn spectrum_carries_the_pulse_energy() {
    for beta in [0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
        let knots: Vec<f64> = (0..=400).map(|k| k as f64 * 0.125).collect();
        let e =
            2.0 * integrate_piecewise(|f| tukey_spectrum(beta, f).powi(2), &knots, 1e-13).unwrap();
        assert!((e - 1.0).abs() < 1e-6, "beta {beta}: {e}");
        assert!((in_band_energy(beta, 50.0).unwrap() - e).abs() < 1e-9);
    }
}

#[test]
fn spectrum_matches_numerical_transform() {
    for beta in [0.2, 0.6, 1.0] {
        let (p, s) = ((1.0 - beta) / 2.0, (1.0 + beta) / 2.0);
        for f in [0.0, 0.3, 1.0 / (2.0 * beta), 1.7, 4.2] {
            let ft = integrate_piecewise(
                |t| tukey(beta, t) * (2.0 * std::f64::consts::PI * f * t).cos(),
                &[-s, -p, 0.0, p, s],
                1e-14,
            )
            .unwrap();
            assert!(
                (ft - tukey_spectrum(beta, f)).abs() < 1e-9,
                "beta {beta} f {f}"
            );
        }
    }
}

#[test]
fn neighbour_overlap_matches_quadrature() {
    for beta in [0.1, 0.5, 0.9, 1.0] {
        let s = (1.0 + beta) / 2.0;
        let ip = integrate_piecewise(
            |t| tukey(beta, t) * tukey(beta, t - 1.0),
            &[1.0 - s, s],
            1e-14,
        )
        .unwrap();
        assert!((ip - shift_inner_product(beta).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn bandwidth_tables() {
    let table = [
        (0.1, 1.477, 0.706),
        (0.3, 0.788, 0.612),
        (0.5, 0.668, 0.56),
        (0.7, 0.613, 0.522),
        (0.8, 0.592, 0.505),
        (0.9, 0.575, 0.49),
    ];
    for (beta, b95, b90) in table {
        let got95 = fractional_energy_bandwidth(beta, 0.95).unwrap();
        let got90 = fractional_energy_bandwidth(beta, 0.90).unwrap();
        assert!((got95 - b95).abs() <= 0.005, "beta {beta}: {got95}");
        assert!((got90 - b90).abs() <= 0.005, "beta {beta}: {got90}");
    }
}

#[test]
fn signature_matches_sampled_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let shape = TukeyShape::new(0.3, 1e-10).unwrap();
    let os = aligned_oversampling(0.3, 1024);
    for _ in 0..100 {
        let n = rng.random_range(2..6);
        let block: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let field = synthesize_block(&shape, &block, os).unwrap();
        let intensity = field.intensity();
        let exact = upsilon(&block, &shape).unwrap();
        for k in 0..n {
            let q = field
                .interval_energy(&intensity, shape.isi_free_interval(k))
                .unwrap();
            assert!((q / exact.y[k] - 1.0).abs() < 1e-9);
        }
        for l in 0..n - 1 {
            let q = field
                .interval_energy(&intensity, shape.isi_present_interval(l))
                .unwrap();
            assert!((q / exact.z[l] - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn class_counts_for_two_ring_constellation() {
    let k = Preset::Ring2x4.build();
    let expected: [(usize, &[(usize, usize)]); 3] = [
        (3, &[(4, 32), (8, 32), (16, 8)]),
        (4, &[(4, 128), (8, 192), (16, 96), (32, 16)]),
        (5, &[]),
    ];
    for (n, hist) in expected {
        let t = enumerate_classes(&k, n).unwrap();
        let total: usize = 72 * 6usize.pow(n as u32 - 3);
        assert_eq!(t.num_classes(), total);
        assert_eq!(
            t.size_histogram().values().copied().sum::<usize>(),
            total
        );
        if !hist.is_empty() {
            assert_eq!(
                t.size_histogram().into_iter().collect::<Vec<_>>(),
                hist.to_vec()
            );
        }
    }
}
