//! Avalanche photodiode and integrate-and-dump front end.
//!
//! The photocurrent is `G|r(t)|² + |r(t)|·n_sh(t) + n_th(t)` with white
//! Gaussian shot and thermal processes. Integrated over an interval `I`, the
//! output is exactly Gaussian with mean `G·∫_I|r|²` and variance
//! `σ_sh²·∫_I|r|² + σ_th²·|I|`, and outputs over disjoint intervals are
//! independent. Noise therefore only ever enters through these integrated
//! statistics.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classes::normalized_signature;
use crate::error::{invalid, Error, Result};
use crate::waveform::{Interval, SampledField, TukeyShape};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// InGaAs APD parameters. Defaults are the reference simulation values:
/// 300 K, 15 Ω load, gain 20, k = 0.6, and 0.5 A/W unit-gain responsivity
/// (10 A/W enhanced).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApdParams {
    /// Kelvin.
    pub temperature: f64,
    /// Ohms.
    pub load_resistance: f64,
    pub gain: f64,
    pub k_factor: f64,
    /// Unit-gain responsivity, A/W.
    pub responsivity: f64,
}

impl Default for ApdParams {
    fn default() -> Self {
        ApdParams {
            temperature: 300.0,
            load_resistance: 15.0,
            gain: 20.0,
            k_factor: 0.6,
            responsivity: 0.5,
        }
    }
}

impl ApdParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("temperature", self.temperature),
            ("load_resistance", self.load_resistance),
            ("responsivity", self.responsivity),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.gain >= 1.0 && self.gain.is_finite()) {
            return Err(invalid(
                "gain",
                format!("APD gain must be >= 1, got {}", self.gain),
            ));
        }
        if !(0.0..=1.0).contains(&self.k_factor) {
            return Err(invalid(
                "k_factor",
                format!("{} is outside [0, 1]", self.k_factor),
            ));
        }
        Ok(())
    }

    pub fn excess_noise_factor(&self) -> f64 {
        excess_noise_factor(self.gain, self.k_factor).expect("validated gain")
    }
}

/// McIntyre excess noise factor `F = kM + (1−k)(2 − 1/M)`.
pub fn excess_noise_factor(gain: f64, k_factor: f64) -> Result<f64> {
    if !(gain >= 1.0) {
        return Err(invalid(
            "gain",
            format!("APD gain must be >= 1, got {gain}"),
        ));
    }
    Ok(k_factor * gain + (1.0 - k_factor) * (2.0 - 1.0 / gain))
}

/// Two-sided noise PSDs and the mean current per watt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// `σ_sh² = e M² F R`, A²/Hz per watt of optical power.
    pub shot_psd: f64,
    /// `σ_th² = 2kT/R_L`, A²/Hz.
    pub thermal_psd: f64,
    /// `G = M·R`, A/W.
    pub signal_gain: f64,
}

impl NoiseModel {
    pub fn new(shot_psd: f64, thermal_psd: f64, signal_gain: f64) -> Result<Self> {
        for (name, v) in [
            ("shot_psd", shot_psd),
            ("thermal_psd", thermal_psd),
            ("signal_gain", signal_gain),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        Ok(NoiseModel {
            shot_psd,
            thermal_psd,
            signal_gain,
        })
    }

    /// Gaussian moments of the integrated output over an interval of length
    /// `duration` that collects optical energy `energy`.
    pub fn integrated(&self, energy: f64, duration: f64) -> Moments {
        Moments {
            mean: self.signal_gain * energy,
            variance: self.shot_psd * energy + self.thermal_psd * duration,
        }
    }
}

/// Noise model for an APD: shot PSD `e M² F R`, thermal PSD `2kT/R_L`, mean
/// responsivity `M R`.
pub fn build_noise_model(p: &ApdParams) -> Result<NoiseModel> {
    p.validate()?;
    let f = p.excess_noise_factor();
    NoiseModel::new(
        ELEMENTARY_CHARGE * p.gain * p.gain * f * p.responsivity,
        2.0 * BOLTZMANN * p.temperature / p.load_resistance,
        p.gain * p.responsivity,
    )
}

/// Mean and variance of one integrated receiver output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g: f64 = rng.sample(StandardNormal);
        self.mean + self.variance.sqrt() * g
    }
}

/// Receiver moments for every `y` and `z` output of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMoments {
    pub y: Vec<Moments>,
    pub z: Vec<Moments>,
}

impl ObservationMoments {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation {
        Observation {
            y: self.y.iter().map(|m| m.sample(rng)).collect(),
            z: self.z.iter().map(|m| m.sample(rng)).collect(),
        }
    }

    /// Largest relative difference between corresponding means and
    /// variances.
    pub fn max_relative_difference(&self, other: &ObservationMoments) -> f64 {
        let rel = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        };
        self.y
            .iter()
            .zip(&other.y)
            .chain(self.z.iter().zip(&other.z))
            .map(|(a, b)| rel(a.mean, b.mean).max(rel(a.variance, b.variance)))
            .fold(0.0, f64::max)
    }
}

/// One noisy integrate-and-dump output block, in ampere-seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Observation {
    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Closed-form moments for a block received back-to-back (`r = x`).
pub fn analytic_moments(
    block: &[Complex64],
    shape: &TukeyShape,
    noise: &NoiseModel,
) -> ObservationMoments {
    let a2 = shape.alpha().powi(2);
    let free = (1.0 - shape.beta()) * shape.period();
    let overlap = shape.beta() * shape.period();
    let sig = normalized_signature(block);
    ObservationMoments {
        y: sig
            .y
            .iter()
            .map(|&p| noise.integrated(a2 * free * p, free))
            .collect(),
        z: sig
            .z
            .iter()
            .map(|&q| noise.integrated(a2 * overlap * q, overlap))
            .collect(),
    }
}

/// Draws an observation for a back-to-back block from the closed-form
/// statistics. Draw order: `y_0..y_{n-1}` then `z_0..z_{n-2}`.
pub fn detect_analytic<R: Rng + ?Sized>(
    block: &[Complex64],
    shape: &TukeyShape,
    noise: &NoiseModel,
    rng: &mut R,
) -> Observation {
    analytic_moments(block, shape, noise).sample(rng)
}

/// Integration windows for the `n` symbols of a block whose first symbol is
/// symbol number `first` of the transmitted stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockIntervals {
    pub y: Vec<Interval>,
    pub z: Vec<Interval>,
}

impl BlockIntervals {
    pub fn new(shape: &TukeyShape, n: usize, first: usize) -> Self {
        BlockIntervals {
            y: (0..n).map(|k| shape.isi_free_interval(first + k)).collect(),
            z: (0..n.saturating_sub(1))
                .map(|l| shape.isi_present_interval(first + l))
                .collect(),
        }
    }
}

/// Moments of the integrated outputs for an arbitrary received field, by
/// trapezoidal quadrature of `|r(t)|²`.
pub fn field_moments(
    field: &SampledField,
    intervals: &BlockIntervals,
    noise: &NoiseModel,
) -> Result<ObservationMoments> {
    let intensity = field.intensity();
    field_moments_with_intensity(field, &intensity, intervals, noise)
}

/// As [`field_moments`], reusing a precomputed `|r|²` sample vector.
pub fn field_moments_with_intensity(
    field: &SampledField,
    intensity: &[f64],
    intervals: &BlockIntervals,
    noise: &NoiseModel,
) -> Result<ObservationMoments> {
    if intensity.len() != field.len() {
        return Err(Error::DimensionMismatch {
            expected: field.len(),
            got: intensity.len(),
        });
    }
    let moments = |iv: &[Interval]| -> Result<Vec<Moments>> {
        iv.iter()
            .map(|&i| Ok(noise.integrated(field.interval_energy(intensity, i)?, i.len().max(0.0))))
            .collect()
    };
    Ok(ObservationMoments {
        y: moments(&intervals.y)?,
        z: moments(&intervals.z)?,
    })
}

/// Integrate-and-dump of a sampled received field with per-interval Gaussian
/// noise.
pub fn detect_field<R: Rng + ?Sized>(
    field: &SampledField,
    intervals: &BlockIntervals,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Observation> {
    Ok(field_moments(field, intervals, noise)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use crate::waveform::{aligned_oversampling, synthesize_block};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn excess_noise_examples() {
        assert!((excess_noise_factor(20.0, 0.6).unwrap() - 12.78).abs() < 1e-12);
        assert!((excess_noise_factor(1.0, 0.3).unwrap() - 1.0).abs() < 1e-15);
        assert!((excess_noise_factor(10.0, 0.5).unwrap() - 5.95).abs() < 1e-12);
        assert!(excess_noise_factor(0.5, 0.5).is_err());
    }

    #[test]
    fn reference_noise_model() {
        let nm = build_noise_model(&ApdParams::default()).unwrap();
        assert!((nm.thermal_psd / 5.5226e-22 - 1.0).abs() < 1e-4);
        assert!((nm.shot_psd / 4.0950e-16 - 1.0).abs() < 1e-4);
        assert!((nm.signal_gain - 10.0).abs() < 1e-12);
        assert!(ApdParams::default().excess_noise_factor() > 1.0);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = ApdParams {
            gain: 0.5,
            ..ApdParams::default()
        };
        assert!(build_noise_model(&p).is_err());
        let p = ApdParams {
            load_resistance: 0.0,
            ..ApdParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn noiseless_detection_is_scaled_upsilon() {
        let shape = TukeyShape::new(0.9, 1e-10).unwrap();
        let nm = NoiseModel::new(0.0, 0.0, 10.0).unwrap();
        let block = [c(1e-2, 0.0), c(0.0, 2e-2), c(-1e-2, 1e-2)];
        let obs = detect_analytic(&block, &shape, &nm, &mut trial_rng(1, 0));
        let u = crate::classes::upsilon(&block, &shape).unwrap();
        for (o, e) in obs.y.iter().zip(&u.y).chain(obs.z.iter().zip(&u.z)) {
            assert!((*o - 10.0 * e).abs() <= 1e-14 * o.abs());
        }
    }

    #[test]
    fn variance_is_signal_dependent() {
        let shape = TukeyShape::new(0.5, 1e-10).unwrap();
        let nm = build_noise_model(&ApdParams::default()).unwrap();
        let m = analytic_moments(&[c(1e-2, 0.0)], &shape, &nm);
        assert!(m.y[0].variance > nm.thermal_psd * 0.5e-10);
    }

    #[test]
    fn field_moments_match_closed_form() {
        let nm = build_noise_model(&ApdParams::default()).unwrap();
        for beta in [0.5, 0.9] {
            let shape = TukeyShape::new(beta, 1e-10).unwrap();
            let block = [c(0.01, 0.0), c(0.0, -0.02), c(0.015, 0.01), c(-0.01, 0.0)];
            let field = synthesize_block(&shape, &block, aligned_oversampling(beta, 64)).unwrap();
            let fm = field_moments(&field, &BlockIntervals::new(&shape, 4, 0), &nm).unwrap();
            let am = analytic_moments(&block, &shape, &nm);
            assert!(fm.max_relative_difference(&am) < 1e-6, "beta {beta}");
        }
    }

    #[test]
    fn doubling_power_doubles_mean_and_shot_variance() {
        let shape = TukeyShape::new(0.7, 1e-10).unwrap();
        let nm = build_noise_model(&ApdParams::default()).unwrap();
        let block = [c(0.01, 0.0), c(0.0, 0.01)];
        let field = synthesize_block(&shape, &block, 64).unwrap();
        let iv = BlockIntervals::new(&shape, 2, 0);
        let base = field_moments(&field, &iv, &nm).unwrap();
        let double = field_moments(&field.scaled(2f64.sqrt()), &iv, &nm).unwrap();
        for (b, d) in base
            .y
            .iter()
            .zip(&double.y)
            .chain(base.z.iter().zip(&double.z))
        {
            assert!((d.mean / b.mean - 2.0).abs() < 1e-12);
            assert!(d.variance < 2.0 * b.variance);
            let shot_b = b.mean / nm.signal_gain * nm.shot_psd;
            let shot_d = d.mean / nm.signal_gain * nm.shot_psd;
            assert!((shot_d / shot_b - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_bounds_interval_is_an_error() {
        let shape = TukeyShape::new(0.5, 1.0).unwrap();
        let field = synthesize_block(&shape, &[c(1.0, 0.0)], 64).unwrap();
        let iv = BlockIntervals::new(&shape, 3, 0);
        assert!(matches!(
            field_moments(&field, &iv, &NoiseModel::new(0.0, 1.0, 1.0).unwrap()),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn same_seed_same_draws() {
        let shape = TukeyShape::new(0.9, 1e-10).unwrap();
        let nm = build_noise_model(&ApdParams::default()).unwrap();
        let block = [c(0.01, 0.0), c(0.0, 0.01), c(-0.01, 0.0)];
        let a = detect_analytic(&block, &shape, &nm, &mut trial_rng(5, 17));
        let b = detect_analytic(&block, &shape, &nm, &mut trial_rng(5, 17));
        assert_eq!(a, b);
    }
}
