//! Single-mode fiber: dispersion precompensation, loss, and split-step
//! propagation of the scalar NLSE
//!
//! `∂A/∂z = −(a/2)A − i(β₂/2)∂²A/∂t² + iγ|A|²A`.
//!
//! Spectra use the forward kernel `e^{−i2πft}`, under which the lossless
//! linear fiber is `exp(i2β₂Lπ²f²)` and the precompensator is its conjugate.

use std::f64::consts::{LN_10, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::waveform::SampledField;

/// Largest tolerated fraction of the field energy in the outer edge cells of
/// the simulation grid.
pub const ALIASING_TOLERANCE: f64 = 1e-6;

/// Fiber span. Defaults are standard SSMF at 1550 nm over 10 km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberParams {
    pub length_km: f64,
    /// ps²/km.
    pub beta2: f64,
    /// 1/(W·km).
    pub gamma: f64,
    /// dB/km.
    pub loss_db_per_km: f64,
    pub step_km: f64,
}

impl Default for FiberParams {
    fn default() -> Self {
        FiberParams {
            length_km: 10.0,
            beta2: -21.7,
            gamma: 1.3,
            loss_db_per_km: 0.2,
            step_km: 0.1,
        }
    }
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_km >= 0.0 && self.length_km.is_finite()) {
            return Err(invalid(
                "length_km",
                format!("must be >= 0, got {}", self.length_km),
            ));
        }
        if !(self.step_km > 0.0 && self.step_km.is_finite()) {
            return Err(invalid(
                "step_km",
                format!("must be > 0, got {}", self.step_km),
            ));
        }
        if !(self.loss_db_per_km >= 0.0 && self.loss_db_per_km.is_finite()) {
            return Err(invalid(
                "loss_db_per_km",
                format!("must be >= 0, got {}", self.loss_db_per_km),
            ));
        }
        if !self.beta2.is_finite() || !self.gamma.is_finite() {
            return Err(invalid("beta2/gamma", "must be finite".to_string()));
        }
        Ok(())
    }

    /// β₂ in s²/km.
    pub fn beta2_si(&self) -> f64 {
        self.beta2 * 1e-24
    }

    /// Amplitude loss factor over the whole span.
    pub fn loss_factor(&self) -> f64 {
        loss_factor(self.length_km, self.loss_db_per_km)
    }

    /// Power attenuation coefficient in nepers/km.
    pub fn attenuation(&self) -> f64 {
        self.loss_db_per_km * LN_10 / 10.0
    }

    /// Time padding needed on each side of a signal so that dispersive
    /// spreading stays on the grid.
    pub fn guard_band(&self, symbol_period: f64) -> f64 {
        guard_band(self.beta2, self.length_km, symbol_period)
    }
}

/// Amplitude factor `ρ = 10^(−loss·L/20)`.
pub fn loss_factor(length_km: f64, loss_db_per_km: f64) -> f64 {
    10f64.powf(-loss_db_per_km * length_km / 20.0)
}

/// Dispersive spread `2π|β₂|L·(2/T)` over a two-sided bandwidth of `2/T`,
/// plus two symbol periods of margin. `beta2` in ps²/km.
pub fn guard_band(beta2: f64, length_km: f64, symbol_period: f64) -> f64 {
    2.0 * PI * (beta2 * 1e-24).abs() * length_km * 2.0 / symbol_period + 2.0 * symbol_period
}

/// FFT bin frequencies in hertz.
fn frequencies(n: usize, dt: f64) -> Vec<f64> {
    let df = 1.0 / (n as f64 * dt);
    (0..n)
        .map(|k| if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 } * df)
        .collect()
}

struct Transforms {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Transforms {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Transforms {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// `a ← IFFT(FFT(a)·filter)`.
    fn filter(&mut self, a: &mut [Complex64], filter: &[Complex64]) {
        self.forward.process_with_scratch(a, &mut self.scratch);
        let inv_n = 1.0 / a.len() as f64;
        for (v, h) in a.iter_mut().zip(filter) {
            *v *= h * inv_n;
        }
        self.inverse.process_with_scratch(a, &mut self.scratch);
    }
}

/// Multiplies the spectrum by `exp(i·sign·2β₂Lπ²f²)`; `beta2` in ps²/km.
/// `sign = +1` is lossless linear fiber, `sign = −1` its inverse.
pub fn apply_dispersion(x: &SampledField, beta2: f64, length_km: f64, sign: f64) -> SampledField {
    let mut out = x.clone();
    if length_km == 0.0 || beta2 == 0.0 {
        return out;
    }
    let k = sign * 2.0 * beta2 * 1e-24 * length_km * PI * PI;
    let filter: Vec<Complex64> = frequencies(x.len(), x.dt())
        .into_iter()
        .map(|f| Complex64::from_polar(1.0, k * f * f))
        .collect();
    Transforms::new(x.len()).filter(out.samples_mut(), &filter);
    out
}

/// Pads `x` by `guard` seconds on each side plus a 5% margin, rounds up to a
/// power of two length, and applies the dispersion precompensator.
pub fn precompensate(x: &SampledField, beta2: f64, length_km: f64, guard: f64) -> SampledField {
    let g = (guard.max(0.0) / x.dt()).ceil() as usize;
    let total = ((x.len() + 2 * g) * 11).div_ceil(10).next_power_of_two();
    let extra = total - x.len() - 2 * g;
    let padded = x.padded(g + extra / 2, g + extra - extra / 2);
    apply_dispersion(&padded, beta2, length_km, -1.0)
}

/// Fraction of the field energy in the outer `1/64` of the grid at either
/// end.
pub fn edge_energy_fraction(x: &SampledField) -> f64 {
    let n = x.len();
    let w = (n / 64).max(1);
    let total: f64 = x.samples().iter().map(|s| s.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = x.samples()[..w.min(n)]
        .iter()
        .chain(&x.samples()[n.saturating_sub(w)..])
        .map(|s| s.norm_sqr())
        .sum();
    edge / total
}

fn check_edges(x: &SampledField) -> Result<()> {
    let f = edge_energy_fraction(x);
    if f > ALIASING_TOLERANCE {
        return Err(Error::Aliasing { edge_fraction: f });
    }
    Ok(())
}

/// Symmetric split-step Fourier solution of the NLSE over the span. Loss is
/// applied continuously in the linear half-steps. Fails with
/// [`Error::Aliasing`] when the field reaches the grid edges.
pub fn ssfm_propagate(u: &SampledField, p: &FiberParams) -> Result<SampledField> {
    p.validate()?;
    check_edges(u)?;
    let n = u.len();
    let mut out = u.clone();
    if p.length_km == 0.0 {
        return Ok(out);
    }
    let (steps, h) = if p.gamma == 0.0 {
        (1, p.length_km)
    } else {
        let steps = (p.length_km / p.step_km).ceil().max(1.0) as usize;
        (steps, p.length_km / steps as f64)
    };
    let b2 = p.beta2_si();
    let a = p.attenuation();
    let half_step = |dz: f64| -> Vec<Complex64> {
        frequencies(n, u.dt())
            .into_iter()
            .map(|f| Complex64::new(-a / 2.0 * dz, 2.0 * b2 * PI * PI * f * f * dz).exp())
            .collect()
    };
    let half = half_step(h / 2.0);
    let full = half_step(h);
    let mut tf = Transforms::new(n);
    let a_samples = out.samples_mut();
    if p.gamma == 0.0 {
        tf.filter(a_samples, &full);
    } else {
        // D/2 N D N ... N D/2, merging adjacent half-steps.
        tf.filter(a_samples, &half);
        for s in 0..steps {
            for v in a_samples.iter_mut() {
                *v *= Complex64::from_polar(1.0, p.gamma * v.norm_sqr() * h);
            }
            tf.filter(a_samples, if s + 1 == steps { &half } else { &full });
        }
    }
    check_edges(&out)?;
    Ok(out)
}
