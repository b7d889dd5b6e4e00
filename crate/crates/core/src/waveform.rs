//! Tukey signalling waveform.
//!
//! The pulse `w_β` is a cosine-tapered (Tukey) window of unit energy: flat at
//! height `α = 2/√(4−β)` over `|t| ≤ (1−β)/2`, with raised-sine tapers of width
//! `β` on either side. A block of symbols `x_0..x_{n-1}` is transmitted as
//! `x(t) = Σ x_d w_β(t/T − d)`; adjacent pulses overlap only on their tapers,
//! so at most two symbols are ever active at one instant.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Half-width of the removable-singularity guard around `f = ±1/(2β)`.
const SINGULARITY_GUARD: f64 = 1e-9;
/// Frequency-domain integrals are truncated here (cycles per symbol).
pub const SPECTRUM_CUTOFF: f64 = 50.0;
const BANDWIDTH_TOLERANCE: f64 = 1e-6;

/// Normalised sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Plateau height `α = 2/√(4−β)` of the unit-energy Tukey pulse.
pub fn plateau_height(beta: f64) -> f64 {
    2.0 / (4.0 - beta).sqrt()
}

/// Unit-energy Tukey pulse `w_β(t)` in symbol-normalised time.
pub fn tukey(beta: f64, t: f64) -> f64 {
    let a = t.abs();
    let scale = 1.0 / (4.0 - beta).sqrt();
    if a <= 0.5 * (1.0 - beta) {
        2.0 * scale
    } else if (a - 0.5).abs() <= 0.5 * beta {
        scale * (1.0 - (PI * (2.0 * a - 1.0) / (2.0 * beta)).sin())
    } else {
        0.0
    }
}

/// Fourier transform `W_β(f)` of the normalised pulse.
pub fn tukey_spectrum(beta: f64, f: f64) -> f64 {
    let scale = 1.0 / (4.0 - beta).sqrt();
    if beta > 0.0 && (f.abs() - 0.5 / beta).abs() < SINGULARITY_GUARD {
        return PI / 2.0 * scale * sinc(0.5 / beta);
    }
    let u = 2.0 * beta * f;
    2.0 * scale * sinc(f) * (PI * beta * f).cos() / (1.0 - u * u)
}

/// Pulse roll-off and symbol period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TukeyShape {
    beta: f64,
    period: f64,
}

impl TukeyShape {
    pub fn new(beta: f64, period: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(invalid("beta", format!("{beta} is outside [0, 1]")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(invalid(
                "T",
                format!("symbol period must be positive, got {period}"),
            ));
        }
        Ok(TukeyShape { beta, period })
    }

    /// Shape with `T = 1`.
    pub fn normalized(beta: f64) -> Result<Self> {
        Self::new(beta, 1.0)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Symbol period `T` in seconds.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn alpha(&self) -> f64 {
        plateau_height(self.beta)
    }

    /// `w_β(t/T)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        tukey(self.beta, t / self.period)
    }

    /// Shaping filter `h_β(t/T)/T`; a rectangular pulse of width `T` through
    /// this filter yields [`evaluate`](Self::evaluate).
    pub fn impulse_response(&self, t: f64) -> Result<f64> {
        if self.beta == 0.0 {
            return Err(Error::DegenerateFilter);
        }
        let s = t / self.period;
        if s.abs() > 0.5 * self.beta {
            return Ok(0.0);
        }
        let b = self.beta;
        Ok(PI / (b * (4.0 - b).sqrt()) * (PI * s / b).cos() / self.period)
    }

    /// `T·W_β(fT)`, the transform of the dilated pulse (units √s when the
    /// pulse is read in √W).
    pub fn fourier_transform(&self, f: f64) -> f64 {
        self.period * tukey_spectrum(self.beta, f * self.period)
    }

    /// Half-width of the pulse support, `(1+β)T/2`.
    pub fn half_support(&self) -> f64 {
        0.5 * (1.0 + self.beta) * self.period
    }

    /// `𝒴_k`: the span around `kT` where only `x_k` is on air.
    pub fn isi_free_interval(&self, k: usize) -> Interval {
        let h = 0.5 * (1.0 - self.beta);
        let k = k as f64;
        Interval::new((k - h) * self.period, (k + h) * self.period)
    }

    /// `𝒵_ℓ`: the overlap of the pulses of `x_ℓ` and `x_{ℓ+1}`.
    pub fn isi_present_interval(&self, l: usize) -> Interval {
        let l = l as f64;
        Interval::new(
            (l + 0.5 * (1.0 - self.beta)) * self.period,
            (l + 0.5 * (1.0 + self.beta)) * self.period,
        )
    }

    /// Symbol indices whose pulses are nonzero at `t` for a block of `n`
    /// symbols. Never longer than two (three only when `t` sits exactly on a
    /// support edge, where the outer pulse is zero).
    pub fn active_symbols(&self, t: f64, n: usize) -> Option<RangeInclusive<usize>> {
        if n == 0 {
            return None;
        }
        let s = t / self.period;
        let h = 0.5 * (1.0 + self.beta);
        let lo = (s - h).ceil().max(0.0);
        let hi = (s + h).floor().min((n - 1) as f64);
        if lo > hi {
            None
        } else {
            Some(lo as usize..=hi as usize)
        }
    }
}

/// Closed interval `[start, end]` in seconds. Interior/closure distinctions
/// do not matter to integrals, so ISI-present intervals use the same type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Interval { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    /// True for zero-length intervals (every `𝒴_k` at `β = 1`).
    pub fn is_degenerate(&self) -> bool {
        self.len() <= 0.0
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Interval::new(self.start + dt, self.end + dt)
    }
}

/// Uniformly sampled complex field in √W.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    samples: Vec<Complex64>,
    dt: f64,
    t0: f64,
}

impl SampledField {
    pub fn new(samples: Vec<Complex64>, dt: f64, t0: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid(
                "samples",
                "a sampled field needs at least one sample",
            ));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(
                "dt",
                format!("sample spacing must be positive, got {dt}"),
            ));
        }
        Ok(SampledField { samples, dt, t0 })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    /// `Σ|s|²·dt` in joules.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// Returns a copy with the amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        SampledField {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            dt: self.dt,
            t0: self.t0,
        }
    }

    /// Zero-pads with `before` samples in front and `after` behind.
    pub fn padded(&self, before: usize, after: usize) -> Self {
        let mut samples = vec![Complex64::new(0.0, 0.0); before];
        samples.extend_from_slice(&self.samples);
        samples.resize(samples.len() + after, Complex64::new(0.0, 0.0));
        SampledField {
            samples,
            dt: self.dt,
            t0: self.t0 - before as f64 * self.dt,
        }
    }

    /// `∫|r|²` over `interval` by the trapezoidal rule, with the endpoints
    /// linearly interpolated.
    pub fn interval_energy(&self, intensity: &[f64], interval: Interval) -> Result<f64> {
        let slack = 1e-9 * self.dt;
        if interval.start < self.t0 - slack || interval.end > self.end_time() + slack {
            return Err(Error::OutOfBounds {
                start: interval.start,
                end: interval.end,
                field_start: self.t0,
                field_end: self.end_time(),
            });
        }
        if interval.is_degenerate() {
            return Ok(0.0);
        }
        Ok(quadrature::trapezoid_interval(
            intensity,
            self.t0,
            self.dt,
            interval.start,
            interval.end,
        ))
    }
}

/// Smallest oversampling factor `≥ min` (searching up to `8·min`) for which
/// every interval edge `k ± (1−β)T/2` falls on the synthesis grid. Falls back
/// to `min` when no such factor exists in range.
pub fn aligned_oversampling(beta: f64, min: usize) -> usize {
    let min = min.max(1);
    for os in min..=8 * min {
        let edge = 0.5 * (1.0 - beta) * os as f64;
        if (edge - edge.round()).abs() < 1e-9 {
            return os;
        }
    }
    min
}

/// Samples `x(t) = Σ x_d w_β(t/T − d)` over the full block support at
/// `oversampling` samples per symbol. The grid contains `t = 0`, so symbol
/// centres are always sample points.
pub fn synthesize_block(
    shape: &TukeyShape,
    symbols: &[Complex64],
    oversampling: usize,
) -> Result<SampledField> {
    if symbols.is_empty() {
        return Err(invalid("symbols", "cannot synthesise an empty block"));
    }
    if oversampling < 8 {
        return Err(invalid(
            "oversampling",
            format!("need at least 8 samples per symbol, got {oversampling}"),
        ));
    }
    let n = symbols.len();
    let os = oversampling as f64;
    let dt = shape.period() / os;
    let h = 0.5 * (1.0 + shape.beta());
    // Grid index of the first and last sample relative to t = 0.
    let first = -(h * os - 1e-9).ceil() as i64;
    let last = (((n - 1) as f64 + h) * os + 1e-9).ceil() as i64;
    let samples = (first..=last)
        .map(|i| field_at(shape, symbols, i as f64 * dt))
        .collect();
    SampledField::new(samples, dt, first as f64 * dt)
}

/// Exact `x(t)` for a block, touching only the active pulses.
pub fn field_at(shape: &TukeyShape, symbols: &[Complex64], t: f64) -> Complex64 {
    match shape.active_symbols(t, symbols.len()) {
        Some(range) => range
            .map(|d| symbols[d] * shape.evaluate(t - d as f64 * shape.period()))
            .sum(),
        None => Complex64::new(0.0, 0.0),
    }
}

/// `∫ w_β(t) w_β(t−1) dt = β / (2(4−β))`.
pub fn shift_inner_product(beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid("beta", format!("{beta} is outside [0, 1]")));
    }
    Ok(beta / (2.0 * (4.0 - beta)))
}

/// Energy of the normalised pulse inside `|f| ≤ half_width`.
pub fn in_band_energy(beta: f64, half_width: f64) -> Result<f64> {
    if half_width <= 0.0 {
        return Ok(0.0);
    }
    // Panels of a quarter cycle keep each GK panel on a smooth, non-oscillating piece.
    let panels = (half_width / 0.25).ceil().max(1.0) as usize;
    let step = half_width / panels as f64;
    let mut sum = quadrature::CompensatedSum::default();
    for i in 0..panels {
        let a = i as f64 * step;
        let b = if i + 1 == panels {
            half_width
        } else {
            a + step
        };
        sum.add(quadrature::integrate(
            |f| tukey_spectrum(beta, f).powi(2),
            a,
            b,
            1e-13 / panels as f64,
        )?);
    }
    Ok(2.0 * sum.value())
}

/// Smallest half-width `B` (cycles per symbol) such that `|f| ≤ B` holds at
/// least `fraction` of the pulse energy. This is the "bandwidth" of the
/// usual 95%/90% in-band tables, compared against the Nyquist minimum 1/2.
pub fn fractional_energy_bandwidth(beta: f64, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid("fraction", format!("{fraction} is outside (0, 1)")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid("beta", format!("{beta} is outside (0, 1]")));
    }
    let (mut lo, mut hi) = (0.0, SPECTRUM_CUTOFF);
    let top = in_band_energy(beta, hi)?;
    if top < fraction {
        return Err(Error::NumericalFailure {
            achieved: 1.0 - top,
            tolerance: 1.0 - fraction,
        });
    }
    while hi - lo > BANDWIDTH_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if in_band_energy(beta, mid)? >= fraction {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluate_examples() {
        let rect = TukeyShape::normalized(0.0).unwrap();
        assert_eq!(rect.evaluate(0.0), 1.0);
        let s = TukeyShape::normalized(0.9).unwrap();
        assert!(s.evaluate(0.95).abs() < 1e-15);
        assert!(s.evaluate(-0.95).abs() < 1e-15);
        let h = TukeyShape::normalized(0.5).unwrap();
        assert!((h.evaluate(0.0) - 2.0 / 3.5f64.sqrt()).abs() < 1e-15);
        assert!((h.evaluate(0.0) - 1.069045).abs() < 1e-6);
    }

    #[test]
    fn dilation_and_support() {
        let s = TukeyShape::new(0.5, 2e-10).unwrap();
        assert_eq!(s.evaluate(1e-10), tukey(0.5, 0.5));
        assert_eq!(s.evaluate(1.6e-10), 0.0);
        assert!((s.half_support() - 1.5e-10).abs() < 1e-25);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TukeyShape::new(1.1, 1.0).is_err());
        assert!(TukeyShape::new(-0.1, 1.0).is_err());
        assert!(TukeyShape::new(0.5, 0.0).is_err());
    }

    #[test]
    fn alpha_bounds() {
        for i in 0..=10 {
            let a = plateau_height(i as f64 / 10.0);
            assert!((1.0..=2.0 / 3f64.sqrt() + 1e-15).contains(&a));
        }
    }

    #[test]
    fn impulse_response_examples() {
        let s = TukeyShape::normalized(0.5).unwrap();
        assert_eq!(s.impulse_response(0.3).unwrap(), 0.0);
        assert!(s.impulse_response(0.0).unwrap() > 0.0);
        assert_eq!(
            TukeyShape::normalized(0.0).unwrap().impulse_response(0.0),
            Err(Error::DegenerateFilter)
        );
    }

    #[test]
    fn spectrum_at_dc_is_pulse_area() {
        let s = TukeyShape::normalized(0.9).unwrap();
        let dc = s.fourier_transform(0.0);
        assert!((dc - 2.0 / 3.1f64.sqrt()).abs() < 1e-15);
        assert!((dc - 1.135924).abs() < 1e-6);
        let t = TukeyShape::new(0.9, 3.0).unwrap();
        assert!((t.fourier_transform(0.0) - 3.0 * dc).abs() < 1e-14);
    }

    #[test]
    fn spectrum_special_branch_is_continuous() {
        // β = 0.5: f = 1/(2β) = 1 where the general formula is 0/0.
        let at = tukey_spectrum(0.5, 1.0);
        assert_eq!(at, PI / (2.0 * 3.5f64.sqrt()) * sinc(1.0));
        assert!(at.abs() < 1e-15);
        for d in [1e-6, -1e-6] {
            assert!((tukey_spectrum(0.5, 1.0 + d) - at).abs() < 1e-5);
        }
        // A β where the singular value is not zero.
        let b = 0.3;
        let f0 = 0.5 / b;
        let at = tukey_spectrum(b, f0);
        assert!(at.abs() > 1e-3);
        for d in [1e-6, -1e-6, 1e-8] {
            assert!((tukey_spectrum(b, f0 + d) - at).abs() < 1e-5);
        }
    }

    #[test]
    fn intervals() {
        let s = TukeyShape::normalized(0.5).unwrap();
        assert_eq!(s.isi_free_interval(0), Interval::new(-0.25, 0.25));
        let s = TukeyShape::new(0.9, 2.0).unwrap();
        let z = s.isi_present_interval(1);
        assert!((z.start - 2.1).abs() < 1e-12 && (z.end - 3.9).abs() < 1e-12);
        let s = TukeyShape::normalized(1.0).unwrap();
        assert!(s.isi_free_interval(3).is_degenerate());
    }

    #[test]
    fn intervals_tile_the_block() {
        for beta in [0.0, 0.3, 0.9, 1.0] {
            let s = TukeyShape::new(beta, 1.5).unwrap();
            let n = 6;
            let mut edge = s.isi_free_interval(0).start;
            assert!((edge + 0.5 * (1.0 - beta) * 1.5).abs() < 1e-12);
            for k in 0..n {
                let y = s.isi_free_interval(k);
                assert!((y.start - edge).abs() < 1e-12);
                assert!((y.len() - (1.0 - beta) * 1.5).abs() < 1e-12);
                edge = y.end;
                if k + 1 < n {
                    let z = s.isi_present_interval(k);
                    assert!((z.start - edge).abs() < 1e-12);
                    assert!((z.len() - beta * 1.5).abs() < 1e-12);
                    edge = z.end;
                }
            }
            assert!((edge - (n as f64 - 0.5 * (1.0 + beta)) * 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn at_most_two_active_pulses() {
        let s = TukeyShape::normalized(0.9).unwrap();
        let n = 5;
        for i in -200..=1000 {
            let t = i as f64 * 0.00517;
            if let Some(r) = s.active_symbols(t, n) {
                let nonzero = r.filter(|&d| s.evaluate(t - d as f64) != 0.0).count();
                assert!(nonzero <= 2, "t = {t}");
            }
        }
    }

    #[test]
    fn synthesize_single_symbol_matches_pulse() {
        let s = TukeyShape::new(0.7, 1e-10).unwrap();
        let f = synthesize_block(&s, &[c(1.0, 0.0)], 64).unwrap();
        for (i, v) in f.samples().iter().enumerate() {
            assert!((v.re - s.evaluate(f.time(i))).abs() < 1e-15);
            assert_eq!(v.im, 0.0);
        }
        assert!(f.t0() <= -s.half_support() + 1e-22);
        assert!(f.end_time() >= s.half_support() - 1e-22);
    }

    #[test]
    fn two_equal_symbols_sum_to_plateau_at_midpoint() {
        for beta in [0.2, 0.5, 0.9, 1.0] {
            let s = TukeyShape::normalized(beta).unwrap();
            let x = field_at(&s, &[c(1.0, 0.0), c(1.0, 0.0)], 0.5);
            assert!((x.re - s.alpha()).abs() < 1e-14);
            assert!((2.0 * s.evaluate(0.5) - s.alpha()).abs() < 1e-14);
        }
    }

    #[test]
    fn synthesis_rejects_bad_input() {
        let s = TukeyShape::normalized(0.5).unwrap();
        assert!(synthesize_block(&s, &[], 64).is_err());
        assert!(synthesize_block(&s, &[c(1.0, 0.0)], 4).is_err());
    }

    #[test]
    fn aligned_oversampling_examples() {
        assert_eq!(aligned_oversampling(0.5, 64), 64);
        assert_eq!(aligned_oversampling(0.9, 64), 80);
        assert_eq!(aligned_oversampling(0.3, 1024), 1040);
        assert_eq!(aligned_oversampling(1.0, 64), 64);
    }

    #[test]
    fn shift_inner_product_examples() {
        assert_eq!(shift_inner_product(0.0).unwrap(), 0.0);
        assert!((shift_inner_product(0.5).unwrap() - 0.0714286).abs() < 1e-7);
        for i in 1..=10 {
            assert!(shift_inner_product(i as f64 / 10.0).unwrap() > 0.0);
        }
    }

    #[test]
    fn bandwidth_rejects_bad_arguments() {
        assert!(fractional_energy_bandwidth(0.5, 1.0).is_err());
        assert!(fractional_energy_bandwidth(0.0, 0.9).is_err());
    }
}
