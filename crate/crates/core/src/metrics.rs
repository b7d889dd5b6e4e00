//! Monte Carlo estimators: mutual information, bit error rate, transmitted
//! power, and the power decomposition over interference-free and
//! interference-present intervals.
//!
//! Trial `i` always draws from `trial_rng(seed, i)` and per-trial results are
//! reduced in trial order, so every estimate is a pure function of its inputs
//! and the seed regardless of how many worker threads run.

use std::f64::consts::LN_2;

use log::warn;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classes::SymbolBlockSet;
use crate::error::{invalid, Error, Result};
use crate::fiber::{precompensate, ssfm_propagate, FiberParams};
use crate::photodetector::{detect_analytic, field_moments_with_intensity, BlockIntervals};
use crate::quadrature::{integrate, CompensatedSum};
use crate::receiver::{argmax, LikelihoodContext, Scratch};
use crate::rng::trial_rng;
use crate::waveform::{field_at, synthesize_block, SampledField, TukeyShape};

/// Point estimate with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Standard error for MI, 95% confidence half-width for BER.
    pub half_width: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub power_dbm: f64,
    pub value: f64,
    pub trials: u64,
    pub half_width: f64,
}

/// Rows of a power sweep, kept sorted by power.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, power_dbm: f64, e: Estimate) {
        let row = SweepRow {
            power_dbm,
            value: e.value,
            trials: e.trials,
            half_width: e.half_width,
        };
        let at = self.rows.partition_point(|r| r.power_dbm <= power_dbm);
        self.rows.insert(at, row);
    }

    pub fn rows(&self) -> &[SweepRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Distribution of the transmitted block.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Uniform,
    /// Proportional to the size of each block's class; a uniform draw from
    /// all of `𝒦ⁿ` followed by mapping to the class representative.
    ClassSize,
    /// Explicit probabilities, one per block, summing to 1.
    Weights(Vec<f64>),
}

impl Prior {
    fn weights(&self, blocks: &SymbolBlockSet) -> Result<Vec<f64>> {
        let m = blocks.len();
        let w = match self {
            Prior::Uniform => vec![1.0 / m as f64; m],
            Prior::ClassSize => {
                let total: usize = blocks.class_sizes().iter().sum();
                blocks
                    .class_sizes()
                    .iter()
                    .map(|&s| s as f64 / total as f64)
                    .collect()
            }
            Prior::Weights(w) => {
                if w.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: w.len(),
                    });
                }
                if w.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                    return Err(invalid("prior", "probabilities must be non-negative"));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(invalid("prior", format!("sums to {sum}, not 1")));
                }
                w.clone()
            }
        };
        Ok(w)
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn mean_and_std_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().copied().collect::<CompensatedSum>().value() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss = samples
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<CompensatedSum>()
        .value();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Mutual information per symbol between the transmitted block and the
/// back-to-back receiver output, in bits, with its standard error.
pub fn estimate_mi(
    ctx: &LikelihoodContext,
    prior: &Prior,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let weights = prior.weights(ctx.blocks())?;
    if weights.iter().filter(|&&p| p > 0.0).count() == 1 {
        warn!("prior has a single atom; mutual information is zero");
        return Ok(Estimate {
            value: 0.0,
            half_width: 0.0,
            trials,
        });
    }
    let log_prior: Vec<f64> = weights.iter().map(|p| p.ln()).collect();
    let sampler = WeightedIndex::new(&weights).map_err(|e| invalid("prior", e.to_string()))?;
    let n = ctx.n() as f64;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(
            || (Scratch::default(), Vec::new()),
            |(scratch, ll), i| -> Result<f64> {
                let mut rng = trial_rng(seed, i);
                let d = sampler.sample(&mut rng);
                let obs =
                    detect_analytic(ctx.blocks().block(d), ctx.shape(), ctx.noise(), &mut rng);
                ctx.log_likelihoods_into(&obs, scratch, ll)?;
                let denom = log_sum_exp(ll.iter().zip(&log_prior).map(|(l, p)| l + p));
                Ok((ll[d] - denom) / LN_2 / n)
            },
        )
        .collect::<Result<_>>()?;
    let (value, se) = mean_and_std_error(&samples);
    Ok(Estimate {
        value,
        half_width: se,
        trials,
    })
}

/// Stopping rule for BER simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerBudget {
    pub max_bits: u64,
    pub max_errors: u64,
    /// Trials per batch; the stopping rule is checked between batches.
    pub batch: u64,
}

impl Default for BerBudget {
    fn default() -> Self {
        BerBudget {
            max_bits: 10_000_000,
            max_errors: 100,
            batch: 4096,
        }
    }
}

/// Bit error count and its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub ber: f64,
    pub lower: f64,
    pub upper: f64,
    pub bits: u64,
    pub errors: u64,
    /// Blocks (or frames, for fiber runs) transmitted.
    pub trials: u64,
}

impl BerEstimate {
    fn from_counts(errors: u64, bits: u64, trials: u64) -> Self {
        let (lower, upper) = wilson_interval(errors, bits, 1.959_963_984_540_054);
        BerEstimate {
            ber: errors as f64 / bits as f64,
            lower,
            upper,
            bits,
            errors,
            trials,
        }
    }

    /// As a sweep estimate; `trials` counts transmitted bits.
    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.ber,
            half_width: 0.5 * (self.upper - self.lower),
            trials: self.bits,
        }
    }

    /// Whether the two 95% intervals overlap.
    pub fn overlaps(&self, other: &BerEstimate) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn labels_of(blocks: &SymbolBlockSet) -> Result<(&[u32], u32)> {
    match (blocks.labels(), blocks.bits_per_block()) {
        (Some(l), Some(b)) if blocks.len().is_power_of_two() && b > 0 => Ok((l, b)),
        _ => Err(invalid(
            "labels",
            "BER needs a labelled block set with M = 2^b >= 2",
        )),
    }
}

/// Runs batches of `trial(i) -> bit errors` until the budget is reached.
fn run_batches<F>(bits_per_trial: u64, budget: &BerBudget, trial: F) -> Result<BerEstimate>
where
    F: Fn(u64) -> Result<u64> + Sync,
{
    if budget.max_bits == 0 || budget.batch == 0 {
        return Err(invalid("budget", "max_bits and batch must be positive"));
    }
    let max_trials = budget.max_bits.div_ceil(bits_per_trial);
    let (mut errors, mut done) = (0u64, 0u64);
    while done < max_trials && errors < budget.max_errors {
        let end = (done + budget.batch).min(max_trials);
        let counts: Vec<u64> = (done..end)
            .into_par_iter()
            .map(&trial)
            .collect::<Result<_>>()?;
        errors += counts.iter().sum::<u64>();
        done = end;
    }
    Ok(BerEstimate::from_counts(
        errors,
        done * bits_per_trial,
        done,
    ))
}

/// Back-to-back BER: uniformly random labelled blocks, analytic detector,
/// ML detection, label bit flips counted.
pub fn simulate_ber(ctx: &LikelihoodContext, budget: &BerBudget, seed: u64) -> Result<BerEstimate> {
    let (labels, bits) = labels_of(ctx.blocks())?;
    let m = ctx.len();
    run_batches(bits as u64, budget, |i| {
        let mut rng = trial_rng(seed, i);
        let d = rng.random_range(0..m);
        let obs = detect_analytic(ctx.blocks().block(d), ctx.shape(), ctx.noise(), &mut rng);
        let mut scratch = Scratch::default();
        let mut ll = Vec::with_capacity(m);
        ctx.log_likelihoods_into(&obs, &mut scratch, &mut ll)?;
        let got = argmax(&ll);
        Ok((labels[d] ^ labels[got]).count_ones() as u64)
    })
}

/// Settings for the fiber BER pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberLink {
    pub fiber: FiberParams,
    /// Blocks transmitted back to back per simulated waveform.
    pub blocks_per_frame: usize,
    pub oversampling: usize,
}

/// BER through the fiber: frames of random labelled blocks at launch scale
/// are synthesised, precompensated, propagated by split-step Fourier, and
/// integrated; each block is detected against the context built at the
/// received scale (`ρ·𝒮`). Outputs over the gap between blocks are ignored.
pub fn simulate_fiber_ber(
    launch_blocks: &SymbolBlockSet,
    shape: &TukeyShape,
    noise: &crate::photodetector::NoiseModel,
    link: &FiberLink,
    budget: &BerBudget,
    seed: u64,
) -> Result<BerEstimate> {
    link.fiber.validate()?;
    if link.blocks_per_frame == 0 {
        return Err(invalid("blocks_per_frame", "must be positive"));
    }
    let ctx = LikelihoodContext::new(
        launch_blocks.scaled(link.fiber.loss_factor()),
        *shape,
        *noise,
    )?;
    let (labels, bits) = labels_of(launch_blocks)?;
    let m = launch_blocks.len();
    let n = launch_blocks.n();
    let frame = link.blocks_per_frame;
    let guard = link.fiber.guard_band(shape.period());
    run_batches(bits as u64 * frame as u64, budget, |i| {
        let mut rng = trial_rng(seed, i);
        let sent: Vec<usize> = (0..frame).map(|_| rng.random_range(0..m)).collect();
        let symbols: Vec<Complex64> = sent
            .iter()
            .flat_map(|&d| launch_blocks.block(d).iter().copied())
            .collect();
        let x = synthesize_block(shape, &symbols, link.oversampling)?;
        let u = precompensate(&x, link.fiber.beta2, link.fiber.length_km, guard);
        let r = ssfm_propagate(&u, &link.fiber)?;
        let intensity = r.intensity();
        let mut scratch = Scratch::default();
        let mut ll = Vec::with_capacity(m);
        let mut errors = 0;
        for (j, &d) in sent.iter().enumerate() {
            let iv = BlockIntervals::new(shape, n, j * n);
            let obs = field_moments_with_intensity(&r, &intensity, &iv, noise)?.sample(&mut rng);
            ctx.log_likelihoods_into(&obs, &mut scratch, &mut ll)?;
            errors += (labels[d] ^ labels[argmax(&ll)]).count_ones() as u64;
        }
        Ok(errors)
    })
}

/// `(1/duration)·Σ|samples|²·dt`.
pub fn empirical_power(field: &SampledField, duration: f64) -> Result<f64> {
    if !(duration > 0.0) {
        return Err(invalid(
            "duration",
            format!("must be positive, got {duration}"),
        ));
    }
    Ok(field.energy() / duration)
}

/// Draws `num_blocks` blocks uniformly from `blocks`, synthesises the whole
/// stream, and returns its average power over `num_blocks·n·T`.
pub fn stream_power(
    blocks: &SymbolBlockSet,
    shape: &TukeyShape,
    num_blocks: usize,
    oversampling: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = trial_rng(seed, 0);
    let symbols: Vec<Complex64> = (0..num_blocks)
        .flat_map(|_| blocks.block(rng.random_range(0..blocks.len())).to_vec())
        .collect();
    let x = synthesize_block(shape, &symbols, oversampling)?;
    empirical_power(&x, symbols.len() as f64 * shape.period())
}

/// Per-interval split of the average power of a symbol stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDecomposition {
    /// Mean of `G_k = (1/T)∫_{𝒴_k}|x|²` over the `m` symbols.
    pub g_mean: f64,
    /// Mean of `H_ℓ = (1/T)∫_{𝒵_ℓ}|x|²` over the `m−1` overlaps.
    pub h_mean: f64,
    /// The two outer tapers, `(1/T)` times their energy, divided by `m`.
    pub edge: f64,
}

impl PowerDecomposition {
    /// Average power over `mT`.
    pub fn total(&self, m: usize) -> f64 {
        (self.g_mean * m as f64 + self.h_mean * (m - 1) as f64) / m as f64 + self.edge
    }
}

/// Splits `(1/mT)∫|x|²` into its interference-free, interference-present and
/// edge parts by adaptive quadrature on the exact waveform.
pub fn power_decomposition(
    symbols: &[Complex64],
    shape: &TukeyShape,
) -> Result<PowerDecomposition> {
    let m = symbols.len();
    if m < 2 {
        return Err(invalid("symbols", "need at least two symbols"));
    }
    let t = shape.period();
    let scale = symbols
        .iter()
        .map(|s| s.norm_sqr())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale;
    let energy = |a: f64, b: f64| -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        integrate(|s| field_at(shape, symbols, s * t).norm_sqr(), a, b, tol)
    };
    let mut g = CompensatedSum::default();
    for k in 0..m {
        let iv = shape.isi_free_interval(k);
        g.add(energy(iv.start / t, iv.end / t)?);
    }
    let mut h = CompensatedSum::default();
    for l in 0..m - 1 {
        let iv = shape.isi_present_interval(l);
        h.add(energy(iv.start / t, iv.end / t)?);
    }
    let half = 0.5 * (1.0 - shape.beta());
    let outer = 0.5 * (1.0 + shape.beta());
    let edge = energy(-outer, -half)? + energy((m - 1) as f64 + half, (m - 1) as f64 + outer)?;
    Ok(PowerDecomposition {
        g_mean: g.value() / m as f64,
        h_mean: h.value() / (m - 1) as f64,
        edge: edge / m as f64,
    })
}
