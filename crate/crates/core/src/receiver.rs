//! Maximum-likelihood block detection.
//!
//! Given a block, the `2n−1` receiver outputs are independent Gaussians whose
//! means *and* variances depend on the block, so the likelihood factors into
//! `n` terms in single symbols and `n−1` terms in adjacent pairs. Many blocks
//! share the same per-coordinate statistics; the context stores each distinct
//! `(mean, variance)` level once and every block as a list of level ids, so a
//! full sweep over `𝒮` evaluates each Gaussian only once per coordinate.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::classes::SymbolBlockSet;
use crate::error::{Error, Result};
use crate::photodetector::{
    analytic_moments, Moments, NoiseModel, Observation, ObservationMoments,
};
use crate::waveform::TukeyShape;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Level {
    mean: f64,
    variance: f64,
    log_norm: f64,
}

impl Level {
    fn new(m: Moments) -> Self {
        Level {
            mean: m.mean,
            variance: m.variance,
            log_norm: -0.5 * (2.0 * PI * m.variance).ln(),
        }
    }

    fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        self.log_norm - 0.5 * d * d / self.variance
    }
}

/// Per-coordinate level table: distinct levels plus each block's level ids
/// (row-major, `width` ids per block).
#[derive(Debug, Clone)]
struct Factor {
    levels: Vec<Level>,
    ids: Vec<u32>,
    width: usize,
}

impl Factor {
    fn build(per_block: impl Iterator<Item = Vec<Moments>>, width: usize) -> Self {
        let mut index: HashMap<(u64, u64), u32> = HashMap::new();
        let mut levels = Vec::new();
        let mut ids = Vec::new();
        for row in per_block {
            for m in row {
                let key = (m.mean.to_bits(), m.variance.to_bits());
                let id = *index.entry(key).or_insert_with(|| {
                    levels.push(Level::new(m));
                    (levels.len() - 1) as u32
                });
                ids.push(id);
            }
        }
        Factor { levels, ids, width }
    }

    /// `table[c * levels + j] = ln N(obs[c]; level j)`.
    fn fill_table(&self, obs: &[f64], table: &mut Vec<f64>) {
        let nl = self.levels.len();
        table.clear();
        table.resize(obs.len() * nl, 0.0);
        for (c, &x) in obs.iter().enumerate() {
            for (j, level) in self.levels.iter().enumerate() {
                table[c * nl + j] = level.log_density(x);
            }
        }
    }
}

/// Precomputed likelihood model for one block set at one received power.
#[derive(Debug, Clone)]
pub struct LikelihoodContext {
    blocks: SymbolBlockSet,
    shape: TukeyShape,
    noise: NoiseModel,
    use_y: bool,
    use_z: bool,
    y: Factor,
    z: Factor,
}

/// Reusable buffers for [`LikelihoodContext::log_likelihoods_into`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    y_table: Vec<f64>,
    z_table: Vec<f64>,
}

impl LikelihoodContext {
    /// Builds the context. `blocks` must already be at the received scale
    /// (symbols in √W at the photodiode). Coordinates over zero-length
    /// intervals (`y` at `β = 1`, `z` at `β = 0`) carry no information and
    /// are left out; every remaining variance must be positive.
    pub fn new(blocks: SymbolBlockSet, shape: TukeyShape, noise: NoiseModel) -> Result<Self> {
        let n = blocks.n();
        let moments: Vec<ObservationMoments> = blocks
            .blocks()
            .map(|b| analytic_moments(b, &shape, &noise))
            .collect();
        let use_y = shape.beta() < 1.0;
        let use_z = shape.beta() > 0.0 && n > 1;
        for (d, m) in moments.iter().enumerate() {
            let check = |list: &[Moments], offset: usize| -> Result<()> {
                match list.iter().position(|m| !(m.variance > 0.0)) {
                    Some(c) => Err(Error::NonPositiveVariance {
                        block: d,
                        coordinate: offset + c,
                    }),
                    None => Ok(()),
                }
            };
            if use_y {
                check(&m.y, 0)?;
            }
            if use_z {
                check(&m.z, n)?;
            }
        }
        let y = Factor::build(moments.iter().map(|m| m.y.clone()), n);
        let z = Factor::build(moments.into_iter().map(|m| m.z), n.saturating_sub(1));
        Ok(LikelihoodContext {
            blocks,
            shape,
            noise,
            use_y,
            use_z,
            y,
            z,
        })
    }

    pub fn blocks(&self) -> &SymbolBlockSet {
        &self.blocks
    }

    pub fn shape(&self) -> &TukeyShape {
        &self.shape
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// `M`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn n(&self) -> usize {
        self.blocks.n()
    }

    /// Stored `(mean, variance)` pairs for block `d`, in observation order.
    pub fn stored_moments(&self, d: usize) -> ObservationMoments {
        let pick = |f: &Factor| -> Vec<Moments> {
            f.ids[d * f.width..(d + 1) * f.width]
                .iter()
                .map(|&j| Moments {
                    mean: f.levels[j as usize].mean,
                    variance: f.levels[j as usize].variance,
                })
                .collect()
        };
        ObservationMoments {
            y: pick(&self.y),
            z: pick(&self.z),
        }
    }

    fn check_dims(&self, obs: &Observation) -> Result<()> {
        let n = self.n();
        if obs.y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: obs.y.len(),
            });
        }
        if obs.z.len() != n.saturating_sub(1) {
            return Err(Error::DimensionMismatch {
                expected: n.saturating_sub(1),
                got: obs.z.len(),
            });
        }
        Ok(())
    }

    /// `ln f(y, z | x_d)`.
    pub fn log_likelihood(&self, obs: &Observation, d: usize) -> Result<f64> {
        self.check_dims(obs)?;
        let mut sum = 0.0;
        if self.use_y {
            let ids = &self.y.ids[d * self.y.width..(d + 1) * self.y.width];
            for (x, &j) in obs.y.iter().zip(ids) {
                sum += self.y.levels[j as usize].log_density(*x);
            }
        }
        if self.use_z {
            let ids = &self.z.ids[d * self.z.width..(d + 1) * self.z.width];
            for (x, &j) in obs.z.iter().zip(ids) {
                sum += self.z.levels[j as usize].log_density(*x);
            }
        }
        Ok(sum)
    }

    /// Log-likelihoods of every block, written to `out`.
    pub fn log_likelihoods_into(
        &self,
        obs: &Observation,
        scratch: &mut Scratch,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        self.check_dims(obs)?;
        let m = self.len();
        out.clear();
        out.resize(m, 0.0);
        if self.use_y {
            accumulate(&self.y, &obs.y, &mut scratch.y_table, out);
        }
        if self.use_z {
            accumulate(&self.z, &obs.z, &mut scratch.z_table, out);
        }
        Ok(())
    }

    pub fn log_likelihoods(&self, obs: &Observation) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        self.log_likelihoods_into(obs, &mut Scratch::default(), &mut out)?;
        Ok(out)
    }

    /// Index of the most likely block; ties go to the lowest index.
    pub fn ml_detect(&self, obs: &Observation) -> Result<usize> {
        let ll = self.log_likelihoods(obs)?;
        Ok(argmax(&ll))
    }

    /// [`ml_detect`](Self::ml_detect) with caller-provided buffers.
    pub fn ml_detect_with(
        &self,
        obs: &Observation,
        scratch: &mut Scratch,
        buf: &mut Vec<f64>,
    ) -> Result<usize> {
        self.log_likelihoods_into(obs, scratch, buf)?;
        Ok(argmax(buf))
    }
}

fn accumulate(f: &Factor, obs: &[f64], table: &mut Vec<f64>, out: &mut [f64]) {
    f.fill_table(obs, table);
    let nl = f.levels.len();
    for (d, acc) in out.iter_mut().enumerate() {
        let ids = &f.ids[d * f.width..(d + 1) * f.width];
        for (c, &j) in ids.iter().enumerate() {
            *acc += table[c * nl + j as usize];
        }
    }
}

/// First index of the maximum; NaN entries never win.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}
