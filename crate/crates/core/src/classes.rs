//! Square-law equivalence classes.
//!
//! Without noise, the integrate-and-dump receiver sees `Υ(x) = (y, z)` with
//! `y[k] = α²(1−β)T·|x_k|²` and `z[ℓ] = α²βT·ψ(x_ℓ, x_{ℓ+1})`. Blocks with the
//! same `Υ` cannot be told apart, so the transmitter only ever sends one
//! representative per class.
//!
//! Grouping works on the normalised coordinates `(|x_k|², ψ)` of the
//! unit-power constellation. Each coordinate takes values in a finite set
//! (per point for `y`, per ordered pair for `z`); those sets are clustered at
//! [`GROUPING_TOLERANCE`] into integer level ids, and a block's signature key
//! is the packed sequence of its level ids.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::error::{invalid, Error, Result};
use crate::waveform::TukeyShape;

/// Coordinates closer than this (unit-power normalised units) are equal.
pub const GROUPING_TOLERANCE: f64 = 1e-9;
/// Refuse exhaustive enumerations larger than this many vectors by default.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

/// Overlap energy kernel `¼|v+w|² + ⅛|v−w|²`.
pub fn psi(v: Complex64, w: Complex64) -> f64 {
    0.25 * (v + w).norm_sqr() + 0.125 * (v - w).norm_sqr()
}

/// Noiseless integrate-and-dump output.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureVector {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl SignatureVector {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Coordinate-wise `max(|Δy|∞, |Δz|∞)`.
    pub fn distance_inf(&self, other: &SignatureVector) -> f64 {
        self.y
            .iter()
            .zip(&other.y)
            .chain(self.z.iter().zip(&other.z))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `(|x_k|², ψ(x_ℓ, x_{ℓ+1}))`: `Υ` with the interval factors removed.
pub fn normalized_signature(block: &[Complex64]) -> SignatureVector {
    SignatureVector {
        y: block.iter().map(|x| x.norm_sqr()).collect(),
        z: block.windows(2).map(|w| psi(w[0], w[1])).collect(),
    }
}

/// `Υ(x)` in physical units (J when symbols are in √W).
pub fn upsilon(block: &[Complex64], shape: &TukeyShape) -> Result<SignatureVector> {
    if block.is_empty() {
        return Err(invalid("block", "block length must be at least 1"));
    }
    let a2t = shape.alpha().powi(2) * shape.period();
    let free = a2t * (1.0 - shape.beta());
    let overlap = a2t * shape.beta();
    let mut s = normalized_signature(block);
    s.y.iter_mut().for_each(|v| *v *= free);
    s.z.iter_mut().for_each(|v| *v *= overlap);
    Ok(s)
}

/// Whether two blocks produce the same noiseless receiver output, comparing
/// normalised coordinates at `tol`. Coordinates whose interval has zero length
/// (`y` at `β = 1`, `z` at `β = 0`) are ignored.
pub fn square_law_identical(
    a: &[Complex64],
    b: &[Complex64],
    shape: &TukeyShape,
    tol: f64,
) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let sa = normalized_signature(a);
    let sb = normalized_signature(b);
    let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol);
    let y_ok = shape.beta() >= 1.0 || close(&sa.y, &sb.y);
    let z_ok = shape.beta() <= 0.0 || close(&sa.z, &sb.z);
    Ok(y_ok && z_ok)
}

/// Single-link clustering of scalar values: returns ascending level values,
/// the level id of every input, and the smallest gap between distinct levels.
fn cluster_levels(values: &[f64], tol: f64) -> (Vec<f64>, Vec<u32>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut levels: Vec<f64> = Vec::new();
    let mut ids = vec![0_u32; values.len()];
    let mut min_gap = f64::INFINITY;
    let mut prev = f64::NEG_INFINITY;
    for &i in &order {
        let v = values[i];
        if levels.is_empty() || v - prev > tol {
            if let Some(&last) = levels.last() {
                min_gap = min_gap.min(v - last);
            }
            levels.push(v);
        }
        prev = v;
        ids[i] = (levels.len() - 1) as u32;
    }
    (levels, ids, min_gap)
}

fn bits_for(count: usize) -> u32 {
    if count <= 1 {
        0
    } else {
        usize::BITS - (count - 1).leading_zeros()
    }
}

/// Partition of `𝒦ⁿ` into square-law classes, in ascending signature order.
#[derive(Debug, Clone)]
pub struct ClassTable {
    n: usize,
    constellation: Constellation,
    y_levels: Vec<f64>,
    z_levels: Vec<f64>,
    min_level_gap: f64,
    keys: Vec<u128>,
    members: Vec<u32>,
    offsets: Vec<usize>,
}

impl ClassTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn num_classes(&self) -> usize {
        self.keys.len()
    }

    /// `|𝒦|ⁿ`.
    pub fn total_vectors(&self) -> usize {
        self.members.len()
    }

    /// Indices into `𝒦ⁿ` (first symbol most significant), ascending.
    pub fn class_members(&self, class: usize) -> &[u32] {
        &self.members[self.offsets[class]..self.offsets[class + 1]]
    }

    pub fn class_size(&self, class: usize) -> usize {
        self.offsets[class + 1] - self.offsets[class]
    }

    /// Number of classes of each size.
    pub fn size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for c in 0..self.num_classes() {
            *h.entry(self.class_size(c)).or_insert(0) += 1;
        }
        h
    }

    /// Distinct normalised `|x|²` values (unit-power constellation).
    pub fn y_levels(&self) -> &[f64] {
        &self.y_levels
    }

    /// Distinct normalised `ψ` values (unit-power constellation).
    pub fn z_levels(&self) -> &[f64] {
        &self.z_levels
    }

    /// Smallest separation between two distinct coordinate levels; every
    /// pair of classes differs by at least this much in some coordinate.
    pub fn min_level_gap(&self) -> f64 {
        self.min_level_gap
    }

    /// Point indices of vector `index` in `𝒦ⁿ`.
    pub fn point_indices(&self, index: u32) -> Vec<usize> {
        decode(index as u64, self.constellation.len(), self.n)
    }

    /// Symbols of vector `index` in `𝒦ⁿ`, at the constellation's own scale.
    pub fn block(&self, index: u32) -> Vec<Complex64> {
        let pts = self.constellation.points();
        self.point_indices(index)
            .into_iter()
            .map(|i| pts[i])
            .collect()
    }

    /// Normalised signature shared by every member of `class`.
    pub fn signature(&self, class: usize) -> SignatureVector {
        let unit = self
            .constellation
            .scale_to_power(1.0)
            .expect("power is positive");
        let pts = unit.points();
        let block: Vec<Complex64> = self
            .point_indices(self.class_members(class)[0])
            .into_iter()
            .map(|i| pts[i])
            .collect();
        normalized_signature(&block)
    }

    /// Class containing vector `index`.
    pub fn class_of(&self, index: u32) -> usize {
        // Members are grouped but not globally sorted; scan offsets lazily.
        self.offsets
            .windows(2)
            .position(|w| self.members[w[0]..w[1]].binary_search(&index).is_ok())
            .expect("every vector belongs to a class")
    }

    /// `(1/n)·log₂(|𝒦|ⁿ / #classes)` bits per symbol.
    pub fn rate_loss(&self) -> f64 {
        rate_loss(self)
    }
}

fn decode(mut index: u64, radix: usize, n: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    for d in digits.iter_mut().rev() {
        *d = (index % radix as u64) as usize;
        index /= radix as u64;
    }
    digits
}

/// Enumerates all of `𝒦ⁿ` and groups it into square-law classes.
pub fn enumerate_classes(constellation: &Constellation, n: usize) -> Result<ClassTable> {
    enumerate_classes_with_budget(constellation, n, DEFAULT_ENUMERATION_BUDGET)
}

pub fn enumerate_classes_with_budget(
    constellation: &Constellation,
    n: usize,
    budget: u64,
) -> Result<ClassTable> {
    if n == 0 {
        return Err(invalid("n", "block length must be at least 1"));
    }
    let radix = constellation.len();
    let required = (radix as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if required > budget as u128 || required > u32::MAX as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let total = required as u64;

    let unit = constellation.scale_to_power(1.0)?;
    let pts = unit.points();
    let point_values: Vec<f64> = pts.iter().map(|p| p.norm_sqr()).collect();
    let pair_values: Vec<f64> = pts
        .iter()
        .flat_map(|&a| pts.iter().map(move |&b| psi(a, b)))
        .collect();
    let (y_levels, point_level, gap_y) = cluster_levels(&point_values, GROUPING_TOLERANCE);
    let (z_levels, pair_level, gap_z) = cluster_levels(&pair_values, GROUPING_TOLERANCE);

    let by = bits_for(y_levels.len());
    let bz = bits_for(z_levels.len());
    let key_bits = n as u32 * by + (n as u32 - 1) * bz;
    if key_bits > 128 {
        return Err(invalid(
            "n",
            format!("signature key needs {key_bits} bits; at most 128 are supported"),
        ));
    }

    let key_of = |index: u64| -> u128 {
        let digits = decode(index, radix, n);
        let mut key = 0_u128;
        for &d in &digits {
            key = (key << by) | point_level[d] as u128;
        }
        for w in digits.windows(2) {
            key = (key << bz) | pair_level[w[0] * radix + w[1]] as u128;
        }
        key
    };
    let keys_per_vector: Vec<u128> = (0..total).into_par_iter().map(key_of).collect();
    let mut order: Vec<u32> = (0..total as u32).collect();
    // Stable: members of a class stay in ascending index order.
    order.par_sort_by_key(|&i| keys_per_vector[i as usize]);

    let mut keys = Vec::new();
    let mut offsets = vec![0];
    for (pos, &i) in order.iter().enumerate() {
        let k = keys_per_vector[i as usize];
        if keys.last() != Some(&k) {
            if pos > 0 {
                offsets.push(pos);
            }
            keys.push(k);
        }
    }
    offsets.push(order.len());

    log::debug!(
        "{}: n={n}, {} vectors, {} classes, {} y-levels, {} z-levels",
        constellation.name(),
        total,
        keys.len(),
        y_levels.len(),
        z_levels.len()
    );

    Ok(ClassTable {
        n,
        constellation: constellation.clone(),
        y_levels,
        z_levels,
        min_level_gap: gap_y.min(gap_z),
        keys,
        members: order,
        offsets,
    })
}

/// Rate lost by restricting to one block per class, in bits per symbol.
pub fn rate_loss(table: &ClassTable) -> f64 {
    let n = table.n() as f64;
    (table.constellation().len() as f64).log2() - (table.num_classes() as f64).log2() / n
}

/// The transmitted block set `𝒮`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlockSet {
    n: usize,
    symbols: Vec<Complex64>,
    labels: Option<Vec<u32>>,
    class_sizes: Vec<usize>,
}

impl SymbolBlockSet {
    /// Builds a set from explicit blocks (all of length `n`). Square-law
    /// distinctness is the caller's responsibility here.
    pub fn from_blocks(blocks: Vec<Vec<Complex64>>, labels: Option<Vec<u32>>) -> Result<Self> {
        let n = blocks.first().map(Vec::len).unwrap_or(0);
        if n == 0 {
            return Err(invalid("blocks", "need at least one non-empty block"));
        }
        if let Some(bad) = blocks.iter().find(|b| b.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != blocks.len() {
                return Err(Error::DimensionMismatch {
                    expected: blocks.len(),
                    got: l.len(),
                });
            }
        }
        let class_sizes = vec![1; blocks.len()];
        Ok(SymbolBlockSet {
            n,
            symbols: blocks.into_iter().flatten().collect(),
            labels,
            class_sizes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `M`.
    pub fn len(&self) -> usize {
        self.symbols.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn block(&self, d: usize) -> &[Complex64] {
        &self.symbols[d * self.n..(d + 1) * self.n]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[Complex64]> {
        self.symbols.chunks_exact(self.n)
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    /// `log₂ M` when labels are present.
    pub fn bits_per_block(&self) -> Option<u32> {
        self.labels.as_ref().map(|_| self.len().trailing_zeros())
    }

    /// Size of the class each block was drawn from (1 for explicit sets).
    pub fn class_sizes(&self) -> &[usize] {
        &self.class_sizes
    }

    /// `𝒫_𝒮 = (1/(Mn)) Σ ‖x_j‖²`.
    pub fn average_power(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.symbols.len() as f64
    }

    /// Multiplies every symbol by `factor` (e.g. a fiber loss factor `ρ`).
    pub fn scaled(&self, factor: f64) -> Self {
        SymbolBlockSet {
            symbols: self.symbols.iter().map(|s| s * factor).collect(),
            ..self.clone()
        }
    }

    /// Rescales so that `𝒫_𝒮 = power`.
    pub fn scaled_to_power(&self, power: f64) -> Result<Self> {
        if !(power >= 0.0 && power.is_finite()) {
            return Err(invalid(
                "power",
                format!("must be non-negative, got {power}"),
            ));
        }
        Ok(self.scaled((power / self.average_power()).sqrt()))
    }
}

/// Picks `m` classes (the first `m` in signature order) and, from each, its
/// lexicographically smallest member by `(ring, phase)` index sequence. With
/// `label_seed`, attaches a uniformly random bijective `log₂ m`-bit labeling.
pub fn choose_representatives(
    table: &ClassTable,
    m: usize,
    label_seed: Option<u64>,
) -> Result<SymbolBlockSet> {
    if m == 0 {
        return Err(invalid("M", "need at least one block"));
    }
    if m > table.num_classes() {
        return Err(Error::TooManyBlocks {
            requested: m,
            available: table.num_classes(),
        });
    }
    let labels = match label_seed {
        Some(seed) => {
            if !m.is_power_of_two() {
                return Err(invalid("M", format!("labels need a power of two, got {m}")));
            }
            let mut labels: Vec<u32> = (0..m as u32).collect();
            labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            Some(labels)
        }
        None => None,
    };
    let mut symbols = Vec::with_capacity(m * table.n());
    let mut class_sizes = Vec::with_capacity(m);
    for class in 0..m {
        symbols.extend(table.block(table.class_members(class)[0]));
        class_sizes.push(table.class_size(class));
    }
    Ok(SymbolBlockSet {
        n: table.n(),
        symbols,
        labels,
        class_sizes,
    })
}
