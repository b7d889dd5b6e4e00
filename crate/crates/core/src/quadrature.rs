//! Numerical integration: adaptive Gauss–Kronrod for analytic integrands and
//! the trapezoidal rule for uniformly sampled data.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (non-negative half) and weights, with the
// embedded 7-point Gauss weights on the odd Kronrod nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 50;

/// Single G7/K15 panel: returns (kronrod estimate, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };
    let mut total = 0.0;
    let mut worst = 0.0_f64;
    // Explicit stack instead of recursion; each entry carries its depth.
    let mut stack = vec![(lo, hi, tol, 0_u32)];
    while let Some((x0, x1, t, depth)) = stack.pop() {
        let (value, err) = gk15(&f, x0, x1);
        if err <= t || depth >= MAX_DEPTH || (x1 - x0) <= f64::EPSILON * x0.abs().max(1.0) {
            if err > t {
                worst = worst.max(err);
            }
            total += value;
        } else {
            let mid = 0.5 * (x0 + x1);
            stack.push((x0, mid, 0.5 * t, depth + 1));
            stack.push((mid, x1, 0.5 * t, depth + 1));
        }
    }
    if worst > tol {
        return Err(Error::NumericalFailure {
            achieved: worst,
            tolerance: tol,
        });
    }
    Ok(sign * total)
}

/// Integrates over consecutive sub-intervals delimited by `breakpoints`
/// (sorted), splitting the tolerance evenly. Used where the integrand has
/// known kinks or oscillates over a long range.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: f64) -> Result<f64> {
    if breakpoints.len() < 2 {
        return Ok(0.0);
    }
    let pieces = (breakpoints.len() - 1) as f64;
    let mut sum = 0.0;
    for w in breakpoints.windows(2) {
        sum += integrate(&f, w[0], w[1], tol / pieces)?;
    }
    Ok(sum)
}

/// Integral over `[a, b]` of the piecewise-linear interpolant of samples
/// `values[i]` taken at `t0 + i * dt`. `[a, b]` must lie within the grid.
pub fn trapezoid_interval(values: &[f64], t0: f64, dt: f64, a: f64, b: f64) -> f64 {
    debug_assert!(b >= a);
    let last = values.len() - 1;
    let pos = |t: f64| ((t - t0) / dt).clamp(0.0, last as f64);
    let interp = |p: f64| {
        let i = (p.floor() as usize).min(last.saturating_sub(1));
        let frac = p - i as f64;
        if last == 0 {
            values[0]
        } else {
            values[i] * (1.0 - frac) + values[i + 1] * frac
        }
    };
    let pa = pos(a);
    let pb = pos(b);
    // Snap positions that are within rounding of a grid point.
    let snap = |p: f64| {
        let r = p.round();
        if (p - r).abs() < 1e-9 {
            r
        } else {
            p
        }
    };
    let (pa, pb) = (snap(pa), snap(pb));
    let first_full = pa.ceil() as usize;
    let last_full = pb.floor() as usize;
    if first_full > last_full {
        // Both ends inside one cell.
        return 0.5 * (interp(pa) + interp(pb)) * (pb - pa) * dt;
    }
    let mut sum = 0.0;
    // Leading partial cell.
    sum += 0.5 * (interp(pa) + values[first_full]) * (first_full as f64 - pa);
    for i in first_full..last_full {
        sum += 0.5 * (values[i] + values[i + 1]);
    }
    // Trailing partial cell.
    sum += 0.5 * (values[last_full] + interp(pb)) * (pb - last_full as f64);
    sum * dt
}

/// Neumaier-compensated sum; insensitive to the order of large/small terms.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
