//! Finite signal constellations.
//!
//! Ring/phase constellations place `P` points on each of `R` concentric rings.
//! Points are ordered ring-major, phase-minor, with the phase index increasing
//! counter-clockwise from the positive real axis.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Named presets: the five ring/phase constellations studied for Tukey
/// signalling, plus square 16-QAM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 4-PSK.
    Psk4,
    /// Two aligned 4-ary rings with outer/inner radius ratio `1 + √2`.
    Ring2x4,
    /// Four equi-spaced 4-ary rings, odd rings rotated by `π/4`.
    Ring4x4,
    /// Eight equi-spaced 8-ary rings, odd rings rotated by `π/8`.
    Ring8x8,
    /// Ten equi-spaced 10-ary rings, odd rings rotated by `π/10`.
    Ring10x10,
    Qam16,
}

impl Preset {
    pub fn build(self) -> Constellation {
        let built = match self {
            Preset::Psk4 => Constellation::ring_phase(1, 4, Some(&[1.0]), false),
            Preset::Ring2x4 => {
                Constellation::ring_phase(2, 4, Some(&[1.0, 1.0 + 2f64.sqrt()]), false)
            }
            Preset::Ring4x4 => Constellation::ring_phase(4, 4, None, true),
            Preset::Ring8x8 => Constellation::ring_phase(8, 8, None, true),
            Preset::Ring10x10 => Constellation::ring_phase(10, 10, None, true),
            Preset::Qam16 => Ok(Constellation::qam16()),
        };
        built.expect("preset parameters are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    name: String,
}

impl Constellation {
    /// Builds a constellation from explicit points.
    pub fn new(points: Vec<Complex64>, name: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConstellation("no points".into()));
        }
        if points
            .iter()
            .any(|p| !p.re.is_finite() || !p.im.is_finite())
        {
            return Err(Error::InvalidConstellation("non-finite point".into()));
        }
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                if (a - b).norm() <= 1e-12 * a.norm().max(1.0) {
                    return Err(Error::InvalidConstellation(format!("duplicate point {a}")));
                }
            }
        }
        let c = Constellation {
            points,
            name: name.into(),
        };
        if c.average_power() <= 0.0 {
            return Err(Error::InvalidConstellation("zero average power".into()));
        }
        Ok(c)
    }

    /// `num_rings` rings of `num_phases` points each. `radii` defaults to
    /// `1, 2, …, num_rings`. With `stagger`, every odd-indexed ring is rotated
    /// by half a phase step (`π/num_phases`).
    pub fn ring_phase(
        num_rings: usize,
        num_phases: usize,
        radii: Option<&[f64]>,
        stagger: bool,
    ) -> Result<Self> {
        if num_rings == 0 || num_phases == 0 {
            return Err(invalid(
                "rings/phases",
                "need at least one ring and one phase",
            ));
        }
        let radii: Vec<f64> = match radii {
            Some(r) => r.to_vec(),
            None => (1..=num_rings).map(|r| r as f64).collect(),
        };
        if radii.len() != num_rings {
            return Err(Error::InvalidConstellation(format!(
                "{} radii given for {num_rings} rings",
                radii.len()
            )));
        }
        if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidConstellation("radii must be positive".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConstellation(
                "radii must be strictly increasing (duplicate ring)".into(),
            ));
        }
        let step = 2.0 * PI / num_phases as f64;
        let mut points = Vec::with_capacity(num_rings * num_phases);
        for (ring, &r) in radii.iter().enumerate() {
            let offset = if stagger && ring % 2 == 1 { 0.5 } else { 0.0 };
            for m in 0..num_phases {
                points.push(Complex64::from_polar(r, step * (m as f64 + offset)));
            }
        }
        let name = if num_rings == 1 {
            format!("{num_phases}-PSK")
        } else {
            format!("{num_rings}-ring/{num_phases}-ary")
        };
        Constellation::new(points, name)
    }

    /// Square 16-QAM on the odd-integer grid `{±1, ±3}²` (average power 10).
    pub fn qam16() -> Self {
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let points = levels
            .iter()
            .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re, im)))
            .collect();
        Constellation {
            points,
            name: "16-QAM".into(),
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(1/|𝒦|) Σ |c|²`.
    pub fn average_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Uniformly rescales so that the average power equals `power`.
    pub fn scale_to_power(&self, power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(invalid("power", format!("must be positive, got {power}")));
        }
        let k = (power / self.average_power()).sqrt();
        Ok(Constellation {
            points: self.points.iter().map(|p| p * k).collect(),
            name: self.name.clone(),
        })
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} points)", self.name, self.points.len())
    }
}
