//! Simulator for Tukey signalling over an unamplified direct-detection
//! optical link.
//!
//! Symbols are shaped with a cosine-tapered (Tukey) pulse so that adjacent
//! symbols interfere only on short, controlled overlaps. An integrate-and-dump
//! receiver collects the photocurrent over the interference-free and
//! interference-present intervals separately; the latter carry the phase
//! differences that square-law detection would otherwise lose. Symbol blocks
//! are restricted to one representative per square-law equivalence class and
//! are recovered by maximum-likelihood block detection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classes;
pub mod constellation;
pub mod error;
pub mod fiber;
pub mod metrics;
pub mod photodetector;
pub mod quadrature;
pub mod receiver;
pub mod rng;
pub mod waveform;

pub use classes::{ClassTable, SignatureVector, SymbolBlockSet};
pub use constellation::Constellation;
pub use error::{Error, Result};
pub use fiber::FiberParams;
pub use metrics::{Estimate, SweepResult, SweepRow};

pub use photodetector::{ApdParams, NoiseModel, Observation};
pub use receiver::LikelihoodContext;
pub use waveform::{Interval, SampledField, TukeyShape};

pub use num_complex::Complex64;

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Converts watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}
