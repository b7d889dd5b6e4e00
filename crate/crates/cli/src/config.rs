//! Experiment configuration (TOML). Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tukey_core::constellation::Preset;
use tukey_core::photodetector::ApdParams;
use tukey_core::{Constellation, FiberParams};

use crate::error::{ConfigError, RunError};

/// What an experiment computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Classes,
    Bandwidth,
    Mi,
    Ber,
    PowerCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstellationSpec {
    Preset {
        name: Preset,
    },
    RingPhase {
        rings: usize,
        phases: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        #[serde(default)]
        stagger: bool,
    },
    Qam16 {},
}

impl Default for ConstellationSpec {
    fn default() -> Self {
        ConstellationSpec::Preset {
            name: Preset::Ring2x4,
        }
    }
}

impl ConstellationSpec {
    pub fn build(&self) -> tukey_core::Result<Constellation> {
        match self {
            ConstellationSpec::Preset { name } => Ok(name.build()),
            ConstellationSpec::RingPhase {
                rings,
                phases,
                radii,
                stagger,
            } => Constellation::ring_phase(*rings, *phases, radii.as_deref(), *stagger),
            ConstellationSpec::Qam16 {} => Ok(Constellation::qam16()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Channel {
    BackToBack {},
    Fiber {
        #[serde(default)]
        fiber: FiberParams,
        /// Blocks per simulated waveform.
        #[serde(default = "default_blocks_per_frame")]
        blocks_per_frame: usize,
        /// Samples per symbol; chosen from β when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        oversampling: Option<usize>,
    },
}

impl Default for Channel {
    fn default() -> Self {
        Channel::BackToBack {}
    }
}

fn default_blocks_per_frame() -> usize {
    64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// Uniform over the selected class representatives.
    #[default]
    Uniform,
    /// Uniform over all of `𝒦ⁿ`, i.e. proportional to class size.
    ClassSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiConfig {
    pub trials: u64,
    pub prior: PriorKind,
}

impl Default for MiConfig {
    fn default() -> Self {
        MiConfig {
            trials: 100_000,
            prior: PriorKind::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerConfig {
    pub max_bits: u64,
    pub max_errors: u64,
    pub batch: u64,
    /// Seed of the random bit labelling; derived from the run seed if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_seed: Option<u64>,
}

impl Default for BerConfig {
    fn default() -> Self {
        BerConfig {
            max_bits: 10_000_000,
            max_errors: 100,
            batch: 4096,
            label_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandwidthConfig {
    pub betas: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        BandwidthConfig {
            betas: vec![0.1, 0.3, 0.5, 0.7, 0.8, 0.9],
            fractions: vec![0.90, 0.95],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerSource {
    /// Blocks drawn uniformly from the selected representatives.
    #[default]
    Blocks,
    /// Independent, uniformly drawn constellation points.
    Iid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerCheckConfig {
    pub symbols: usize,
    pub oversampling: usize,
    pub source: PowerSource,
}

impl Default for PowerCheckConfig {
    fn default() -> Self {
        PowerCheckConfig {
            symbols: 100_000,
            oversampling: 16,
            source: PowerSource::Blocks,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Received power (back-to-back) or launch power (fiber), dBm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub powers_dbm: Option<Vec<f64>>,
}

/// One experiment. Every field has a default, so an empty file is valid for
/// any subcommand that names the metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    pub seed: u64,
    pub n: usize,
    pub beta: f64,
    /// Symbol period, seconds.
    pub symbol_period: f64,
    /// Number of transmitted blocks `M`; all classes (MI) or the largest
    /// power of two (BER) when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    pub constellation: ConstellationSpec,
    pub apd: ApdParams,
    pub channel: Channel,
    pub sweep: SweepConfig,
    pub mi: MiConfig,
    pub ber: BerConfig,
    pub bandwidth: BandwidthConfig,
    pub power_check: PowerCheckConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            metric: None,
            seed: 0,
            n: 3,
            beta: 0.9,
            symbol_period: 1e-10,
            blocks: None,
            constellation: ConstellationSpec::default(),
            apd: ApdParams::default(),
            channel: Channel::default(),
            sweep: SweepConfig::default(),
            mi: MiConfig::default(),
            ber: BerConfig::default(),
            bandwidth: BandwidthConfig::default(),
            power_check: PowerCheckConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn metric(&self) -> Result<Metric, ConfigError> {
        self.metric.ok_or_else(|| {
            ConfigError::new(
                "metric",
                "no metric given in the config or on the command line",
            )
        })
    }

    /// Default power grid for the metric and channel.
    fn default_powers(&self) -> Vec<f64> {
        let (start, stop, step): (f64, f64, f64) = match (self.metric, &self.channel) {
            (Some(Metric::Mi), _) => (-35.0, 0.0, 2.5),
            (Some(Metric::Ber), Channel::Fiber { .. }) => (-16.0, -6.0, 2.0),
            (Some(Metric::Ber), _) => (-26.0, -8.0, 2.0),
            _ => (-10.0, -10.0, 1.0),
        };
        let count = ((stop - start) / step).round() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    }

    /// Materialises every defaulted value that depends on other fields.
    pub fn resolved(mut self) -> Self {
        if self.sweep.powers_dbm.is_none() {
            self.sweep.powers_dbm = Some(self.default_powers());
        }
        if self.ber.label_seed.is_none() {
            self.ber.label_seed = Some(tukey_core::rng::derive_seed(self.seed, LABEL_SEED_TAG));
        }
        if let Channel::Fiber {
            oversampling: os @ None,
            ..
        } = &mut self.channel
        {
            *os = Some(tukey_core::waveform::aligned_oversampling(self.beta, 16));
        }
        self
    }

    pub fn powers(&self) -> Vec<f64> {
        self.sweep
            .powers_dbm
            .clone()
            .unwrap_or_else(|| self.default_powers())
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let metric = self.metric()?;
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(ConfigError::new(
                "beta",
                format!("{} is outside [0, 1]", self.beta),
            ));
        }
        if !(self.symbol_period > 0.0 && self.symbol_period.is_finite()) {
            return Err(ConfigError::new("symbol_period", "must be positive"));
        }
        if self.n == 0 {
            return Err(ConfigError::new("n", "block length must be at least 1"));
        }
        self.apd
            .validate()
            .map_err(|e| ConfigError::new("apd", e.to_string()))?;
        self.constellation
            .build()
            .map_err(|e| ConfigError::new("constellation", e.to_string()))?;
        if let Some(m) = self.blocks {
            if m == 0 {
                return Err(ConfigError::new("blocks", "must be at least 1"));
            }
            if metric == Metric::Ber && !(m >= 2 && m.is_power_of_two()) {
                return Err(ConfigError::new(
                    "blocks",
                    format!("BER needs a power of two >= 2, got {m}"),
                ));
            }
        }
        if let Channel::Fiber {
            fiber,
            blocks_per_frame,
            oversampling,
        } = &self.channel
        {
            fiber
                .validate()
                .map_err(|e| ConfigError::new("channel.fiber", e.to_string()))?;
            if *blocks_per_frame == 0 {
                return Err(ConfigError::new(
                    "channel.blocks_per_frame",
                    "must be at least 1",
                ));
            }
            if oversampling.is_some_and(|os| os < 8) {
                return Err(ConfigError::new(
                    "channel.oversampling",
                    "must be at least 8",
                ));
            }
            if metric != Metric::Ber {
                return Err(ConfigError::new(
                    "channel",
                    "the fiber channel is only used by the ber metric",
                ));
            }
        }
        let powers = self.powers();
        if matches!(metric, Metric::Mi | Metric::Ber | Metric::PowerCheck) {
            if powers.is_empty() {
                return Err(ConfigError::new("sweep.powers_dbm", "must not be empty"));
            }
            if powers.iter().any(|p| !p.is_finite()) {
                return Err(ConfigError::new("sweep.powers_dbm", "must be finite"));
            }
        }
        match metric {
            Metric::Mi if self.mi.trials == 0 => {
                Err(ConfigError::new("mi.trials", "must be at least 1"))
            }
            Metric::Ber if self.ber.max_bits == 0 || self.ber.batch == 0 => Err(ConfigError::new(
                "ber",
                "max_bits and batch must be positive",
            )),
            Metric::Bandwidth => {
                if let Some(b) = self
                    .bandwidth
                    .betas
                    .iter()
                    .find(|b| !(**b > 0.0 && **b <= 1.0))
                {
                    return Err(ConfigError::new(
                        "bandwidth.betas",
                        format!("{b} is outside (0, 1]"),
                    ));
                }
                if let Some(f) = self
                    .bandwidth
                    .fractions
                    .iter()
                    .find(|f| !(**f > 0.0 && **f < 1.0))
                {
                    return Err(ConfigError::new(
                        "bandwidth.fractions",
                        format!("{f} is outside (0, 1)"),
                    ));
                }
                Ok(())
            }
            Metric::PowerCheck => {
                if self.power_check.symbols < self.n {
                    return Err(ConfigError::new(
                        "power_check.symbols",
                        "must cover at least one block",
                    ));
                }
                if self.power_check.oversampling < 8 {
                    return Err(ConfigError::new(
                        "power_check.oversampling",
                        "must be at least 8",
                    ));
                }
                if powers.iter().any(|&p| tukey_core::dbm_to_watts(p) <= 0.0) {
                    return Err(ConfigError::new(
                        "sweep.powers_dbm",
                        "power underflows to zero",
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

const LABEL_SEED_TAG: u64 = 0x6c61_6265_6c73;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("[apd]\ngain = 10\ncolour = 3").is_err());
        assert!(
            ExperimentConfig::from_toml("[constellation]\ntype = \"qam16\"\nrings = 2").is_err()
        );
        assert!(ExperimentConfig::from_toml("[channel]\ntype = \"fiber\"\nlength = 3").is_err());
        assert!(ExperimentConfig::from_toml(
            "[channel]\ntype = \"fiber\"\n[channel.fiber]\nlength = 3"
        )
        .is_err());
    }

    #[test]
    fn nested_sections_parse() {
        let c = ExperimentConfig::from_toml(
            r#"
            metric = "ber"
            n = 3
            blocks = 256
            [constellation]
            type = "ring-phase"
            rings = 4
            phases = 4
            stagger = true
            [channel]
            type = "fiber"
            blocks_per_frame = 16
            [channel.fiber]
            length_km = 5.0
            "#,
        )
        .unwrap();
        assert_eq!(c.constellation.build().unwrap().len(), 16);
        match c.channel {
            Channel::Fiber {
                fiber,
                blocks_per_frame,
                ..
            } => {
                assert_eq!(fiber.length_km, 5.0);
                assert_eq!(fiber.gamma, FiberParams::default().gamma);
                assert_eq!(blocks_per_frame, 16);
            }
            _ => panic!("expected fiber"),
        }
        c.validate().unwrap();
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = ExperimentConfig::from_toml(
            "metric = \"ber\"\n[channel]\ntype = \"fiber\"\n[constellation]\ntype = \"preset\"\nname = \"ring4x4\"",
        )
        .unwrap()
        .resolved();
        let text = c.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.resolved(), c);
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = ExperimentConfig {
            metric: Some(Metric::Ber),
            blocks: Some(100),
            ..ExperimentConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().path, "blocks");
        c.blocks = Some(64);
        c.beta = 1.5;
        assert_eq!(c.validate().unwrap_err().path, "beta");
        c.beta = 0.9;
        c.apd.gain = 0.1;
        assert_eq!(c.validate().unwrap_err().path, "apd");
        let c = ExperimentConfig::default();
        assert_eq!(c.validate().unwrap_err().path, "metric");
    }
}
