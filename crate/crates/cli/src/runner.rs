//! Runs a validated experiment and renders its CSV.

use std::fmt::Write as _;

use log::info;
use serde::Serialize;
use tukey_core::classes::{choose_representatives, enumerate_classes, ClassTable, SymbolBlockSet};
use tukey_core::metrics::{
    estimate_mi, simulate_ber, simulate_fiber_ber, stream_power, BerBudget, FiberLink, Prior,
    SweepResult,
};
use tukey_core::photodetector::build_noise_model;
use tukey_core::waveform::fractional_energy_bandwidth;
use tukey_core::{dbm_to_watts, Complex64, LikelihoodContext, TukeyShape};

use crate::config::{Channel, ExperimentConfig, Metric, PowerSource, PriorKind};
use crate::error::{RunError, SimContext};

/// CSV text plus human-readable notes for the run log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub notes: Vec<String>,
}

fn to_csv<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<String, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| RunError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn sweep_csv(s: &SweepResult) -> Result<String, RunError> {
    to_csv(s.rows())
}

fn class_table(cfg: &ExperimentConfig) -> Result<ClassTable, RunError> {
    let k = cfg.constellation.build().context("constellation")?;
    enumerate_classes(&k, cfg.n).context("class enumeration")
}

/// The representative set for MI or BER runs, at unit scale.
fn block_set(
    cfg: &ExperimentConfig,
    table: &ClassTable,
    labelled: bool,
) -> Result<SymbolBlockSet, RunError> {
    let available = table.num_classes();
    let m = match cfg.blocks {
        Some(m) => m,
        None if labelled => 1usize << (usize::BITS - 1 - available.leading_zeros()),
        None => available,
    };
    let seed = if labelled { cfg.ber.label_seed } else { None };
    choose_representatives(table, m, seed).context("blocks")
}

fn shape(cfg: &ExperimentConfig) -> Result<TukeyShape, RunError> {
    TukeyShape::new(cfg.beta, cfg.symbol_period).context("beta/symbol_period")
}

/// Runs `cfg` (already resolved and validated) and returns its CSV.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let mut notes = Vec::new();
    let csv = match cfg.metric()? {
        Metric::Classes => {
            let table = class_table(cfg)?;
            notes.push(format!(
                "{} with n = {}: {} classes of {} vectors",
                table.constellation(),
                cfg.n,
                table.num_classes(),
                table.total_vectors()
            ));
            let mut out = String::from("class_size,count\n");
            for (size, count) in table.size_histogram() {
                writeln!(out, "{size},{count}").unwrap();
            }
            writeln!(out, "total,{}", table.num_classes()).unwrap();
            writeln!(out, "rate_loss,{}", table.rate_loss()).unwrap();
            out
        }
        Metric::Bandwidth => {
            #[derive(Serialize)]
            struct Row {
                beta: f64,
                fraction: f64,
                bandwidth: f64,
                overhead_percent: f64,
            }
            let mut rows = Vec::new();
            for &fraction in &cfg.bandwidth.fractions {
                for &beta in &cfg.bandwidth.betas {
                    let b = fractional_energy_bandwidth(beta, fraction).context("bandwidth")?;
                    rows.push(Row {
                        beta,
                        fraction,
                        bandwidth: b,
                        overhead_percent: (b - 0.5) / 0.5 * 100.0,
                    });
                }
            }
            to_csv(rows)?
        }
        Metric::Mi => {
            let table = class_table(cfg)?;
            let blocks = block_set(cfg, &table, false)?;
            let nm = build_noise_model(&cfg.apd).context("apd")?;
            let shape = shape(cfg)?;
            let prior = match cfg.mi.prior {
                PriorKind::Uniform => Prior::Uniform,
                PriorKind::ClassSize => Prior::ClassSize,
            };
            notes.push(format!(
                "M = {} blocks, prior {:?}",
                blocks.len(),
                cfg.mi.prior
            ));
            let mut sweep = SweepResult::new();
            for &p in &cfg.powers() {
                let scaled = blocks
                    .scaled_to_power(dbm_to_watts(p))
                    .context("sweep.powers_dbm")?;
                let ctx = LikelihoodContext::new(scaled, shape, nm).context("likelihood model")?;
                let e = estimate_mi(&ctx, &prior, cfg.mi.trials, cfg.seed)
                    .context("mutual information")?;
                info!("MI at {p} dBm: {} ± {}", e.value, e.half_width);
                sweep.push(p, e);
            }
            sweep_csv(&sweep)?
        }
        Metric::Ber => {
            let table = class_table(cfg)?;
            let blocks = block_set(cfg, &table, true)?;
            let nm = build_noise_model(&cfg.apd).context("apd")?;
            let shape = shape(cfg)?;
            let budget = BerBudget {
                max_bits: cfg.ber.max_bits,
                max_errors: cfg.ber.max_errors,
                batch: cfg.ber.batch,
            };
            notes.push(format!(
                "M = {} blocks, label seed {}",
                blocks.len(),
                cfg.ber.label_seed.unwrap_or_default()
            ));
            let mut sweep = SweepResult::new();
            for &p in &cfg.powers() {
                let scaled = blocks
                    .scaled_to_power(dbm_to_watts(p))
                    .context("sweep.powers_dbm")?;
                let r = match &cfg.channel {
                    Channel::BackToBack {} => {
                        let ctx = LikelihoodContext::new(scaled, shape, nm)
                            .context("likelihood model")?;
                        simulate_ber(&ctx, &budget, cfg.seed).context("bit error rate")?
                    }
                    Channel::Fiber {
                        fiber,
                        blocks_per_frame,
                        oversampling,
                    } => {
                        let os = oversampling.unwrap_or_else(|| {
                            tukey_core::waveform::aligned_oversampling(cfg.beta, 16)
                        });
                        let link = FiberLink {
                            fiber: *fiber,
                            blocks_per_frame: *blocks_per_frame,
                            oversampling: os,
                        };
                        let rop = p + 20.0 * fiber.loss_factor().log10();
                        let samples =
                            ((*blocks_per_frame * cfg.n) as f64 + 1.0 + cfg.beta) * os as f64;
                        notes.push(format!(
                            "launch {p} dBm -> ROP {rop:.3} dBm; {os} samples/symbol, guard {:.3e} s, ~{} signal samples per frame before padding",
                            fiber.guard_band(cfg.symbol_period),
                            samples.ceil()
                        ));
                        simulate_fiber_ber(&scaled, &shape, &nm, &link, &budget, cfg.seed)
                            .context("fiber bit error rate")?
                    }
                };
                info!(
                    "BER at {p} dBm: {} ({} errors in {} bits)",
                    r.ber, r.errors, r.bits
                );
                sweep.push(p, r.estimate());
            }
            sweep_csv(&sweep)?
        }
        Metric::PowerCheck => {
            let shape = shape(cfg)?;
            let blocks = match cfg.power_check.source {
                PowerSource::Blocks => block_set(cfg, &class_table(cfg)?, false)?,
                PowerSource::Iid => {
                    let k = cfg.constellation.build().context("constellation")?;
                    let singles: Vec<Vec<Complex64>> =
                        k.points().iter().map(|&p| vec![p]).collect();
                    SymbolBlockSet::from_blocks(singles, None).context("constellation")?
                }
            };
            #[derive(Serialize)]
            struct Row {
                power_dbm: f64,
                target_w: f64,
                empirical_w: f64,
                relative_error: f64,
            }
            let num_blocks = cfg.power_check.symbols / blocks.n();
            let mut rows = Vec::new();
            for &p in &cfg.powers() {
                let target = dbm_to_watts(p);
                let scaled = blocks.scaled_to_power(target).context("sweep.powers_dbm")?;
                let got = stream_power(
                    &scaled,
                    &shape,
                    num_blocks,
                    cfg.power_check.oversampling,
                    cfg.seed,
                )
                .context("power check")?;
                rows.push(Row {
                    power_dbm: p,
                    target_w: target,
                    empirical_w: got,
                    relative_error: (got - target) / target,
                });
            }
            to_csv(rows)?
        }
    };
    Ok(RunOutput { csv, notes })
}
