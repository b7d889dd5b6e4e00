//! Reproducible experiment runner for the Tukey-signalling simulator.
//!
//! A run reads one TOML config, resolves every default, executes on a
//! dedicated thread pool and writes three files to the output directory:
//! `results.csv`, `resolved_config.toml` and `run.log`. If anything fails,
//! whatever was written is removed again.

pub mod config;
pub mod error;
pub mod runner;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, Metric};
pub use error::{ConfigError, RunError};
pub use runner::{run_experiment, RunOutput};

pub const RESULTS_FILE: &str = "results.csv";
pub const CONFIG_FILE: &str = "resolved_config.toml";
pub const LOG_FILE: &str = "run.log";

/// Version string recorded in run logs: package version plus the git
/// revision the binary was built from, when known.
pub const VERSION: &str = env!("TUKEY_VERSION");

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Worker threads; rayon's default when absent.
    pub threads: Option<usize>,
    /// Sets the metric; must agree with the config if it names one.
    pub metric: Option<Metric>,
}

/// Applies command-line overrides and resolves defaults.
pub fn prepare(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<ExperimentConfig, RunError> {
    if let Some(m) = opts.metric {
        match cfg.metric {
            Some(existing) if existing != m => {
                return Err(ConfigError::new(
                    "metric",
                    format!("config says {existing:?} but the subcommand asks for {m:?}"),
                )
                .into())
            }
            _ => cfg.metric = Some(m),
        }
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
        cfg.ber.label_seed = None;
    }
    let cfg = cfg.resolved();
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `cfg` on a pool of `threads` workers.
pub fn run_with_threads(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<RunOutput, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::Threads(e.to_string()))?;
    pool.install(|| run_experiment(cfg))
}

struct Artifacts {
    written: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    keep: bool,
}

impl Artifacts {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<(), RunError> {
        self.written.push(path.clone());
        fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if self.keep {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if let Some(d) = &self.created_dir {
            let _ = fs::remove_dir(d);
        }
    }
}

/// Summary of a finished run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub results: PathBuf,
    pub seconds: f64,
}

/// Full run: overrides, validation, execution and artifact files.
pub fn execute(cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let started = Instant::now();
    let out = opts.out_dir.as_path();
    let created_dir = if out.exists() {
        None
    } else {
        fs::create_dir_all(out).map_err(|source| RunError::Io {
            path: out.to_path_buf(),
            source,
        })?;
        Some(out.to_path_buf())
    };
    let mut artifacts = Artifacts {
        written: Vec::new(),
        created_dir,
        keep: false,
    };
    let cfg = prepare(cfg, opts)?;
    artifacts.write(out.join(CONFIG_FILE), &cfg.to_toml())?;
    let result = run_with_threads(&cfg, opts.threads)?;
    artifacts.write(out.join(RESULTS_FILE), &result.csv)?;
    let seconds = started.elapsed().as_secs_f64();
    artifacts.write(out.join(LOG_FILE), &log_text(&cfg, opts, &result, seconds))?;
    artifacts.keep = true;
    Ok(RunSummary {
        config: cfg,
        results: out.join(RESULTS_FILE),
        seconds,
    })
}

fn log_text(cfg: &ExperimentConfig, opts: &RunOptions, result: &RunOutput, seconds: f64) -> String {
    let threads = opts.threads.map_or_else(
        || format!("{} (default)", rayon::current_num_threads()),
        |t| t.to_string(),
    );
    let mut s = format!(
        "version: {VERSION}\nmetric: {:?}\nseed: {}\nthreads: {threads}\nwall_time_s: {seconds:.3}\n",
        cfg.metric.expect("validated"),
        cfg.seed,
    );
    for n in &result.notes {
        s.push_str("note: ");
        s.push_str(n);
        s.push('\n');
    }
    s
}

/// Loads a config file, or the defaults when no path is given.
pub fn load_or_default(path: Option<&Path>) -> Result<ExperimentConfig, RunError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}
