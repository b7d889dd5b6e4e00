use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tukey_cli::{execute, load_or_default, Metric, RunOptions};

#[derive(Parser)]
#[command(name = "tukey", version = tukey_cli::VERSION, about = "Tukey-signalling direct-detection link experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Runs whatever metric the config names.
    Run,
    /// Square-law equivalence class census.
    Classes,
    /// Fractional-energy bandwidth table.
    Bandwidth,
    /// Mutual information versus received power.
    MiSweep,
    /// Back-to-back bit error rate versus received power.
    BerSweep,
    /// Bit error rate through the fiber versus launch power.
    FiberBer,
    /// Average transmitted power versus the block-set power.
    PowerCheck,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let metric = match cli.command {
        Command::Run => None,
        Command::Classes => Some(Metric::Classes),
        Command::Bandwidth => Some(Metric::Bandwidth),
        Command::MiSweep => Some(Metric::Mi),
        Command::BerSweep | Command::FiberBer => Some(Metric::Ber),
        Command::PowerCheck => Some(Metric::PowerCheck),
    };
    let result = load_or_default(cli.config.as_deref()).and_then(|mut cfg| {
        if matches!(cli.command, Command::FiberBer)
            && matches!(cfg.channel, tukey_cli::config::Channel::BackToBack {})
        {
            cfg.channel = tukey_cli::config::Channel::Fiber {
                fiber: Default::default(),
                blocks_per_frame: 64,
                oversampling: None,
            };
        }
        if matches!(cli.command, Command::BerSweep)
            && !matches!(cfg.channel, tukey_cli::config::Channel::BackToBack {})
        {
            return Err(tukey_cli::ConfigError::new(
                "channel",
                "ber-sweep is back-to-back; use fiber-ber",
            )
            .into());
        }
        let opts = RunOptions {
            out_dir: cli.out.clone(),
            seed: cli.seed,
            threads: cli.threads,
            metric,
        };
        execute(cfg, &opts)
    });
    match result {
        Ok(s) => {
            log::info!("wrote {} in {:.2} s", s.results.display(), s.seconds);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
