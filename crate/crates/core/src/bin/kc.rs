//! `kc <generate|select|pipeline|evaluate> [--config PATH] [flags]`
//!
//! Logging verbosity is read from `KC_LOG` (`error`, `info`, `debug`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use kcomp::experiment::{exit_code, run_experiment, ExperimentConfig, Mode};
use kcomp::Error;

#[derive(Clone, Copy, ValueEnum)]
enum Command {
    Generate,
    Select,
    Pipeline,
    Evaluate,
}

#[derive(Parser)]
#[command(name = "kc", version, about = "Markov kernel compression experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    emit_plot_data: bool,
    /// Override a config field by dotted JSON path, e.g. `--set solver.alpha0=0.02`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

fn run(cli: Cli) -> kcomp::Result<()> {
    let mut overrides = Vec::new();
    for item in &cli.overrides {
        let (path, value) = item
            .split_once('=')
            .ok_or_else(|| Error::ConfigParse(format!("override `{item}` is not PATH=VALUE")))?;
        overrides.push((path.to_string(), value.to_string()));
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, &overrides)?,
        None => ExperimentConfig::from_json("{}", &overrides)?,
    };
    cfg.mode = Some(match cli.command {
        Command::Generate => Mode::Generate,
        Command::Select => Mode::Select,
        Command::Pipeline => Mode::Pipeline,
        Command::Evaluate => Mode::Evaluate,
    });
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    cfg.emit_plot_data |= cli.emit_plot_data;
    cfg.validate()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let outcome = pool.install(|| run_experiment(&cfg))?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KC_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kc: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
