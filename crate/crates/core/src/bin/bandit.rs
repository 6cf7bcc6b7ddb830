//! `bandit` command-line interface.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
//! convergence failure (including a failing oracle check).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use belman::harness::{emit_csv, preset, presets, run_experiment, ExperimentConfig};
use belman::oracle::run_suite;
use belman::BanditError;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bandit", version, about = "BelMan bandit laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write runs.csv / agg.csv.
    Run {
        /// JSON experiment configuration.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Use a shipped preset instead of a file.
        #[arg(long)]
        preset: Option<String>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: available parallelism).
        #[arg(long, env = "BANDIT_WORKERS")]
        workers: Option<usize>,
        /// Output directory (default: the config's `output`, else out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the shipped presets.
    ListPresets,
    /// Print a preset as a JSON configuration.
    ShowPreset { name: String },
    /// Run the quadrature and grid oracle suites.
    OracleCheck {
        /// Seed of the random instances.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn exit_for(err: &BanditError) -> ExitCode {
    if err.is_numerical() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn run(
    config: Option<PathBuf>,
    preset_name: Option<String>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), BanditError> {
    let mut cfg = match (config, preset_name) {
        (Some(path), _) => ExperimentConfig::load(&path)?,
        (None, Some(name)) => {
            preset(&name).ok_or_else(|| BanditError::Validation(vec![format!("unknown preset {name}")]))?
        }
        (None, None) => return Err(BanditError::Validation(vec!["--config or --preset is required".into()])),
    };
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    let workers = match workers {
        Some(0) => return Err(BanditError::Validation(vec!["workers must be at least 1".into()])),
        Some(w) => w,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(if cfg.name.is_empty() { "experiment" } else { &cfg.name }));
    let start = Instant::now();
    let result = run_experiment(&cfg, workers)?;
    emit_csv(&result, &dir)?;
    println!(
        "{}: {} runs in {:.1}s with {} workers -> {}",
        if cfg.name.is_empty() { "experiment" } else { &cfg.name },
        result.runs.len(),
        start.elapsed().as_secs_f64(),
        workers,
        dir.display()
    );
    for agg in &result.aggregates {
        if let (Some(m), Some(p)) = (agg.mean.last(), agg.p75.last()) {
            println!("  {:<18} {:<13} final mean {:>10.3}  p75 {:>10.3}", agg.algorithm, agg.metric, m, p);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            config,
            preset,
            seed,
            workers,
            out,
        } => match run(config, preset, seed, workers, out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                exit_for(&e)
            }
        },
        Command::ListPresets => {
            for p in presets() {
                println!("{:<22} {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::ShowPreset { name } => match preset(&name) {
            Some(cfg) => {
                println!("{}", cfg.to_json());
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown preset {name}");
                ExitCode::from(1)
            }
        },
        Command::OracleCheck { seed } => {
            let checks = run_suite(seed);
            let mut ok = true;
            for c in &checks {
                println!("[{}] {:<22} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
