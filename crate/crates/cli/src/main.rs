use std::path::PathBuf;
use std::process::ExitCode;

use biot_split::config::{parse_config, Config, ConfigError, Experiment};
use biot_split::csv::write_csv;
use biot_split::driver;
use biot_split_core::Error;
use clap::{Args, Parser, Subcommand};

const AFTER_HELP: &str = "Environment:\n  BIOT_SPLIT_SEEDLESS  accepted but unused; every code path is \
deterministic and free of RNG, so there is no seed to remove.\n\nExit codes:\n  0  success\n  2  configuration \
error\n  3  solver failure\n  4  instability detected";

#[derive(Parser)]
#[command(
    name = "biot-split",
    version,
    about = "Finite element solver for Biot poroelasticity with explicit splitting schemes",
    after_help = AFTER_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study against the manufactured solution
    Converge(RunArgs),
    /// Point-source benchmark: line samples vs the series solution
    BarryMercer(RunArgs),
    /// Single simulation with a per-step state snapshot dump
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (falls back to the config's "output" field)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on parallel jobs (default: available cores)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, expected) = match &cli.command {
        Command::Converge(a) => (a, Experiment::Converge),
        Command::BarryMercer(a) => (a, Experiment::BarryMercer),
        Command::Run(a) => (a, Experiment::SingleRun),
    };
    let cfg = match load(args, expected) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let out = match args.out.clone().or_else(|| cfg.output.clone()) {
        Some(path) => path,
        None => {
            eprintln!("error: no output path; pass --out or set \"output\" in the config");
            return ExitCode::from(2);
        }
    };
    let threads = args.threads.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });

    let code = match cfg.experiment {
        Experiment::Converge => {
            let results = driver::run_converge(&cfg, threads);
            let rows = driver::converge_csv_rows(&results);
            if let Err(e) = write_csv(&out, &driver::CONVERGE_HEADER, &rows) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return ExitCode::from(1);
            }
            for r in &results {
                if let Err(e) = &r.outcome {
                    eprintln!("level nx={} tau={}: {e}", r.nx, r.tau);
                }
            }
            driver::classify_failures(&results).unwrap_or(0)
        }
        Experiment::BarryMercer => match driver::run_barry_mercer(&cfg, threads) {
            Ok(table) => {
                let rows = driver::barry_mercer_csv_rows(&table);
                if let Err(e) = write_csv(&out, &driver::BARRY_MERCER_HEADER, &rows) {
                    eprintln!("error: cannot write {}: {e}", out.display());
                    return ExitCode::from(1);
                }
                0
            }
            Err(e) => solver_exit(&e),
        },
        Experiment::SingleRun => match driver::run_single_dump(&cfg) {
            Ok(rows) => {
                if let Err(e) = write_csv(&out, &driver::SNAPSHOT_HEADER, &rows) {
                    eprintln!("error: cannot write {}: {e}", out.display());
                    return ExitCode::from(1);
                }
                0
            }
            Err(e) => solver_exit(&e),
        },
    };
    ExitCode::from(code as u8)
}

fn load(args: &RunArgs, expected: Experiment) -> Result<Config, String> {
    let cfg = parse_config(&args.config).map_err(|e| match e {
        ConfigError::Io(e) => format!("{}: {e}", args.config.display()),
        other => other.to_string(),
    })?;
    if cfg.experiment != expected {
        return Err(format!(
            "config is for experiment \"{}\" but this subcommand runs \"{}\"",
            cfg.experiment.name(),
            expected.name()
        ));
    }
    Ok(cfg)
}

fn solver_exit(e: &Error) -> i32 {
    eprintln!("error: {e}");
    match e {
        Error::Instability { .. } => 4,
        _ => 3,
    }
}
