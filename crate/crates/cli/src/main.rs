use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rp_lab_cli::config::{load, ConfigError};
use rp_lab_cli::experiments::{run, RunError};
use rp_lab_cli::report::{export, Format};
use rp_lab_cli::{exit, THREADS_ENV};

#[derive(Parser)]
#[command(name = "rp-lab", version, about = "Reflection-positivity certification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write its report.
    Run {
        config: PathBuf,
        /// Report destination; overrides `output` in the config, stdout if
        /// neither is set.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| rp_lab_cli::config::config_error(THREADS_ENV, format!("{value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| rp_lab_cli::config::config_error(THREADS_ENV, e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("config error: {e}");
        return ExitCode::from(exit::CONFIG_ERROR as u8);
    }
    let code = match cli.command {
        Command::Validate { config } => match load(&config).and_then(|c| c.validate().map(|_| c)) {
            Ok(c) => {
                println!("valid: {}", c.experiment.name());
                exit::PASS
            }
            Err(e) => {
                eprintln!("config error: {e}");
                exit::CONFIG_ERROR
            }
        },
        Command::Run { config, output, format } => run_command(&config, output, format),
    };
    ExitCode::from(code as u8)
}

fn run_command(path: &std::path::Path, output: Option<PathBuf>, format: Format) -> i32 {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return exit::CONFIG_ERROR;
        }
    };
    let (report, failure) = match run(&cfg) {
        Ok(r) => r,
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            return exit::CONFIG_ERROR;
        }
        Err(e @ RunError::Solver(_)) => {
            eprintln!("{e}");
            return exit::SOLVER_FAILURE;
        }
    };
    let destination = output.or_else(|| cfg.output.clone());
    if let Err(e) = export(&report, format, destination.as_deref()) {
        eprintln!("cannot write report: {e}");
        return exit::CONFIG_ERROR;
    }
    for check in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: {:e} (tolerance {:e})", check.name, check.value, check.tolerance);
    }
    match failure {
        Some(e) => {
            eprintln!("{e}");
            exit::SOLVER_FAILURE
        }
        None if report.passed => exit::PASS,
        None => exit::CHECK_FAILURE,
    }
}
