use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use depol_cli::output::{json_text, write_text};
use depol_cli::{algebra_check, calibrate, evolve, micro, sphere, Result, ScenarioConfig, Status};

#[derive(Parser)]
#[command(name = "depol", version, about = "Depolarization of two-mode quantum light")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Stokes commutators and Casimir on every block up to N.
    AlgebraCheck {
        #[arg(long = "n-max")]
        n_max: usize,
        /// Corrupt one matrix element to exercise the failure path.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Evolve a scenario and write trajectory.csv and summary.json.
    Evolve {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write Husimi grids per block and time plus multipoles.json.
    Sphere {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Fit the multipole decay exponents.
    Calibrate {
        #[arg(short, long)]
        config: PathBuf,
        /// Directory for calibration.json; stdout only when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Fit propagator output instead of evolved states.
        #[arg(long)]
        synthetic: bool,
    },
    /// Compare the microscopic atomic reservoir with the effective rate.
    MicroValidate {
        #[arg(short, long)]
        config: PathBuf,
        /// Directory for report.json; stdout only when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn emit<T: serde::Serialize>(value: &T, out: Option<&Path>, name: &str) -> Result<()> {
    let text = json_text(value)?;
    print!("{text}");
    if let Some(dir) = out {
        depol_cli::output::ensure_dir(dir)?;
        write_text(&dir.join(name), &text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::AlgebraCheck { n_max, inject_fault } => {
            let report = algebra_check::algebra_check(n_max, inject_fault)?;
            emit(&report, None, "")?;
            Ok(report.status())
        }
        Command::Evolve { config, out } => evolve::cmd_evolve(&ScenarioConfig::load(&config)?, &out),
        Command::Sphere { config, out } => sphere::cmd_sphere(&ScenarioConfig::load(&config)?, &out),
        Command::Calibrate { config, out, synthetic } => {
            let report = calibrate::run_calibrate(&ScenarioConfig::load(&config)?, synthetic)?;
            emit(&report, out.as_deref(), "calibration.json")?;
            Ok(report.status)
        }
        Command::MicroValidate { config, out } => {
            let report = micro::run_micro(&ScenarioConfig::load(&config)?)?;
            emit(&report, out.as_deref(), "report.json")?;
            Ok(report.status)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    depol_cli::init_thread_pool();
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::Violation.exit_code() as u8)
        }
    }
}
