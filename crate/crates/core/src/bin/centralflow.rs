use std::path::PathBuf;
use std::process::ExitCode;

use centralflow::convergence::{convergence_table, ConvergenceOptions, Problem};
use centralflow::driver::{self, SimulationConfig};
use centralflow::geostats::{generate_on, FieldSpec};
use centralflow::{Error, Grid2D, SchemeKind};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "centralflow", version, about = "Two-phase porous-media flow with central-upwind transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set scheme=kt_dxd`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Write a log-normal permeability field as a snapshot CSV.
    GenPerm {
        #[arg(long, default_value_t = 256)]
        nx: usize,
        #[arg(long, default_value_t = 64)]
        ny: usize,
        /// Cell size in x (m).
        #[arg(long, default_value_t = 1.0)]
        dx: f64,
        /// Cell size in y (m).
        #[arg(long, default_value_t = 1.0)]
        dy: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100.0)]
        mean: f64,
        #[arg(long, default_value_t = 1.0)]
        cv: f64,
        #[arg(long, default_value_t = FieldSpec::DEFAULT_SPECTRAL_EXPONENT)]
        beta: f64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Print convergence tables for the built-in advection problems.
    Convergence {
        /// Scheme to test; all schemes when omitted.
        #[arg(long)]
        scheme: Option<SchemeKind>,
        #[arg(long, default_value_t = 1.8)]
        theta: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [64, 128, 256])]
        resolutions: Vec<usize>,
    },
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = SimulationConfig::load(&config, &overrides)?;
            let (record, files) = driver::run(&cfg)?;
            println!(
                "t = {} days, {} micro-steps, {} pressure solves, mass balance error {:.3e}",
                record.final_time,
                record.micro_steps,
                record.pressure_solves,
                record.max_mass_balance_error()
            );
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::GenPerm { nx, ny, dx, dy, seed, mean, cv, beta, output } => {
            let spec = FieldSpec {
                nx,
                ny,
                seed,
                mean_perm: mean,
                cv,
                spectral_exponent: beta,
            };
            let grid = Grid2D::new(nx, ny, dx, dy).map_err(|e| Error::Config(e.to_string()))?;
            let k = generate_on(&spec, grid)?;
            driver::write_snapshot(&k, 0.0, &output)?;
            println!("wrote {}", output.display());
        }
        Command::Convergence { scheme, theta, resolutions } => {
            if resolutions.len() < 2 || resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
                return Err(Error::Config("resolutions must double, e.g. 64,128,256".into()));
            }
            let opts = ConvergenceOptions { theta, ..Default::default() };
            let kinds = scheme.map_or(SchemeKind::ALL.to_vec(), |k| vec![k]);
            for problem in [Problem::Advection1d, Problem::AdvectionDiagonal] {
                for &kind in &kinds {
                    println!("{}", convergence_table(problem, kind, &resolutions, &opts)?);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
