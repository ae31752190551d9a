use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfg_runner::runner::resolve_out_dir;
use mfg_runner::{gaps_for_policy, run_experiment, ExperimentConfig, RunnerError};

#[derive(Parser)]
#[command(name = "mfg", version, about = "Run mean field game equilibrium experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every algorithm and temperature in a config and write CSV outputs.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Set a config value, e.g. `--override solver.alpha=0.5`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print `alpha,delta_j,delta_j_re` for a stored policy file.
    Gap {
        config: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn execute(cli: Cli) -> Result<(), RunnerError> {
    match cli.command {
        Command::Run { config, out, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let dir = resolve_out_dir(&cfg, out);
            for s in run_experiment(&cfg, &dir)? {
                let status = if s.converged { "converged" } else { "not converged" };
                eprintln!(
                    "{} alpha={} iterations={} {status} delta_j_re={:.3e}",
                    s.algorithm.as_str(),
                    s.alpha,
                    s.iterations,
                    s.delta_j_re
                );
            }
            eprintln!("wrote {}", dir.display());
        }
        Command::Gap {
            config,
            policy,
            overrides,
        } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            println!("alpha,delta_j,delta_j_re");
            for (alpha, dj, djre) in gaps_for_policy(&cfg, &policy)? {
                println!("{alpha:?},{dj:.16e},{djre:.16e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
