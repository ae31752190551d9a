//! Runs every (algorithm, temperature) pair of a config and writes its outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mfg_core::{
    evaluate_policy, fictitious_play, fixed_point_iteration, mean_infected_fraction, nash_gap, regularized_gap,
    GameModel, SolverConfig,
};
use rayon::prelude::*;

use crate::config::{Algorithm, ExperimentConfig, OutputSection};
use crate::output::{emit_flow, emit_policy, emit_trace, read_policy, COLUMNS_DOC};
use crate::RunnerError;

/// One solver run in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub algorithm: Algorithm,
    pub config: SolverConfig,
}

impl Job {
    pub fn dir_name(&self) -> String {
        format!("{}_alpha_{}", self.algorithm.as_str(), self.config.alpha)
    }
}

/// Final numbers of one run, as written to `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
    pub delta_j: f64,
    pub delta_j_re: f64,
    pub objective: f64,
    pub mean_infected_fraction: Option<f64>,
}

pub fn jobs(cfg: &ExperimentConfig) -> Result<Vec<Job>, RunnerError> {
    let mut jobs = Vec::new();
    for algorithm in cfg.solver.algorithms()? {
        for alpha in cfg.solver.alphas()? {
            let config = cfg.solver.solver_config(alpha, cfg.output.record_nash_gap)?;
            jobs.push(Job { algorithm, config });
        }
    }
    let mut names: Vec<String> = jobs.iter().map(Job::dir_name).collect();
    names.sort();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(RunnerError::Config(format!("run `{}` is listed twice", w[0])));
    }
    Ok(jobs)
}

/// Solves one job and writes its files into `dir`.
pub fn run_job(
    game: &GameModel,
    job: &Job,
    output: &OutputSection,
    track_infected: bool,
    dir: &Path,
) -> Result<RunSummary, RunnerError> {
    let cfg = &job.config;
    let grid = game.grid(cfg.dt)?;
    let sol = match job.algorithm {
        Algorithm::Fpi => fixed_point_iteration(game, cfg)?,
        Algorithm::Fp => fictitious_play(game, cfg)?,
    };

    fs::create_dir_all(dir).map_err(|e| RunnerError::io(dir, e))?;
    emit_trace(&sol.trace, &dir.join("trace.csv"))?;
    if output.record_flows {
        emit_flow(&sol.flow, &grid, &dir.join("flow.csv"))?;
        if let Some(avg) = &sol.averaged_flow {
            emit_flow(avg, &grid, &dir.join("averaged_flow.csv"))?;
        }
    }
    if output.record_policies {
        emit_policy(&sol.policy, &dir.join("policy.csv"))?;
    }

    let delta_j = if output.record_nash_gap {
        nash_gap(game, &sol.policy, &grid)?
    } else {
        f64::NAN
    };
    Ok(RunSummary {
        algorithm: job.algorithm,
        alpha: cfg.alpha,
        iterations: sol.trace.len(),
        converged: sol.converged,
        delta_j,
        delta_j_re: regularized_gap(game, &sol.policy, cfg.alpha, &grid)?,
        objective: evaluate_policy(game, &sol.policy, &sol.flow, cfg.alpha, &grid)?,
        mean_infected_fraction: track_infected.then(|| mean_infected_fraction(&sol.flow, &grid)),
    })
}

/// Runs all jobs, in parallel across jobs, and writes `summary.csv` and
/// `COLUMNS.txt` under `out_dir`. Output files do not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<RunSummary>, RunnerError> {
    let game = cfg.game.build()?;
    let jobs = jobs(cfg)?;
    let track_infected = cfg.game.is_sis();
    fs::create_dir_all(out_dir).map_err(|e| RunnerError::io(out_dir, e))?;

    let results: Vec<Result<RunSummary, RunnerError>> = jobs
        .par_iter()
        .map(|job| run_job(&game, job, &cfg.output, track_infected, &out_dir.join(job.dir_name())))
        .collect();
    let summaries = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    write_file(&out_dir.join("summary.csv"), &summary_csv(&summaries, track_infected))?;
    write_file(&out_dir.join("COLUMNS.txt"), COLUMNS_DOC)?;
    Ok(summaries)
}

pub fn summary_csv(rows: &[RunSummary], track_infected: bool) -> String {
    let mut s = String::from("algorithm,alpha,iterations,converged,delta_j,delta_j_re,objective");
    if track_infected {
        s.push_str(",mean_infected_fraction");
    }
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{:?},{},{},{:.16e},{:.16e},{:.16e}",
            r.algorithm.as_str(),
            r.alpha,
            r.iterations,
            r.converged,
            r.delta_j,
            r.delta_j_re,
            r.objective
        ));
        if track_infected {
            s.push_str(&format!(",{:.16e}", r.mean_infected_fraction.unwrap_or(f64::NAN)));
        }
        s.push('\n');
    }
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), RunnerError> {
    let mut f = fs::File::create(path).map_err(|e| RunnerError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| RunnerError::io(path, e))
}

/// `(alpha, ΔJ, ΔJ^RE)` of a stored policy for every temperature in the config.
pub fn gaps_for_policy(cfg: &ExperimentConfig, policy_path: &Path) -> Result<Vec<(f64, f64, f64)>, RunnerError> {
    let game = cfg.game.build()?;
    let grid = game.grid(cfg.solver.dt())?;
    let file = fs::File::open(policy_path).map_err(|e| RunnerError::io(policy_path, e))?;
    let policy = read_policy(file, grid.n_intervals(), game.n_states(), game.n_actions())?;
    let delta_j = nash_gap(&game, &policy, &grid)?;
    cfg.solver
        .alphas()?
        .into_iter()
        .map(|alpha| {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(RunnerError::Config(format!("alpha must be positive, got {alpha}")));
            }
            Ok((alpha, delta_j, regularized_gap(&game, &policy, alpha, &grid)?))
        })
        .collect()
}

/// Output directory: the command-line value wins over the config.
pub fn resolve_out_dir(cfg: &ExperimentConfig, cli: Option<PathBuf>) -> PathBuf {
    cli.unwrap_or_else(|| cfg.output.dir.clone())
}
