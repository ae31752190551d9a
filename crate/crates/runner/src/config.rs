//! Experiment configuration files.
//!
//! A config is a TOML document with three sections. `[game]` selects the
//! benchmark by `name` and carries its parameters, `[solver]` lists the
//! algorithms and temperatures to run, `[output]` controls what is written.
//! Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use mfg_core::{
    build_left_right, build_random_mfg, build_sis_with, GameModel, RandomGameSpec, SisParams, SolverConfig,
};
use serde::Deserialize;
use toml::{Table, Value};

use crate::RunnerError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameConfig,
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum GameConfig {
    LeftRight(LeftRightConfig),
    Random(RandomConfig),
    Sis(SisConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeftRightConfig {}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomConfig {
    pub seed: u64,
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: f64,
    pub eta: f64,
    pub epsilon_log: f64,
}

impl Default for RandomConfig {
    fn default() -> Self {
        let s = RandomGameSpec::default();
        Self {
            seed: s.seed,
            n_states: s.n_states,
            n_actions: s.n_actions,
            horizon: s.horizon,
            eta: s.eta,
            epsilon_log: s.epsilon_log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SisConfig {
    pub infection_rate: f64,
    pub healing_rate: f64,
    pub infected_cost: f64,
    pub quarantine_cost: f64,
    pub final_infected_cost: f64,
    pub horizon: f64,
    pub initial_infected: f64,
    pub susceptible_quarantine_pays_infected_cost: bool,
}

impl Default for SisConfig {
    fn default() -> Self {
        let p = SisParams::default();
        Self {
            infection_rate: p.infection_rate,
            healing_rate: p.healing_rate,
            infected_cost: p.infected_cost,
            quarantine_cost: p.quarantine_cost,
            final_infected_cost: p.final_infected_cost,
            horizon: p.horizon,
            initial_infected: p.initial_infected,
            susceptible_quarantine_pays_infected_cost: p.susceptible_quarantine_pays_infected_cost,
        }
    }
}

impl GameConfig {
    pub fn is_sis(&self) -> bool {
        matches!(self, GameConfig::Sis(_))
    }

    pub fn build(&self) -> Result<GameModel, RunnerError> {
        let game = match self {
            GameConfig::LeftRight(_) => build_left_right(),
            GameConfig::Random(r) => build_random_mfg(&RandomGameSpec {
                seed: r.seed,
                n_states: r.n_states,
                n_actions: r.n_actions,
                horizon: r.horizon,
                eta: r.eta,
                epsilon_log: r.epsilon_log,
            })?,
            GameConfig::Sis(s) => build_sis_with(&SisParams {
                infection_rate: s.infection_rate,
                healing_rate: s.healing_rate,
                infected_cost: s.infected_cost,
                quarantine_cost: s.quarantine_cost,
                final_infected_cost: s.final_infected_cost,
                horizon: s.horizon,
                initial_infected: s.initial_infected,
                susceptible_quarantine_pays_infected_cost: s.susceptible_quarantine_pays_infected_cost,
            })?,
        };
        Ok(game)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fpi,
    Fp,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Fpi => "fpi",
            Algorithm::Fp => "fp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Log-spaced temperatures from `min` to `max`, both included.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSweep {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AlphaSweep {
    pub fn values(&self) -> Result<Vec<f64>, RunnerError> {
        let AlphaSweep { min, max, points } = *self;
        if !(min > 0.0 && max >= min && min.is_finite() && max.is_finite()) {
            return Err(RunnerError::Config(format!(
                "alpha_sweep needs 0 < min <= max, got min {min}, max {max}"
            )));
        }
        match points {
            0 => Err(RunnerError::Config("alpha_sweep.points must be at least 1".into())),
            1 => Ok(vec![min]),
            _ => {
                let (lo, hi) = (min.ln(), max.ln());
                let last = (points - 1) as f64;
                Ok((0..points)
                    .map(|i| match i {
                        0 => min,
                        i if i == points - 1 => max,
                        i => (lo + (hi - lo) * i as f64 / last).exp(),
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub algorithm: OneOrMany<Algorithm>,
    pub alpha: Option<OneOrMany<f64>>,
    pub alpha_sweep: Option<AlphaSweep>,
    pub beta: Option<f64>,
    pub max_iters: Option<usize>,
    pub policy_tol: Option<f64>,
    pub dt: Option<f64>,
}

impl SolverSection {
    pub fn algorithms(&self) -> Result<Vec<Algorithm>, RunnerError> {
        let algos = self.algorithm.to_vec();
        if algos.is_empty() {
            return Err(RunnerError::Config("solver.algorithm is empty".into()));
        }
        Ok(algos)
    }

    pub fn alphas(&self) -> Result<Vec<f64>, RunnerError> {
        let alphas = match (&self.alpha, &self.alpha_sweep) {
            (Some(a), None) => a.to_vec(),
            (None, Some(s)) => s.values()?,
            (Some(_), Some(_)) => {
                return Err(RunnerError::Config(
                    "solver.alpha and solver.alpha_sweep are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(RunnerError::Config(
                    "solver.alpha or solver.alpha_sweep is required".into(),
                ))
            }
        };
        if alphas.is_empty() {
            return Err(RunnerError::Config("solver.alpha is empty".into()));
        }
        Ok(alphas)
    }

    /// Solver settings for one temperature, validated.
    pub fn solver_config(&self, alpha: f64, record_nash_gap: bool) -> Result<SolverConfig, RunnerError> {
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            alpha,
            beta: self.beta.unwrap_or(d.beta),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            policy_tol: self.policy_tol.unwrap_or(d.policy_tol),
            dt: self.dt.unwrap_or(d.dt),
            record_nash_gap,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(SolverConfig::default().dt)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub record_nash_gap: bool,
    pub record_flows: bool,
    pub record_policies: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            record_nash_gap: true,
            record_flows: true,
            record_policies: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunnerError> {
        Self::with_overrides(text, &[])
    }

    /// Parses `text`, applying `key=value` overrides before validation.
    pub fn with_overrides(text: &str, overrides: &[String]) -> Result<Self, RunnerError> {
        let mut table: Table = toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| RunnerError::Config(e.to_string()))?;
        cfg.solver.algorithms()?;
        cfg.solver.alphas()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunnerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::with_overrides(&text, overrides)
    }
}

/// Sets a dotted `key=value` in `table`. The value is read as a TOML value
/// and falls back to a bare string.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), RunnerError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| RunnerError::Config(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(RunnerError::Config(format!("override key `{key}` is malformed")));
    }
    let (last, parents) = parts.split_last().expect("non-empty split");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| RunnerError::Config(format!("override key `{key}`: `{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
