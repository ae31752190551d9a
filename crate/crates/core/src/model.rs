//! Game model, time grid and the containers passed between solver stages.
//!
//! Mean fields and value functions live on grid nodes `t_k = k * dt`,
//! `k = 0..=n_steps`. Policies are piecewise constant on the intervals
//! `[t_k, t_{k+1})`, `k = 0..n_steps`.

use std::fmt;
use std::sync::Arc;

use crate::error::{dims, Error, Result};

/// Off-diagonal jump rate `(from, to, action, mean_field) -> rate`.
pub type RateFn = dyn Fn(usize, usize, usize, &[f64]) -> f64 + Send + Sync;
/// Running reward `(state, action, mean_field) -> reward`.
pub type RewardFn = dyn Fn(usize, usize, &[f64]) -> f64 + Send + Sync;

const SIMPLEX_TOL: f64 = 1e-12;
const GRID_TOL: f64 = 1e-9;

/// Uniform time grid over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// Fails unless `horizon` is an integer multiple of `dt` (within 1e-9).
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid { horizon, dt });
        }
        let steps = (horizon / dt).round();
        if steps < 1.0 || (steps * dt - horizon).abs() > GRID_TOL {
            return Err(Error::InvalidGrid { horizon, dt });
        }
        Ok(Self {
            dt,
            n_steps: steps as usize,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn n_intervals(&self) -> usize {
        self.n_steps
    }

    /// Time of node `k`.
    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.node(self.n_steps)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|k| self.node(k))
    }
}

/// A finite-state, finite-action mean field game in continuous time.
///
/// Only off-diagonal rates are supplied; the generator diagonal is always
/// derived so that every row sums to zero.
#[derive(Clone)]
pub struct GameModel {
    n_states: usize,
    n_actions: usize,
    horizon: f64,
    mu0: Vec<f64>,
    rate: Arc<RateFn>,
    reward: Arc<RewardFn>,
    terminal: Vec<f64>,
}

impl fmt::Debug for GameModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameModel")
            .field("n_states", &self.n_states)
            .field("n_actions", &self.n_actions)
            .field("horizon", &self.horizon)
            .field("mu0", &self.mu0)
            .field("terminal", &self.terminal)
            .finish_non_exhaustive()
    }
}

impl GameModel {
    pub fn builder(n_states: usize, n_actions: usize) -> GameModelBuilder {
        GameModelBuilder {
            n_states,
            n_actions,
            horizon: None,
            mu0: None,
            rate: None,
            reward: None,
            terminal: None,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }

    /// Jump rate `Λ(x, x', u, ν)`. The diagonal is minus the sum of the
    /// off-diagonal rates of the row.
    pub fn rate(&self, from: usize, to: usize, action: usize, nu: &[f64]) -> f64 {
        if from != to {
            return (self.rate)(from, to, action, nu);
        }
        -(0..self.n_states)
            .filter(|&y| y != from)
            .map(|y| (self.rate)(from, y, action, nu))
            .sum::<f64>()
    }

    /// Writes the full generator row `Λ(x, ·, u, ν)` into `row`.
    pub fn generator_row(&self, from: usize, action: usize, nu: &[f64], row: &mut [f64]) {
        debug_assert_eq!(row.len(), self.n_states);
        let mut out = 0.0;
        for (to, slot) in row.iter_mut().enumerate() {
            if to == from {
                continue;
            }
            let r = (self.rate)(from, to, action, nu);
            *slot = r;
            out += r;
        }
        row[from] = -out;
    }

    pub fn reward(&self, state: usize, action: usize, nu: &[f64]) -> f64 {
        (self.reward)(state, action, nu)
    }

    pub fn terminal(&self, state: usize) -> f64 {
        self.terminal[state]
    }

    pub fn terminal_rewards(&self) -> &[f64] {
        &self.terminal
    }

    /// Returns a copy of this model with a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidModel(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }

    /// The time grid of this model at step size `dt`.
    pub fn grid(&self, dt: f64) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, dt)
    }

    /// Checks that all off-diagonal rates are nonnegative and finite at `nu`.
    pub fn check_rates_at(&self, nu: &[f64]) -> Result<()> {
        for x in 0..self.n_states {
            for y in (0..self.n_states).filter(|&y| y != x) {
                for u in 0..self.n_actions {
                    let r = (self.rate)(x, y, u, nu);
                    if !(r >= 0.0) || !r.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "rate({x}, {y}, {u}) = {r} at mean field {nu:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub struct GameModelBuilder {
    n_states: usize,
    n_actions: usize,
    horizon: Option<f64>,
    mu0: Option<Vec<f64>>,
    rate: Option<Arc<RateFn>>,
    reward: Option<Arc<RewardFn>>,
    terminal: Option<Vec<f64>>,
}

impl GameModelBuilder {
    pub fn horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn mu0(mut self, mu0: Vec<f64>) -> Self {
        self.mu0 = Some(mu0);
        self
    }

    /// Off-diagonal rates. The closure is never called with `from == to`.
    pub fn rates<F>(mut self, f: F) -> Self
    where
        F: Fn(usize, usize, usize, &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.rate = Some(Arc::new(f));
        self
    }

    pub fn reward<F>(mut self, f: F) -> Self
    where
        F: Fn(usize, usize, &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.reward = Some(Arc::new(f));
        self
    }

    /// Terminal reward `q(x)`; defaults to zero.
    pub fn terminal(mut self, q: Vec<f64>) -> Self {
        self.terminal = Some(q);
        self
    }

    pub fn build(self) -> Result<GameModel> {
        let invalid = |msg: String| Err(Error::InvalidModel(msg));
        if self.n_states == 0 || self.n_actions == 0 {
            return invalid("need at least one state and one action".into());
        }
        let Some(horizon) = self.horizon else {
            return invalid("missing horizon".into());
        };
        if !(horizon > 0.0) || !horizon.is_finite() {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        let mu0 = self
            .mu0
            .unwrap_or_else(|| vec![1.0 / self.n_states as f64; self.n_states]);
        if mu0.len() != self.n_states {
            return invalid(format!("mu0 has {} entries, expected {}", mu0.len(), self.n_states));
        }
        if mu0.iter().any(|&p| !(p >= 0.0)) || (mu0.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
            return invalid(format!("mu0 is not a probability vector: {mu0:?}"));
        }
        let terminal = self.terminal.unwrap_or_else(|| vec![0.0; self.n_states]);
        if terminal.len() != self.n_states || terminal.iter().any(|q| !q.is_finite()) {
            return invalid("terminal rewards must be finite, one per state".into());
        }
        let Some(rate) = self.rate else {
            return invalid("missing rate function".into());
        };
        let Some(reward) = self.reward else {
            return invalid("missing reward function".into());
        };
        let game = GameModel {
            n_states: self.n_states,
            n_actions: self.n_actions,
            horizon,
            mu0,
            rate,
            reward,
            terminal,
        };
        game.check_rates_at(&game.mu0.clone())?;
        Ok(game)
    }
}

/// Population distribution at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldFlow {
    n_states: usize,
    values: Vec<f64>,
}

impl MeanFieldFlow {
    /// `values` is node-major, `n_nodes * n_states` entries.
    pub fn from_values(n_states: usize, values: Vec<f64>) -> Result<Self> {
        if n_states == 0 || values.is_empty() || !values.len().is_multiple_of(n_states) {
            return Err(Error::DimensionMismatch {
                expected: format!("a multiple of {n_states}"),
                actual: values.len().to_string(),
            });
        }
        Ok(Self { n_states, values })
    }

    /// The same distribution at every node.
    pub fn constant(dist: &[f64], n_nodes: usize) -> Self {
        Self {
            n_states: dist.len(),
            values: dist.repeat(n_nodes),
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / self.n_states
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_states..(k + 1) * self.n_states]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation between nodes `k` and `k + 1`, `frac` in `[0, 1]`.
    pub(crate) fn interpolate_into(&self, k: usize, frac: f64, out: &mut [f64]) {
        let a = self.node(k);
        if frac <= 0.0 || k + 1 >= self.n_nodes() {
            out.copy_from_slice(a);
            return;
        }
        let b = self.node(k + 1);
        for ((o, &p), &q) in out.iter_mut().zip(a).zip(b) {
            *o = p + frac * (q - p);
        }
    }

    /// Node-wise `(1 - beta) * self + beta * other`.
    pub fn mix(&self, other: &MeanFieldFlow, beta: f64) -> Result<MeanFieldFlow> {
        if self.n_states != other.n_states || self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: dims(&[self.n_nodes(), self.n_states]),
                actual: dims(&[other.n_nodes(), other.n_states]),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (1.0 - beta) * a + beta * b)
            .collect();
        Ok(MeanFieldFlow {
            n_states: self.n_states,
            values,
        })
    }

    pub(crate) fn check_grid(&self, n_states: usize, grid: &TimeGrid) -> Result<()> {
        if self.n_states != n_states || self.n_nodes() != grid.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: dims(&[grid.n_nodes(), n_states]),
                actual: dims(&[self.n_nodes(), self.n_states]),
            });
        }
        Ok(())
    }
}

/// Action distribution per (interval, state), constant on each interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_intervals: usize,
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl Policy {
    /// Validates every distribution (nonnegative, sums to one within 1e-9)
    /// and renormalizes it exactly.
    pub fn from_values(n_intervals: usize, n_states: usize, n_actions: usize, mut values: Vec<f64>) -> Result<Self> {
        if n_actions == 0 || values.len() != n_intervals * n_states * n_actions {
            return Err(Error::DimensionMismatch {
                expected: dims(&[n_intervals, n_states, n_actions]),
                actual: values.len().to_string(),
            });
        }
        for (i, dist) in values.chunks_mut(n_actions).enumerate() {
            let (interval, state) = (i / n_states, i % n_states);
            if dist.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidPolicy {
                    interval,
                    state,
                    reason: format!("negative or non-finite entry in {dist:?}"),
                });
            }
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidPolicy {
                    interval,
                    state,
                    reason: format!("probabilities sum to {total}"),
                });
            }
            dist.iter_mut().for_each(|p| *p /= total);
        }
        Ok(Self {
            n_intervals,
            n_states,
            n_actions,
            values,
        })
    }

    /// Built from per-(interval, state) rows already known to be normalized.
    pub(crate) fn from_rows_unchecked(n_intervals: usize, n_states: usize, n_actions: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n_intervals * n_states * n_actions);
        Self {
            n_intervals,
            n_states,
            n_actions,
            values,
        }
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn dist(&self, interval: usize, state: usize) -> &[f64] {
        let start = (interval * self.n_states + state) * self.n_actions;
        &self.values[start..start + self.n_actions]
    }

    pub fn prob(&self, interval: usize, state: usize, action: usize) -> f64 {
        self.dist(interval, state)[action]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(interval, state, action, prob)` for every entry, in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let (s, a) = (self.n_states, self.n_actions);
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i / (s * a), (i / a) % s, i % a, p))
    }

    pub(crate) fn check_dims(&self, game: &GameModel, grid: &TimeGrid) -> Result<()> {
        if self.n_intervals != grid.n_intervals()
            || self.n_states != game.n_states()
            || self.n_actions != game.n_actions()
        {
            return Err(Error::DimensionMismatch {
                expected: dims(&[grid.n_intervals(), game.n_states(), game.n_actions()]),
                actual: dims(&[self.n_intervals, self.n_states, self.n_actions]),
            });
        }
        Ok(())
    }
}

/// State values at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    n_states: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub(crate) fn new(n_states: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() % n_states, 0);
        Self { n_states, values }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / self.n_states
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_states..(k + 1) * self.n_states]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_x μ₀(x) V_0(x)`.
    pub fn initial_value(&self, mu0: &[f64]) -> f64 {
        self.node(0).iter().zip(mu0).map(|(v, m)| v * m).sum()
    }
}

/// State-action values at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn from_values(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        let block = n_states * n_actions;
        if block == 0 || values.is_empty() || !values.len().is_multiple_of(block) {
            return Err(Error::DimensionMismatch {
                expected: format!("a multiple of {block}"),
                actual: values.len().to_string(),
            });
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / (self.n_states * self.n_actions)
    }

    /// `Q_{t_k}(x, ·)`.
    pub fn row(&self, node: usize, state: usize) -> &[f64] {
        let start = (node * self.n_states + state) * self.n_actions;
        &self.values[start..start + self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Parameters shared by the equilibrium solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Entropy temperature.
    pub alpha: f64,
    /// Fictitious play weight on the previous mean field.
    pub beta: f64,
    pub max_iters: usize,
    /// Stop once the sup-norm policy change falls below this.
    pub policy_tol: f64,
    pub dt: f64,
    /// Compute the unregularized gap every iteration (one extra backward pass).
    pub record_nash_gap: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.9,
            max_iters: 100,
            policy_tol: 1e-8,
            dt: 0.01,
            record_nash_gap: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.policy_tol >= 0.0) {
            return bad(format!("policy_tol must be nonnegative, got {}", self.policy_tol));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        Ok(())
    }
}

/// The policy choosing every action with probability `1 / n_actions`.
pub fn uniform_policy(grid: &TimeGrid, n_states: usize, n_actions: usize) -> Policy {
    assert!(n_actions >= 1, "uniform_policy needs at least one action");
    let p = 1.0 / n_actions as f64;
    Policy::from_rows_unchecked(
        grid.n_intervals(),
        n_states,
        n_actions,
        vec![p; grid.n_intervals() * n_states * n_actions],
    )
}

/// Shannon entropy `-Σ p log p` with `0 log 0 = 0`.
pub fn entropy(dist: &[f64]) -> f64 {
    -dist.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}
