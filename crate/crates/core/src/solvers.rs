//! Forward master equation, backward HJB passes and the two equilibrium
//! learning loops (fixed-point iteration and fictitious play).
//!
//! The three maps composed by both loops are
//!
//! ```text
//! policy --forward_mean_field--> mean field --backward_soft_hjb--> Q --softmax_policy--> policy
//! ```
//!
//! Within a backward pass the mean field at an RK4 half step is linearly
//! interpolated between the bracketing nodes. The policy on interval
//! `[t_k, t_{k+1})` is built from `Q` at node `t_k`.

use crate::error::{Error, Result};
use crate::metrics::{self, IterationRecord, IterationTrace, SupDistance};
use crate::model::{
    entropy, uniform_policy, GameModel, MeanFieldFlow, Policy, QTable, SolverConfig, TimeGrid, ValueTable,
};
use crate::ode::{integrate_grid, integrate_grid_with, Direction};

/// Entries below this after a forward step are treated as a failed step
/// rather than roundoff.
pub const SIMPLEX_VIOLATION_THRESHOLD: f64 = -1e-6;

/// A value table together with the action values computed from it.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardSolution {
    pub v: ValueTable,
    pub q: QTable,
}

impl BackwardSolution {
    /// `Σ_x μ₀(x) V_0(x)`.
    pub fn initial_value(&self, mu0: &[f64]) -> f64 {
        self.v.initial_value(mu0)
    }
}

/// `α log Σ_u exp(q_u / α)`, shifted by the maximum so small `α` cannot
/// overflow.
pub fn soft_max_value(q: &[f64], alpha: f64) -> f64 {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = q.iter().map(|&v| ((v - m) / alpha).exp()).sum();
    m + alpha * s.ln()
}

/// `max_u q_u <= α LSE(q / α) <= max_u q_u + α log |U|`, up to roundoff.
pub fn lse_sandwich_holds(q: &[f64], alpha: f64) -> bool {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v = soft_max_value(q, alpha);
    let slack = 1e-12 * (1.0 + m.abs());
    m <= v + slack && v <= m + alpha * (q.len() as f64).ln() + slack
}

fn cleanup_simplex(node: usize, y: &mut [f64]) -> Result<()> {
    for (state, p) in y.iter_mut().enumerate() {
        if *p < SIMPLEX_VIOLATION_THRESHOLD || !p.is_finite() {
            return Err(Error::SimplexViolation { node, state, value: *p });
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = y.iter().sum();
    y.iter_mut().for_each(|p| *p /= total);
    Ok(())
}

/// Solves the master equation for the population playing `policy`.
pub fn forward_mean_field(game: &GameModel, policy: &Policy, grid: &TimeGrid) -> Result<MeanFieldFlow> {
    policy.check_dims(game, grid)?;
    let n = game.n_states();
    let mut row = vec![0.0; n];
    let field = |k: usize, _t: f64, mu: &[f64], dmu: &mut [f64]| -> Result<()> {
        dmu.fill(0.0);
        for from in 0..n {
            for (u, &p) in policy.dist(k, from).iter().enumerate() {
                let mass = mu[from] * p;
                if mass == 0.0 {
                    continue;
                }
                game.generator_row(from, u, mu, &mut row);
                for (d, &r) in dmu.iter_mut().zip(&row) {
                    *d += r * mass;
                }
            }
        }
        Ok(())
    };
    let values = integrate_grid_with(field, game.mu0(), grid, Direction::Forward, cleanup_simplex)?;
    MeanFieldFlow::from_values(n, values)
}

/// `Q(x, u) = r(x, u, ν) + Σ_{x'} Λ(x, x', u, ν) V(x')` for all `u`.
fn action_values(game: &GameModel, state: usize, nu: &[f64], v: &[f64], row: &mut [f64], q: &mut [f64]) {
    for (u, qu) in q.iter_mut().enumerate() {
        game.generator_row(state, u, nu, row);
        let drift: f64 = row.iter().zip(v).map(|(r, v)| r * v).sum();
        *qu = game.reward(state, u, nu) + drift;
    }
}

/// Builds the Q table for a solved value table.
pub fn q_table(game: &GameModel, mu: &MeanFieldFlow, v: &ValueTable) -> QTable {
    let (n, m) = (game.n_states(), game.n_actions());
    let mut row = vec![0.0; n];
    let mut values = vec![0.0; v.n_nodes() * n * m];
    for (k, block) in values.chunks_mut(n * m).enumerate() {
        for (x, q) in block.chunks_mut(m).enumerate() {
            action_values(game, x, mu.node(k), v.node(k), &mut row, q);
        }
    }
    QTable::from_values(n, m, values).expect("q table dimensions follow the value table")
}

/// Which Hamiltonian a backward pass uses.
#[derive(Clone, Copy)]
enum Hamiltonian<'a> {
    Soft(f64),
    Hard,
    Policy(&'a Policy, f64),
}

fn backward_pass(game: &GameModel, mu: &MeanFieldFlow, grid: &TimeGrid, ham: Hamiltonian<'_>) -> Result<ValueTable> {
    mu.check_grid(game.n_states(), grid)?;
    let (n, m) = (game.n_states(), game.n_actions());
    let dt = grid.dt();
    let mut nu = vec![0.0; n];
    let mut row = vec![0.0; n];
    let mut q = vec![0.0; m];
    let field = |k: usize, t: f64, v: &[f64], dv: &mut [f64]| -> Result<()> {
        let frac = ((t - grid.node(k)) / dt).clamp(0.0, 1.0);
        mu.interpolate_into(k, frac, &mut nu);
        for (x, out) in dv.iter_mut().enumerate() {
            action_values(game, x, &nu, v, &mut row, &mut q);
            let h = match ham {
                Hamiltonian::Soft(alpha) => {
                    debug_assert!(lse_sandwich_holds(&q, alpha), "log-sum-exp bounds violated: {q:?}");
                    soft_max_value(&q, alpha)
                }
                Hamiltonian::Hard => q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Hamiltonian::Policy(pi, alpha) => {
                    let dist = pi.dist(k, x);
                    let expected: f64 = dist.iter().zip(&q).map(|(p, q)| p * q).sum();
                    expected + alpha * entropy(dist)
                }
            };
            if !h.is_finite() {
                return Err(Error::NumericOverflow {
                    context: "backward Hamiltonian",
                    node: k,
                });
            }
            *out = -h;
        }
        Ok(())
    };
    let values = integrate_grid(field, game.terminal_rewards(), grid, Direction::Backward)?;
    Ok(ValueTable::new(n, values))
}

/// Entropy-regularized HJB: `-dV/dt = α log Σ_u exp(Q(x, u) / α)`, `V_T = q`.
pub fn backward_soft_hjb(
    game: &GameModel,
    mu: &MeanFieldFlow,
    alpha: f64,
    grid: &TimeGrid,
) -> Result<BackwardSolution> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig(format!("alpha must be positive, got {alpha}")));
    }
    let v = backward_pass(game, mu, grid, Hamiltonian::Soft(alpha))?;
    let q = q_table(game, mu, &v);
    Ok(BackwardSolution { v, q })
}

/// Unregularized HJB: `-dV/dt = max_u Q(x, u)`, `V_T = q`.
pub fn backward_hard_hjb(game: &GameModel, mu: &MeanFieldFlow, grid: &TimeGrid) -> Result<BackwardSolution> {
    let v = backward_pass(game, mu, grid, Hamiltonian::Hard)?;
    let q = q_table(game, mu, &v);
    Ok(BackwardSolution { v, q })
}

/// Value table of a fixed policy against a fixed mean field, with entropy
/// bonus weighted by `alpha` (zero for the plain objective).
pub fn policy_values(
    game: &GameModel,
    pi_hat: &Policy,
    mu: &MeanFieldFlow,
    alpha: f64,
    grid: &TimeGrid,
) -> Result<ValueTable> {
    pi_hat.check_dims(game, grid)?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidConfig(format!("alpha must be nonnegative, got {alpha}")));
    }
    backward_pass(game, mu, grid, Hamiltonian::Policy(pi_hat, alpha))
}

/// Objective of a deviating policy `pi_hat` while the population follows `mu`:
/// `Σ_x μ₀(x) V_0(x)` of the policy-evaluation ODE.
pub fn evaluate_policy(
    game: &GameModel,
    pi_hat: &Policy,
    mu: &MeanFieldFlow,
    alpha: f64,
    grid: &TimeGrid,
) -> Result<f64> {
    Ok(policy_values(game, pi_hat, mu, alpha, grid)?.initial_value(game.mu0()))
}

/// Softmax of `Q / α` per (interval, state); interval `k` uses node `k`.
pub fn softmax_policy(q: &QTable, alpha: f64) -> Policy {
    assert!(alpha > 0.0, "softmax temperature must be positive");
    let (n, m) = (q.n_states(), q.n_actions());
    let intervals = q.n_nodes() - 1;
    let mut values = Vec::with_capacity(intervals * n * m);
    for k in 0..intervals {
        for x in 0..n {
            let row = q.row(k, x);
            let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let start = values.len();
            values.extend(row.iter().map(|&v| ((v - top) / alpha).exp()));
            let total: f64 = values[start..].iter().sum();
            values[start..].iter_mut().for_each(|p| *p /= total);
        }
    }
    Policy::from_rows_unchecked(intervals, n, m, values)
}

/// Deterministic argmax policy; ties go to the lowest action index.
pub fn greedy_policy(q: &QTable) -> Policy {
    let (n, m) = (q.n_states(), q.n_actions());
    let intervals = q.n_nodes() - 1;
    let mut values = vec![0.0; intervals * n * m];
    for (i, dist) in values.chunks_mut(m).enumerate() {
        let row = q.row(i / n, i % n);
        let mut best = 0;
        for (u, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = u;
            }
        }
        dist[best] = 1.0;
    }
    Policy::from_rows_unchecked(intervals, n, m, values)
}

/// One application of the composed equilibrium map to `policy`.
pub fn best_response_map(game: &GameModel, policy: &Policy, alpha: f64, grid: &TimeGrid) -> Result<Policy> {
    let mu = forward_mean_field(game, policy, grid)?;
    let sol = backward_soft_hjb(game, &mu, alpha, grid)?;
    Ok(softmax_policy(&sol.q, alpha))
}

/// Output of an equilibrium learning run.
#[derive(Debug, Clone)]
pub struct Solution {
    /// The final policy `π^K`.
    pub policy: Policy,
    /// Mean field induced by `policy`.
    pub flow: MeanFieldFlow,
    /// Fictitious play only: the averaged mean field after the last step.
    pub averaged_flow: Option<MeanFieldFlow>,
    pub trace: IterationTrace,
    /// True when the loop stopped on the policy-change tolerance.
    pub converged: bool,
}

/// Fixed-point iteration from the uniform policy.
pub fn fixed_point_iteration(game: &GameModel, config: &SolverConfig) -> Result<Solution> {
    let grid = game.grid(config.dt)?;
    let start = uniform_policy(&grid, game.n_states(), game.n_actions());
    fixed_point_iteration_from(game, config, start)
}

/// Fixed-point iteration `π^{k+1} = softmax(Q(μ(π^k)))` from `initial`.
///
/// Record `k` of the trace describes `π^k`; its deltas compare `π^{k+1}`
/// with `π^k` and their induced mean fields.
pub fn fixed_point_iteration_from(game: &GameModel, config: &SolverConfig, initial: Policy) -> Result<Solution> {
    config.validate()?;
    let grid = game.grid(config.dt)?;
    initial.check_dims(game, &grid)?;
    let alpha = config.alpha;

    let mut policy = initial;
    let mut flow = forward_mean_field(game, &policy, &grid)?;
    let mut trace = IterationTrace::default();
    let mut converged = false;

    for k in 0..config.max_iters {
        let soft = backward_soft_hjb(game, &flow, alpha, &grid)?;
        let objective = evaluate_policy(game, &policy, &flow, alpha, &grid)?;
        let delta_j_re = soft.initial_value(game.mu0()) - objective;
        let delta_j = if config.record_nash_gap {
            metrics::nash_gap_with_flow(game, &policy, &flow, &grid)?
        } else {
            f64::NAN
        };

        let next = softmax_policy(&soft.q, alpha);
        let next_flow = forward_mean_field(game, &next, &grid)?;
        let policy_delta = next.sup_distance(&policy)?;
        let mean_field_delta = next_flow.sup_distance(&flow)?;
        trace.push(IterationRecord {
            k,
            delta_j,
            delta_j_re,
            policy_delta,
            mean_field_delta,
            objective,
        });
        policy = next;
        flow = next_flow;
        if policy_delta < config.policy_tol {
            converged = true;
            break;
        }
    }

    Ok(Solution {
        policy,
        flow,
        averaged_flow: None,
        trace,
        converged,
    })
}

/// Fictitious play from the uniform policy.
pub fn fictitious_play(game: &GameModel, config: &SolverConfig) -> Result<Solution> {
    let grid = game.grid(config.dt)?;
    let start = uniform_policy(&grid, game.n_states(), game.n_actions());
    fictitious_play_from(game, config, start)
}

/// Fictitious play: best-respond to the running mean field, then average
/// `μ^{k+1} = (1 - β) Γ(π^{k+1}) + β μ^k` node by node.
///
/// Record `k` of the trace holds the gaps of `π^k` measured against its own
/// induced mean field; `mean_field_delta` compares successive averaged flows.
/// Stops once both the policy change and the averaged mean-field change fall
/// below `policy_tol`.
pub fn fictitious_play_from(game: &GameModel, config: &SolverConfig, initial: Policy) -> Result<Solution> {
    config.validate()?;
    let grid = game.grid(config.dt)?;
    initial.check_dims(game, &grid)?;
    let (alpha, beta) = (config.alpha, config.beta);

    let mut policy = initial;
    // Mean field induced by the current policy, and the running average.
    let mut induced = forward_mean_field(game, &policy, &grid)?;
    let mut averaged = induced.clone();
    let mut trace = IterationTrace::default();
    let mut converged = false;

    for k in 0..config.max_iters {
        let gaps = metrics::regularized_gap_with_flow(game, &policy, &induced, alpha, &grid)?;
        let delta_j = if config.record_nash_gap {
            metrics::nash_gap_with_flow(game, &policy, &induced, &grid)?
        } else {
            f64::NAN
        };

        let response = backward_soft_hjb(game, &averaged, alpha, &grid)?;
        let next = softmax_policy(&response.q, alpha);
        let next_induced = forward_mean_field(game, &next, &grid)?;
        let next_averaged = next_induced.mix(&averaged, beta)?;

        let policy_delta = next.sup_distance(&policy)?;
        let mean_field_delta = next_averaged.sup_distance(&averaged)?;
        trace.push(IterationRecord {
            k,
            delta_j,
            delta_j_re: gaps.gap,
            policy_delta,
            mean_field_delta,
            objective: gaps.objective,
        });
        policy = next;
        induced = next_induced;
        averaged = next_averaged;
        // A saturated softmax can repeat itself while the average still moves.
        if policy_delta < config.policy_tol && mean_field_delta < config.policy_tol {
            converged = true;
            break;
        }
    }

    Ok(Solution {
        policy,
        flow: induced,
        averaged_flow: Some(averaged),
        trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{build_left_right, build_sis, LR_CHANGE, LR_STAY};
    use approx::assert_abs_diff_eq;

    fn constant_policy(grid: &TimeGrid, n: usize, dist: &[f64]) -> Policy {
        let values = dist.repeat(grid.n_intervals() * n);
        Policy::from_values(grid.n_intervals(), n, dist.len(), values).unwrap()
    }

    fn q_from(rows: &[f64], n_actions: usize) -> QTable {
        // two nodes with identical rows -> one interval
        let mut v = rows.to_vec();
        v.extend_from_slice(rows);
        QTable::from_values(rows.len() / n_actions, n_actions, v).unwrap()
    }

    /// LR game with every rate switched off.
    fn frozen_lr(horizon: f64) -> GameModel {
        GameModel::builder(2, 2)
            .horizon(horizon)
            .mu0(vec![0.4, 0.6])
            .rates(|_, _, _, _| 0.0)
            .reward(|_, _, _| 0.0)
            .build()
            .unwrap()
    }

    #[test]
    fn stay_policy_keeps_initial_distribution() {
        let game = build_left_right();
        let grid = game.grid(0.01).unwrap();
        let mut dist = [0.0; 2];
        dist[LR_STAY] = 1.0;
        let flow = forward_mean_field(&game, &constant_policy(&grid, 2, &dist), &grid).unwrap();
        for k in 0..flow.n_nodes() {
            assert_eq!(flow.node(k), &[0.4, 0.6]);
        }
    }

    #[test]
    fn change_policy_matches_closed_form() {
        let game = build_left_right();
        let grid = game.grid(0.01).unwrap();
        let mut dist = [0.0; 2];
        dist[LR_CHANGE] = 1.0;
        let flow = forward_mean_field(&game, &constant_policy(&grid, 2, &dist), &grid).unwrap();
        for (k, t) in grid.nodes().enumerate() {
            let exact = 0.5 - 0.1 * (-0.4 * t).exp();
            assert_abs_diff_eq!(flow.node(k)[0], exact, epsilon = 1e-9);
            assert_abs_diff_eq!(flow.node(k).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(flow.node(500)[0], 0.486466, epsilon = 1e-6);
    }

    #[test]
    fn coarse_step_reports_simplex_violation() {
        let game = GameModel::builder(2, 1)
            .horizon(1.0)
            .mu0(vec![1.0, 0.0])
            .rates(|x, _, _, _| if x == 0 { 100.0 } else { 0.0 })
            .reward(|_, _, _| 0.0)
            .build()
            .unwrap();
        let grid = game.grid(0.5).unwrap();
        let pi = uniform_policy(&grid, 2, 1);
        assert!(matches!(
            forward_mean_field(&game, &pi, &grid),
            Err(Error::SimplexViolation { node: 1, .. })
        ));
    }

    #[test]
    fn forward_rejects_wrong_policy_shape() {
        let game = build_left_right();
        let grid = game.grid(0.5).unwrap();
        let other = TimeGrid::new(1.0, 0.5).unwrap();
        let pi = uniform_policy(&other, 2, 2);
        assert!(matches!(
            forward_mean_field(&game, &pi, &grid),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pure_entropy_value() {
        let game = frozen_lr(50.0);
        let grid = game.grid(0.01).unwrap();
        let mu = MeanFieldFlow::constant(&[0.4, 0.6], grid.n_nodes());
        let sol = backward_soft_hjb(&game, &mu, 1.0, &grid).unwrap();
        let expect = 50.0 * 2f64.ln();
        assert_abs_diff_eq!(sol.v.node(0)[0], expect, epsilon = 1e-4);
        assert_abs_diff_eq!(sol.v.node(0)[1], expect, epsilon = 1e-4);
        assert_eq!(sol.v.node(grid.n_steps()), &[0.0, 0.0]);

        let uniform = uniform_policy(&grid, 2, 2);
        let j = evaluate_policy(&game, &uniform, &mu, 1.0, &grid).unwrap();
        assert_abs_diff_eq!(j, expect, epsilon = 1e-4);
    }

    #[test]
    fn soft_value_grows_with_alpha() {
        let game = build_left_right();
        let grid = game.grid(0.05).unwrap();
        let mu = MeanFieldFlow::constant(&[0.4, 0.6], grid.n_nodes());
        let bonus = 50.0 * 2f64.ln();
        let hard = backward_hard_hjb(&game, &mu, &grid).unwrap().initial_value(game.mu0());
        let uniform = uniform_policy(&grid, 2, 2);
        let plain = evaluate_policy(&game, &uniform, &mu, 0.0, &grid).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for alpha in [1.0, 10.0, 100.0, 1000.0] {
            let v0 = backward_soft_hjb(&game, &mu, alpha, &grid)
                .unwrap()
                .initial_value(game.mu0());
            // uniform play and the hard optimum bracket the remainder
            assert!(v0 > prev);
            assert!(v0 - alpha * bonus >= plain - 1e-9, "alpha {alpha}");
            assert!(v0 - alpha * bonus <= hard + 1e-9, "alpha {alpha}");
            prev = v0;
        }
    }

    #[test]
    fn hard_hjb_zero_game() {
        let game = frozen_lr(5.0);
        let grid = game.grid(0.1).unwrap();
        let mu = MeanFieldFlow::constant(&[0.4, 0.6], grid.n_nodes());
        let sol = backward_hard_hjb(&game, &mu, &grid).unwrap();
        assert!(sol.v.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_action_hard_equals_policy_evaluation() {
        let game = GameModel::builder(3, 1)
            .horizon(2.0)
            .rates(|x, y, _, nu| 0.1 * (x + 2 * y) as f64 + nu[y])
            .reward(|x, _, nu| x as f64 - nu[0])
            .terminal(vec![1.0, 0.0, -1.0])
            .build()
            .unwrap();
        let grid = game.grid(0.01).unwrap();
        let pi = uniform_policy(&grid, 3, 1);
        let mu = forward_mean_field(&game, &pi, &grid).unwrap();
        let hard = backward_hard_hjb(&game, &mu, &grid).unwrap();
        let eval = policy_values(&game, &pi, &mu, 0.0, &grid).unwrap();
        let soft = backward_soft_hjb(&game, &mu, 0.7, &grid).unwrap();
        for (a, (b, c)) in hard.v.values().iter().zip(eval.values().iter().zip(soft.v.values())) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            assert_abs_diff_eq!(a, c, epsilon = 1e-12);
        }
    }

    #[test]
    fn q_table_is_consistent() {
        let game = build_sis();
        let grid = game.grid(0.01).unwrap();
        let pi = uniform_policy(&grid, 2, 2);
        let mu = forward_mean_field(&game, &pi, &grid).unwrap();
        let sol = backward_soft_hjb(&game, &mu, 0.5, &grid).unwrap();
        for k in [0, 333, grid.n_steps()] {
            for x in 0..2 {
                for u in 0..2 {
                    let nu = mu.node(k);
                    let v = sol.v.node(k);
                    let drift: f64 = (0..2).map(|y| game.rate(x, y, u, nu) * v[y]).sum();
                    let expect = game.reward(x, u, nu) + drift;
                    assert_abs_diff_eq!(sol.q.row(k, x)[u], expect, epsilon = 1e-9);
                }
            }
        }
        assert_eq!(sol.v.node(grid.n_steps()), game.terminal_rewards());
    }

    #[test]
    fn softmax_examples() {
        let p = softmax_policy(&q_from(&[3.0, 3.0], 2), 1.0);
        assert_eq!(p.dist(0, 0), &[0.5, 0.5]);
        let p = softmax_policy(&q_from(&[1.0, 0.0], 2), 1.0);
        // e / (1 + e)
        assert_abs_diff_eq!(p.prob(0, 0, 0), 0.731059, epsilon = 1e-6);
        assert_abs_diff_eq!(p.prob(0, 0, 1), 0.268941, epsilon = 1e-6);
        let p = softmax_policy(&q_from(&[1.0, 0.0], 2), 0.01);
        assert!(p.prob(0, 0, 0) >= 1.0 - 1e-10);
        let p = softmax_policy(&q_from(&[1e6, -1e6, 0.0], 3), 0.001);
        assert_eq!(p.dist(0, 0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_policy(&q_from(&[1.0, 0.0], 2)).dist(0, 0), &[1.0, 0.0]);
        assert_eq!(greedy_policy(&q_from(&[2.0, 2.0], 2)).dist(0, 0), &[1.0, 0.0]);
        assert_eq!(greedy_policy(&q_from(&[0.0, 5.0, 3.0], 3)).dist(0, 0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn lse_helpers() {
        assert_abs_diff_eq!(soft_max_value(&[0.0, 0.0], 1.0), 2f64.ln(), epsilon = 1e-15);
        assert!(soft_max_value(&[1000.0, 999.0], 0.001).is_finite());
        assert!(lse_sandwich_holds(&[1.0, -3.0, 0.5], 0.3));
        assert!(lse_sandwich_holds(&[7.0, 7.0], 2.0));
    }

    #[test]
    fn evaluate_constant_reward() {
        let game = GameModel::builder(2, 1)
            .horizon(10.0)
            .rates(|_, _, _, _| 0.5)
            .reward(|_, _, _| 1.0)
            .build()
            .unwrap();
        let grid = game.grid(0.01).unwrap();
        let pi = uniform_policy(&grid, 2, 1);
        let mu = forward_mean_field(&game, &pi, &grid).unwrap();
        assert_abs_diff_eq!(
            evaluate_policy(&game, &pi, &mu, 0.0, &grid).unwrap(),
            10.0,
            epsilon = 1e-6
        );
    }

    #[test]
    fn single_action_fixed_point_is_immediate() {
        let game = GameModel::builder(2, 1)
            .horizon(1.0)
            .rates(|_, _, _, nu| nu[0])
            .reward(|x, _, nu| -nu[x])
            .build()
            .unwrap();
        let cfg = SolverConfig::default();
        for sol in [
            fixed_point_iteration(&game, &cfg).unwrap(),
            fictitious_play(&game, &cfg).unwrap(),
        ] {
            assert!(sol.converged);
            assert_eq!(sol.trace.len(), 1);
            assert_eq!(sol.trace.records()[0].policy_delta, 0.0);
        }
    }

    #[test]
    fn fp_averaged_flow_stays_on_simplex() {
        let game = build_sis();
        let cfg = SolverConfig {
            alpha: 0.5,
            max_iters: 5,
            dt: 0.05,
            ..Default::default()
        };
        let sol = fictitious_play(&game, &cfg).unwrap();
        let avg = sol.averaged_flow.unwrap();
        for k in 0..avg.n_nodes() {
            let node = avg.node(k);
            assert_abs_diff_eq!(node.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            assert!(node.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let game = build_left_right();
        let cfg = SolverConfig {
            alpha: -1.0,
            ..Default::default()
        };
        assert!(matches!(
            fixed_point_iteration(&game, &cfg),
            Err(Error::InvalidConfig(_))
        ));
        let cfg = SolverConfig {
            dt: 0.3,
            ..Default::default()
        };
        assert!(matches!(fictitious_play(&game, &cfg), Err(Error::InvalidGrid { .. })));
    }
}
