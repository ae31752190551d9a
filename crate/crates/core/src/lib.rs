//! Entropy-regularized equilibria for continuous-time, finite-state mean
//! field games.
//!
//! A game is a controlled continuous-time Markov chain whose jump rates and
//! rewards may depend on the population distribution. Given a temperature
//! `α > 0`, a regularized equilibrium is a policy that is the softmax best
//! response to the mean field it induces. Two learning loops are provided:
//! plain fixed-point iteration and fictitious play with mean-field averaging.
//! All ODEs are integrated with fixed-step RK4 on a uniform grid.
//!
//! ```
//! use mfg_core::{build_left_right, fictitious_play, SolverConfig};
//!
//! let game = build_left_right();
//! let cfg = SolverConfig { alpha: 1.0, max_iters: 3, dt: 0.1, ..Default::default() };
//! let sol = fictitious_play(&game, &cfg).unwrap();
//! assert_eq!(sol.trace.len(), 3);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod games;
pub mod metrics;
pub mod model;
pub mod ode;
pub mod solvers;

pub use error::{Error, Result};
pub use games::{
    build_left_right, build_random_mfg, build_sis, build_sis_with, mean_infected_fraction, RandomGameSpec, SisParams,
};
pub use metrics::{nash_gap, regularized_gap, sup_distance, IterationRecord, IterationTrace, SupDistance};
pub use model::{
    entropy, uniform_policy, GameModel, MeanFieldFlow, Policy, QTable, SolverConfig, TimeGrid, ValueTable,
};
pub use ode::{integrate_grid, rk4_step, Direction};
pub use solvers::{
    backward_hard_hjb, backward_soft_hjb, evaluate_policy, fictitious_play, fictitious_play_from,
    fixed_point_iteration, fixed_point_iteration_from, forward_mean_field, greedy_policy, softmax_policy,
    BackwardSolution, Solution,
};
