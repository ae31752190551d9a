//! Benchmark games: Left-Right, seeded random congestion games and SIS
//! epidemic control.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::model::{GameModel, MeanFieldFlow, TimeGrid};

pub const LR_LEFT: usize = 0;
pub const LR_RIGHT: usize = 1;
pub const LR_STAY: usize = 0;
pub const LR_CHANGE: usize = 1;

/// Switching rate under the Change action.
pub const LR_SWITCH_RATE: f64 = 0.2;
pub const LR_HORIZON: f64 = 50.0;

/// Two positions, stay or change. Crowding the left side costs twice as much
/// as crowding the right.
pub fn build_left_right() -> GameModel {
    GameModel::builder(2, 2)
        .horizon(LR_HORIZON)
        .mu0(vec![0.4, 0.6])
        .rates(|_, _, u, _| if u == LR_CHANGE { LR_SWITCH_RATE } else { 0.0 })
        .reward(|x, _, nu| match x {
            LR_LEFT => -2.0 * nu[LR_LEFT],
            _ => -nu[LR_RIGHT],
        })
        .build()
        .expect("left-right parameters are valid")
}

/// Parameters of a random congestion game.
///
/// Rates and base rewards are drawn from `Uniform[0, 1)` by a ChaCha20 generator
/// seeded with `ChaCha20Rng::seed_from_u64(seed)`. Draw order: all rates first,
/// looping `x`, then `x' != x`, then `u`; then all base rewards, looping `x`,
/// then `u`. Each draw is one `rng.gen::<f64>()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGameSpec {
    pub seed: u64,
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: f64,
    /// Weight of the `-η log μ(x)` crowd-aversion term.
    pub eta: f64,
    /// Floor applied to `μ(x)` inside the logarithm.
    pub epsilon_log: f64,
}

impl Default for RandomGameSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_states: 10,
            n_actions: 2,
            horizon: 10.0,
            eta: 1.0,
            epsilon_log: 1e-10,
        }
    }
}

/// Mean-field independent tables of a random game.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomTables {
    /// `rates[(x * n_states + y) * n_actions + u]`, zero on the diagonal.
    pub rates: Vec<f64>,
    /// `base_rewards[x * n_actions + u]`.
    pub base_rewards: Vec<f64>,
}

impl RandomGameSpec {
    pub fn tables(&self) -> RandomTables {
        let (n, m) = (self.n_states, self.n_actions);
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let mut rates = vec![0.0; n * n * m];
        for x in 0..n {
            for y in (0..n).filter(|&y| y != x) {
                for u in 0..m {
                    rates[(x * n + y) * m + u] = rng.gen::<f64>();
                }
            }
        }
        let base_rewards = (0..n * m).map(|_| rng.gen::<f64>()).collect();
        RandomTables { rates, base_rewards }
    }
}

/// Random game with reward `r₀(x, u) - η log max(μ(x), ε)`, zero terminal
/// reward and uniform initial distribution.
pub fn build_random_mfg(spec: &RandomGameSpec) -> Result<GameModel> {
    let (n, m) = (spec.n_states, spec.n_actions);
    let RandomTables { rates, base_rewards } = spec.tables();
    let (eta, eps) = (spec.eta, spec.epsilon_log);
    GameModel::builder(n, m)
        .horizon(spec.horizon)
        .rates(move |x, y, u, _| rates[(x * n + y) * m + u])
        .reward(move |x, u, nu| base_rewards[x * m + u] - eta * nu[x].max(eps).ln())
        .build()
}

pub const SIS_SUSCEPTIBLE: usize = 0;
pub const SIS_INFECTED: usize = 1;
pub const SIS_NO_QUARANTINE: usize = 0;
pub const SIS_QUARANTINE: usize = 1;

/// Parameters of the SIS epidemic game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisParams {
    /// Infection rate per unit of infected mass, `κ`.
    pub infection_rate: f64,
    /// Healing rate `γ`.
    pub healing_rate: f64,
    pub infected_cost: f64,
    pub quarantine_cost: f64,
    /// Extra cost for being infected at the horizon.
    pub final_infected_cost: f64,
    pub horizon: f64,
    pub initial_infected: f64,
    /// When true a quarantined susceptible agent pays `infected_cost +
    /// quarantine_cost`, as in the published reward table. When false it pays
    /// only `quarantine_cost`.
    pub susceptible_quarantine_pays_infected_cost: bool,
}

impl Default for SisParams {
    fn default() -> Self {
        Self {
            infection_rate: 5.0,
            healing_rate: 0.2,
            infected_cost: 10.0,
            quarantine_cost: 2.0,
            final_infected_cost: 35.0,
            horizon: 10.0,
            initial_infected: 0.01,
            susceptible_quarantine_pays_infected_cost: true,
        }
    }
}

/// Susceptible-infected-susceptible epidemic with optional quarantine, using
/// the default [`SisParams`].
pub fn build_sis() -> GameModel {
    build_sis_with(&SisParams::default()).expect("default SIS parameters are valid")
}

pub fn build_sis_with(p: &SisParams) -> Result<GameModel> {
    let SisParams {
        infection_rate,
        healing_rate,
        infected_cost,
        quarantine_cost,
        ..
    } = *p;
    let susceptible_quarantine = if p.susceptible_quarantine_pays_infected_cost {
        -infected_cost - quarantine_cost
    } else {
        -quarantine_cost
    };
    GameModel::builder(2, 2)
        .horizon(p.horizon)
        .mu0(vec![1.0 - p.initial_infected, p.initial_infected])
        .rates(move |x, _, u, nu| match (x, u) {
            (SIS_SUSCEPTIBLE, SIS_NO_QUARANTINE) => infection_rate * nu[SIS_INFECTED],
            (SIS_SUSCEPTIBLE, _) => 0.0,
            _ => healing_rate,
        })
        .reward(move |x, u, _| match (x, u) {
            (SIS_SUSCEPTIBLE, SIS_NO_QUARANTINE) => 0.0,
            (SIS_SUSCEPTIBLE, _) => susceptible_quarantine,
            (_, SIS_NO_QUARANTINE) => -infected_cost,
            _ => -infected_cost - quarantine_cost,
        })
        .terminal(vec![0.0, -p.final_infected_cost])
        .build()
}

/// Time average of the infected share, trapezoidal over the grid nodes.
pub fn mean_infected_fraction(flow: &MeanFieldFlow, grid: &TimeGrid) -> f64 {
    let n = grid.n_steps();
    let infected = |k: usize| flow.node(k)[SIS_INFECTED];
    let inner: f64 = (1..n).map(infected).sum();
    let integral = grid.dt() * (0.5 * infected(0) + inner + 0.5 * infected(n));
    integral / grid.horizon()
}
