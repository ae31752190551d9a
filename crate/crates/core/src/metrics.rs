//! Distance-to-equilibrium measures and per-iteration diagnostics.
//!
//! The maximum over deviating policies is never searched for: one backward
//! HJB pass against the induced mean field gives the best-response value.

use crate::error::{dims, Error, Result};
use crate::model::{GameModel, MeanFieldFlow, Policy, TimeGrid};
use crate::solvers::{backward_hard_hjb, backward_soft_hjb, evaluate_policy, forward_mean_field};

/// Diagnostics for iteration `k`, describing the policy `π^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Unregularized gap of `π^k`; NaN when not recorded.
    pub delta_j: f64,
    /// Regularized gap of `π^k`.
    pub delta_j_re: f64,
    /// `d(π^{k+1}, π^k)`.
    pub policy_delta: f64,
    /// `d(μ^{k+1}, μ^k)`.
    pub mean_field_delta: f64,
    /// `J^RE(π^k, π^k)`.
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn new(records: Vec<IterationRecord>) -> Self {
        Self { records }
    }

    pub fn push(&mut self, record: IterationRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn delta_j_re(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.delta_j_re)
    }

    pub fn delta_j(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.delta_j)
    }

    /// First iteration whose regularized gap is at most `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.delta_j_re <= threshold).map(|r| r.k)
    }
}

/// Supremum distance between two policies or two mean-field flows.
///
/// Policies use the elementwise maximum; flows use the L1 norm per node and
/// the maximum over nodes.
pub trait SupDistance {
    fn sup_distance(&self, other: &Self) -> Result<f64>;
}

impl SupDistance for Policy {
    fn sup_distance(&self, other: &Self) -> Result<f64> {
        if (self.n_intervals(), self.n_states(), self.n_actions())
            != (other.n_intervals(), other.n_states(), other.n_actions())
        {
            return Err(Error::DimensionMismatch {
                expected: dims(&[self.n_intervals(), self.n_states(), self.n_actions()]),
                actual: dims(&[other.n_intervals(), other.n_states(), other.n_actions()]),
            });
        }
        Ok(self
            .values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl SupDistance for MeanFieldFlow {
    fn sup_distance(&self, other: &Self) -> Result<f64> {
        if (self.n_nodes(), self.n_states()) != (other.n_nodes(), other.n_states()) {
            return Err(Error::DimensionMismatch {
                expected: dims(&[self.n_nodes(), self.n_states()]),
                actual: dims(&[other.n_nodes(), other.n_states()]),
            });
        }
        Ok((0..self.n_nodes())
            .map(|k| {
                self.node(k)
                    .iter()
                    .zip(other.node(k))
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max))
    }
}

pub fn sup_distance<T: SupDistance>(a: &T, b: &T) -> Result<f64> {
    a.sup_distance(b)
}

/// Best-response value, self-play value and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub best: f64,
    pub objective: f64,
    pub gap: f64,
}

pub(crate) fn nash_gap_with_flow(game: &GameModel, pi: &Policy, mu: &MeanFieldFlow, grid: &TimeGrid) -> Result<f64> {
    let best = backward_hard_hjb(game, mu, grid)?.initial_value(game.mu0());
    Ok(best - evaluate_policy(game, pi, mu, 0.0, grid)?)
}

pub(crate) fn regularized_gap_with_flow(
    game: &GameModel,
    pi: &Policy,
    mu: &MeanFieldFlow,
    alpha: f64,
    grid: &TimeGrid,
) -> Result<Gap> {
    let best = backward_soft_hjb(game, mu, alpha, grid)?.initial_value(game.mu0());
    let objective = evaluate_policy(game, pi, mu, alpha, grid)?;
    Ok(Gap {
        best,
        objective,
        gap: best - objective,
    })
}

/// `ΔJ(π) = max_π̂ J(π̂, π) - J(π, π)`.
pub fn nash_gap(game: &GameModel, pi: &Policy, grid: &TimeGrid) -> Result<f64> {
    let mu = forward_mean_field(game, pi, grid)?;
    nash_gap_with_flow(game, pi, &mu, grid)
}

/// `ΔJ^RE(π) = max_π̂ J^RE(π̂, π) - J^RE(π, π)`.
pub fn regularized_gap(game: &GameModel, pi: &Policy, alpha: f64, grid: &TimeGrid) -> Result<f64> {
    let mu = forward_mean_field(game, pi, grid)?;
    Ok(regularized_gap_with_flow(game, pi, &mu, alpha, grid)?.gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::build_left_right;
    use crate::model::uniform_policy;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn policy(values: Vec<f64>, n_actions: usize) -> Policy {
        let n = values.len() / n_actions;
        Policy::from_values(n, 1, n_actions, values).unwrap()
    }

    #[test]
    fn policy_distance_examples() {
        let a = policy(vec![0.5, 0.5, 0.2, 0.8], 2);
        let b = policy(vec![0.4, 0.6, 0.2, 0.8], 2);
        assert_eq!(a.sup_distance(&a).unwrap(), 0.0);
        assert_abs_diff_eq!(sup_distance(&a, &b).unwrap(), 0.1, epsilon = 1e-15);
        let c = policy(vec![1.0], 1);
        assert!(matches!(a.sup_distance(&c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn flow_distance_examples() {
        let a = MeanFieldFlow::constant(&[1.0, 0.0], 1);
        let b = MeanFieldFlow::constant(&[0.0, 1.0], 1);
        assert_eq!(a.sup_distance(&b).unwrap(), 2.0);
        assert_eq!(a.sup_distance(&a).unwrap(), 0.0);
        let c = MeanFieldFlow::constant(&[0.0, 1.0], 2);
        assert!(a.sup_distance(&c).is_err());
    }

    #[test]
    fn single_action_gaps_vanish() {
        let game = GameModel::builder(2, 1)
            .horizon(3.0)
            .rates(|x, _, _, nu| 0.3 + nu[x])
            .reward(|x, _, nu| -nu[x])
            .build()
            .unwrap();
        let grid = game.grid(0.01).unwrap();
        let pi = uniform_policy(&grid, 2, 1);
        assert_abs_diff_eq!(nash_gap(&game, &pi, &grid).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(regularized_gap(&game, &pi, 0.5, &grid).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn uniform_lr_policy_is_exploitable() {
        let game = build_left_right();
        let grid = game.grid(0.01).unwrap();
        let pi = uniform_policy(&grid, 2, 2);
        assert!(nash_gap(&game, &pi, &grid).unwrap() > 0.01);
        assert!(regularized_gap(&game, &pi, 1.0, &grid).unwrap() > 0.0);
    }

    #[test]
    fn trace_helpers() {
        let rec = |k, g| IterationRecord {
            k,
            delta_j: 0.0,
            delta_j_re: g,
            policy_delta: 0.0,
            mean_field_delta: 0.0,
            objective: 0.0,
        };
        let t = IterationTrace::new(vec![rec(0, 1.0), rec(1, 1e-4), rec(2, 1e-5)]);
        assert_eq!(t.first_below(1e-3), Some(1));
        assert_eq!(t.first_below(1e-6), None);
        assert!(IterationTrace::default().is_empty());
    }

    fn arb_policy() -> impl Strategy<Value = Policy> {
        proptest::collection::vec(0.0f64..1.0, 6).prop_map(|raw| {
            let values: Vec<f64> = raw
                .chunks(2)
                .flat_map(|c| {
                    let s = c[0] + c[1] + 1e-9;
                    [c[0] / s, 1.0 - c[0] / s]
                })
                .collect();
            Policy::from_values(3, 1, 2, values).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metric_axioms(a in arb_policy(), b in arb_policy(), c in arb_policy()) {
            let ab = a.sup_distance(&b).unwrap();
            prop_assert_eq!(ab, b.sup_distance(&a).unwrap());
            prop_assert!(ab <= a.sup_distance(&c).unwrap() + c.sup_distance(&b).unwrap() + 1e-15);
        }

        #[test]
        fn flow_metric_axioms(p in proptest::collection::vec(0.0f64..1.0, 9)) {
            let flow = |i: usize| {
                let v: Vec<f64> = p[3 * i..3 * i + 3].iter().flat_map(|&x| [x, 1.0 - x]).collect();
                MeanFieldFlow::from_values(2, v).unwrap()
            };
            let (a, b, c) = (flow(0), flow(1), flow(2));
            let ab = a.sup_distance(&b).unwrap();
            prop_assert_eq!(ab, b.sup_distance(&a).unwrap());
            prop_assert!(ab <= a.sup_distance(&c).unwrap() + c.sup_distance(&b).unwrap() + 1e-15);
        }
    }
}
