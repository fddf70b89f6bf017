//! Independent tabular reference: synchronous value iteration over the full
//! state space and greedy trajectory simulation. The peak solver never calls
//! into this module; it exists so the two routes can be checked against each
//! other.

use thiserror::Error;

use crate::model::{ActionId, MdpModel, StateId};
use crate::{tied, GREEDY_ABS_TOL, GREEDY_REL_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("value iteration did not reach tolerance within {max_sweeps} sweeps (residual {residual:e})")]
    MaxSweepsExceeded { max_sweeps: usize, residual: f64 },
    #[error("value functions have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
}

/// Anything that assigns a value to every state can drive a greedy policy.
pub trait ValueSource {
    fn state_value(&self, s: StateId) -> f64;
}

/// Converged tabular value function.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    values: Vec<f64>,
    sweeps: usize,
    residual: f64,
}

impl ValueTable {
    pub fn get(&self, s: StateId) -> f64 {
        self.values[s.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Sup-norm change of the last sweep taken.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

impl ValueSource for ValueTable {
    fn state_value(&self, s: StateId) -> f64 {
        self.values[s.0]
    }
}

/// One synchronous backup: reward at the state plus the discounted best
/// successor value under the previous iterate.
pub fn bellman_sweep(model: &MdpModel, values: &[f64]) -> Vec<f64> {
    (0..model.num_states())
        .map(|s| {
            let best = model
                .actions(StateId(s))
                .iter()
                .map(|&t| values[t.0])
                .fold(f64::NEG_INFINITY, f64::max);
            model.reward_value(StateId(s)) + model.gamma() * best
        })
        .collect()
}

/// Iterates synchronous backups from the all-zero table until the sup-norm
/// residual drops strictly below `tol`. A tolerance of zero therefore never
/// converges and reports sweep exhaustion.
pub fn value_iteration(
    model: &MdpModel,
    tol: f64,
    max_sweeps: usize,
) -> Result<ValueTable, OracleError> {
    let mut values = vec![0.0; model.num_states()];
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        let next = bellman_sweep(model, &values);
        residual = values.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        values = next;
        if residual < tol {
            return Ok(ValueTable { values, sweeps: sweep, residual });
        }
    }
    Err(OracleError::MaxSweepsExceeded { max_sweeps, residual })
}

/// Lowest-indexed action whose successor value is within the greedy tie
/// tolerance of the best successor value.
pub fn greedy_action<V: ValueSource + ?Sized>(
    model: &MdpModel,
    source: &V,
    s: StateId,
) -> ActionId {
    let succs = model.actions(s);
    assert!(!succs.is_empty(), "state {s} has no actions");
    let best = succs.iter().map(|&t| source.state_value(t)).fold(f64::NEG_INFINITY, f64::max);
    let a = succs
        .iter()
        .position(|&t| tied(source.state_value(t), best, GREEDY_REL_TOL, GREEDY_ABS_TOL))
        .expect("max is attained");
    ActionId(a)
}

/// Greedy rollout summary. `counts` follows the model's reward order and
/// includes a collection at the start state itself; `cycle` is the repeated
/// state block in visit order once the walk closes on itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub visited: Vec<StateId>,
    pub counts: Vec<usize>,
    pub cycle: Option<Vec<StateId>>,
    pub steps: usize,
}

/// Rolls the greedy policy forward from `start`. The walk stops at `horizon`
/// steps, or earlier once it has revisited a state and then traversed one
/// full extra cycle (so the cycle shows up in `visited` in full).
pub fn simulate<V: ValueSource + ?Sized>(
    model: &MdpModel,
    source: &V,
    start: StateId,
    horizon: usize,
) -> Trajectory {
    let mut visited = vec![start];
    let mut counts = vec![0usize; model.rewards().len()];
    if let Some(i) = model.reward_index(start) {
        counts[i] += 1;
    }
    let mut first_seen = vec![usize::MAX; model.num_states()];
    first_seen[start.0] = 0;
    let mut cycle = None;
    let mut stop_at = horizon;

    while visited.len() <= stop_at {
        let here = *visited.last().unwrap();
        let next = model.successor(here, greedy_action(model, source, here));
        let t = visited.len();
        visited.push(next);
        if let Some(i) = model.reward_index(next) {
            counts[i] += 1;
        }
        if cycle.is_none() {
            if first_seen[next.0] != usize::MAX {
                let u = first_seen[next.0];
                cycle = Some(visited[u..t].to_vec());
                stop_at = stop_at.min(t + (t - u));
            } else {
                first_seen[next.0] = t;
            }
        }
    }

    let steps = visited.len() - 1;
    Trajectory { visited, counts, cycle, steps }
}

/// Largest pointwise gap between two value functions. The relative gap
/// divides by the larger magnitude at each state (taken as zero when both
/// entries are zero); `argmax` is the first state attaining the absolute
/// maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffReport {
    pub max_abs: f64,
    pub max_rel: f64,
    pub argmax: StateId,
}

pub fn compare_value_functions(a: &[f64], b: &[f64]) -> Result<DiffReport, OracleError> {
    if a.len() != b.len() {
        return Err(OracleError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let mut report = DiffReport { max_abs: 0.0, max_rel: 0.0, argmax: StateId(0) };
    for (s, (&x, &y)) in a.iter().zip(b).enumerate() {
        let abs = (x - y).abs();
        let denom = x.abs().max(y.abs());
        let rel = if denom > 0.0 { abs / denom } else { 0.0 };
        if abs > report.max_abs {
            report.max_abs = abs;
            report.argmax = StateId(s);
        }
        report.max_rel = report.max_rel.max(rel);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{grid_to_model, parse_scenario, Scenario};

    fn grid(text: &str) -> MdpModel {
        match parse_scenario(text).unwrap() {
            Scenario::Grid(g) => grid_to_model(&g),
            _ => panic!("expected grid"),
        }
    }

    #[test]
    fn two_state_loop_matches_geometric_sum() {
        let m = grid("grid 2 1\ngamma 0.9\nreward a 1 0 1\n");
        let vt = value_iteration(&m, 1e-13, 1_000_000).unwrap();
        // bouncing on the reward every second step: 1 / (1 - 0.81)
        assert!((vt.get(StateId(1)) - 5.263157894736842).abs() < 1e-10);
        assert!((vt.get(StateId(0)) - 0.9 * 5.263157894736842).abs() < 1e-10);
    }

    #[test]
    fn sweeps_increase_monotonically_from_zero() {
        let m = grid("grid 4 3\ngamma 0.9\nreward a 3 2 2\nreward b 0 0 0.5\n");
        let mut v = vec![0.0; m.num_states()];
        for _ in 0..50 {
            let next = bellman_sweep(&m, &v);
            for (a, b) in v.iter().zip(&next) {
                assert!(b >= a);
            }
            v = next;
        }
    }

    #[test]
    fn zero_tolerance_exhausts_sweeps() {
        let m = grid("grid 2 1\ngamma 0.9\nreward a 1 0 1\n");
        assert!(matches!(
            value_iteration(&m, 0.0, 200),
            Err(OracleError::MaxSweepsExceeded { max_sweeps: 200, .. })
        ));
    }

    #[test]
    fn corridor_rollout_settles_on_reward_cycle() {
        let m = grid("grid 4 1\ngamma 0.9\nreward a 3 0 1\n");
        let vt = value_iteration(&m, 1e-12, 1_000_000).unwrap();
        let tr = simulate(&m, &vt, StateId(0), 100);
        assert_eq!(
            tr.visited,
            vec![0, 1, 2, 3, 2, 3, 2].into_iter().map(StateId).collect::<Vec<_>>()
        );
        assert_eq!(tr.cycle, Some(vec![StateId(2), StateId(3)]));
        assert_eq!(tr.counts, vec![2]);
        assert_eq!(tr.steps, 6);
    }

    #[test]
    fn horizon_truncates_before_any_cycle() {
        let m = grid("grid 4 1\ngamma 0.9\nreward a 3 0 1\n");
        let vt = value_iteration(&m, 1e-12, 1_000_000).unwrap();
        let tr = simulate(&m, &vt, StateId(0), 3);
        assert_eq!(tr.visited.len(), 4);
        assert_eq!(tr.cycle, None);
        assert_eq!(tr.counts, vec![1]);
    }

    #[test]
    fn start_state_reward_is_counted() {
        let m = grid("grid 4 1\ngamma 0.9\nreward a 3 0 1\n");
        let vt = value_iteration(&m, 1e-12, 1_000_000).unwrap();
        let tr = simulate(&m, &vt, StateId(3), 4);
        assert_eq!(tr.counts, vec![3]);
    }

    #[test]
    fn diff_report_flags_first_worst_state() {
        let a = [1.0, 2.0, 3.0];
        let b = [1.0, 2.5, 3.5];
        let d = compare_value_functions(&a, &b).unwrap();
        assert_eq!(d.max_abs, 0.5);
        assert_eq!(d.argmax, StateId(1));
        assert!((d.max_rel - 0.2).abs() < 1e-15);
        assert!(compare_value_functions(&a, &b[..2]).is_err());
        let zero = compare_value_functions(&[0.0], &[0.0]).unwrap();
        assert_eq!(zero.max_rel, 0.0);
    }
}
