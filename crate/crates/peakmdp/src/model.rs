//! Core model types: deterministic transition structure, positive state
//! rewards, and structural validation.

use std::fmt;

/// Dense state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Action index local to a state; actions are dense and ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A reward attached to a state. Values must be strictly positive for the
/// model to validate; the reward is collected on every visit to `state`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSpec {
    pub id: String,
    pub state: StateId,
    pub value: f64,
}

/// Deterministic MDP: per state an ordered list of successor states (one per
/// action), a sparse positive reward function, and a discount in (0, 1).
///
/// The struct is plain data and never panics on construction; structural
/// problems are reported by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    actions: Vec<Vec<StateId>>,
    rewards: Vec<RewardSpec>,
    reward_index: Vec<Option<usize>>,
    gamma: f64,
}

impl MdpModel {
    pub fn new(actions: Vec<Vec<StateId>>, rewards: Vec<RewardSpec>, gamma: f64) -> Self {
        let mut reward_index = vec![None; actions.len()];
        for (i, r) in rewards.iter().enumerate() {
            if r.state.0 < reward_index.len() && reward_index[r.state.0].is_none() {
                reward_index[r.state.0] = Some(i);
            }
        }
        MdpModel { actions, rewards, reward_index, gamma }
    }

    pub fn num_states(&self) -> usize {
        self.actions.len()
    }

    /// Ordered successor states of `s`; the action id is the position.
    pub fn actions(&self, s: StateId) -> &[StateId] {
        &self.actions[s.0]
    }

    pub fn successor(&self, s: StateId, a: ActionId) -> StateId {
        self.actions[s.0][a.0]
    }

    pub fn rewards(&self) -> &[RewardSpec] {
        &self.rewards
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Index into `rewards()` of the reward hosted at `s`, if any.
    pub fn reward_index(&self, s: StateId) -> Option<usize> {
        self.reward_index[s.0]
    }

    /// Reward collected on entering `s` (0 for unrewarded states).
    pub fn reward_value(&self, s: StateId) -> f64 {
        self.reward_index[s.0].map_or(0.0, |i| self.rewards[i].value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationCode {
    GammaOutOfRange,
    NoStates,
    NoActions,
    InvalidTransition,
    NoRewards,
    NonpositiveReward,
    DuplicateRewardState,
    NotStronglyConnected,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationCode::GammaOutOfRange => "GAMMA_OUT_OF_RANGE",
            ViolationCode::NoStates => "NO_STATES",
            ViolationCode::NoActions => "NO_ACTIONS",
            ViolationCode::InvalidTransition => "INVALID_TRANSITION",
            ViolationCode::NoRewards => "NO_REWARDS",
            ViolationCode::NonpositiveReward => "NONPOSITIVE_REWARD",
            ViolationCode::DuplicateRewardState => "DUPLICATE_REWARD_STATE",
            ViolationCode::NotStronglyConnected => "NOT_STRONGLY_CONNECTED",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: ViolationCode, message: String) {
        self.violations.push(Violation { code, message });
    }
}

/// Checks every structural requirement of the model class: discount in
/// (0, 1), at least one state and one action per state, transitions in
/// range, at least one reward, strictly positive finite reward values,
/// distinct reward states, and strong connectivity (one forward and one
/// reverse reachability pass from state 0).
pub fn validate_model(model: &MdpModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = model.num_states();

    if !(model.gamma() > 0.0 && model.gamma() < 1.0) {
        report.push(
            ViolationCode::GammaOutOfRange,
            format!("gamma must lie strictly between 0 and 1, got {}", model.gamma()),
        );
    }
    if n == 0 {
        report.push(ViolationCode::NoStates, "model has no states".to_string());
        return report;
    }
    for s in 0..n {
        let succs = model.actions(StateId(s));
        if succs.is_empty() {
            report.push(ViolationCode::NoActions, format!("state {s} has no actions"));
        }
        for (a, t) in succs.iter().enumerate() {
            if t.0 >= n {
                report.push(
                    ViolationCode::InvalidTransition,
                    format!("state {s} action {a} targets out-of-range state {}", t.0),
                );
            }
        }
    }
    if !report.violations.iter().any(|v| v.code == ViolationCode::InvalidTransition)
        && !strongly_connected(model)
    {
        report.push(
            ViolationCode::NotStronglyConnected,
            "transition graph is not strongly connected".to_string(),
        );
    }

    if model.rewards().is_empty() {
        report.push(ViolationCode::NoRewards, "model declares no rewards".to_string());
    }
    let mut seen_states: Vec<Option<&str>> = vec![None; n];
    for r in model.rewards() {
        if !(r.value.is_finite() && r.value > 0.0) {
            report.push(
                ViolationCode::NonpositiveReward,
                format!("reward '{}' has non-positive value {}", r.id, r.value),
            );
        }
        if r.state.0 < n {
            if let Some(prev) = seen_states[r.state.0] {
                report.push(
                    ViolationCode::DuplicateRewardState,
                    format!("rewards '{}' and '{}' share state {}", prev, r.id, r.state),
                );
            } else {
                seen_states[r.state.0] = Some(&r.id);
            }
        } else {
            report.push(
                ViolationCode::InvalidTransition,
                format!("reward '{}' sits on out-of-range state {}", r.id, r.state),
            );
        }
    }

    report
}

fn strongly_connected(model: &MdpModel) -> bool {
    let n = model.num_states();
    let mut forward = vec![false; n];
    let mut stack = vec![0usize];
    forward[0] = true;
    while let Some(s) = stack.pop() {
        for &t in model.actions(StateId(s)) {
            if !forward[t.0] {
                forward[t.0] = true;
                stack.push(t.0);
            }
        }
    }
    if forward.iter().any(|&v| !v) {
        return false;
    }

    let mut rev = vec![Vec::new(); n];
    for s in 0..n {
        for &t in model.actions(StateId(s)) {
            rev[t.0].push(s);
        }
    }
    let mut backward = vec![false; n];
    let mut stack = vec![0usize];
    backward[0] = true;
    while let Some(s) = stack.pop() {
        for &p in &rev[s] {
            if !backward[p] {
                backward[p] = true;
                stack.push(p);
            }
        }
    }
    backward.iter().all(|&v| v)
}

pub use crate::scenario::{
    parse_scenario, GraphReward, GraphScenario, GridReward, GridScenario, ParseError, Scenario,
};

/// Builds the four-connected grid world: cell `(x, y)` maps to state
/// `y * width + x`, actions are ordered Up (`y+1`), Down (`y-1`), Left
/// (`x-1`), Right (`x+1`) with out-of-bounds moves omitted and the rest
/// renumbered densely. There are no self-loops and no stay action.
pub fn grid_to_model(scenario: &GridScenario) -> MdpModel {
    let w = scenario.width;
    let h = scenario.height;
    let mut actions = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut succ = Vec::with_capacity(4);
            if y + 1 < h {
                succ.push(StateId((y + 1) * w + x));
            }
            if y > 0 {
                succ.push(StateId((y - 1) * w + x));
            }
            if x > 0 {
                succ.push(StateId(y * w + x - 1));
            }
            if x + 1 < w {
                succ.push(StateId(y * w + x + 1));
            }
            actions.push(succ);
        }
    }
    let rewards = scenario
        .rewards
        .iter()
        .map(|r| RewardSpec { id: r.id.clone(), state: StateId(r.y * w + r.x), value: r.value })
        .collect();
    MdpModel::new(actions, rewards, scenario.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor(width: usize) -> GridScenario {
        GridScenario {
            width,
            height: 1,
            gamma: 0.9,
            rewards: vec![GridReward { id: "a".into(), x: width - 1, y: 0, value: 1.0 }],
        }
    }

    #[test]
    fn grid_actions_are_ordered_and_in_bounds() {
        let sc = GridScenario {
            width: 3,
            height: 3,
            gamma: 0.9,
            rewards: vec![GridReward { id: "a".into(), x: 1, y: 1, value: 1.0 }],
        };
        let m = grid_to_model(&sc);
        assert_eq!(m.num_states(), 9);
        // center: Up, Down, Left, Right
        assert_eq!(m.actions(StateId(4)), &[StateId(7), StateId(1), StateId(3), StateId(5)]);
        // bottom-left corner: Up, Right
        assert_eq!(m.actions(StateId(0)), &[StateId(3), StateId(1)]);
        // top-right corner: Down, Left
        assert_eq!(m.actions(StateId(8)), &[StateId(5), StateId(7)]);
        assert!(validate_model(&m).ok());
    }

    #[test]
    fn two_by_one_grid_has_one_action_per_state() {
        let m = grid_to_model(&corridor(2));
        assert_eq!(m.actions(StateId(0)), &[StateId(1)]);
        assert_eq!(m.actions(StateId(1)), &[StateId(0)]);
        assert!(validate_model(&m).ok());
    }

    #[test]
    fn single_cell_grid_fails_validation() {
        let m = grid_to_model(&corridor(1));
        let report = validate_model(&m);
        assert!(!report.ok());
        assert!(report.violations.iter().any(|v| v.code == ViolationCode::NoActions));
    }

    #[test]
    fn disconnected_self_loop_graph_is_rejected() {
        let m = MdpModel::new(
            vec![vec![StateId(0)], vec![StateId(1)]],
            vec![RewardSpec { id: "a".into(), state: StateId(0), value: 1.0 }],
            0.9,
        );
        let report = validate_model(&m);
        assert!(report.violations.iter().any(|v| v.code == ViolationCode::NotStronglyConnected));
    }

    #[test]
    fn nonpositive_and_duplicate_rewards_are_reported() {
        let m = MdpModel::new(
            vec![vec![StateId(1)], vec![StateId(0)]],
            vec![
                RewardSpec { id: "a".into(), state: StateId(0), value: 0.0 },
                RewardSpec { id: "b".into(), state: StateId(0), value: 1.0 },
            ],
            0.9,
        );
        let report = validate_model(&m);
        assert!(report.violations.iter().any(|v| v.code == ViolationCode::NonpositiveReward));
        assert!(report.violations.iter().any(|v| v.code == ViolationCode::DuplicateRewardState));
    }

    #[test]
    fn missing_rewards_and_bad_gamma_are_reported() {
        let m = MdpModel::new(vec![vec![StateId(1)], vec![StateId(0)]], vec![], 1.0);
        let report = validate_model(&m);
        assert!(report.violations.iter().any(|v| v.code == ViolationCode::NoRewards));
        assert!(report.violations.iter().any(|v| v.code == ViolationCode::GammaOutOfRange));
    }

    #[test]
    fn reward_lookup_matches_specs() {
        let m = grid_to_model(&corridor(4));
        assert_eq!(m.reward_index(StateId(3)), Some(0));
        assert_eq!(m.reward_index(StateId(1)), None);
        assert_eq!(m.reward_value(StateId(3)), 1.0);
        assert_eq!(m.reward_value(StateId(0)), 0.0);
    }
}
