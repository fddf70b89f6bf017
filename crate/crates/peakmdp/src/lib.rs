//! Solver and explanation engine for deterministic, continuous MDPs with
//! positive state-based rewards on a strongly connected transition graph.
//!
//! For this MDP class the optimal value function is a pointwise maximum of
//! geometric "peaks" anchored at the reward states. Peak heights are the
//! fixed point of a small system over the reward graph alone, so solving is
//! independent of the state-space size except for a handful of breadth-first
//! distance passes. Once the peaks are known, the value at any state, the
//! rewards a greedy agent collects from it, the cycle it ends up in, and the
//! share each reward contributes to the decision can all be read off without
//! a tabular policy.
//!
//! - [`model`]: scenario parsing, grid construction, model validation
//! - [`dist`]: hop-distance fields and minimum cycle lengths
//! - [`peaks`]: peak heights, classification, value propagation
//! - [`explain`]: dominance, region maps, collected rewards, contributions, paths
//! - [`oracle`]: independent tabular value iteration and greedy simulation
//! - [`cli`]: command dispatch and deterministic report rendering

pub mod cli;
pub mod dist;
pub mod explain;
pub mod model;
pub mod oracle;
pub mod peaks;
mod scenario;

pub use dist::{
    distance_to, min_cycle_length, reward_distance_table, DistError, DistanceField,
    RewardDistanceTable,
};
pub use explain::{
    collected_rewards_rule, dominant_peak, event_chain, optimal_path, policy_action, region_map,
    relative_contributions, CollectionCount, CollectionItem, CollectionMethod, CollectionReport,
    Contribution, ContributionReport, DominanceMap, DominanceResult, ExplainError, PathEvent,
    PathTrace,
};
pub use model::{
    grid_to_model, parse_scenario, validate_model, ActionId, GraphReward, GraphScenario,
    GridReward, GridScenario, MdpModel, ParseError, RewardSpec, Scenario, StateId,
    ValidationReport, Violation, ViolationCode,
};
pub use oracle::{
    bellman_sweep, compare_value_functions, greedy_action, simulate, value_iteration, DiffReport,
    OracleError, Trajectory, ValueSource, ValueTable,
};
pub use peaks::{Peak, PeakError, PeakKind, PeakSet, PropagationMode};

/// Relative tolerance for treating two peak values as tied (best-next
/// selection, co-dominance).
pub const TIE_REL_TOL: f64 = 1e-12;
/// Absolute floor for peak-value ties.
pub const TIE_ABS_TOL: f64 = 1e-15;

/// Relative tolerance for greedy action selection over successor values.
/// Looser than the peak-tie tolerance so that trajectories driven by an
/// iteratively converged value table and by closed-form peak values break
/// ties identically.
pub const GREEDY_REL_TOL: f64 = 1e-9;
/// Absolute floor for greedy action selection.
pub const GREEDY_ABS_TOL: f64 = 1e-12;

pub(crate) fn tied(value: f64, max: f64, rel: f64, abs: f64) -> bool {
    max - value <= (rel * max.abs()).max(abs)
}
