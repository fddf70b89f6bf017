//! Explanation queries over a solved peak set: which peak a state belongs
//! to, which rewards a greedy agent collects from it and how often, how the
//! state's value splits across those rewards, and the concrete path taken.

use thiserror::Error;

use crate::model::{ActionId, MdpModel, StateId};
use crate::oracle::greedy_action;
use crate::peaks::{PeakKind, PeakSet, PropagationMode};
use crate::{tied, TIE_ABS_TOL, TIE_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ExplainError {
    #[error("greedy walk from state {start} found no cycle within {steps} steps")]
    CycleNotFound { start: StateId, steps: usize },
}

/// The cycle peak (baseline or combined — a greedy agent always settles on
/// a cycle, so delta peaks never compete here) with the highest propagated
/// value at the query state, together with every peak tied with it.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceResult {
    pub state: StateId,
    /// Lowest-id peak among the tied maximizers.
    pub peak: usize,
    /// The maximal propagated value itself.
    pub value: f64,
    /// All cycle peaks within the tie tolerance, ascending; contains `peak`.
    pub co_dominant: Vec<usize>,
}

pub fn dominant_peak(peaks: &PeakSet, s: StateId, mode: PropagationMode) -> DominanceResult {
    let cycle_peaks: Vec<usize> = peaks
        .peaks()
        .iter()
        .filter(|p| !matches!(p.kind, PeakKind::Delta { .. }))
        .map(|p| p.id)
        .collect();
    let value = cycle_peaks
        .iter()
        .map(|&id| peaks.propagate(id, s, mode))
        .fold(f64::NEG_INFINITY, f64::max);
    let co_dominant: Vec<usize> = cycle_peaks
        .into_iter()
        .filter(|&id| tied(peaks.propagate(id, s, mode), value, TIE_REL_TOL, TIE_ABS_TOL))
        .collect();
    DominanceResult { state: s, peak: co_dominant[0], value, co_dominant }
}

/// Per-state dominant peak (lowest tied id) and a co-dominance flag.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceMap {
    pub dominant: Vec<usize>,
    pub co_dominant: Vec<bool>,
}

pub fn region_map(peaks: &PeakSet, mode: PropagationMode) -> DominanceMap {
    let mut dominant = Vec::with_capacity(peaks.num_states());
    let mut co_dominant = Vec::with_capacity(peaks.num_states());
    for s in 0..peaks.num_states() {
        let result = dominant_peak(peaks, StateId(s), mode);
        dominant.push(result.peak);
        co_dominant.push(result.co_dominant.len() > 1);
    }
    DominanceMap { dominant, co_dominant }
}

/// How often one reward is collected under the greedy policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectionCount {
    Once,
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectionItem {
    pub reward: usize,
    pub peak: usize,
    pub count: CollectionCount,
}

/// Which of the two collected-reward derivations produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectionMethod {
    /// Closed-form threshold rule: the dominant cycle peak plus every delta
    /// peak propagating strictly above it.
    DominanceRule,
    /// Walk the argmax/parent pointers — ground truth for the greedy policy.
    EventChain,
}

/// Rewards collected from a query state. Exactly the rewards of
/// `dominant_peak` are marked infinite; every other entry is collected once.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionReport {
    pub state: StateId,
    pub dominant_peak: usize,
    pub method: CollectionMethod,
    pub entries: Vec<CollectionItem>,
}

impl CollectionReport {
    /// Order-insensitive comparison of the collected sets.
    pub fn same_collection(&self, other: &CollectionReport) -> bool {
        let key = |r: &CollectionReport| {
            let mut v: Vec<(usize, CollectionCount)> =
                r.entries.iter().map(|e| (e.reward, e.count)).collect();
            v.sort_unstable_by_key(|&(reward, count)| {
                (reward, matches!(count, CollectionCount::Infinite))
            });
            v
        };
        key(self) == key(other)
    }
}

/// Threshold rule: the dominant cycle peak's members recur forever, and any
/// delta peak whose propagated value at `s` strictly exceeds the dominant
/// value is collected once on the way. With at most one delta in play this
/// matches the greedy walk; chained deltas can disagree (see `event_chain`).
pub fn collected_rewards_rule(peaks: &PeakSet, s: StateId) -> CollectionReport {
    let dom = dominant_peak(peaks, s, PropagationMode::Achievable);
    let mut entries: Vec<CollectionItem> = peaks
        .peak(dom.peak)
        .members
        .iter()
        .map(|&reward| CollectionItem { reward, peak: dom.peak, count: CollectionCount::Infinite })
        .collect();
    for peak in peaks.peaks() {
        if matches!(peak.kind, PeakKind::Delta { .. })
            && peaks.propagate(peak.id, s, PropagationMode::Achievable) > dom.value
        {
            entries.push(CollectionItem {
                reward: peak.members[0],
                peak: peak.id,
                count: CollectionCount::Once,
            });
        }
    }
    CollectionReport {
        state: s,
        dominant_peak: dom.peak,
        method: CollectionMethod::DominanceRule,
        entries,
    }
}

/// Ground-truth collected set: start at the reward whose propagation wins at
/// `s` (lowest index on ties), hop parent pointers through delta peaks, and
/// finish on the cycle that chain enters. Cycle members are listed in cycle
/// order starting from the entry reward.
pub fn event_chain(peaks: &PeakSet, s: StateId) -> CollectionReport {
    let n = peaks.rewards().len();
    let best = (0..n).map(|j| peaks.reward_propagation(j, s)).fold(f64::NEG_INFINITY, f64::max);
    let mut j = (0..n)
        .find(|&j| tied(peaks.reward_propagation(j, s), best, TIE_REL_TOL, TIE_ABS_TOL))
        .expect("peak sets always carry at least one reward");

    let mut entries = Vec::new();
    for _ in 0..=n {
        let id = peaks.peak_of_reward(j);
        match peaks.peak(id).kind {
            PeakKind::Delta { parent } => {
                entries.push(CollectionItem { reward: j, peak: id, count: CollectionCount::Once });
                j = parent;
            }
            _ => {
                let members = &peaks.peak(id).members;
                let entry = members.iter().position(|&m| m == j).expect("j is a member");
                for t in 0..members.len() {
                    entries.push(CollectionItem {
                        reward: members[(entry + t) % members.len()],
                        peak: id,
                        count: CollectionCount::Infinite,
                    });
                }
                return CollectionReport {
                    state: s,
                    dominant_peak: id,
                    method: CollectionMethod::EventChain,
                    entries,
                };
            }
        }
    }
    unreachable!("parent pointers always reach a cycle within one hop per reward");
}

/// One collected peak's slice of the query state's value.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub peak: usize,
    /// Achievable propagation of the peak at the query state.
    pub value: f64,
    /// Gap down to the next collected peak (0 below the last).
    pub difference: f64,
    /// `difference` normalised by the state's value.
    pub ratio: f64,
}

/// Consecutive-difference split of the state value across collected peaks,
/// in decreasing value order. Ratios sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionReport {
    pub state: StateId,
    pub total: f64,
    pub entries: Vec<Contribution>,
}

pub fn relative_contributions(peaks: &PeakSet, s: StateId) -> ContributionReport {
    let chain = event_chain(peaks, s);
    let mut collected: Vec<usize> = Vec::new();
    for item in &chain.entries {
        if !collected.contains(&item.peak) {
            collected.push(item.peak);
        }
    }
    let mut valued: Vec<(usize, f64)> = collected
        .into_iter()
        .map(|id| (id, peaks.propagate(id, s, PropagationMode::Achievable)))
        .collect();
    valued.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    let total = peaks.value_at(s);
    let entries = valued
        .iter()
        .enumerate()
        .map(|(i, &(peak, value))| {
            let below = valued.get(i + 1).map_or(0.0, |&(_, v)| v);
            let difference = value - below;
            Contribution { peak, value, difference, ratio: difference / total }
        })
        .collect();
    ContributionReport { state: s, total, entries }
}

/// One-step greedy policy driven by peak values: the lowest-numbered action
/// whose successor value is maximal. The current state's reward is collected
/// either way, so only successor values matter.
pub fn policy_action(model: &MdpModel, peaks: &PeakSet, s: StateId) -> ActionId {
    greedy_action(model, peaks, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathEvent {
    pub step: usize,
    pub reward: usize,
}

/// Greedy walk from a query state into and once around its final cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    /// The walk itself, ending one full cycle after the first revisit.
    pub states: Vec<StateId>,
    /// First index attaining the maximum value along the walk — the end of
    /// the strictly improving "hill climb" prefix.
    pub k_max: usize,
    /// Index where the final cycle begins.
    pub cycle_start: usize,
    /// Cycle length in steps.
    pub period: usize,
    /// Every reward collection, step 0 included.
    pub events: Vec<PathEvent>,
}

pub fn optimal_path(
    model: &MdpModel,
    peaks: &PeakSet,
    start: StateId,
) -> Result<PathTrace, ExplainError> {
    let guard = 4 * model.num_states();
    let mut states = vec![start];
    let mut first_seen = vec![usize::MAX; model.num_states()];
    first_seen[start.0] = 0;
    let mut cycle_start = 0;
    let mut period = 0;
    let mut stop_at = usize::MAX;

    loop {
        let here = *states.last().unwrap();
        let next = model.successor(here, policy_action(model, peaks, here));
        let t = states.len();
        states.push(next);
        if period == 0 {
            if first_seen[next.0] != usize::MAX {
                cycle_start = first_seen[next.0];
                period = t - cycle_start;
                stop_at = t + period;
            } else {
                first_seen[next.0] = t;
                if t >= guard {
                    return Err(ExplainError::CycleNotFound { start, steps: t });
                }
            }
        }
        if period > 0 && t >= stop_at {
            break;
        }
    }

    let values: Vec<f64> = states.iter().map(|&s| peaks.value_at(s)).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k_max = values
        .iter()
        .position(|&v| tied(v, max, TIE_REL_TOL, TIE_ABS_TOL))
        .expect("max is attained");

    let events = states
        .iter()
        .enumerate()
        .filter_map(|(step, &s)| model.reward_index(s).map(|reward| PathEvent { step, reward }))
        .collect();

    Ok(PathTrace { states, k_max, cycle_start, period, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_scenario;
    use crate::oracle::simulate;

    fn solved(text: &str) -> (MdpModel, PeakSet) {
        let m = parse_scenario(text).unwrap().to_model();
        let ps = PeakSet::solve(&m).unwrap();
        (m, ps)
    }

    const TWO_REWARD_CORRIDOR: &str = "grid 10 1\ngamma 0.9\nreward a 3 0 1\nreward b 9 0 5\n";

    #[test]
    fn dominance_ignores_delta_peaks() {
        let (_, ps) = solved(TWO_REWARD_CORRIDOR);
        // at a's own anchor the delta spike is the highest value, but the
        // dominant peak is still the cycle b settles on
        let dom = dominant_peak(&ps, StateId(3), PropagationMode::Achievable);
        assert_eq!(dom.peak, 1);
        assert_eq!(dom.co_dominant, vec![1]);
        assert!((dom.value - 13.98528947368421).abs() < 1e-11);
        assert!(ps.value_at(StateId(3)) > dom.value);
    }

    #[test]
    fn rule_and_chain_agree_on_single_delta_corridor() {
        let (_, ps) = solved(TWO_REWARD_CORRIDOR);
        let rule = collected_rewards_rule(&ps, StateId(0));
        let chain = event_chain(&ps, StateId(0));

        assert_eq!(rule.method, CollectionMethod::DominanceRule);
        assert_eq!(rule.dominant_peak, 1);
        assert_eq!(rule.entries.len(), 2);
        assert_eq!(
            rule.entries[0],
            CollectionItem { reward: 1, peak: 1, count: CollectionCount::Infinite }
        );
        assert_eq!(
            rule.entries[1],
            CollectionItem { reward: 0, peak: 0, count: CollectionCount::Once }
        );

        assert_eq!(chain.method, CollectionMethod::EventChain);
        assert_eq!(
            chain.entries[0],
            CollectionItem { reward: 0, peak: 0, count: CollectionCount::Once }
        );
        assert_eq!(
            chain.entries[1],
            CollectionItem { reward: 1, peak: 1, count: CollectionCount::Infinite }
        );
        assert!(rule.same_collection(&chain));
    }

    #[test]
    fn chain_starts_at_a_delta_anchor() {
        let (_, ps) = solved(TWO_REWARD_CORRIDOR);
        let chain = event_chain(&ps, StateId(3));
        assert_eq!(chain.entries[0].reward, 0);
        assert_eq!(chain.dominant_peak, 1);
    }

    #[test]
    fn contribution_split_on_the_corridor() {
        let (_, ps) = solved(TWO_REWARD_CORRIDOR);
        let report = relative_contributions(&ps, StateId(3));
        assert!((report.total - 14.98528947368421).abs() < 1e-11);
        assert_eq!(report.entries.len(), 2);
        assert_eq!(report.entries[0].peak, 0);
        assert_eq!(report.entries[1].peak, 1);
        assert!((report.entries[0].difference - 1.0).abs() < 1e-9);
        assert!((report.entries[1].difference - 13.98528947368421).abs() < 1e-9);
        let sum: f64 = report.entries.iter().map(|e| e.ratio).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(report.entries[0].ratio < report.entries[1].ratio);
    }

    #[test]
    fn single_collected_peak_contributes_exactly_one() {
        let (_, ps) = solved("grid 5 1\ngamma 0.9\nreward a 2 0 1\n");
        for s in 0..5 {
            let report = relative_contributions(&ps, StateId(s));
            assert_eq!(report.entries.len(), 1);
            assert_eq!(report.entries[0].ratio, 1.0);
        }
    }

    #[test]
    fn path_climbs_the_corridor_and_rounds_the_cycle() {
        let (m, ps) = solved(TWO_REWARD_CORRIDOR);
        let trace = optimal_path(&m, &ps, StateId(0)).unwrap();
        let expect: Vec<StateId> =
            vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 8, 9, 8].into_iter().map(StateId).collect();
        assert_eq!(trace.states, expect);
        assert_eq!(trace.k_max, 9);
        assert_eq!(trace.cycle_start, 8);
        assert_eq!(trace.period, 2);
        assert_eq!(
            trace.events,
            vec![
                PathEvent { step: 3, reward: 0 },
                PathEvent { step: 9, reward: 1 },
                PathEvent { step: 11, reward: 1 }
            ]
        );
    }

    #[test]
    fn path_from_inside_the_cycle_is_flat() {
        let (m, ps) = solved(TWO_REWARD_CORRIDOR);
        let at_anchor = optimal_path(&m, &ps, StateId(9)).unwrap();
        assert_eq!(at_anchor.k_max, 0);
        assert_eq!(at_anchor.period, 2);
        let beside = optimal_path(&m, &ps, StateId(8)).unwrap();
        assert_eq!(beside.k_max, 1);
        assert_eq!(beside.states[1], StateId(9));
    }

    #[test]
    fn policy_leaves_the_delta_anchor_toward_the_cycle() {
        let (m, ps) = solved(TWO_REWARD_CORRIDOR);
        // interior corridor actions are [Left, Right]
        assert_eq!(policy_action(&m, &ps, StateId(3)), ActionId(1));
        assert_eq!(policy_action(&m, &ps, StateId(1)), ActionId(1));
        assert_eq!(policy_action(&m, &ps, StateId(9)), ActionId(0));
    }

    #[test]
    fn symmetric_corridor_is_co_dominant_at_the_center() {
        let (m, ps) = solved("grid 15 1\ngamma 0.9\nreward a 1 0 2\nreward b 13 0 2\n");
        let center = StateId(7);
        let dom = dominant_peak(&ps, center, PropagationMode::Achievable);
        assert_eq!(dom.co_dominant, vec![0, 1]);
        assert_eq!(dom.peak, 0);
        // ties break to the lowest action, so the walk turns left toward a
        assert_eq!(policy_action(&m, &ps, center), ActionId(0));
        let trace = optimal_path(&m, &ps, center).unwrap();
        assert!(trace.states.contains(&StateId(1)));
        assert!(!trace.states.contains(&StateId(13)));
        let map = region_map(&ps, PropagationMode::Achievable);
        assert!(map.co_dominant[7]);
        assert_eq!(map.co_dominant.iter().filter(|&&c| c).count(), 1);
    }

    #[test]
    fn region_boundary_sits_at_the_curve_crossover() {
        let (_, ps) = solved("grid 20 1\ngamma 0.9\nreward a 2 0 4\nreward b 17 0 5\n");
        // 0.9^{s-2}·(4/0.19) and 0.9^{17-s}·(5/0.19) cross at s ≈ 8.44
        let map = region_map(&ps, PropagationMode::Achievable);
        for s in 0..=8 {
            assert_eq!(map.dominant[s], 0, "state {s}");
        }
        for s in 9..20 {
            assert_eq!(map.dominant[s], 1, "state {s}");
        }
        assert!(map.co_dominant.iter().all(|&c| !c));
    }

    #[test]
    fn high_delta_is_collected_and_low_delta_is_skipped() {
        // one far-off cycle reward, a worthwhile detour delta in the middle,
        // and a weak delta behind the query state
        let (_, ps) =
            solved("grid 13 1\ngamma 0.9\nreward k 0 0 0.5\nreward d 4 0 0.9\nreward i 12 0 1.9\n");
        assert!((ps.height(2) - 10.0).abs() < 1e-12);
        assert!((ps.height(1) - 5.2046721).abs() < 1e-10);
        assert_eq!(ps.best_next(), &[1, 2, 2]);

        let s = StateId(2);
        let dom = dominant_peak(&ps, s, PropagationMode::Achievable);
        assert_eq!(dom.peak, 2);
        assert!((dom.value - 3.4867844010000004).abs() < 1e-10);

        let rule = collected_rewards_rule(&ps, s);
        let rewards: Vec<(usize, CollectionCount)> =
            rule.entries.iter().map(|e| (e.reward, e.count)).collect();
        assert_eq!(rewards, vec![(2, CollectionCount::Infinite), (1, CollectionCount::Once)]);
        assert!(rule.same_collection(&event_chain(&ps, s)));

        // from k's own anchor both deltas are on the way
        let chain0 = event_chain(&ps, StateId(0));
        let order: Vec<usize> = chain0.entries.iter().map(|e| e.reward).collect();
        assert_eq!(order, vec![0, 1, 2]);
        assert!(collected_rewards_rule(&ps, StateId(0)).same_collection(&chain0));
    }

    #[test]
    fn chained_deltas_can_break_the_threshold_rule() {
        // a strong standalone cycle on the left and a delta→delta→cycle
        // ladder on the right; queried between them, the propagated maximum
        // points left while the greedy walk (and the event chain) go right
        let (m, ps) = solved(
            "grid 12 1\ngamma 0.9\nreward q 0 0 28.5\nreward d1 7 0 5\nreward d2 9 0 15\nreward b 11 0 19\n",
        );
        assert!((ps.height(0) - 150.0).abs() < 1e-9);
        assert!((ps.height(1) - 82.76).abs() < 1e-9);
        assert!((ps.height(2) - 96.0).abs() < 1e-9);
        assert!((ps.height(3) - 100.0).abs() < 1e-9);
        assert_eq!(ps.best_next(), &[0, 2, 3, 3]);

        let s = StateId(7);
        let dom = dominant_peak(&ps, s, PropagationMode::Achievable);
        assert_eq!(dom.peak, 0, "the standalone cycle still propagates strongest");

        let chain = event_chain(&ps, s);
        assert_eq!(chain.dominant_peak, 3, "but the walk lands on the right-hand cycle");
        let order: Vec<usize> = chain.entries.iter().map(|e| e.reward).collect();
        assert_eq!(order, vec![1, 2, 3]);

        let rule = collected_rewards_rule(&ps, s);
        assert!(
            !rule.same_collection(&chain),
            "threshold rule over-counts on chained deltas: {:?} vs {:?}",
            rule.entries,
            chain.entries
        );

        // the chain, not the rule, matches what actually happens
        let tr = simulate(&m, &ps, s, 4 * m.num_states());
        assert_eq!(tr.counts[1], 1);
        assert_eq!(tr.counts[2], 1);
        assert!(tr.counts[3] >= 2);
        assert_eq!(tr.counts[0], 0);

        // and dominance flips along that walk, so persistence fails here
        let next = dominant_peak(&ps, StateId(8), PropagationMode::Achievable);
        assert_eq!(next.peak, 3);
    }

    #[test]
    fn directed_graph_chain_follows_edge_distances() {
        let (m, ps) = solved(
            "states 5\nedge 0 1\nedge 1 2\nedge 2 3\nedge 3 4\nedge 4 0\ngamma 0.9\nreward a 1 0.2\nreward b 3 3\n",
        );
        // the only cycle is the full ring; both rewards ride it
        assert_eq!(ps.peaks().len(), 1);
        let chain = event_chain(&ps, StateId(0));
        assert!(chain.entries.iter().all(|e| e.count == CollectionCount::Infinite));
        let trace = optimal_path(&m, &ps, StateId(0)).unwrap();
        assert_eq!(trace.period, 5);
    }
}
