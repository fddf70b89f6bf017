//! Peak heights, peak classification, and value propagation.
//!
//! Every reward state anchors a geometric peak. Heights solve the fixed
//! point `H_i = v_i + max_j γ^{d(i,j)} H_j`, where `d(i, j)` is the hop
//! distance between reward states and `d(i, i)` is the minimum cycle length
//! through reward state `i`. Since every distance is at least one step the
//! map is a γ-contraction with a unique fixed point, and the optimal value
//! at any state is `max_j γ^{δ(s, s_j)} H_j` — no tabular pass required.
//!
//! The argmax choices form a functional graph over the rewards whose cycles
//! and trees classify the peaks: a reward cycling on itself is a baseline
//! peak, a cycle through several rewards is a combined peak, and everything
//! else is a delta peak collected once en route to its parent.

use thiserror::Error;

use crate::dist::{reward_distance_table, DistError, RewardDistanceTable};
use crate::model::{MdpModel, RewardSpec, StateId};
use crate::oracle::ValueSource;
use crate::{tied, TIE_ABS_TOL, TIE_REL_TOL};

const PHASE1_TOL: f64 = 1e-13;
const MAX_PHASE1_SWEEPS: usize = 1_000_000;
const MAX_IMPROVEMENT_ROUNDS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PeakError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("model has no rewards to build peaks from")]
    NoRewards,
    #[error("height solve did not converge within {sweeps} sweeps")]
    NonConvergence { sweeps: usize },
    #[error("assignment covers {got} rewards, model has {expected}")]
    AssignmentLength { got: usize, expected: usize },
    #[error("assignment entry {index} points at reward {target}, model has {num_rewards}")]
    AssignmentTarget { index: usize, target: usize, num_rewards: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeakKind {
    /// A single reward worth cycling on forever; `period` is the minimum
    /// cycle length through its state.
    Baseline { period: u32 },
    /// Several rewards worth harvesting on one shared loop of length
    /// `period`.
    Combined { period: u32 },
    /// A reward collected once on the way to `parent` (a reward index),
    /// never returned to.
    Delta { parent: usize },
}

/// One peak: its member rewards (indexes into the model's reward list) and
/// how they are harvested. Combined members appear in cycle order starting
/// from the smallest index; baseline and delta peaks have one member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Peak {
    pub id: usize,
    pub kind: PeakKind,
    pub members: Vec<usize>,
}

impl Peak {
    /// Anchor state convention: the first member.
    pub fn anchor_reward(&self) -> usize {
        self.members[0]
    }
}

/// How a peak's value is spread across the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    /// What a greedy agent can actually bank: walk to the best member
    /// anchor and earn its height, `max_m γ^{δ(s, s_m)} H_m`.
    Achievable,
    /// The peak treated as one indivisible template,
    /// `Σ_m γ^{δ(s, s_m)} v_m / (1 - γ^L)` for combined peaks. This
    /// overestimates between anchors (each member is discounted by its own
    /// shortest path, which no single walk realises) and coincides with the
    /// achievable mode for baseline and delta peaks.
    Literal,
}

/// Solved peak decomposition: heights, argmax structure, classification,
/// and distance fields — everything needed to answer value queries without
/// a value table.
#[derive(Debug, Clone)]
pub struct PeakSet {
    gamma: f64,
    num_states: usize,
    rewards: Vec<RewardSpec>,
    table: RewardDistanceTable,
    heights: Vec<f64>,
    best_next: Vec<usize>,
    tie_sets: Vec<Vec<usize>>,
    peaks: Vec<Peak>,
    reward_peak: Vec<usize>,
    gamma_pow: Vec<f64>,
    sweeps: usize,
}

impl PeakSet {
    /// Solves the height fixed point for `model` and classifies the peaks.
    ///
    /// A synchronous pass warm-starts the argmax assignment; the assignment
    /// is then evaluated exactly in closed form and improved until no switch
    /// gains more than the tie tolerance, with one final pass moving every
    /// tied choice to its lowest reward index.
    pub fn solve(model: &MdpModel) -> Result<PeakSet, PeakError> {
        if model.rewards().is_empty() {
            return Err(PeakError::NoRewards);
        }
        let table = reward_distance_table(model)?;
        let values: Vec<f64> = model.rewards().iter().map(|r| r.value).collect();
        let gamma = model.gamma();

        let (assignment, phase1_sweeps) = warm_start(&table, &values, gamma)?;
        let (heights, assignment, rounds) =
            improve_to_fixed_point(&table, &values, gamma, assignment)?;
        Ok(Self::assemble(model, table, heights, assignment, phase1_sweeps + rounds))
    }

    /// Builds a peak set for an explicit argmax assignment without improving
    /// it. Heights are still evaluated exactly, so the result is internally
    /// consistent even when the assignment is not optimal — useful for
    /// studying a forced peak structure.
    pub fn new(model: &MdpModel, assignment: Vec<usize>) -> Result<PeakSet, PeakError> {
        let n = model.rewards().len();
        if n == 0 {
            return Err(PeakError::NoRewards);
        }
        if assignment.len() != n {
            return Err(PeakError::AssignmentLength { got: assignment.len(), expected: n });
        }
        if let Some((index, &target)) = assignment.iter().enumerate().find(|(_, &t)| t >= n) {
            return Err(PeakError::AssignmentTarget { index, target, num_rewards: n });
        }
        let table = reward_distance_table(model)?;
        let values: Vec<f64> = model.rewards().iter().map(|r| r.value).collect();
        let heights = evaluate_assignment(&table, &values, model.gamma(), &assignment);
        Ok(Self::assemble(model, table, heights, assignment, 0))
    }

    fn assemble(
        model: &MdpModel,
        table: RewardDistanceTable,
        heights: Vec<f64>,
        best_next: Vec<usize>,
        sweeps: usize,
    ) -> PeakSet {
        let gamma = model.gamma();
        let n = best_next.len();

        let tie_sets = (0..n)
            .map(|i| {
                let best = (0..n)
                    .map(|j| reach(&table, gamma, &heights, i, j))
                    .fold(f64::NEG_INFINITY, f64::max);
                let mut set: Vec<usize> = (0..n)
                    .filter(|&j| {
                        tied(reach(&table, gamma, &heights, i, j), best, TIE_REL_TOL, TIE_ABS_TOL)
                    })
                    .collect();
                if !set.contains(&best_next[i]) {
                    set.push(best_next[i]);
                    set.sort_unstable();
                }
                set
            })
            .collect();

        let (peaks, reward_peak) = classify(&table, &best_next);

        let mut max_pow = 0u32;
        for j in 0..n {
            let field = table.field(j);
            for s in 0..model.num_states() {
                max_pow = max_pow.max(field.get(StateId(s)));
            }
            for i in 0..n {
                max_pow = max_pow.max(table.delta_plus(i, j));
            }
        }
        let mut gamma_pow = Vec::with_capacity(max_pow as usize + 1);
        let mut p = 1.0;
        for _ in 0..=max_pow {
            gamma_pow.push(p);
            p *= gamma;
        }

        PeakSet {
            gamma,
            num_states: model.num_states(),
            rewards: model.rewards().to_vec(),
            table,
            heights,
            best_next,
            tie_sets,
            peaks,
            reward_peak,
            gamma_pow,
            sweeps,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn rewards(&self) -> &[RewardSpec] {
        &self.rewards
    }

    pub fn table(&self) -> &RewardDistanceTable {
        &self.table
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn height(&self, reward: usize) -> f64 {
        self.heights[reward]
    }

    /// Argmax target of each reward in the height fixed point; `i` maps to
    /// itself exactly when it cycles alone.
    pub fn best_next(&self) -> &[usize] {
        &self.best_next
    }

    /// All rewards within the tie tolerance of reward `i`'s best target,
    /// ascending. Always contains `best_next()[i]`.
    pub fn tie_set(&self, i: usize) -> &[usize] {
        &self.tie_sets[i]
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn peak(&self, id: usize) -> &Peak {
        &self.peaks[id]
    }

    pub fn peak_of_reward(&self, reward: usize) -> usize {
        self.reward_peak[reward]
    }

    /// Total synchronous sweeps plus improvement rounds the solve took.
    /// Depends only on the reward-to-reward distance structure, not on the
    /// number of states.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    fn gpow(&self, k: u32) -> f64 {
        self.gamma_pow.get(k as usize).copied().unwrap_or_else(|| self.gamma.powi(k as i32))
    }

    /// `γ^{δ(s, s_j)} H_j`: reward `j`'s height discounted out to `s`.
    pub fn reward_propagation(&self, j: usize, s: StateId) -> f64 {
        self.gpow(self.table.field(j).get(s)) * self.heights[j]
    }

    /// Value of one peak as seen from `s` under the chosen mode.
    pub fn propagate(&self, peak_id: usize, s: StateId, mode: PropagationMode) -> f64 {
        let peak = &self.peaks[peak_id];
        if let (PropagationMode::Literal, PeakKind::Combined { period }) = (mode, &peak.kind) {
            let denom = 1.0 - self.gpow(*period);
            return peak
                .members
                .iter()
                .map(|&m| self.gpow(self.table.field(m).get(s)) * self.rewards[m].value)
                .sum::<f64>()
                / denom;
        }
        peak.members
            .iter()
            .map(|&m| self.reward_propagation(m, s))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Optimal value at `s`: the pointwise maximum over all reward
    /// propagations.
    pub fn value_at(&self, s: StateId) -> f64 {
        (0..self.rewards.len())
            .map(|j| self.reward_propagation(j, s))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Worst normalised violation of `H_i = v_i + max_j γ^{d(i,j)} H_j`
    /// by the stored heights.
    pub fn bellman_residual(&self) -> f64 {
        let n = self.rewards.len();
        (0..n)
            .map(|i| {
                let best = (0..n)
                    .map(|j| reach(&self.table, self.gamma, &self.heights, i, j))
                    .fold(f64::NEG_INFINITY, f64::max);
                let residual = (self.heights[i] - (self.rewards[i].value + best)).abs();
                residual / self.heights[i].abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

impl ValueSource for PeakSet {
    fn state_value(&self, s: StateId) -> f64 {
        self.value_at(s)
    }
}

/// `γ^{d(i,j)} H_j` with the cycle-length diagonal.
fn reach(table: &RewardDistanceTable, gamma: f64, heights: &[f64], i: usize, j: usize) -> f64 {
    gamma.powi(table.delta_plus(i, j) as i32) * heights[j]
}

fn lowest_tied(
    table: &RewardDistanceTable,
    gamma: f64,
    heights: &[f64],
    i: usize,
    best: f64,
) -> usize {
    (0..heights.len())
        .find(|&j| tied(reach(table, gamma, heights, i, j), best, TIE_REL_TOL, TIE_ABS_TOL))
        .expect("the maximum is attained")
}

fn warm_start(
    table: &RewardDistanceTable,
    values: &[f64],
    gamma: f64,
) -> Result<(Vec<usize>, usize), PeakError> {
    let n = values.len();
    let mut heights = values.to_vec();
    let mut prev_arg: Vec<usize> = Vec::new();
    let mut stable = 0usize;
    for sweep in 1..=MAX_PHASE1_SWEEPS {
        let mut arg = vec![0usize; n];
        let mut change: f64 = 0.0;
        let mut next = vec![0.0; n];
        for i in 0..n {
            let (mut bj, mut bv) = (0usize, f64::NEG_INFINITY);
            for j in 0..n {
                let val = reach(table, gamma, &heights, i, j);
                if val > bv {
                    bv = val;
                    bj = j;
                }
            }
            arg[i] = bj;
            next[i] = values[i] + bv;
            change = change.max((next[i] - heights[i]).abs());
        }
        heights = next;
        if arg == prev_arg {
            stable += 1;
        } else {
            stable = 0;
        }
        prev_arg = arg;
        if change < PHASE1_TOL || stable >= 2 {
            return Ok((prev_arg, sweep));
        }
    }
    Err(PeakError::NonConvergence { sweeps: MAX_PHASE1_SWEEPS })
}

/// Exact policy iteration over argmax assignments. A switch must beat the
/// incumbent by more than the tie tolerance, so the height vector strictly
/// increases round to round and the loop terminates; a final canonical pass
/// then moves every choice to the lowest reward index within tolerance.
fn improve_to_fixed_point(
    table: &RewardDistanceTable,
    values: &[f64],
    gamma: f64,
    mut assignment: Vec<usize>,
) -> Result<(Vec<f64>, Vec<usize>, usize), PeakError> {
    let n = values.len();
    let mut heights = evaluate_assignment(table, values, gamma, &assignment);
    for round in 1..=MAX_IMPROVEMENT_ROUNDS {
        let mut switched = false;
        let mut next = assignment.clone();
        let mut canonical = vec![0usize; n];
        for i in 0..n {
            let best = (0..n)
                .map(|j| reach(table, gamma, &heights, i, j))
                .fold(f64::NEG_INFINITY, f64::max);
            let current = reach(table, gamma, &heights, i, assignment[i]);
            let lowest = lowest_tied(table, gamma, &heights, i, best);
            canonical[i] = lowest;
            if !tied(current, best, TIE_REL_TOL, TIE_ABS_TOL) {
                next[i] = lowest;
                switched = true;
            }
        }
        if switched {
            assignment = next;
        } else if canonical != assignment {
            assignment = canonical;
        } else {
            return Ok((heights, assignment, round));
        }
        heights = evaluate_assignment(table, values, gamma, &assignment);
    }
    Err(PeakError::NonConvergence { sweeps: MAX_IMPROVEMENT_ROUNDS })
}

/// Cycles of the functional graph `i -> next[i]`, each rotated to start at
/// its smallest member, sorted by that member.
fn find_cycles(next: &[usize]) -> Vec<Vec<usize>> {
    let n = next.len();
    let mut color = vec![0u8; n]; // 0 unseen, 1 on current walk, 2 finished
    let mut cycles = Vec::new();
    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut x = start;
        while color[x] == 0 {
            color[x] = 1;
            path.push(x);
            x = next[x];
        }
        if color[x] == 1 {
            let pos = path.iter().position(|&p| p == x).expect("x is on the walk");
            let mut cycle = path[pos..].to_vec();
            let min_pos = cycle
                .iter()
                .enumerate()
                .min_by_key(|&(_, &m)| m)
                .map(|(p, _)| p)
                .expect("cycle is nonempty");
            cycle.rotate_left(min_pos);
            cycles.push(cycle);
        }
        for p in path {
            color[p] = 2;
        }
    }
    cycles.sort_by_key(|c| c[0]);
    cycles
}

/// Exact heights for a fixed assignment. Cycle members get the closed-form
/// geometric sum over one tour of their cycle; tree rewards back-substitute
/// toward their cycle.
fn evaluate_assignment(
    table: &RewardDistanceTable,
    values: &[f64],
    gamma: f64,
    next: &[usize],
) -> Vec<f64> {
    let n = next.len();
    let mut heights = vec![0.0; n];
    let mut resolved = vec![false; n];

    for cycle in find_cycles(next) {
        let k = cycle.len();
        let hops: Vec<u32> =
            (0..k).map(|t| table.delta_plus(cycle[t], cycle[(t + 1) % k])).collect();
        let period: u32 = hops.iter().sum();
        let denom = 1.0 - gamma.powi(period as i32);
        for t in 0..k {
            let mut tour = 0.0;
            let mut prefix = 0u32;
            for u in 0..k {
                tour += gamma.powi(prefix as i32) * values[cycle[(t + u) % k]];
                prefix += hops[(t + u) % k];
            }
            heights[cycle[t]] = tour / denom;
            resolved[cycle[t]] = true;
        }
    }

    for start in 0..n {
        if resolved[start] {
            continue;
        }
        let mut chain = Vec::new();
        let mut x = start;
        while !resolved[x] {
            chain.push(x);
            x = next[x];
        }
        while let Some(i) = chain.pop() {
            let j = next[i];
            heights[i] = values[i] + gamma.powi(table.delta_plus(i, j) as i32) * heights[j];
            resolved[i] = true;
        }
    }
    heights
}

fn classify(table: &RewardDistanceTable, best_next: &[usize]) -> (Vec<Peak>, Vec<usize>) {
    let n = best_next.len();
    let cycles = find_cycles(best_next);
    let mut cycle_of = vec![usize::MAX; n];
    for (ci, cycle) in cycles.iter().enumerate() {
        for &m in cycle {
            cycle_of[m] = ci;
        }
    }

    let mut peaks = Vec::new();
    let mut reward_peak = vec![usize::MAX; n];
    for i in 0..n {
        if reward_peak[i] != usize::MAX {
            continue;
        }
        let id = peaks.len();
        if cycle_of[i] != usize::MAX {
            // i is the smallest member, so the whole cycle is new
            let cycle = &cycles[cycle_of[i]];
            let k = cycle.len();
            let period: u32 = (0..k).map(|t| table.delta_plus(cycle[t], cycle[(t + 1) % k])).sum();
            let kind =
                if k == 1 { PeakKind::Baseline { period } } else { PeakKind::Combined { period } };
            for &m in cycle {
                reward_peak[m] = id;
            }
            peaks.push(Peak { id, kind, members: cycle.clone() });
        } else {
            reward_peak[i] = id;
            peaks.push(Peak {
                id,
                kind: PeakKind::Delta { parent: best_next[i] },
                members: vec![i],
            });
        }
    }
    (peaks, reward_peak)
}
