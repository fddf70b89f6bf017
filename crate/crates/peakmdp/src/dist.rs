//! Hop distances toward target states and minimum cycle lengths, computed
//! with breadth-first search over the reversed transition graph. These are
//! the only whole-state-space passes the solver needs.

use thiserror::Error;

use crate::model::{MdpModel, StateId};

const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("state {from} cannot reach state {target}")]
    Unreachable { from: StateId, target: StateId },
}

/// Minimum number of steps from every state to one fixed target.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    target: StateId,
    dist: Vec<u32>,
}

impl DistanceField {
    pub fn target(&self) -> StateId {
        self.target
    }

    pub fn get(&self, s: StateId) -> u32 {
        self.dist[s.0]
    }
}

fn reverse_adjacency(model: &MdpModel) -> Vec<Vec<u32>> {
    let mut rev = vec![Vec::new(); model.num_states()];
    for s in 0..model.num_states() {
        for &t in model.actions(StateId(s)) {
            rev[t.0].push(s as u32);
        }
    }
    rev
}

fn bfs_to_target(rev: &[Vec<u32>], target: StateId) -> Result<DistanceField, DistError> {
    let mut dist = vec![UNREACHED; rev.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[target.0] = 0;
    queue.push_back(target.0 as u32);
    while let Some(u) = queue.pop_front() {
        let next = dist[u as usize] + 1;
        for &p in &rev[u as usize] {
            if dist[p as usize] == UNREACHED {
                dist[p as usize] = next;
                queue.push_back(p);
            }
        }
    }
    if let Some(from) = dist.iter().position(|&d| d == UNREACHED) {
        return Err(DistError::Unreachable { from: StateId(from), target });
    }
    Ok(DistanceField { target, dist })
}

/// Distance field toward `target` (0 at the target itself).
pub fn distance_to(model: &MdpModel, target: StateId) -> Result<DistanceField, DistError> {
    bfs_to_target(&reverse_adjacency(model), target)
}

fn phi_from_field(model: &MdpModel, field: &DistanceField) -> Result<u32, DistError> {
    let s = field.target();
    model
        .actions(s)
        .iter()
        .map(|&t| 1 + field.get(t))
        .min()
        .ok_or(DistError::Unreachable { from: s, target: s })
}

/// Length of the shortest cycle through `s`: one step out plus the shortest
/// way back. Grids always give 2; directed graphs can give any length, and
/// a self-loop gives 1.
pub fn min_cycle_length(model: &MdpModel, s: StateId) -> Result<u32, DistError> {
    phi_from_field(model, &distance_to(model, s)?)
}

/// Distance fields toward every reward state plus the matrix the height
/// fixed point runs on: entry `(i, j)` is the distance from reward state
/// `i` to reward state `j`, with the diagonal replaced by the minimum cycle
/// length of reward state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardDistanceTable {
    fields: Vec<DistanceField>,
    delta_plus: Vec<Vec<u32>>,
    phi: Vec<u32>,
}

impl RewardDistanceTable {
    pub fn num_rewards(&self) -> usize {
        self.fields.len()
    }

    /// Field toward reward `j`'s state.
    pub fn field(&self, j: usize) -> &DistanceField {
        &self.fields[j]
    }

    pub fn fields(&self) -> &[DistanceField] {
        &self.fields
    }

    /// Distance from reward state `i` to reward state `j`; `(i, i)` is the
    /// minimum cycle length of reward state `i`.
    pub fn delta_plus(&self, i: usize, j: usize) -> u32 {
        self.delta_plus[i][j]
    }

    pub fn phi(&self, i: usize) -> u32 {
        self.phi[i]
    }
}

pub fn reward_distance_table(model: &MdpModel) -> Result<RewardDistanceTable, DistError> {
    let rev = reverse_adjacency(model);
    let fields = model
        .rewards()
        .iter()
        .map(|r| bfs_to_target(&rev, r.state))
        .collect::<Result<Vec<_>, _>>()?;
    let phi = fields.iter().map(|f| phi_from_field(model, f)).collect::<Result<Vec<_>, _>>()?;
    let delta_plus = (0..fields.len())
        .map(|i| {
            (0..fields.len())
                .map(|j| if i == j { phi[i] } else { fields[j].get(model.rewards()[i].state) })
                .collect()
        })
        .collect();
    Ok(RewardDistanceTable { fields, delta_plus, phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{grid_to_model, parse_scenario, Scenario};
    use proptest::prelude::*;

    fn grid(text: &str) -> MdpModel {
        match parse_scenario(text).unwrap() {
            Scenario::Grid(g) => grid_to_model(&g),
            _ => panic!("expected grid"),
        }
    }

    #[test]
    fn corridor_distances() {
        let m = grid("grid 4 1\ngamma 0.9\nreward a 3 0 1\n");
        let field = distance_to(&m, StateId(3)).unwrap();
        assert_eq!((0..4).map(|s| field.get(StateId(s))).collect::<Vec<_>>(), vec![3, 2, 1, 0]);
    }

    #[test]
    fn grid_min_cycle_length_is_two() {
        let m = grid("grid 3 3\ngamma 0.9\nreward a 0 0 1\n");
        for s in 0..9 {
            assert_eq!(min_cycle_length(&m, StateId(s)).unwrap(), 2);
        }
    }

    #[test]
    fn directed_cycle_distances_are_asymmetric() {
        let sc =
            parse_scenario("states 3\nedge 0 1\nedge 1 2\nedge 2 0\ngamma 0.9\nreward a 0 1\n")
                .unwrap();
        let m = sc.to_model();
        let field = distance_to(&m, StateId(0)).unwrap();
        assert_eq!(field.get(StateId(0)), 0);
        assert_eq!(field.get(StateId(1)), 2);
        assert_eq!(field.get(StateId(2)), 1);
        assert_eq!(min_cycle_length(&m, StateId(0)).unwrap(), 3);
    }

    #[test]
    fn self_loop_has_cycle_length_one() {
        let sc =
            parse_scenario("states 2\nedge 0 0\nedge 0 1\nedge 1 0\ngamma 0.9\nreward a 0 1\n")
                .unwrap();
        let m = sc.to_model();
        assert_eq!(min_cycle_length(&m, StateId(0)).unwrap(), 1);
        assert_eq!(min_cycle_length(&m, StateId(1)).unwrap(), 2);
    }

    #[test]
    fn unreachable_target_is_an_error() {
        let sc = parse_scenario("states 2\nedge 0 1\nedge 1 1\ngamma 0.9\nreward a 1 1\n").unwrap();
        let m = sc.to_model();
        assert_eq!(
            distance_to(&m, StateId(0)),
            Err(DistError::Unreachable { from: StateId(1), target: StateId(0) })
        );
    }

    #[test]
    fn table_diagonal_holds_cycle_lengths() {
        let m = grid("grid 5 1\ngamma 0.9\nreward a 0 0 1\nreward b 4 0 2\n");
        let table = reward_distance_table(&m).unwrap();
        assert_eq!(table.delta_plus(0, 0), 2);
        assert_eq!(table.delta_plus(1, 1), 2);
        assert_eq!(table.delta_plus(0, 1), 4);
        assert_eq!(table.delta_plus(1, 0), 4);
        assert_eq!(table.phi(0), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // On a grid every move is reversible, so crossing one edge changes the
        // distance to any fixed target by at most one; and from any state off
        // the target some action must decrease it by exactly one.
        #[test]
        fn grid_neighbours_differ_by_at_most_one(
            w in 1usize..8,
            h in 1usize..8,
            tx in 0usize..8,
            ty in 0usize..8,
        ) {
            prop_assume!(w * h >= 2);
            let (tx, ty) = (tx % w, ty % h);
            let m = grid(&format!("grid {w} {h}\ngamma 0.9\nreward a {tx} {ty} 1\n"));
            let target = StateId(ty * w + tx);
            let field = distance_to(&m, target).unwrap();
            for s in 0..m.num_states() {
                let d = field.get(StateId(s));
                let succ_dists: Vec<u32> = m.actions(StateId(s)).iter().map(|&t| field.get(t)).collect();
                for &sd in &succ_dists {
                    prop_assert!(sd.abs_diff(d) <= 1);
                }
                if d > 0 {
                    prop_assert!(succ_dists.iter().any(|&sd| sd == d - 1));
                }
            }
        }
    }
}
