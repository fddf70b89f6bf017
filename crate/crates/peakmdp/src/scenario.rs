//! Text scenario format: a grid form and a general-graph form, both
//! line-oriented with `#` comments. Parsing is strict — unknown directives,
//! out-of-order sections, and out-of-range values are rejected with the
//! offending line number.

use thiserror::Error;

use crate::model::{grid_to_model, MdpModel, RewardSpec, StateId};

#[derive(Debug, Clone, PartialEq)]
pub struct GridReward {
    pub id: String,
    pub x: usize,
    pub y: usize,
    pub value: f64,
}

/// `grid W H` / `gamma G` / `reward ID X Y V`* with four-connected moves.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScenario {
    pub width: usize,
    pub height: usize,
    pub gamma: f64,
    pub rewards: Vec<GridReward>,
}

impl GridScenario {
    pub fn index(&self, x: usize, y: usize) -> StateId {
        StateId(y * self.width + x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphReward {
    pub id: String,
    pub state: usize,
    pub value: f64,
}

/// `states N` / `edge FROM TO`* / `gamma G` / `reward ID S V`*. Action order
/// at a state follows edge order in the file; self-loops are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphScenario {
    pub num_states: usize,
    pub edges: Vec<(usize, usize)>,
    pub gamma: f64,
    pub rewards: Vec<GraphReward>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Grid(GridScenario),
    Graph(GraphScenario),
}

impl Scenario {
    pub fn to_model(&self) -> MdpModel {
        match self {
            Scenario::Grid(g) => grid_to_model(g),
            Scenario::Graph(g) => {
                let mut actions = vec![Vec::new(); g.num_states];
                for &(from, to) in &g.edges {
                    actions[from].push(StateId(to));
                }
                let rewards = g
                    .rewards
                    .iter()
                    .map(|r| RewardSpec {
                        id: r.id.clone(),
                        state: StateId(r.state),
                        value: r.value,
                    })
                    .collect();
                MdpModel::new(actions, rewards, g.gamma)
            }
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Scenario::Grid(g) => g.gamma,
            Scenario::Graph(g) => g.gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unexpected end of input: missing {what}")]
    Missing { what: &'static str },
    #[error("line {line}: gamma must lie strictly between 0 and 1, got {value}")]
    GammaOutOfRange { line: usize, value: f64 },
    #[error("line {line}: reward '{id}' must have a positive finite value, got {value}")]
    NonPositiveValue { line: usize, id: String, value: f64 },
    #[error("line {line}: reward '{id}' at ({x}, {y}) lies outside the {width}x{height} grid")]
    RewardOutOfBounds { line: usize, id: String, x: usize, y: usize, width: usize, height: usize },
    #[error("line {line}: state {state} out of range for {num_states} states")]
    StateOutOfRange { line: usize, state: usize, num_states: usize },
    #[error("line {line}: reward '{id}' repeats an already rewarded cell")]
    DuplicateRewardCell { line: usize, id: String },
    #[error("line {line}: reward '{id}' repeats an already rewarded state")]
    DuplicateRewardState { line: usize, id: String },
    #[error("line {line}: duplicate reward id '{id}'")]
    DuplicateRewardId { line: usize, id: String },
}

struct Lines<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .filter_map(|(i, raw)| {
                let significant = raw.split('#').next().unwrap_or("");
                let tokens: Vec<&str> = significant.split_whitespace().collect();
                if tokens.is_empty() {
                    None
                } else {
                    Some((i + 1, tokens))
                }
            })
            .collect();
        Lines { lines, pos: 0 }
    }

    fn peek(&self) -> Option<&(usize, Vec<&'a str>)> {
        self.lines.get(self.pos)
    }

    fn next(&mut self) -> Option<&(usize, Vec<&'a str>)> {
        let item = self.lines.get(self.pos);
        if item.is_some() {
            self.pos += 1;
        }
        item
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.parse().map_err(|_| {
        syntax(line, format!("expected {what} to be a non-negative integer, got '{tok}'"))
    })
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    tok.parse().map_err(|_| syntax(line, format!("expected {what} to be a number, got '{tok}'")))
}

fn parse_gamma(lines: &mut Lines) -> Result<f64, ParseError> {
    let (line, tokens) = match lines.next() {
        Some(l) => (l.0, l.1.clone()),
        None => return Err(ParseError::Missing { what: "gamma line" }),
    };
    if tokens[0] != "gamma" {
        return Err(syntax(line, format!("expected 'gamma', got '{}'", tokens[0])));
    }
    if tokens.len() != 2 {
        return Err(syntax(line, "gamma line takes exactly one value"));
    }
    let gamma = parse_f64(tokens[1], line, "gamma")?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ParseError::GammaOutOfRange { line, value: gamma });
    }
    Ok(gamma)
}

fn check_reward_id(id: &str, line: usize, seen: &mut Vec<String>) -> Result<(), ParseError> {
    if seen.iter().any(|s| s == id) {
        return Err(ParseError::DuplicateRewardId { line, id: id.to_string() });
    }
    seen.push(id.to_string());
    Ok(())
}

/// Parses either scenario form, dispatching on the first significant line
/// (`grid` or `states`).
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut lines = Lines::new(text);
    let (line, tokens) = match lines.peek() {
        Some(l) => (l.0, l.1.clone()),
        None => return Err(ParseError::Missing { what: "scenario header" }),
    };
    match tokens[0] {
        "grid" => parse_grid(&mut lines).map(Scenario::Grid),
        "states" => parse_graph(&mut lines).map(Scenario::Graph),
        other => Err(syntax(line, format!("expected 'grid' or 'states' header, got '{other}'"))),
    }
}

fn parse_grid(lines: &mut Lines) -> Result<GridScenario, ParseError> {
    let (line, tokens) = {
        let l = lines.next().expect("header peeked");
        (l.0, l.1.clone())
    };
    if tokens.len() != 3 {
        return Err(syntax(line, "grid header takes exactly two dimensions"));
    }
    let width = parse_usize(tokens[1], line, "grid width")?;
    let height = parse_usize(tokens[2], line, "grid height")?;
    if width == 0 || height == 0 {
        return Err(syntax(line, "grid dimensions must be positive"));
    }

    let gamma = parse_gamma(lines)?;

    let mut rewards: Vec<GridReward> = Vec::new();
    let mut ids = Vec::new();
    let mut cells = vec![false; width * height];
    while let Some((line, tokens)) = lines.next().map(|l| (l.0, l.1.clone())) {
        if tokens[0] != "reward" {
            return Err(syntax(line, format!("expected 'reward' line, got '{}'", tokens[0])));
        }
        if tokens.len() != 5 {
            return Err(syntax(line, "grid reward line takes id, x, y, value"));
        }
        let id = tokens[1].to_string();
        check_reward_id(&id, line, &mut ids)?;
        let x = parse_usize(tokens[2], line, "reward x")?;
        let y = parse_usize(tokens[3], line, "reward y")?;
        if x >= width || y >= height {
            return Err(ParseError::RewardOutOfBounds { line, id, x, y, width, height });
        }
        let value = parse_f64(tokens[4], line, "reward value")?;
        if !(value.is_finite() && value > 0.0) {
            return Err(ParseError::NonPositiveValue { line, id, value });
        }
        if cells[y * width + x] {
            return Err(ParseError::DuplicateRewardCell { line, id });
        }
        cells[y * width + x] = true;
        rewards.push(GridReward { id, x, y, value });
    }
    Ok(GridScenario { width, height, gamma, rewards })
}

fn parse_graph(lines: &mut Lines) -> Result<GraphScenario, ParseError> {
    let (line, tokens) = {
        let l = lines.next().expect("header peeked");
        (l.0, l.1.clone())
    };
    if tokens.len() != 2 {
        return Err(syntax(line, "states header takes exactly one count"));
    }
    let num_states = parse_usize(tokens[1], line, "state count")?;
    if num_states == 0 {
        return Err(syntax(line, "state count must be positive"));
    }

    let mut edges = Vec::new();
    while lines.peek().is_some_and(|(_, t)| t[0] == "edge") {
        let (line, tokens) = {
            let l = lines.next().expect("peeked");
            (l.0, l.1.clone())
        };
        if tokens.len() != 3 {
            return Err(syntax(line, "edge line takes from and to states"));
        }
        let from = parse_usize(tokens[1], line, "edge source")?;
        let to = parse_usize(tokens[2], line, "edge target")?;
        for s in [from, to] {
            if s >= num_states {
                return Err(ParseError::StateOutOfRange { line, state: s, num_states });
            }
        }
        edges.push((from, to));
    }

    let gamma = parse_gamma(lines)?;

    let mut rewards: Vec<GraphReward> = Vec::new();
    let mut ids = Vec::new();
    let mut states = vec![false; num_states];
    while let Some((line, tokens)) = lines.next().map(|l| (l.0, l.1.clone())) {
        if tokens[0] != "reward" {
            return Err(syntax(line, format!("expected 'reward' line, got '{}'", tokens[0])));
        }
        if tokens.len() != 4 {
            return Err(syntax(line, "graph reward line takes id, state, value"));
        }
        let id = tokens[1].to_string();
        check_reward_id(&id, line, &mut ids)?;
        let state = parse_usize(tokens[2], line, "reward state")?;
        if state >= num_states {
            return Err(ParseError::StateOutOfRange { line, state, num_states });
        }
        let value = parse_f64(tokens[3], line, "reward value")?;
        if !(value.is_finite() && value > 0.0) {
            return Err(ParseError::NonPositiveValue { line, id, value });
        }
        if states[state] {
            return Err(ParseError::DuplicateRewardState { line, id });
        }
        states[state] = true;
        rewards.push(GraphReward { id, state, value });
    }
    Ok(GraphScenario { num_states, edges, gamma, rewards })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid_with_comments_and_blanks() {
        let text =
            "# demo\n\ngrid 3 2   # two rows\ngamma 0.9\nreward a 0 0 1.5\nreward b 2 1 0.25\n";
        let sc = match parse_scenario(text).unwrap() {
            Scenario::Grid(g) => g,
            _ => panic!("expected grid"),
        };
        assert_eq!((sc.width, sc.height), (3, 2));
        assert_eq!(sc.gamma, 0.9);
        assert_eq!(sc.rewards.len(), 2);
        assert_eq!(sc.rewards[1], GridReward { id: "b".into(), x: 2, y: 1, value: 0.25 });
        assert_eq!(sc.index(2, 1), StateId(5));
    }

    #[test]
    fn parses_graph_with_self_loop_and_file_ordered_actions() {
        let text = "states 3\nedge 0 1\nedge 0 0\nedge 1 2\nedge 2 0\ngamma 0.5\nreward r 2 4.0\n";
        let sc = parse_scenario(text).unwrap();
        let model = sc.to_model();
        assert_eq!(model.actions(StateId(0)), &[StateId(1), StateId(0)]);
        assert_eq!(model.reward_value(StateId(2)), 4.0);
    }

    #[test]
    fn rejects_unknown_directive_with_line_number() {
        let err = parse_scenario("grid 2 2\ngamma 0.9\nbonus a 0 0 1\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax { line: 3, msg: "expected 'reward' line, got 'bonus'".into() }
        );
    }

    #[test]
    fn rejects_zero_dimensions_and_zero_states() {
        assert!(matches!(
            parse_scenario("grid 0 3\ngamma 0.9\n"),
            Err(ParseError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_scenario("states 0\ngamma 0.9\n"),
            Err(ParseError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_gamma_at_one() {
        let err = parse_scenario("grid 2 1\ngamma 1.0\n").unwrap_err();
        assert_eq!(err, ParseError::GammaOutOfRange { line: 2, value: 1.0 });
    }

    #[test]
    fn rejects_misordered_graph_sections() {
        let err = parse_scenario("states 2\ngamma 0.9\nedge 0 1\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, .. }));
    }

    #[test]
    fn rejects_out_of_bounds_and_duplicate_rewards() {
        let base = "grid 2 2\ngamma 0.9\n";
        assert!(matches!(
            parse_scenario(&format!("{base}reward a 2 0 1\n")),
            Err(ParseError::RewardOutOfBounds { line: 3, .. })
        ));
        assert!(matches!(
            parse_scenario(&format!("{base}reward a 0 0 1\nreward b 0 0 1\n")),
            Err(ParseError::DuplicateRewardCell { line: 4, .. })
        ));
        assert!(matches!(
            parse_scenario(&format!("{base}reward a 0 0 1\nreward a 1 0 1\n")),
            Err(ParseError::DuplicateRewardId { line: 4, .. })
        ));
        assert!(matches!(
            parse_scenario(&format!("{base}reward a 0 0 -1\n")),
            Err(ParseError::NonPositiveValue { line: 3, .. })
        ));
    }

    #[test]
    fn rejects_truncated_input() {
        assert_eq!(
            parse_scenario("# nothing\n").unwrap_err(),
            ParseError::Missing { what: "scenario header" }
        );
        assert_eq!(
            parse_scenario("grid 2 1\n").unwrap_err(),
            ParseError::Missing { what: "gamma line" }
        );
    }

    #[test]
    fn rejects_duplicate_graph_reward_state() {
        let err =
            parse_scenario("states 2\nedge 0 1\nedge 1 0\ngamma 0.9\nreward a 0 1\nreward b 0 2\n")
                .unwrap_err();
        assert!(matches!(err, ParseError::DuplicateRewardState { line: 6, .. }));
    }
}
