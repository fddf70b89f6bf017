//! Command dispatch and deterministic report rendering.
//!
//! `run` is pure: it takes a parsed command plus the scenario text and
//! returns the exit code, stdout, and any files to write, so the whole
//! surface is testable without spawning the binary. Reports are
//! line-oriented `key value` records (or the mirrored JSON document) with
//! floats printed to 12 significant digits.

use std::path::PathBuf;

use crate::explain::{
    collected_rewards_rule, dominant_peak, event_chain, optimal_path, region_map, CollectionMethod,
    CollectionReport, DominanceMap,
};
use crate::model::{
    parse_scenario, validate_model, GridScenario, MdpModel, Scenario, StateId, ValidationReport,
};
use crate::oracle::{compare_value_functions, value_iteration};
use crate::peaks::{PeakKind, PeakSet, PropagationMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Validate,
    Solve,
    Explain,
    Map,
    Contributions,
    Path,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct Command {
    pub verb: Verb,
    /// `x,y` on grids, a state index on general graphs.
    pub state: Option<String>,
    pub mode: PropagationMode,
    pub format: OutputFormat,
    /// Destination for the binary map rendering (map verb only).
    pub ppm: Option<PathBuf>,
    pub scale: u32,
    /// Largest accepted peak-vs-oracle deviation (check verb).
    pub budget: f64,
    /// Oracle convergence tolerance (check verb).
    pub tol: f64,
}

impl Command {
    pub fn new(verb: Verb) -> Self {
        Command {
            verb,
            state: None,
            mode: PropagationMode::Achievable,
            format: OutputFormat::Text,
            ppm: None,
            scale: 1,
            budget: 1e-8,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub exit_code: i32,
    pub stdout: String,
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

impl RunResult {
    fn ok(stdout: String) -> Self {
        RunResult { exit_code: 0, stdout, files: Vec::new() }
    }

    fn fail(code: i32, stdout: String) -> Self {
        RunResult { exit_code: code, stdout, files: Vec::new() }
    }
}

const ORACLE_MAX_SWEEPS: usize = 10_000_000;

pub fn run(cmd: &Command, scenario_text: &str) -> RunResult {
    let error = |code: i32, msg: &str| -> RunResult {
        let stdout = match cmd.format {
            OutputFormat::Text => format!("error {msg}\n"),
            OutputFormat::Json => format!("{{\"error\":{}}}\n", json_str(msg)),
        };
        RunResult::fail(code, stdout)
    };

    let scenario = match parse_scenario(scenario_text) {
        Ok(s) => s,
        Err(e) => return error(1, &e.to_string()),
    };
    let model = scenario.to_model();
    let report = validate_model(&model);

    if cmd.verb == Verb::Validate {
        let stdout = render_validation(&report, cmd.format);
        let code = if report.ok() { 0 } else { 1 };
        return RunResult { exit_code: code, stdout, files: Vec::new() };
    }
    if !report.ok() {
        let detail = report
            .violations
            .iter()
            .map(|v| format!("{} {}", v.code, v.message))
            .collect::<Vec<_>>()
            .join("; ");
        return error(1, &format!("scenario failed validation: {detail}"));
    }

    let peaks = match PeakSet::solve(&model) {
        Ok(p) => p,
        Err(e) => return error(1, &e.to_string()),
    };

    let state = if matches!(cmd.verb, Verb::Explain | Verb::Contributions | Verb::Path) {
        let raw = match &cmd.state {
            Some(raw) => raw,
            None => return error(2, "usage: --state is required for this command"),
        };
        match parse_state(raw, &scenario) {
            Ok(s) => Some(s),
            Err(msg) => return error(2, &format!("usage: {msg}")),
        }
    } else {
        None
    };

    match cmd.verb {
        Verb::Validate => unreachable!("handled above"),
        Verb::Solve => RunResult::ok(render_solve(&model, &peaks, &scenario, cmd.format)),
        Verb::Explain => {
            RunResult::ok(render_explain(&peaks, &scenario, state.unwrap(), cmd.mode, cmd.format))
        }
        Verb::Contributions => {
            RunResult::ok(render_contributions(&peaks, &scenario, state.unwrap(), cmd.format))
        }
        Verb::Path => match optimal_path(&model, &peaks, state.unwrap()) {
            Ok(trace) => RunResult::ok(render_path(&peaks, &scenario, &trace, cmd.format)),
            Err(e) => error(1, &e.to_string()),
        },
        Verb::Map => {
            let map = region_map(&peaks, cmd.mode);
            let stdout = match (&scenario, cmd.format) {
                (_, OutputFormat::Json) => render_map_json(&map, &scenario),
                (Scenario::Grid(g), OutputFormat::Text) => render_ascii_map(&map, &peaks, g),
                (Scenario::Graph(_), OutputFormat::Text) => render_map_table(&map),
            };
            let mut files = Vec::new();
            if let Some(path) = &cmd.ppm {
                match &scenario {
                    Scenario::Grid(g) => {
                        files.push((path.clone(), render_ppm_map(&map, g, cmd.scale)))
                    }
                    Scenario::Graph(_) => {
                        return error(2, "usage: --ppm requires a grid scenario");
                    }
                }
            }
            RunResult { exit_code: 0, stdout, files }
        }
        Verb::Check => {
            let table = match value_iteration(&model, cmd.tol, ORACLE_MAX_SWEEPS) {
                Ok(t) => t,
                Err(e) => return error(1, &e.to_string()),
            };
            let peak_values: Vec<f64> =
                (0..model.num_states()).map(|s| peaks.value_at(StateId(s))).collect();
            let diff = compare_value_functions(&peak_values, table.values())
                .expect("both tables cover every state");
            let within = diff.max_abs <= cmd.budget;
            let stdout =
                render_check(&peaks, &table, &diff, &scenario, cmd.budget, within, cmd.format);
            RunResult { exit_code: if within { 0 } else { 1 }, stdout, files: Vec::new() }
        }
    }
}

/// Formats with 12 significant digits: plain decimal in a comfortable
/// magnitude band, scientific notation outside it. Total function of the
/// bit pattern, so reports stay byte-identical across runs.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000".to_string();
    }
    let ax = x.abs();
    if !(1e-4..1e15).contains(&ax) {
        format!("{:.11e}", x)
    } else {
        let magnitude = ax.log10().floor() as i32;
        let precision = (11 - magnitude).max(0) as usize;
        format!("{x:.precision$}")
    }
}

fn fmt_state(scenario: &Scenario, s: StateId) -> String {
    match scenario {
        Scenario::Grid(g) => format!("{},{}", s.0 % g.width, s.0 / g.width),
        Scenario::Graph(_) => s.0.to_string(),
    }
}

fn parse_state(raw: &str, scenario: &Scenario) -> Result<StateId, String> {
    match scenario {
        Scenario::Grid(g) => {
            let (x, y) = raw
                .split_once(',')
                .ok_or_else(|| format!("grid states are addressed as x,y — got '{raw}'"))?;
            let x: usize = x.trim().parse().map_err(|_| format!("bad x coordinate '{x}'"))?;
            let y: usize = y.trim().parse().map_err(|_| format!("bad y coordinate '{y}'"))?;
            if x >= g.width || y >= g.height {
                return Err(format!(
                    "state {x},{y} lies outside the {}x{} grid",
                    g.width, g.height
                ));
            }
            Ok(g.index(x, y))
        }
        Scenario::Graph(g) => {
            let i: usize = raw
                .trim()
                .parse()
                .map_err(|_| format!("graph states are addressed by index — got '{raw}'"))?;
            if i >= g.num_states {
                return Err(format!("state {i} out of range for {} states", g.num_states));
            }
            Ok(StateId(i))
        }
    }
}

fn kind_str(kind: &PeakKind) -> &'static str {
    match kind {
        PeakKind::Baseline { .. } => "baseline",
        PeakKind::Combined { .. } => "combined",
        PeakKind::Delta { .. } => "delta",
    }
}

fn mode_str(mode: PropagationMode) -> &'static str {
    match mode {
        PropagationMode::Achievable => "achievable",
        PropagationMode::Literal => "literal",
    }
}

fn method_str(method: CollectionMethod) -> &'static str {
    match method {
        CollectionMethod::DominanceRule => "dominance-rule",
        CollectionMethod::EventChain => "event-chain",
    }
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn json_array(items: impl IntoIterator<Item = String>) -> String {
    let inner: Vec<String> = items.into_iter().collect();
    format!("[{}]", inner.join(","))
}

fn render_validation(report: &ValidationReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => {
            let mut out = format!("ok {}\nviolations {}\n", report.ok(), report.violations.len());
            for v in &report.violations {
                out.push_str(&format!("violation {} {}\n", v.code, v.message));
            }
            out
        }
        OutputFormat::Json => {
            let violations = json_array(report.violations.iter().map(|v| {
                format!(
                    "{{\"code\":{},\"message\":{}}}",
                    json_str(&v.code.to_string()),
                    json_str(&v.message)
                )
            }));
            format!("{{\"ok\":{},\"violations\":{}}}\n", report.ok(), violations)
        }
    }
}

fn render_solve(
    model: &MdpModel,
    peaks: &PeakSet,
    scenario: &Scenario,
    format: OutputFormat,
) -> String {
    let member_ids = |peak: &crate::peaks::Peak| -> Vec<&str> {
        peak.members.iter().map(|&m| peaks.rewards()[m].id.as_str()).collect()
    };
    let anchor_strs = |peak: &crate::peaks::Peak| -> Vec<String> {
        peak.members.iter().map(|&m| fmt_state(scenario, peaks.rewards()[m].state)).collect()
    };
    match format {
        OutputFormat::Text => {
            let mut out = format!(
                "gamma {}\nstates {}\nrewards {}\nsweeps {}\npeaks {}\n",
                fmt_f64(peaks.gamma()),
                model.num_states(),
                peaks.rewards().len(),
                peaks.sweeps(),
                peaks.peaks().len()
            );
            for peak in peaks.peaks() {
                out.push('\n');
                out.push_str(&format!("peak {}\n", peak.id));
                out.push_str(&format!("kind {}\n", kind_str(&peak.kind)));
                out.push_str(&format!("members {}\n", member_ids(peak).join(" ")));
                out.push_str(&format!("anchors {}\n", anchor_strs(peak).join(" ")));
                let heights: Vec<String> =
                    peak.members.iter().map(|&m| fmt_f64(peaks.height(m))).collect();
                out.push_str(&format!("heights {}\n", heights.join(" ")));
                match &peak.kind {
                    PeakKind::Baseline { period } | PeakKind::Combined { period } => {
                        out.push_str(&format!("cycle_length {period}\n"));
                    }
                    PeakKind::Delta { parent } => {
                        out.push_str(&format!("parent {}\n", peaks.rewards()[*parent].id));
                    }
                }
            }
            out
        }
        OutputFormat::Json => {
            let peaks_json = json_array(peaks.peaks().iter().map(|peak| {
                let members = json_array(member_ids(peak).iter().map(|id| json_str(id)));
                let anchors = json_array(anchor_strs(peak).iter().map(|a| json_str(a)));
                let heights = json_array(peak.members.iter().map(|&m| fmt_f64(peaks.height(m))));
                let tail = match &peak.kind {
                    PeakKind::Baseline { period } | PeakKind::Combined { period } => {
                        format!("\"cycle_length\":{period}")
                    }
                    PeakKind::Delta { parent } => {
                        format!("\"parent\":{}", json_str(&peaks.rewards()[*parent].id))
                    }
                };
                format!(
                    "{{\"id\":{},\"kind\":{},\"members\":{},\"anchors\":{},\"heights\":{},{}}}",
                    peak.id,
                    json_str(kind_str(&peak.kind)),
                    members,
                    anchors,
                    heights,
                    tail
                )
            }));
            format!(
                "{{\"gamma\":{},\"states\":{},\"rewards\":{},\"sweeps\":{},\"peaks\":{}}}\n",
                fmt_f64(peaks.gamma()),
                model.num_states(),
                peaks.rewards().len(),
                peaks.sweeps(),
                peaks_json
            )
        }
    }
}

fn collection_lines(peaks: &PeakSet, report: &CollectionReport) -> String {
    let mut out = format!("method {}\n", method_str(report.method));
    for item in &report.entries {
        let count = match item.count {
            crate::explain::CollectionCount::Once => "once",
            crate::explain::CollectionCount::Infinite => "infinite",
        };
        out.push_str(&format!("collect {} {}\n", peaks.rewards()[item.reward].id, count));
    }
    out
}

fn collection_json(peaks: &PeakSet, report: &CollectionReport) -> String {
    let entries = json_array(report.entries.iter().map(|item| {
        let count = match item.count {
            crate::explain::CollectionCount::Once => "once",
            crate::explain::CollectionCount::Infinite => "infinite",
        };
        format!(
            "{{\"reward\":{},\"peak\":{},\"count\":{}}}",
            json_str(&peaks.rewards()[item.reward].id),
            item.peak,
            json_str(count)
        )
    }));
    format!(
        "{{\"method\":{},\"dominant_peak\":{},\"entries\":{}}}",
        json_str(method_str(report.method)),
        report.dominant_peak,
        entries
    )
}

fn render_explain(
    peaks: &PeakSet,
    scenario: &Scenario,
    s: StateId,
    mode: PropagationMode,
    format: OutputFormat,
) -> String {
    let dom = dominant_peak(peaks, s, mode);
    let rule = collected_rewards_rule(peaks, s);
    let chain = event_chain(peaks, s);
    let agreement = rule.same_collection(&chain);
    match format {
        OutputFormat::Text => {
            let co: Vec<String> = dom.co_dominant.iter().map(|id| id.to_string()).collect();
            format!(
                "state {}\nmode {}\nvalue {}\ndominant_peak {}\ndominant_value {}\nco_dominant {}\n\n{}\n{}\nagreement {}\n",
                fmt_state(scenario, s),
                mode_str(mode),
                fmt_f64(peaks.value_at(s)),
                dom.peak,
                fmt_f64(dom.value),
                co.join(" "),
                collection_lines(peaks, &rule),
                collection_lines(peaks, &chain),
                agreement
            )
        }
        OutputFormat::Json => {
            let co = json_array(dom.co_dominant.iter().map(|id| id.to_string()));
            let collections =
                json_array([collection_json(peaks, &rule), collection_json(peaks, &chain)]);
            format!(
                "{{\"state\":{},\"mode\":{},\"value\":{},\"dominant_peak\":{},\"dominant_value\":{},\"co_dominant\":{},\"collections\":{},\"agreement\":{}}}\n",
                json_str(&fmt_state(scenario, s)),
                json_str(mode_str(mode)),
                fmt_f64(peaks.value_at(s)),
                dom.peak,
                fmt_f64(dom.value),
                co,
                collections,
                agreement
            )
        }
    }
}

fn render_contributions(
    peaks: &PeakSet,
    scenario: &Scenario,
    s: StateId,
    format: OutputFormat,
) -> String {
    let report = crate::explain::relative_contributions(peaks, s);
    match format {
        OutputFormat::Text => {
            let mut out = format!(
                "state {}\nvalue {}\nentries {}\n",
                fmt_state(scenario, s),
                fmt_f64(report.total),
                report.entries.len()
            );
            for e in &report.entries {
                out.push_str(&format!(
                    "peak {} value {} difference {} ratio {}\n",
                    e.peak,
                    fmt_f64(e.value),
                    fmt_f64(e.difference),
                    fmt_f64(e.ratio)
                ));
            }
            out
        }
        OutputFormat::Json => {
            let entries = json_array(report.entries.iter().map(|e| {
                format!(
                    "{{\"peak\":{},\"value\":{},\"difference\":{},\"ratio\":{}}}",
                    e.peak,
                    fmt_f64(e.value),
                    fmt_f64(e.difference),
                    fmt_f64(e.ratio)
                )
            }));
            format!(
                "{{\"state\":{},\"value\":{},\"entries\":{}}}\n",
                json_str(&fmt_state(scenario, s)),
                fmt_f64(report.total),
                entries
            )
        }
    }
}

fn render_path(
    peaks: &PeakSet,
    scenario: &Scenario,
    trace: &crate::explain::PathTrace,
    format: OutputFormat,
) -> String {
    match format {
        OutputFormat::Text => {
            let states: Vec<String> =
                trace.states.iter().map(|&s| fmt_state(scenario, s)).collect();
            let mut out = format!(
                "state {}\nsteps {}\nk_max {}\ncycle_start {}\nperiod {}\nstates {}\n",
                states[0],
                trace.states.len() - 1,
                trace.k_max,
                trace.cycle_start,
                trace.period,
                states.join(" ")
            );
            for e in &trace.events {
                out.push_str(&format!("event {} {}\n", e.step, peaks.rewards()[e.reward].id));
            }
            out
        }
        OutputFormat::Json => {
            let states =
                json_array(trace.states.iter().map(|&s| json_str(&fmt_state(scenario, s))));
            let events = json_array(trace.events.iter().map(|e| {
                format!(
                    "{{\"step\":{},\"reward\":{}}}",
                    e.step,
                    json_str(&peaks.rewards()[e.reward].id)
                )
            }));
            format!(
                "{{\"state\":{},\"steps\":{},\"k_max\":{},\"cycle_start\":{},\"period\":{},\"states\":{},\"events\":{}}}\n",
                json_str(&fmt_state(scenario, trace.states[0])),
                trace.states.len() - 1,
                trace.k_max,
                trace.cycle_start,
                trace.period,
                states,
                events
            )
        }
    }
}

fn render_check(
    peaks: &PeakSet,
    table: &crate::oracle::ValueTable,
    diff: &crate::oracle::DiffReport,
    scenario: &Scenario,
    budget: f64,
    within: bool,
    format: OutputFormat,
) -> String {
    match format {
        OutputFormat::Text => format!(
            "states {}\nsweeps {}\noracle_sweeps {}\noracle_residual {}\nmax_abs_diff {}\nmax_rel_diff {}\nargmax_state {}\nbudget {}\nwithin_budget {}\n",
            peaks.num_states(),
            peaks.sweeps(),
            table.sweeps(),
            fmt_f64(table.residual()),
            fmt_f64(diff.max_abs),
            fmt_f64(diff.max_rel),
            fmt_state(scenario, diff.argmax),
            fmt_f64(budget),
            within
        ),
        OutputFormat::Json => format!(
            "{{\"states\":{},\"sweeps\":{},\"oracle_sweeps\":{},\"oracle_residual\":{},\"max_abs_diff\":{},\"max_rel_diff\":{},\"argmax_state\":{},\"budget\":{},\"within_budget\":{}}}\n",
            peaks.num_states(),
            peaks.sweeps(),
            table.sweeps(),
            fmt_f64(table.residual()),
            fmt_f64(diff.max_abs),
            fmt_f64(diff.max_rel),
            json_str(&fmt_state(scenario, diff.argmax)),
            fmt_f64(budget),
            within
        ),
    }
}

/// Serialises a scenario back to its text form; `parse_scenario` of the
/// output reproduces the input scenario exactly (floats round-trip through
/// the shortest decimal representation).
pub fn render_scenario(scenario: &Scenario) -> String {
    match scenario {
        Scenario::Grid(g) => {
            let mut out = format!("grid {} {}\ngamma {}\n", g.width, g.height, g.gamma);
            for r in &g.rewards {
                out.push_str(&format!("reward {} {} {} {}\n", r.id, r.x, r.y, r.value));
            }
            out
        }
        Scenario::Graph(g) => {
            let mut out = format!("states {}\n", g.num_states);
            for &(from, to) in &g.edges {
                out.push_str(&format!("edge {from} {to}\n"));
            }
            out.push_str(&format!("gamma {}\n", g.gamma));
            for r in &g.rewards {
                out.push_str(&format!("reward {} {} {}\n", r.id, r.state, r.value));
            }
            out
        }
    }
}

const FALLBACK_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// One display letter per peak: the first character of the first member's
/// reward id when those are alphanumeric and distinct across peaks,
/// otherwise a fixed alphabet indexed by peak id. `None` when there are too
/// many peaks to letter.
fn peak_letters(peaks: &PeakSet) -> Option<Vec<char>> {
    if peaks.peaks().len() > FALLBACK_ALPHABET.len() {
        return None;
    }
    let named: Vec<char> = peaks
        .peaks()
        .iter()
        .filter_map(|p| {
            let c = peaks.rewards()[p.members[0]].id.chars().next()?;
            c.is_ascii_alphanumeric().then(|| c.to_ascii_lowercase())
        })
        .collect();
    let mut distinct = named.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if named.len() == peaks.peaks().len() && distinct.len() == named.len() {
        return Some(named);
    }
    Some(peaks.peaks().iter().map(|p| FALLBACK_ALPHABET[p.id] as char).collect())
}

/// Letter map of the dominance regions: one character per cell, `=` where
/// peaks tie, uppercase where the cell hosts an anchor of its own dominant
/// peak; row y = 0 is printed last so y grows upward. A legend follows.
pub fn render_ascii_map(map: &DominanceMap, peaks: &PeakSet, grid: &GridScenario) -> String {
    let letters = match peak_letters(peaks) {
        Some(l) => l,
        None => return render_map_table(map),
    };
    let mut anchor_peak = vec![usize::MAX; grid.width * grid.height];
    for peak in peaks.peaks() {
        for &m in &peak.members {
            anchor_peak[peaks.rewards()[m].state.0] = peak.id;
        }
    }

    let mut out = String::new();
    for y in (0..grid.height).rev() {
        for x in 0..grid.width {
            let s = y * grid.width + x;
            let c = if map.co_dominant[s] {
                '='
            } else {
                let peak = map.dominant[s];
                let letter = letters[peak];
                if anchor_peak[s] == peak {
                    letter.to_ascii_uppercase()
                } else {
                    letter
                }
            };
            out.push(c);
        }
        out.push('\n');
    }
    out.push('\n');
    for peak in peaks.peaks() {
        let members: Vec<&str> =
            peak.members.iter().map(|&m| peaks.rewards()[m].id.as_str()).collect();
        out.push_str(&format!(
            "legend {} peak {} {} members {}\n",
            letters[peak.id],
            peak.id,
            kind_str(&peak.kind),
            members.join(" ")
        ));
    }
    out
}

fn render_map_table(map: &DominanceMap) -> String {
    let mut out = String::new();
    for (s, &peak) in map.dominant.iter().enumerate() {
        if map.co_dominant[s] {
            out.push_str(&format!("state {s} peak {peak} co-dominant\n"));
        } else {
            out.push_str(&format!("state {s} peak {peak}\n"));
        }
    }
    out
}

fn render_map_json(map: &DominanceMap, scenario: &Scenario) -> String {
    let dominant = json_array(map.dominant.iter().map(|id| id.to_string()));
    let co = json_array(map.co_dominant.iter().map(|c| c.to_string()));
    match scenario {
        Scenario::Grid(g) => format!(
            "{{\"width\":{},\"height\":{},\"dominant\":{},\"co_dominant\":{}}}\n",
            g.width, g.height, dominant, co
        ),
        Scenario::Graph(_) => format!("{{\"dominant\":{},\"co_dominant\":{}}}\n", dominant, co),
    }
}

/// Region colors, indexed by peak id modulo the palette size.
pub const PALETTE: [(u8, u8, u8); 10] = [
    (31, 119, 180),
    (255, 127, 14),
    (44, 160, 44),
    (214, 39, 40),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (127, 127, 127),
    (188, 189, 34),
    (23, 190, 207),
];

/// Binary P6 image of the dominance regions, `scale` pixels per cell,
/// co-dominant cells black, top row = highest y. Byte-exact across runs.
pub fn render_ppm_map(map: &DominanceMap, grid: &GridScenario, scale: u32) -> Vec<u8> {
    let scale = scale.max(1) as usize;
    let (w, h) = (grid.width * scale, grid.height * scale);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for y in (0..grid.height).rev() {
        let row_start = out.len();
        for x in 0..grid.width {
            let s = y * grid.width + x;
            let (r, g, b) = if map.co_dominant[s] {
                (0, 0, 0)
            } else {
                PALETTE[map.dominant[s] % PALETTE.len()]
            };
            for _ in 0..scale {
                out.extend_from_slice(&[r, g, b]);
            }
        }
        let row = out[row_start..].to_vec();
        for _ in 1..scale {
            out.extend_from_slice(&row);
        }
    }
    out
}
