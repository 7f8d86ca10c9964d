//! Scenario files.
//!
//! Line-oriented `key = value` pairs grouped under `[section]` headers.
//! `#` starts a comment (whole line or trailing). Keys before the first
//! header belong to the top level. Every key may appear at most once and
//! unknown sections or keys are rejected.
//!
//! ```text
//! label = adaptive            # top level; defaults to the file stem
//!
//! [network]
//! fixture = three_junction_reference | grid      # required
//! rows = 10                   # grid only
//! cols = 10                   # grid only
//! lanes_per_direction = 1     # 2 for grid
//! segment_length_m = 300
//! saturation_flow_vps = 0.5   # per lane
//! free_speed_mps = 35
//! jam_density_vpm = 0.16      # per lane
//! min_green_s = 5
//! max_green_s = 45
//! yellow_s = 3
//!
//! [inflows]                   # veh/h per boundary entry
//! top_vph = 60                # grid: 20
//! bottom_vph = 120            # grid: 40
//! left_vph = 120              # grid: 40
//! right_vph = 150             # grid: 50
//!
//! [run]
//! horizon_s = 5000
//! dt_s = 1
//! flow_window_s = 300
//! seeds = 1-10                # comma list of integers or a-b ranges
//!
//! [controller]
//! kind = fixed | gap_actuated | adaptive         # required
//! ns_green_s = 30             # fixed
//! ew_green_s = 30             # fixed
//! max_gap_s = 3               # gap_actuated
//! detector_gap_s = 0.8        # gap_actuated
//! decision_interval_s = 5     # adaptive
//! switch_penalty = 2          # adaptive
//!
//! [attack]
//! strategy = none | greedy | game_optimal
//! budget_fraction = 0.3       # of summed lane capacity
//! start_s = 300
//! duration_s = 4700           # default: until the horizon
//! duty_on_s = 2
//! duty_off_s = 2
//! replan_s = 300
//!
//! [mitigation]
//! kind = none | fair | optimal
//! mapping = scaled | max_normalized
//! cadence_s = 300
//! impact_floor = 0.001        # default: unset
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sybil_atsc_core::attack::{AttackStrategy, AttackTiming};
use sybil_atsc_core::experiment::{AttackConfig, ExperimentConfig, MitigationConfig};
use sybil_atsc_core::mitigation::{MitigationKind, WeightMapping};
use sybil_atsc_core::sim::{AdaptiveConfig, Controller, FixedTimePlan, GapActuatedConfig};
use sybil_atsc_core::traffic_model::fixture::{grid, three_junction_reference, FixtureParams, Inflows};
use sybil_atsc_core::traffic_model::validate_network;
use sybil_atsc_core::{FundamentalDiagramParams, Network};

use crate::error::CliError;

pub const SEED_ENV: &str = "SYBIL_ATSC_SEED";
pub const DEFAULT_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

const KNOWN: &[(&str, &[&str])] = &[
    ("", &["label"]),
    (
        "network",
        &[
            "fixture",
            "rows",
            "cols",
            "lanes_per_direction",
            "segment_length_m",
            "saturation_flow_vps",
            "free_speed_mps",
            "jam_density_vpm",
            "min_green_s",
            "max_green_s",
            "yellow_s",
        ],
    ),
    ("inflows", &["top_vph", "bottom_vph", "left_vph", "right_vph"]),
    ("run", &["horizon_s", "dt_s", "flow_window_s", "seeds"]),
    (
        "controller",
        &["kind", "ns_green_s", "ew_green_s", "max_gap_s", "detector_gap_s", "decision_interval_s", "switch_penalty"],
    ),
    ("attack", &["strategy", "budget_fraction", "start_s", "duration_s", "duty_on_s", "duty_off_s", "replan_s"]),
    ("mitigation", &["kind", "mapping", "cadence_s", "impact_floor"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    ThreeJunctionReference,
    Grid { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub label: String,
    pub fixture: Fixture,
    pub params: FixtureParams,
    /// Boundary inflows as written, veh/h.
    pub inflows_vph: Inflows,
    pub horizon: f64,
    pub dt: f64,
    pub flow_window: f64,
    pub seeds: Vec<u64>,
    pub controller: Controller,
    pub attack: AttackConfig,
    pub mitigation: MitigationConfig,
}

impl ScenarioConfig {
    pub fn network(&self) -> Network {
        match self.fixture {
            Fixture::ThreeJunctionReference => three_junction_reference(&self.params),
            Fixture::Grid { rows, cols } => grid(rows, cols, &self.params),
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(self.label.clone(), self.network(), self.controller.clone());
        c.horizon = self.horizon;
        c.dt = self.dt;
        c.flow_window = self.flow_window;
        c.attack = self.attack;
        c.mitigation = self.mitigation;
        c
    }
}

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

struct Raw<'a> {
    origin: &'a str,
    entries: BTreeMap<(String, String), Entry>,
}

impl Raw<'_> {
    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> CliError {
        CliError::Parse { origin: self.origin.to_string(), line, column, message: message.into() }
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn text(&self, section: &str, key: &str) -> Option<&str> {
        self.get(section, key).map(|e| e.value.as_str())
    }

    fn number(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(e) => match e.value.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(self.err(e.line, e.column, format!("{}: expected a finite number, got `{}`", qualified(section, key), e.value))),
            },
        }
    }

    fn count(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(e) => e.value.parse::<usize>().map_err(|_| {
                self.err(e.line, e.column, format!("{}: expected a non-negative integer, got `{}`", qualified(section, key), e.value))
            }),
        }
    }

    fn choice<T: Copy>(&self, section: &str, key: &str, options: &[(&str, T)]) -> Result<Option<T>, CliError> {
        let Some(e) = self.get(section, key) else { return Ok(None) };
        options.iter().find(|(name, _)| *name == e.value).map(|(_, v)| Some(*v)).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            self.err(e.line, e.column, format!("{}: expected one of {}, got `{}`", qualified(section, key), names.join(" | "), e.value))
        })
    }
}

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn lex<'a>(text: &str, origin: &'a str) -> Result<Raw<'a>, CliError> {
    let mut raw = Raw { origin, entries: BTreeMap::new() };
    let mut section = String::new();
    for (n, full) in text.lines().enumerate() {
        let line_no = n + 1;
        let content = full.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| raw.err(line_no, indent + 1, "unterminated section header"))?
                .trim();
            if !KNOWN.iter().any(|(s, _)| !s.is_empty() && *s == name) {
                return Err(raw.err(line_no, indent + 2, format!("unknown section `{name}`")));
            }
            section = name.to_string();
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(raw.err(line_no, indent + 1, "expected `key = value`"));
        };
        let key = content[..eq].trim();
        let after = &content[eq + 1..];
        let value = after.trim();
        let value_col = eq + 2 + (after.len() - after.trim_start().len());
        let allowed = KNOWN.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if key.is_empty() {
            return Err(raw.err(line_no, indent + 1, "missing key"));
        }
        if !allowed.contains(&key) {
            return Err(raw.err(line_no, indent + 1, format!("unknown key `{}`", qualified(&section, key))));
        }
        if value.is_empty() {
            return Err(raw.err(line_no, value_col, format!("{}: missing value", qualified(&section, key))));
        }
        let slot = (section.clone(), key.to_string());
        if let Some(prev) = raw.entries.get(&slot) {
            return Err(raw.err(line_no, indent + 1, format!("duplicate key `{}` (first set on line {})", qualified(&section, key), prev.line)));
        }
        raw.entries.insert(slot, Entry { value: value.to_string(), line: line_no, column: value_col });
    }
    Ok(raw)
}

/// Parse `1,2,3`, `1-10`, or mixtures such as `1-3,7`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        let parse = |s: &str| s.trim().parse::<u64>().map_err(|_| format!("bad seed `{s}`"));
        match item.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(format!("empty seed range `{item}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(item)?),
        }
    }
    if out.is_empty() {
        return Err("no seeds".into());
    }
    Ok(out)
}

/// Default seeds, honouring the environment override.
pub fn default_seeds() -> Result<Vec<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => parse_seeds(&v).map_err(|e| CliError::Usage(format!("{SEED_ENV}: {e}"))),
        Err(_) => Ok(DEFAULT_SEEDS.collect()),
    }
}

pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse_scenario_str(&text, &path.display().to_string(), stem)
}

/// Parse scenario text. `origin` names the source in errors and
/// `default_label` is used when the file sets no label.
pub fn parse_scenario_str(text: &str, origin: &str, default_label: &str) -> Result<ScenarioConfig, CliError> {
    let raw = lex(text, origin)?;
    let mut problems = Vec::new();

    let fixture_kind = raw.choice("network", "fixture", &[("three_junction_reference", false), ("grid", true)])?;
    let controller_kind = raw.choice("controller", "kind", &[("fixed", 0), ("gap_actuated", 1), ("adaptive", 2)])?;
    let (Some(is_grid), Some(controller_kind)) = (fixture_kind, controller_kind) else {
        let missing: Vec<&str> = [
            fixture_kind.is_none().then_some("network.fixture"),
            controller_kind.is_none().then_some("controller.kind"),
        ]
        .into_iter()
        .flatten()
        .collect();
        return Err(CliError::Invalid { origin: origin.into(), violations: vec![format!("missing required key {}", missing.join(", "))] });
    };

    let fixture = if is_grid {
        Fixture::Grid { rows: raw.count("network", "rows", 10)?, cols: raw.count("network", "cols", 10)? }
    } else {
        for key in ["rows", "cols"] {
            if raw.get("network", key).is_some() {
                problems.push(format!("network.{key} only applies to the grid fixture"));
            }
        }
        Fixture::ThreeJunctionReference
    };

    let reference_vph = Inflows::REFERENCE_VPH;
    let default_vph = if is_grid { reference_vph } else { reference_vph.scaled(FixtureParams::REFERENCE_INFLOW_SCALE) };
    let inflows_vph = Inflows {
        top: raw.number("inflows", "top_vph", default_vph.top)?,
        bottom: raw.number("inflows", "bottom_vph", default_vph.bottom)?,
        left: raw.number("inflows", "left_vph", default_vph.left)?,
        right: raw.number("inflows", "right_vph", default_vph.right)?,
    };
    for (name, v) in [("top", inflows_vph.top), ("bottom", inflows_vph.bottom), ("left", inflows_vph.left), ("right", inflows_vph.right)] {
        if v < 0.0 {
            problems.push(format!("inflows.{name}_vph must be >= 0, got {v}"));
        }
    }

    let base = FixtureParams::default();
    let free_speed = raw.number("network", "free_speed_mps", base.diagram.free_speed())?;
    let jam_density = raw.number("network", "jam_density_vpm", base.diagram.jam_density())?;
    let diagram = match FundamentalDiagramParams::new(free_speed, jam_density) {
        Ok(d) => d,
        Err(e) => {
            problems.push(format!("network diagram: {e}"));
            base.diagram
        }
    };
    let lanes_per_direction = raw.count("network", "lanes_per_direction", if is_grid { 2 } else { 1 })?;
    if lanes_per_direction == 0 {
        problems.push("network.lanes_per_direction must be >= 1".into());
    }
    let params = FixtureParams {
        diagram,
        lanes_per_direction: lanes_per_direction.max(1) as u32,
        segment_length: raw.number("network", "segment_length_m", base.segment_length)?,
        saturation_flow: raw.number("network", "saturation_flow_vps", base.saturation_flow)?,
        inflows: Inflows::from_vph(inflows_vph),
        min_green: raw.number("network", "min_green_s", base.min_green)?,
        max_green: raw.number("network", "max_green_s", base.max_green)?,
        yellow: raw.number("network", "yellow_s", base.yellow)?,
    };
    if let Fixture::Grid { rows, cols } = fixture {
        if rows == 0 || cols == 0 {
            problems.push(format!("grid needs rows, cols >= 1, got {rows}x{cols}"));
        }
    }

    let horizon = raw.number("run", "horizon_s", 5000.0)?;
    let dt = raw.number("run", "dt_s", 1.0)?;
    let flow_window = raw.number("run", "flow_window_s", 300.0)?;
    if horizon < 0.0 {
        problems.push(format!("run.horizon_s must be >= 0, got {horizon}"));
    }
    if dt <= 0.0 {
        problems.push(format!("run.dt_s must be > 0, got {dt}"));
    }
    if flow_window <= 0.0 {
        problems.push(format!("run.flow_window_s must be > 0, got {flow_window}"));
    }
    let seeds = match raw.get("run", "seeds") {
        Some(e) => parse_seeds(&e.value).map_err(|m| raw.err(e.line, e.column, format!("run.seeds: {m}")))?,
        None => default_seeds()?,
    };

    let used = |keys: &[&str], kind: &str, problems: &mut Vec<String>| {
        for key in keys {
            if raw.get("controller", key).is_some() {
                problems.push(format!("controller.{key} does not apply to kind {kind}"));
            }
        }
    };
    let controller = match controller_kind {
        0 => {
            used(&["max_gap_s", "detector_gap_s", "decision_interval_s", "switch_penalty"], "fixed", &mut problems);
            let ns = raw.number("controller", "ns_green_s", 30.0)?;
            let ew = raw.number("controller", "ew_green_s", 30.0)?;
            if ns <= 0.0 || ew <= 0.0 {
                problems.push("controller green times must be > 0".into());
            }
            Controller::FixedTime(FixedTimePlan::two_phase(ns, ew))
        }
        1 => {
            used(&["ns_green_s", "ew_green_s", "decision_interval_s", "switch_penalty"], "gap_actuated", &mut problems);
            let d = GapActuatedConfig::default();
            let cfg = GapActuatedConfig {
                max_gap: raw.number("controller", "max_gap_s", d.max_gap)?,
                detector_gap: raw.number("controller", "detector_gap_s", d.detector_gap)?,
            };
            if cfg.max_gap <= 0.0 || cfg.detector_gap < 0.0 {
                problems.push("controller.max_gap_s must be > 0 and detector_gap_s >= 0".into());
            }
            Controller::GapActuated(cfg)
        }
        _ => {
            used(&["ns_green_s", "ew_green_s", "max_gap_s", "detector_gap_s"], "adaptive", &mut problems);
            let d = AdaptiveConfig::default();
            let cfg = AdaptiveConfig {
                decision_interval: raw.number("controller", "decision_interval_s", d.decision_interval)?,
                switch_penalty: raw.number("controller", "switch_penalty", d.switch_penalty)?,
            };
            if cfg.decision_interval <= 0.0 || cfg.switch_penalty < 0.0 {
                problems.push("controller.decision_interval_s must be > 0 and switch_penalty >= 0".into());
            }
            Controller::Adaptive(cfg)
        }
    };

    let strategy = raw
        .choice(
            "attack",
            "strategy",
            &[("none", AttackStrategy::None), ("greedy", AttackStrategy::GreedyCriticalPhase), ("game_optimal", AttackStrategy::GameOptimal)],
        )?
        .unwrap_or_default();
    let d = AttackConfig::default();
    let start_time = raw.number("attack", "start_s", d.timing.start_time)?;
    let attack = AttackConfig {
        strategy,
        budget_fraction: raw.number("attack", "budget_fraction", d.budget_fraction)?,
        timing: AttackTiming {
            start_time,
            duration: raw.number("attack", "duration_s", (horizon - start_time).max(0.0))?,
            duty_on: raw.number("attack", "duty_on_s", d.timing.duty_on)?,
            duty_off: raw.number("attack", "duty_off_s", d.timing.duty_off)?,
        },
        replan_interval: raw.number("attack", "replan_s", d.replan_interval)?,
    };
    if attack.budget_fraction <= 0.0 {
        problems.push(format!("attack.budget_fraction must be > 0, got {}", attack.budget_fraction));
    }
    if attack.timing.duty_on <= 0.0 || attack.timing.duty_off < 0.0 || attack.timing.duration < 0.0 {
        problems.push("attack.duty_on_s must be > 0; duty_off_s and duration_s >= 0".into());
    }
    if attack.timing.start_time < 0.0 {
        problems.push("attack.start_s must be >= 0".into());
    }
    if attack.replan_interval <= 0.0 {
        problems.push("attack.replan_s must be > 0".into());
    }

    let dm = MitigationConfig::default();
    let mitigation = MitigationConfig {
        kind: raw
            .choice("mitigation", "kind", &[("none", MitigationKind::None), ("fair", MitigationKind::Fair), ("optimal", MitigationKind::Optimal)])?
            .unwrap_or_default(),
        mapping: raw
            .choice("mitigation", "mapping", &[("scaled", WeightMapping::Scaled), ("max_normalized", WeightMapping::MaxNormalized)])?
            .unwrap_or_default(),
        cadence: raw.number("mitigation", "cadence_s", dm.cadence)?,
        impact_floor: match raw.get("mitigation", "impact_floor") {
            Some(_) => Some(raw.number("mitigation", "impact_floor", 0.0)?),
            None => None,
        },
    };
    if mitigation.cadence <= 0.0 {
        problems.push("mitigation.cadence_s must be > 0".into());
    }
    if mitigation.impact_floor.is_some_and(|f| f <= 0.0) {
        problems.push("mitigation.impact_floor must be > 0".into());
    }

    let config = ScenarioConfig {
        label: raw.text("", "label").unwrap_or(default_label).to_string(),
        fixture,
        params,
        inflows_vph,
        horizon,
        dt,
        flow_window,
        seeds,
        controller,
        attack,
        mitigation,
    };
    if problems.is_empty() {
        if let Err(violations) = validate_network(&config.network()) {
            problems.extend(violations.iter().map(|v| v.to_string()));
        }
    }
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(CliError::Invalid { origin: origin.into(), violations: problems })
    }
}
