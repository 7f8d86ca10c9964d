//! Standalone game solving from a `lane,theta_vps,f_vps` CSV.

use std::fmt::Write as _;
use std::io::Read;

use sybil_atsc_core::game::{build_payoff_matrix, solve_game, GameSolution};

use crate::error::CliError;

pub const GAME_HEADER: [&str; 3] = ["lane", "theta_vps", "f_vps"];

#[derive(Debug, Clone, PartialEq)]
pub struct GameInput {
    pub lanes: Vec<String>,
    pub theta: Vec<f64>,
    pub f: Vec<f64>,
}

pub fn read_game_input(reader: impl Read, origin: &str) -> Result<GameInput, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != GAME_HEADER {
        return Err(CliError::Parse {
            origin: origin.into(),
            line: 1,
            column: 1,
            message: format!("expected header `{}`", GAME_HEADER.join(",")),
        });
    }
    let mut input = GameInput { lanes: Vec::new(), theta: Vec::new(), f: Vec::new() };
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |col: usize| -> Result<f64, CliError> {
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| CliError::Parse {
                origin: origin.into(),
                line,
                column: col + 1,
                message: format!("{}: expected a finite number, got `{raw}`", GAME_HEADER[col]),
            })
        };
        input.lanes.push(record.get(0).unwrap_or("").to_string());
        input.theta.push(field(1)?);
        input.f.push(field(2)?);
    }
    if input.lanes.is_empty() {
        return Err(CliError::Usage(format!("{origin}: no lanes")));
    }
    Ok(input)
}

pub fn solve_input(input: &GameInput) -> Result<GameSolution, CliError> {
    let u = build_payoff_matrix(&input.theta, &input.f).map_err(CliError::Game)?;
    solve_game(&u).map_err(CliError::Game)
}

/// `lane,alpha,beta` rows followed by a `value` row.
pub fn solution_csv(input: &GameInput, sol: &GameSolution) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lane", "alpha", "beta"])?;
    for ((lane, a), b) in input.lanes.iter().zip(sol.attacker.probs()).zip(sol.defender.probs()) {
        w.write_record([lane.clone(), format!("{a:.9}"), format!("{b:.9}")])?;
    }
    w.write_record(["value".to_string(), format!("{:.9}", sol.attacker_value), format!("{:.9}", sol.defender_value)])?;
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn solution_table(input: &GameInput, sol: &GameSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>10} {:>10} {:>12} {:>12}", "lane", "theta", "f", "alpha", "beta");
    for (i, lane) in input.lanes.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<12} {:>10.4} {:>10.4} {:>12.6} {:>12.6}",
            lane,
            input.theta[i],
            input.f[i],
            sol.attacker.probs()[i],
            sol.defender.probs()[i]
        );
    }
    let _ = writeln!(out, "value: rho = {:.9}, phi = {:.9}", sol.attacker_value, sol.defender_value);
    out
}
