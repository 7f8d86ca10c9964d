//! Zero-sum attacker/defender game over lanes.
//!
//! Rows of the payoff matrix are defender actions (trust lane `i`), columns
//! are attacker actions (target lane `j`). The attacker's maxmin strategy
//! `alpha` and the defender's minimax strategy `beta` are each found with one
//! linear program; LP duality makes their values coincide.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::lp::{LinearProgram, LpError, Relation, Sense};

/// Tolerance on the unit-sum and non-negativity of a [`MixedStrategy`].
pub const STRATEGY_TOLERANCE: f64 = 1e-9;
/// Relative tolerance of the duality check in [`solve_game`].
pub const DUALITY_TOLERANCE: f64 = 1e-8;
/// Default relative impact floor used when flooring is switched on.
pub const DEFAULT_IMPACT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum GameError {
    LengthMismatch { theta: usize, flow: usize },
    Empty,
    /// Negative or non-finite capacity or flow input.
    InvalidInput { index: usize, value: f64 },
    NotSquare,
    InvalidStrategy,
    Solver(LpError),
    DualityGap { attacker_value: f64, defender_value: f64 },
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::LengthMismatch { theta, flow } => {
                write!(f, "theta has {theta} entries but f has {flow}")
            }
            GameError::Empty => f.write_str("payoff matrix needs at least one lane"),
            GameError::InvalidInput { index, value } => {
                write!(f, "input {index} must be finite and >= 0, got {value}")
            }
            GameError::NotSquare => f.write_str("payoff matrix must be square"),
            GameError::InvalidStrategy => f.write_str("probabilities must be >= 0 and sum to 1"),
            GameError::Solver(e) => write!(f, "LP solver failed: {e}"),
            GameError::DualityGap { attacker_value, defender_value } => write!(
                f,
                "duality gap: maxmin value {attacker_value} != minimax value {defender_value}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GameError {}

impl From<LpError> for GameError {
    fn from(e: LpError) -> Self {
        GameError::Solver(e)
    }
}

/// Square matrix of attack impacts, veh/s, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl PayoffMatrix {
    pub fn diagonal(impacts: &[f64]) -> Result<Self, GameError> {
        if impacts.is_empty() {
            return Err(GameError::Empty);
        }
        if let Some((index, &value)) = impacts.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GameError::InvalidInput { index, value });
        }
        let dim = impacts.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, u) in impacts.iter().enumerate() {
            entries[i * dim + i] = *u;
        }
        Ok(PayoffMatrix { dim, entries })
    }

    /// General square matrix. The LP machinery does not need the diagonal
    /// structure, but no traffic meaning is attached to off-diagonal terms.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GameError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(GameError::Empty);
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(GameError::NotSquare);
        }
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GameError::InvalidInput { index, value });
        }
        Ok(PayoffMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PayoffMatrix { dim: self.dim, entries: self.entries.iter().map(|v| v * factor).collect() }
    }

    /// Raise each diagonal impact to at least `eps * max impact`, so no lane
    /// is treated as unattackable.
    pub fn with_impact_floor(&self, eps: f64) -> Self {
        let max = self.diagonal_entries().into_iter().fold(0.0, f64::max);
        let floor = eps * max;
        let mut out = self.clone();
        for i in 0..self.dim {
            let e = &mut out.entries[i * self.dim + i];
            *e = e.max(floor);
        }
        out
    }

    fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn is_constant(&self) -> bool {
        let first = self.entries[0];
        self.entries.iter().all(|v| *v == first)
    }

    /// Expected payoff of defender row `i` against attacker mix `alpha`.
    pub fn row_payoff(&self, i: usize, alpha: &MixedStrategy) -> f64 {
        (0..self.dim).map(|j| self.get(i, j) * alpha.probs[j]).sum()
    }

    /// Expected payoff of attacker column `j` against defender mix `beta`.
    pub fn col_payoff(&self, j: usize, beta: &MixedStrategy) -> f64 {
        (0..self.dim).map(|i| self.get(i, j) * beta.probs[i]).sum()
    }
}

/// Payoff matrix from lane capacities `theta` and measured flows `f`:
/// diagonal `max(0, theta_i - f_i)`, zero elsewhere.
pub fn build_payoff_matrix(theta: &[f64], f: &[f64]) -> Result<PayoffMatrix, GameError> {
    if theta.len() != f.len() {
        return Err(GameError::LengthMismatch { theta: theta.len(), flow: f.len() });
    }
    for (index, &value) in theta.iter().chain(f.iter()).enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(GameError::InvalidInput { index: index % theta.len().max(1), value });
        }
    }
    let impacts: Vec<f64> = theta.iter().zip(f).map(|(t, q)| (t - q).max(0.0)).collect();
    PayoffMatrix::diagonal(&impacts)
}

/// Probability vector over lanes.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self, GameError> {
        if probs.is_empty() {
            return Err(GameError::Empty);
        }
        let sum: f64 = probs.iter().sum();
        let valid = probs.iter().all(|p| p.is_finite() && *p >= -STRATEGY_TOLERANCE)
            && (sum - 1.0).abs() <= STRATEGY_TOLERANCE;
        if !valid {
            return Err(GameError::InvalidStrategy);
        }
        Ok(MixedStrategy { probs })
    }

    pub fn uniform(n: usize) -> Self {
        MixedStrategy { probs: vec![1.0 / n as f64; n] }
    }

    /// Uniform over `support`, zero elsewhere.
    pub fn uniform_over(n: usize, support: &[usize]) -> Self {
        let mut probs = vec![0.0; n];
        let p = 1.0 / support.len() as f64;
        for &i in support {
            probs[i] = p;
        }
        MixedStrategy { probs }
    }

    /// Clean up solver output: clip tiny negatives and renormalize.
    fn from_raw(raw: &[f64]) -> Result<Self, GameError> {
        let clipped: Vec<f64> = raw.iter().map(|p| p.max(0.0)).collect();
        let sum: f64 = clipped.iter().sum();
        if !(sum > 0.0) {
            return Err(GameError::InvalidStrategy);
        }
        MixedStrategy::new(clipped.iter().map(|p| p / sum).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Indices with probability above `eps`.
    pub fn support(&self, eps: f64) -> Vec<usize> {
        self.probs.iter().enumerate().filter(|(_, p)| **p > eps).map(|(i, _)| i).collect()
    }

    pub fn max_abs_diff(&self, other: &MixedStrategy) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    pub attacker: MixedStrategy,
    pub defender: MixedStrategy,
    pub attacker_value: f64,
    pub defender_value: f64,
}

impl GameSolution {
    pub fn value(&self) -> f64 {
        self.attacker_value
    }

    /// Largest amount by which a pure deviation beats the claimed value.
    pub fn saddle_violation(&self, u: &PayoffMatrix) -> f64 {
        let v = self.attacker_value;
        let rows = (0..u.dim()).map(|i| v - u.row_payoff(i, &self.attacker));
        let cols = (0..u.dim()).map(|j| u.col_payoff(j, &self.defender) - v);
        rows.chain(cols).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn shift(u: &PayoffMatrix) -> f64 {
    1.0 + u.min_entry().abs()
}

/// Attacker's maxmin strategy: maximize `rho` subject to
/// `rho <= sum_j U_ij alpha_j` for every defender row `i`.
pub fn solve_maxmin(u: &PayoffMatrix) -> Result<(MixedStrategy, f64), GameError> {
    let d = u.dim();
    if u.is_constant() {
        return Ok((MixedStrategy::uniform(d), u.get(0, 0)));
    }
    let c = shift(u);
    let mut objective = vec![0.0; d + 1];
    objective[d] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    for i in 0..d {
        let mut row: Vec<f64> = (0..d).map(|j| -(u.get(i, j) + c)).collect();
        row.push(1.0);
        lp = lp.subject_to(row, Relation::LessEq, 0.0);
    }
    let mut simplex = vec![1.0; d];
    simplex.push(0.0);
    lp = lp.subject_to(simplex, Relation::Equal, 1.0);

    let sol = lp.solve()?;
    let alpha = MixedStrategy::from_raw(&sol.x[..d])?;
    Ok((alpha, sol.x[d] - c))
}

/// Defender's minimax strategy: minimize `phi` subject to
/// `sum_i U_ij beta_i <= phi` for every attacker column `j`.
pub fn solve_minimax(u: &PayoffMatrix) -> Result<(MixedStrategy, f64), GameError> {
    let d = u.dim();
    if u.is_constant() {
        return Ok((MixedStrategy::uniform(d), u.get(0, 0)));
    }
    let c = shift(u);
    let mut objective = vec![0.0; d + 1];
    objective[d] = 1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    for j in 0..d {
        let mut row: Vec<f64> = (0..d).map(|i| u.get(i, j) + c).collect();
        row.push(-1.0);
        lp = lp.subject_to(row, Relation::LessEq, 0.0);
    }
    let mut simplex = vec![1.0; d];
    simplex.push(0.0);
    lp = lp.subject_to(simplex, Relation::Equal, 1.0);

    let sol = lp.solve()?;
    let beta = MixedStrategy::from_raw(&sol.x[..d])?;
    Ok((beta, sol.x[d] - c))
}

/// Solve both sides and check that their values agree.
pub fn solve_game(u: &PayoffMatrix) -> Result<GameSolution, GameError> {
    let (attacker, attacker_value) = solve_maxmin(u)?;
    let (defender, defender_value) = solve_minimax(u)?;
    let gap = (attacker_value - defender_value).abs();
    if gap > DUALITY_TOLERANCE * attacker_value.abs().max(1.0) {
        return Err(GameError::DualityGap { attacker_value, defender_value });
    }
    Ok(GameSolution { attacker, defender, attacker_value, defender_value })
}

/// Closed-form solution of a diagonal game with impacts `u`.
///
/// With all impacts positive both players weight lane `i` by `1/u_i`, and the
/// value is the harmonic term `1 / sum(1/u_k)`. Any zero impact pins the value
/// at 0; the defender then spreads over the zero-impact lanes.
pub fn diagonal_closed_form(u: &[f64]) -> Result<GameSolution, GameError> {
    if u.is_empty() {
        return Err(GameError::Empty);
    }
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(GameError::InvalidInput { index, value });
    }
    let n = u.len();
    let zeros: Vec<usize> = (0..n).filter(|&i| u[i] == 0.0).collect();
    if !zeros.is_empty() {
        return Ok(GameSolution {
            attacker: MixedStrategy::uniform(n),
            defender: MixedStrategy::uniform_over(n, &zeros),
            attacker_value: 0.0,
            defender_value: 0.0,
        });
    }
    let inv_sum: f64 = u.iter().map(|x| 1.0 / x).sum();
    let probs: Vec<f64> = u.iter().map(|x| (1.0 / x) / inv_sum).collect();
    let strategy = MixedStrategy { probs };
    let value = 1.0 / inv_sum;
    Ok(GameSolution {
        attacker: strategy.clone(),
        defender: strategy,
        attacker_value: value,
        defender_value: value,
    })
}
