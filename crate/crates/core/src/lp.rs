//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Problems are stated over non-negative variables with `<=`, `>=` and `=`
//! rows. Phase one minimizes the sum of artificial variables to find a basic
//! feasible solution; phase two optimizes the real objective from there.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

const PIVOT_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    GreaterEq,
    Equal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    /// A constraint row has the wrong number of coefficients.
    DimensionMismatch { expected: usize, found: usize },
    /// Non-finite coefficient, bound or objective entry.
    NonFinite,
    Infeasible,
    Unbounded,
    /// Pivot count exceeded the safety limit.
    IterationLimit(usize),
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::DimensionMismatch { expected, found } => {
                write!(f, "constraint has {found} coefficients, expected {expected}")
            }
            LpError::NonFinite => f.write_str("non-finite value in linear program"),
            LpError::Infeasible => f.write_str("linear program is infeasible"),
            LpError::Unbounded => f.write_str("linear program is unbounded"),
            LpError::IterationLimit(n) => write!(f, "simplex exceeded {n} pivots"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LpError {}

/// `optimize c.x` subject to the rows, with `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        LinearProgram { sense, objective, constraints: Vec::new() }
    }

    pub fn subject_to(mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        self.constraints.push(Constraint { coefficients, relation, rhs });
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        solve_lp(self)
    }
}

struct Tableau {
    /// `m` rows of `width + 1` entries; the last entry is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// Reduced costs, last entry is minus the current objective.
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
    pivot_limit: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                row[c] = 0.0;
            }
        }
        let factor = self.cost[c];
        if factor != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimize the current cost row over the columns in `allowed`.
    fn run(&mut self, allowed: &[bool]) -> Result<(), LpError> {
        loop {
            if self.pivots >= self.pivot_limit {
                return Err(LpError::IterationLimit(self.pivot_limit));
            }
            // Bland: lowest-index improving column.
            let entering = (0..self.width).find(|&j| allowed[j] && self.cost[j] < -PIVOT_EPS);
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = row[self.width] / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        if ratio < best_ratio && !tie {
                            Some((i, ratio))
                        } else if tie && self.basis[i] < self.basis[best] {
                            Some((i, best_ratio.min(ratio)))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            match leaving {
                Some((r, _)) => self.pivot(r, c),
                None => return Err(LpError::Unbounded),
            }
        }
    }
}

/// Solve `lp` to optimality, reporting infeasible and unbounded problems
/// as distinct errors.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    if lp.objective.iter().any(|c| !c.is_finite()) {
        return Err(LpError::NonFinite);
    }
    for con in &lp.constraints {
        if con.coefficients.len() != n {
            return Err(LpError::DimensionMismatch { expected: n, found: con.coefficients.len() });
        }
        if !con.rhs.is_finite() || con.coefficients.iter().any(|a| !a.is_finite()) {
            return Err(LpError::NonFinite);
        }
    }

    // Normalize to non-negative right-hand sides.
    let rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|con| {
            if con.rhs < 0.0 {
                let flipped = match con.relation {
                    Relation::LessEq => Relation::GreaterEq,
                    Relation::GreaterEq => Relation::LessEq,
                    Relation::Equal => Relation::Equal,
                };
                (con.coefficients.iter().map(|a| -a).collect(), flipped, -con.rhs)
            } else {
                (con.coefficients.clone(), con.relation, con.rhs)
            }
        })
        .collect();

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Equal).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::LessEq).count();
    let width = n + n_slack + n_art;
    let art_start = n + n_slack;

    let mut table = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0usize; m];
    let (mut next_slack, mut next_art) = (n, art_start);
    for (i, (coeffs, relation, rhs)) in rows.iter().enumerate() {
        table[i][..n].copy_from_slice(coeffs);
        table[i][width] = *rhs;
        match relation {
            Relation::LessEq => {
                table[i][next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::GreaterEq => {
                table[i][next_slack] = -1.0;
                next_slack += 1;
                table[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Equal => {
                table[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    let pivot_limit = 1000 + 50 * (m + width) * (m + 1);
    let mut tab = Tableau { rows: table, cost: vec![0.0; width + 1], basis, width, pivots: 0, pivot_limit };

    // Phase one: minimize the sum of artificials.
    if n_art > 0 {
        for j in art_start..width {
            tab.cost[j] = 1.0;
        }
        for i in 0..m {
            if tab.basis[i] >= art_start {
                let row = tab.rows[i].clone();
                for (c, v) in tab.cost.iter_mut().zip(&row) {
                    *c -= v;
                }
            }
        }
        let allowed = vec![true; width];
        tab.run(&allowed)?;
        let infeasibility = -tab.cost[width];
        let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if infeasibility > FEASIBILITY_EPS * scale {
            return Err(LpError::Infeasible);
        }

        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                let col = (0..art_start).find(|&j| tab.rows[i][j].abs() > 1e-9);
                match col {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase two, stated as a minimization.
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; width + 1];
    for (j, c) in lp.objective.iter().enumerate() {
        cost[j] = sign * c;
    }
    let base_cost = cost.clone();
    for (i, row) in tab.rows.iter().enumerate() {
        let cb = base_cost[tab.basis[i]];
        if cb != 0.0 {
            for (c, v) in cost.iter_mut().zip(row) {
                *c -= cb * v;
            }
        }
    }
    for j in art_start..width {
        cost[j] = 0.0;
    }
    tab.cost = cost;
    let mut allowed = vec![true; width];
    for a in allowed.iter_mut().skip(art_start) {
        *a = false;
    }
    tab.run(&allowed)?;

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[i][width].max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { objective, x, pivots: tab.pivots })
}
