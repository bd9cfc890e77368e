//! Bounded-variable linear programming.
//!
//! Problems are always minimizations. Each row carries a relation and a
//! right-hand side; each column carries a cost and (possibly infinite)
//! bounds. [`solve`] returns primal values together with row duals and
//! column reduced costs, using the convention that a row dual is the
//! derivative of the optimal objective with respect to the row's
//! right-hand side. Under that convention a binding `<=` row has a
//! non-positive dual and a binding `>=` row a non-negative one.

mod format;
mod kkt;
mod simplex;

pub use format::write_lp_format;
pub use kkt::{check_kkt, KktReport};
pub use simplex::{solve, solve_with, SolverOptions};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub label: String,
    pub cost: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    /// Sparse coefficients as `(column, value)`.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_column(&mut self, label: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.columns.push(Column {
            label: label.into(),
            cost,
            lower,
            upper,
        });
        self.columns.len() - 1
    }

    pub fn add_row(
        &mut self,
        label: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row {
            label: label.into(),
            coeffs,
            relation,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Checks finite costs, ordered bounds, in-range indices and unique labels.
    pub fn validate(&self) -> Result<(), String> {
        let mut labels = std::collections::HashSet::new();
        for c in &self.columns {
            if !c.cost.is_finite() {
                return Err(format!("column {}: non-finite cost", c.label));
            }
            if c.lower > c.upper || c.lower == f64::INFINITY || c.upper == f64::NEG_INFINITY {
                return Err(format!("column {}: bounds [{}, {}]", c.label, c.lower, c.upper));
            }
            if !labels.insert(c.label.as_str()) {
                return Err(format!("duplicate column label {}", c.label));
            }
        }
        let mut row_labels = std::collections::HashSet::new();
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(format!("row {}: non-finite rhs", r.label));
            }
            if let Some((j, v)) = r
                .coeffs
                .iter()
                .find(|(j, v)| *j >= self.columns.len() || !v.is_finite())
            {
                return Err(format!("row {}: bad coefficient ({j}, {v})", r.label));
            }
            if !row_labels.insert(r.label.as_str()) {
                return Err(format!("duplicate row label {}", r.label));
            }
        }
        Ok(())
    }

    /// `a_i x` for every row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.columns.iter().zip(x).map(|(c, v)| c.cost * v).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The model failed validation.
    Invalid,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "stopped at the iteration limit",
            LpStatus::Invalid => "invalid",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// One dual per row: derivative of the optimum w.r.t. the row rhs.
    pub duals: Vec<f64>,
    /// `c_j - y^T A_j` per column.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Dual objective `b^T y + sum_j (d_j^+ l_j - d_j^- u_j)`, where the
    /// bound terms use the reduced costs as bound multipliers.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let rows: f64 = lp.rows.iter().zip(&self.duals).map(|(r, y)| r.rhs * y).sum();
        let bounds: f64 = lp
            .columns
            .iter()
            .zip(&self.reduced_costs)
            .zip(&self.x)
            .map(|((c, &d), &x)| {
                if d > 0.0 && c.lower.is_finite() {
                    d * c.lower
                } else if d < 0.0 && c.upper.is_finite() {
                    d * c.upper
                } else {
                    // Multiplier on an infinite bound: only zero is dual-feasible.
                    d * x
                }
            })
            .sum();
        rows + bounds
    }
}
