//! Embedded linear programming with exact dual extraction, plus
//! branch-and-bound for mixed-binary programs.
//!
//! The solver is a bounded-variable two-phase revised simplex kept
//! deliberately dense: every problem in this library is desk scale and the
//! priority is exact duals and deterministic pivoting, not sparse
//! performance. Duals follow the sensitivity convention: for a
//! minimization, the dual of row `i` is the derivative of the optimal value
//! with respect to that row's right-hand side, so duals of `>=` rows are
//! nonnegative and duals of `<=` rows are nonpositive.

mod milp;
mod simplex;

pub use milp::{solve_milp, solve_milp_warm};

use serde::{Deserialize, Serialize};

/// Row comparison operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowOp {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub op: RowOp,
    pub rhs: f64,
    pub name: String,
}

/// A linear program `min c·v` subject to rows `G v {<=,=,>=} g` and box
/// bounds on `v`. Bounds may be infinite; a variable with both bounds
/// infinite is free.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub(crate) cost: Vec<f64>,
    pub(crate) lb: Vec<f64>,
    pub(crate) ub: Vec<f64>,
    pub(crate) rows: Vec<Row>,
    pub(crate) col_names: Vec<String>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a column; returns its index.
    pub fn add_col(&mut self, cost: f64, lb: f64, ub: f64) -> usize {
        self.add_named_col("", cost, lb, ub)
    }

    pub fn add_named_col(&mut self, name: &str, cost: f64, lb: f64, ub: f64) -> usize {
        debug_assert!(lb <= ub, "column bounds crossed: [{lb}, {ub}]");
        self.cost.push(cost);
        self.lb.push(lb);
        self.ub.push(ub);
        self.col_names.push(name.to_string());
        self.cost.len() - 1
    }

    /// Add a row; returns its index. Coefficients with duplicate column
    /// indices are summed.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, op: RowOp, rhs: f64) -> usize {
        self.add_named_row("", coeffs, op, rhs)
    }

    pub fn add_named_row(
        &mut self,
        name: &str,
        coeffs: Vec<(usize, f64)>,
        op: RowOp,
        rhs: f64,
    ) -> usize {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs;
        sorted.sort_by_key(|&(j, _)| j);
        for (j, v) in sorted {
            debug_assert!(j < self.cost.len(), "row references unknown column {j}");
            if let Some(last) = merged.last_mut() {
                if last.0 == j {
                    last.1 += v;
                    continue;
                }
            }
            merged.push((j, v));
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.rows.push(Row {
            coeffs: merged,
            op,
            rhs,
            name: name.to_string(),
        });
        self.rows.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_bounds(&mut self, col: usize, lb: f64, ub: f64) {
        self.lb[col] = lb;
        self.ub[col] = ub;
    }

    pub fn bounds(&self, col: usize) -> (f64, f64) {
        (self.lb[col], self.ub[col])
    }

    pub fn cost_coeff(&self, col: usize) -> f64 {
        self.cost[col]
    }

    /// Add `delta` to a column's objective coefficient.
    pub fn add_cost(&mut self, col: usize, delta: f64) {
        self.cost[col] += delta;
    }

    pub(crate) fn cost_mut(&mut self) -> &mut [f64] {
        &mut self.cost
    }

    /// Evaluate `c·v` for a candidate point.
    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.cost.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// Maximum violation of rows and bounds at a candidate point.
    pub fn infeasibility(&self, v: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, (&l, &u)) in self.lb.iter().zip(&self.ub).enumerate() {
            worst = worst.max(l - v[j]).max(v[j] - u);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * v[j]).sum();
            let viol = match row.op {
                RowOp::Le => lhs - row.rhs,
                RowOp::Ge => row.rhs - lhs,
                RowOp::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Text dump in an LP-like format with 12-significant-digit fixed-point
    /// numbers, for external cross-checking.
    pub fn to_lp_text(&self) -> String {
        use crate::fmt::sig;
        use std::fmt::Write;
        let cname = |j: usize| {
            if self.col_names[j].is_empty() {
                format!("v{j}")
            } else {
                self.col_names[j].clone()
            }
        };
        let mut s = String::new();
        s.push_str("minimize\n ");
        let mut first = true;
        for (j, &c) in self.cost.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let _ = write!(s, "{}{} {}", if first { "" } else { " + " }, sig(c), cname(j));
            first = false;
        }
        if first {
            s.push('0');
        }
        s.push_str("\nsubject to\n");
        for (i, row) in self.rows.iter().enumerate() {
            let rname = if row.name.is_empty() {
                format!("r{i}")
            } else {
                row.name.clone()
            };
            let _ = write!(s, " {rname}:");
            for &(j, a) in &row.coeffs {
                let _ = write!(s, " + {} {}", sig(a), cname(j));
            }
            let op = match row.op {
                RowOp::Le => "<=",
                RowOp::Eq => "=",
                RowOp::Ge => ">=",
            };
            let _ = writeln!(s, " {op} {}", sig(row.rhs));
        }
        s.push_str("bounds\n");
        for j in 0..self.num_cols() {
            let _ = writeln!(s, " {} <= {} <= {}", sig(self.lb[j]), cname(j), sig(self.ub[j]));
        }
        s.push_str("end\n");
        s
    }
}

/// A linear program plus a designated set of binary columns.
#[derive(Debug, Clone)]
pub struct MixedProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

impl MixedProgram {
    pub fn new(lp: LinearProgram, binaries: Vec<usize>) -> Self {
        debug_assert!(binaries.iter().all(|&j| j < lp.num_cols()));
        Self { lp, binaries }
    }
}

/// Solve status of an LP or MILP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve. On `Optimal` the primal is feasible to `feas_tol`,
/// duals satisfy the sign convention row-wise, and the strong-duality gap is
/// within `dual_gap_tol` of zero (verified in debug builds on every solve).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row, sensitivity convention (see module docs).
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

impl LpSolution {
    pub(crate) fn non_optimal(status: LpStatus) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solver failure distinct from a well-posed infeasible/unbounded answer.
#[derive(Debug, Clone, thiserror::Error)]
pub enum SolverError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("node limit exceeded; best bound {best_bound}")]
    NodeLimit { best_bound: f64 },
}

/// All numerical tolerances and limits in one place.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Primal feasibility tolerance on row and bound residuals.
    pub feas_tol: f64,
    /// Dual feasibility (reduced-cost) tolerance.
    pub opt_tol: f64,
    /// Pivot magnitude below which a column entry is treated as zero.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degen_limit: usize,
    /// Pivots between basis refactorizations.
    pub refactor_every: usize,
    /// Hard cap on simplex pivots per phase.
    pub max_pivots: usize,
    /// Integrality tolerance for binaries.
    pub int_tol: f64,
    /// Branch-and-bound node cap.
    pub node_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-10,
            degen_limit: 50,
            refactor_every: 100,
            max_pivots: 500_000,
            int_tol: 1e-6,
            node_limit: 200_000,
        }
    }
}

/// Solve a linear program.
pub fn solve_lp(lp: &LinearProgram, cfg: &SolverConfig) -> Result<LpSolution, SolverError> {
    simplex::solve(lp, cfg)
}

#[cfg(test)]
mod tests;
