//! Inner approximation of the worst-case cost-to-go functions by convex
//! combinations of evaluated candidate points.
//!
//! A pool holds `(state, value)` pairs. The induced function at a state is
//! the cheapest convex combination of pool values whose states combine to
//! that state, which realizes the lower convex envelope implicitly through
//! an LP. Pools are seeded with the `N+1` vertices of a simplex enclosing
//! the state box (shifted when lower limits are positive), so the
//! combination system is feasible at every in-box state from the first
//! iteration and the bounding property never breaks.

use crate::lpsolve::{self, LinearProgram, LpStatus, RowOp, SolverConfig};
use crate::model::StageForm;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Where a candidate point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateOrigin {
    Initialization,
    Generated { iteration: usize },
}

/// State/value pair of the inner approximation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidatePoint {
    pub state: Vec<f64>,
    pub value: f64,
    pub origin: CandidateOrigin,
}

/// Per-stage candidate collection; always contains its initialization
/// points, never duplicates a state after 1e-9 rounding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidatePool {
    pub points: Vec<CandidatePoint>,
    pub n_init: usize,
}

fn state_key(state: &[f64]) -> Vec<i64> {
    state.iter().map(|&x| (x / 1e-9).round() as i64).collect()
}

/// Build the `N+1` initialization points spanning the box `[lower, upper]`:
/// the shifted simplex vertices `lower + beta * e_n` with
/// `beta = sum(upper - lower)`, plus `lower` itself, all carrying the
/// a-priori valid value `v0`.
pub fn init_candidates(lower: &[f64], upper: &[f64], v0: f64) -> CandidatePool {
    assert_eq!(lower.len(), upper.len());
    let n = lower.len();
    let beta: f64 = lower.iter().zip(upper).map(|(&l, &u)| u - l).sum();
    let mut points = Vec::with_capacity(n + 1);
    if beta > 0.0 {
        for k in 0..n {
            let mut state = lower.to_vec();
            state[k] += beta;
            points.push(CandidatePoint {
                state,
                value: v0,
                origin: CandidateOrigin::Initialization,
            });
        }
    }
    points.push(CandidatePoint {
        state: lower.to_vec(),
        value: v0,
        origin: CandidateOrigin::Initialization,
    });
    let n_init = points.len();
    CandidatePool { points, n_init }
}

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.state.len())
    }
}

/// Add `(anchor, value)` to the pool, keeping the induced function
/// pointwise non-increasing: an existing point at the same state keeps the
/// smaller value, anything else is appended. Returns whether the pool
/// changed.
pub fn update_envelope(
    pool: &mut CandidatePool,
    anchor: &[f64],
    value: f64,
    iteration: usize,
) -> bool {
    let key = state_key(anchor);
    for p in &mut pool.points {
        if state_key(&p.state) == key {
            if value < p.value {
                p.value = value;
                p.origin = CandidateOrigin::Generated { iteration };
                return true;
            }
            return false;
        }
    }
    pool.points.push(CandidatePoint {
        state: anchor.to_vec(),
        value,
        origin: CandidateOrigin::Generated { iteration },
    });
    true
}

/// Evaluate the induced upper function at a state: the combination LP over
/// the pool alone. Errors if the state cannot be combined (outside the
/// enclosing simplex).
pub fn upper_value_at(pool: &CandidatePool, state: &[f64], cfg: &SolverConfig) -> Result<f64> {
    let mut lp = LinearProgram::new();
    let lambdas: Vec<usize> = pool
        .points
        .iter()
        .map(|p| lp.add_col(p.value, 0.0, f64::INFINITY))
        .collect();
    for (n, &target) in state.iter().enumerate() {
        lp.add_row(
            pool.points
                .iter()
                .zip(&lambdas)
                .map(|(p, &j)| (j, p.state[n]))
                .collect(),
            RowOp::Eq,
            target,
        );
    }
    lp.add_row(lambdas.iter().map(|&j| (j, 1.0)).collect(), RowOp::Eq, 1.0);
    let sol = lpsolve::solve_lp(&lp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "combination system infeasible at state {state:?}"
        )));
    }
    Ok(sol.objective)
}

/// Whether the convex-combination system over the pool is feasible at a
/// state.
pub fn combination_feasible(pool: &CandidatePool, state: &[f64], cfg: &SolverConfig) -> bool {
    upper_value_at(pool, state, cfg).is_ok()
}

/// Result of a primal upper-bound stage solve.
#[derive(Debug, Clone)]
pub struct UpperStageSolution {
    pub value: f64,
    pub dispatch: Vec<f64>,
    pub state: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Solve the primal upper-bound problem of stage `t`: the stage LP with
/// its state expressed as a convex combination of the pool's candidate
/// points, paying the combination of their values.
///
/// Feasible for any in-box previous state and scenario by the slack design
/// plus the initialization points; failure is an internal error.
pub fn eval_upper_primal(
    form: &StageForm,
    y_prev_state: &[f64],
    xi: &[f64],
    pool: &CandidatePool,
    cfg: &SolverConfig,
) -> Result<UpperStageSolution> {
    let mut lp = LinearProgram::new();
    for j in 0..form.cost.len() {
        lp.add_col(form.cost[j], form.lb[j], form.ub[j]);
    }
    let lambdas: Vec<usize> = pool
        .points
        .iter()
        .map(|p| lp.add_col(p.value, 0.0, f64::INFINITY))
        .collect();

    let rhs = form.rhs(y_prev_state, xi);
    for (k, row) in form.rows.iter().enumerate() {
        lp.add_named_row(&row.name, row.coeffs.clone(), row.op, rhs[k]);
    }
    let state_cols = form.layout.state_cols();
    for (n, &col) in state_cols.iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = vec![(col, 1.0)];
        coeffs.extend(
            pool.points
                .iter()
                .zip(&lambdas)
                .map(|(p, &j)| (j, -p.state[n])),
        );
        lp.add_row(coeffs, RowOp::Eq, 0.0);
    }
    lp.add_row(lambdas.iter().map(|&j| (j, 1.0)).collect(), RowOp::Eq, 1.0);

    let sol = lpsolve::solve_lp(&lp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "upper stage {} reported {:?}; initialization points should prevent this",
            form.t, sol.status
        )));
    }
    let dispatch = sol.x[..form.cost.len()].to_vec();
    let state = form.state_of(&dispatch);
    let weights = lambdas.iter().map(|&j| sol.x[j]).collect();
    Ok(UpperStageSolution {
        value: sol.objective,
        dispatch,
        state,
        weights,
    })
}
