//! Outer approximation of the worst-case cost-to-go functions by
//! supporting hyperplanes, and the lower-bound stage solves that both use
//! and generate them.
//!
//! A cut generated at stage `t` from anchor state `y` and scenario `xi`
//! underestimates the stage value as a function of the previous state:
//! the pool for stage `t-1` collects such cuts and the epigraph variable
//! of that stage's solve sits above all of them. With no cuts the
//! epigraph is bounded below by zero, which is valid because every cost
//! coefficient is nonnegative.

use crate::lpsolve::{self, LinearProgram, LpStatus, RowOp, SolverConfig};
use crate::model::StageForm;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// One supporting hyperplane of a worst-case cost-to-go function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cut {
    /// Stage whose solve produced the cut (1-based).
    pub stage: usize,
    /// State at which the cut supports the function.
    pub anchor: Vec<f64>,
    /// Scenario fixed when the cut was generated.
    pub scenario: Vec<f64>,
    /// Stage value at the anchor.
    pub value: f64,
    /// Subgradient with respect to the previous state.
    pub coeffs: Vec<f64>,
    /// Inner iteration that produced the cut.
    pub iteration: usize,
}

impl Cut {
    /// Evaluate the cut at a state.
    pub fn eval(&self, state: &[f64]) -> f64 {
        self.value
            + self
                .coeffs
                .iter()
                .zip(state.iter().zip(&self.anchor))
                .map(|(c, (y, a))| c * (y - a))
                .sum::<f64>()
    }

    fn dedup_key(&self) -> Vec<i64> {
        let q = |x: f64| (x / 1e-9).round() as i64;
        let mut key = vec![q(self.value)];
        key.extend(self.coeffs.iter().map(|&c| q(c)));
        key.extend(self.anchor.iter().map(|&a| q(a)));
        key
    }
}

/// Ordered cut collection with rounded-coefficient deduplication.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CutPool {
    pub cuts: Vec<Cut>,
    #[serde(skip)]
    seen: HashSet<Vec<i64>>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Insert unless an identical cut (after 1e-9 rounding) is present.
    /// Returns whether the pool grew.
    pub fn add(&mut self, cut: Cut) -> bool {
        let key = cut.dedup_key();
        if self.seen.contains(&key) {
            return false;
        }
        self.seen.insert(key);
        self.cuts.push(cut);
        true
    }

    /// Pointwise maximum of the cuts at a state; `0` when empty (the
    /// initialization bound).
    pub fn eval(&self, state: &[f64]) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.eval(state))
            .fold(0.0, f64::max)
    }
}

/// Insert a cut into a pool (pool growth is monotone; duplicates ignored).
pub fn add_cut(pool: &mut CutPool, cut: Cut) -> bool {
    pool.add(cut)
}

/// Result of a lower-bound stage solve.
#[derive(Debug, Clone)]
pub struct LowerStageSolution {
    /// Optimal value including the epigraph term.
    pub value: f64,
    /// Full stage variable vector.
    pub dispatch: Vec<f64>,
    /// State sub-vector of the dispatch.
    pub state: Vec<f64>,
    /// Duals of the stage rows (the rows carrying the previous state).
    pub duals: Vec<f64>,
    /// Epigraph value.
    pub phi: f64,
}

impl LowerStageSolution {
    /// Cut for the previous stage's pool, supported at the solved anchor.
    pub fn to_cut(&self, form: &StageForm, anchor: &[f64], xi: &[f64], iteration: usize) -> Cut {
        Cut {
            stage: form.t,
            anchor: anchor.to_vec(),
            scenario: xi.to_vec(),
            value: self.value,
            coeffs: form.state_subgradient(&self.duals),
            iteration,
        }
    }
}

/// Solve the lower-bound problem of stage `t`: the stage LP plus an
/// epigraph variable over the cut pool. `last_stage` pins the epigraph to
/// zero (no cost beyond the horizon).
///
/// Infeasibility cannot occur with the penalized slack columns; observing
/// it is reported as an internal-consistency error.
pub fn solve_lower_stage(
    form: &StageForm,
    y_prev_state: &[f64],
    xi: &[f64],
    pool: &CutPool,
    last_stage: bool,
    cfg: &SolverConfig,
) -> Result<LowerStageSolution> {
    let mut lp = LinearProgram::new();
    for j in 0..form.cost.len() {
        lp.add_col(form.cost[j], form.lb[j], form.ub[j]);
    }
    let phi = if last_stage {
        lp.add_named_col("phi", 1.0, 0.0, 0.0)
    } else {
        lp.add_named_col("phi", 1.0, 0.0, f64::INFINITY)
    };

    let rhs = form.rhs(y_prev_state, xi);
    for (k, row) in form.rows.iter().enumerate() {
        lp.add_named_row(&row.name, row.coeffs.clone(), row.op, rhs[k]);
    }
    let state_cols = form.layout.state_cols();
    for cut in &pool.cuts {
        // phi >= value + coeffs . (state - anchor)
        let mut coeffs: Vec<(usize, f64)> = vec![(phi, 1.0)];
        let mut rhs_cut = cut.value;
        for (n, &col) in state_cols.iter().enumerate() {
            coeffs.push((col, -cut.coeffs[n]));
            rhs_cut -= cut.coeffs[n] * cut.anchor[n];
        }
        lp.add_row(coeffs, RowOp::Ge, rhs_cut);
    }

    let sol = lpsolve::solve_lp(&lp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "lower stage {} reported {:?}; slack design should prevent this",
            form.t, sol.status
        )));
    }
    let dispatch = sol.x[..form.cost.len()].to_vec();
    let state = form.state_of(&dispatch);
    Ok(LowerStageSolution {
        value: sol.objective,
        phi: sol.x[phi],
        dispatch,
        state,
        duals: sol.duals[..form.rows.len()].to_vec(),
    })
}
