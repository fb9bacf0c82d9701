//! Worst-case scenario generation from the dualized upper-bound stage
//! problem.
//!
//! Dualizing the inner minimization of the upper-bound stage problem (with
//! variable bounds lifted into rows) gives a maximization whose objective
//! is linear in the duals except for one bilinear term `eta . xi`, where
//! `eta` is the renewable loading of the row duals. Three solvers for that
//! maximization live here:
//!
//! * the McCormick relaxation: each product `eta_r * xi_r` is replaced by
//!   an auxiliary variable fenced by the four envelope inequalities, giving
//!   a single LP whose value over-estimates the exact maximum;
//! * vertex enumeration: the stage value is convex in `xi`, so the box
//!   maximum sits on a vertex; each candidate vertex is evaluated through
//!   the primal upper-bound LP;
//! * a big-M MILP that picks the vertex with binaries, with constants
//!   derived from LP-computed `eta` bounds, never hand-tuned.
//!
//! `eta` bounds are computed once per stage and commitment by auxiliary
//! LPs over the dual-feasible set; pool growth only shrinks that set, so
//! cached bounds stay valid for a whole inner loop.

use crate::lpsolve::{self, LinearProgram, LpStatus, MixedProgram, RowOp, SolverConfig};
use crate::model::{StageForm, UncertaintySet};
use crate::upper::{eval_upper_primal, CandidatePool};
use crate::{Error, Result};

const INF: f64 = f64::INFINITY;

/// Valid bounds on the renewable loading `eta = H^T pi` over the
/// dual-feasible set.
#[derive(Debug, Clone)]
pub struct EtaBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Columns of the dual core shared by every mode.
struct DualCore {
    lp: LinearProgram,
    pi: Vec<usize>,
}

/// Build the dual of the primal upper-bound stage LP, minus any `xi`
/// machinery. Objective terms are negated (the solver minimizes).
fn dual_core(form: &StageForm, pool: &CandidatePool, y_prev_state: &[f64]) -> DualCore {
    let mut lp = LinearProgram::new();
    let rhs0 = form.rhs_no_xi(y_prev_state);

    // row duals
    let pi: Vec<usize> = form
        .rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let (lb, ub) = match row.op {
                RowOp::Ge => (0.0, INF),
                RowOp::Eq => (-INF, INF),
                RowOp::Le => (-INF, 0.0),
            };
            lp.add_named_col(&format!("pi_{k}"), -rhs0[k], lb, ub)
        })
        .collect();
    // bound duals per stage column
    let ncols = form.cost.len();
    let sigma: Vec<usize> = (0..ncols)
        .map(|j| lp.add_col(-form.lb[j], 0.0, INF))
        .collect();
    let rho: Vec<Option<usize>> = (0..ncols)
        .map(|j| {
            if form.ub[j].is_finite() {
                Some(lp.add_col(form.ub[j], 0.0, INF))
            } else {
                None
            }
        })
        .collect();
    // combination-row duals and the convexity dual
    let state_cols = form.layout.state_cols();
    let mu: Vec<usize> = (0..state_cols.len())
        .map(|_| lp.add_col(0.0, -INF, INF))
        .collect();
    let tau = lp.add_named_col("tau", -1.0, -INF, INF);

    // stationarity per stage column: B^T pi + S^T mu + sigma - rho = cost
    let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
    for (k, row) in form.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            col_rows[j].push((pi[k], a));
        }
    }
    for (n, &col) in state_cols.iter().enumerate() {
        col_rows[col].push((mu[n], 1.0));
    }
    for j in 0..ncols {
        let mut coeffs = col_rows[j].clone();
        coeffs.push((sigma[j], 1.0));
        if let Some(r) = rho[j] {
            coeffs.push((r, -1.0));
        }
        lp.add_row(coeffs, RowOp::Eq, form.cost[j]);
    }
    // one inequality per candidate point: tau - Y^T mu <= value
    for p in &pool.points {
        let mut coeffs: Vec<(usize, f64)> = vec![(tau, 1.0)];
        coeffs.extend(mu.iter().zip(&p.state).map(|(&m, &s)| (m, -s)));
        lp.add_row(coeffs, RowOp::Le, p.value);
    }

    DualCore { lp, pi }
}

fn eta_objective(form: &StageForm, pi: &[usize], r: usize) -> Vec<(usize, f64)> {
    form.h_entries
        .iter()
        .filter(|&&(_, rr, _)| rr == r)
        .map(|&(k, _, c)| (pi[k], c))
        .collect()
}

/// LP-tightened bounds on `eta_r` over the dual-feasible set, widened to
/// include zero from below.
pub fn eta_bounds(
    form: &StageForm,
    pool: &CandidatePool,
    y_prev_state: &[f64],
    set: &UncertaintySet,
    cfg: &SolverConfig,
) -> Result<EtaBounds> {
    let nr = set.num_renewables();
    let mut lo = Vec::with_capacity(nr);
    let mut hi = Vec::with_capacity(nr);
    for r in 0..nr {
        let mut bounds = [0.0; 2];
        for (slot, maximize) in [(0usize, false), (1usize, true)] {
            let mut core = dual_core(form, pool, y_prev_state);
            // overwrite the objective: only eta_r matters
            for c in core.lp.cost_mut() {
                *c = 0.0;
            }
            for (col, coeff) in eta_objective(form, &core.pi, r) {
                let sign = if maximize { -1.0 } else { 1.0 };
                core.lp.add_cost(col, sign * coeff);
            }
            let sol = lpsolve::solve_lp(&core.lp, cfg)?;
            if sol.status != LpStatus::Optimal {
                return Err(Error::Internal(format!(
                    "eta bound LP for renewable {r} reported {:?}",
                    sol.status
                )));
            }
            bounds[slot] = if maximize {
                -sol.objective
            } else {
                sol.objective
            };
        }
        lo.push(bounds[0].min(0.0));
        hi.push(bounds[1]);
    }
    Ok(EtaBounds { lo, hi })
}

/// Append the four McCormick envelope rows fencing `theta ~ eta * xi`.
fn mccormick_rows(
    lp: &mut LinearProgram,
    theta: usize,
    eta: &[(usize, f64)],
    xi: usize,
    eta_lo: f64,
    eta_hi: f64,
    xi_lo: f64,
    xi_hi: f64,
) {
    let with_eta = |mut v: Vec<(usize, f64)>, scale: f64| -> Vec<(usize, f64)> {
        v.extend(eta.iter().map(|&(c, a)| (c, -scale * a)));
        v
    };
    // theta >= eta*xi_lo + eta_lo*xi - eta_lo*xi_lo
    lp.add_row(
        with_eta(vec![(theta, 1.0), (xi, -eta_lo)], xi_lo),
        RowOp::Ge,
        -eta_lo * xi_lo,
    );
    // theta >= eta*xi_hi + eta_hi*xi - eta_hi*xi_hi
    lp.add_row(
        with_eta(vec![(theta, 1.0), (xi, -eta_hi)], xi_hi),
        RowOp::Ge,
        -eta_hi * xi_hi,
    );
    // theta <= eta*xi_lo + eta_hi*xi - eta_hi*xi_lo
    lp.add_row(
        with_eta(vec![(theta, 1.0), (xi, -eta_hi)], xi_lo),
        RowOp::Le,
        -eta_hi * xi_lo,
    );
    // theta <= eta*xi_hi + eta_lo*xi - eta_lo*xi_hi
    lp.add_row(
        with_eta(vec![(theta, 1.0), (xi, -eta_lo)], xi_hi),
        RowOp::Le,
        -eta_lo * xi_hi,
    );
}

/// Exact dual value at a fixed scenario; equals the primal upper-bound
/// stage value by strong duality (exercised in tests).
pub fn dual_value_fixed_xi(
    form: &StageForm,
    pool: &CandidatePool,
    y_prev_state: &[f64],
    xi: &[f64],
    cfg: &SolverConfig,
) -> Result<f64> {
    let mut core = dual_core(form, pool, y_prev_state);
    for r in 0..xi.len() {
        for (col, coeff) in eta_objective(form, &core.pi, r) {
            core.lp.add_cost(col, -coeff * xi[r]);
        }
    }
    let sol = lpsolve::solve_lp(&core.lp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "fixed-scenario dual reported {:?}; primal is always feasible",
            sol.status
        )));
    }
    Ok(-sol.objective)
}

/// Solve the McCormick-relaxed worst-case problem. Returns a scenario
/// inside the box (budget-projected when a budget is active) and the
/// relaxed objective, which over-estimates the exact maximum.
pub fn worst_case_mccormick(
    form: &StageForm,
    pool: &CandidatePool,
    set: &UncertaintySet,
    t0: usize,
    y_prev_state: &[f64],
    eta: &EtaBounds,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64)> {
    let nr = set.num_renewables();
    let mut core = dual_core(form, pool, y_prev_state);
    let mut xi_cols = Vec::with_capacity(nr);
    for r in 0..nr {
        let theta = lp_theta(&mut core.lp, r);
        let xi = core.lp.add_named_col(
            &format!("xi_{r}"),
            0.0,
            set.lower[r][t0],
            set.upper[r][t0],
        );
        let eta_terms = eta_objective(form, &core.pi, r);
        mccormick_rows(
            &mut core.lp,
            theta,
            &eta_terms,
            xi,
            eta.lo[r],
            eta.hi[r],
            set.lower[r][t0],
            set.upper[r][t0],
        );
        xi_cols.push(xi);
    }
    if let Some(budget) = set.budget {
        add_budget_rows(&mut core.lp, set, t0, &xi_cols, budget);
    }
    let sol = lpsolve::solve_lp(&core.lp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "McCormick worst-case LP reported {:?}",
            sol.status
        )));
    }
    let mut xi: Vec<f64> = xi_cols
        .iter()
        .enumerate()
        .map(|(r, &c)| sol.x[c].clamp(set.lower[r][t0], set.upper[r][t0]))
        .collect();
    project_to_budget(set, t0, &mut xi);
    Ok((xi, -sol.objective))
}

fn lp_theta(lp: &mut LinearProgram, r: usize) -> usize {
    // maximize sum theta_r: cost -1 in the minimized LP
    lp.add_named_col(&format!("theta_{r}"), -1.0, -INF, INF)
}

fn add_budget_rows(
    lp: &mut LinearProgram,
    set: &UncertaintySet,
    t0: usize,
    xi_cols: &[usize],
    budget: f64,
) {
    let mut dev_cols = Vec::new();
    for (r, &xi) in xi_cols.iter().enumerate() {
        let hw = 0.5 * (set.upper[r][t0] - set.lower[r][t0]);
        if hw <= 0.0 {
            continue;
        }
        let nom = set.nominal[r][t0];
        let d = lp.add_col(0.0, 0.0, 1.0);
        lp.add_row(vec![(d, hw), (xi, -1.0)], RowOp::Ge, -nom);
        lp.add_row(vec![(d, hw), (xi, 1.0)], RowOp::Ge, nom);
        dev_cols.push(d);
    }
    if !dev_cols.is_empty() {
        lp.add_row(dev_cols.iter().map(|&d| (d, 1.0)).collect(), RowOp::Le, budget);
    }
}

/// Round a scenario onto the budget-feasible set by largest-deviation
/// ordering; no-op when no budget is set or it already fits.
fn project_to_budget(set: &UncertaintySet, t0: usize, xi: &mut [f64]) {
    let Some(budget) = set.budget else {
        return;
    };
    if set.budget_usage(t0, xi) <= budget + 1e-9 {
        return;
    }
    let nr = xi.len();
    let mut devs: Vec<(usize, f64, f64)> = Vec::new(); // (r, |dev|/hw, sign)
    for r in 0..nr {
        let hw = 0.5 * (set.upper[r][t0] - set.lower[r][t0]);
        let nom = set.nominal[r][t0];
        if hw > 0.0 {
            let d = (xi[r] - nom) / hw;
            devs.push((r, d.abs(), d.signum()));
        }
        xi[r] = nom;
    }
    devs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut remaining = budget;
    for (r, _, sign) in devs {
        if remaining <= 1e-12 {
            break;
        }
        let hw = 0.5 * (set.upper[r][t0] - set.lower[r][t0]);
        let nom = set.nominal[r][t0];
        let step = remaining.min(1.0);
        xi[r] = nom + sign * step * hw;
        remaining -= step;
    }
}

/// Exact worst case by enumerating candidate vertices through the primal
/// upper-bound LP. Deterministic: ties keep the first vertex in
/// enumeration order.
pub fn worst_case_exact_vertex(
    form: &StageForm,
    pool: &CandidatePool,
    set: &UncertaintySet,
    t0: usize,
    y_prev_state: &[f64],
    vertex_cap: usize,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64)> {
    let vertices = set.stage_vertices(t0, vertex_cap).map_err(|e| match e {
        Error::Resource(msg) => Error::Resource(format!("{msg}; use big-M mode")),
        other => other,
    })?;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for v in vertices {
        let val = eval_upper_primal(form, y_prev_state, &v, pool, cfg)?.value;
        match &best {
            Some((_, b)) if val <= *b => {}
            _ => best = Some((v, val)),
        }
    }
    best.ok_or_else(|| Error::Internal("empty vertex list".into()))
}

/// Exact worst case as a big-M MILP over vertex-selection binaries.
/// Budgeted sets are not supported here; vertex enumeration handles them.
pub fn worst_case_exact_bigm(
    form: &StageForm,
    pool: &CandidatePool,
    set: &UncertaintySet,
    t0: usize,
    y_prev_state: &[f64],
    eta: &EtaBounds,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64)> {
    if set.budget.is_some() {
        return Err(Error::Resource(
            "big-M worst case does not support budgeted sets; use vertex mode".into(),
        ));
    }
    let nr = set.num_renewables();
    let mut core = dual_core(form, pool, y_prev_state);
    let mut z_cols = Vec::with_capacity(nr);
    for r in 0..nr {
        let lo_xi = set.lower[r][t0];
        let hi_xi = set.upper[r][t0];
        let span = hi_xi - lo_xi;
        let (elo, ehi) = (eta.lo[r], eta.hi[r]);
        let eta_terms = eta_objective(form, &core.pi, r);
        // objective contribution: lo_xi * eta_r (always) ...
        for &(c, a) in &eta_terms {
            core.lp.add_cost(c, -lo_xi * a);
        }
        if span <= 0.0 {
            z_cols.push(None);
            continue;
        }
        // ... plus span * w_r where w_r = eta_r * z_r
        let z = core.lp.add_named_col(&format!("z_{r}"), 0.0, 0.0, 1.0);
        let w = core
            .lp
            .add_named_col(&format!("w_{r}"), -span, elo.min(0.0), ehi.max(0.0));
        // w <= ehi z ; w >= elo z
        core.lp.add_row(vec![(w, 1.0), (z, -ehi)], RowOp::Le, 0.0);
        core.lp.add_row(vec![(w, 1.0), (z, -elo)], RowOp::Ge, 0.0);
        // w <= eta - elo (1 - z) ; w >= eta - ehi (1 - z)
        let with_eta = |mut v: Vec<(usize, f64)>| -> Vec<(usize, f64)> {
            v.extend(eta_terms.iter().map(|&(c, a)| (c, -a)));
            v
        };
        core.lp
            .add_row(with_eta(vec![(w, 1.0), (z, -elo)]), RowOp::Le, -elo);
        core.lp
            .add_row(with_eta(vec![(w, 1.0), (z, -ehi)]), RowOp::Ge, -ehi);
        z_cols.push(Some(z));
    }
    let binaries: Vec<usize> = z_cols.iter().flatten().copied().collect();
    let mp = MixedProgram::new(core.lp, binaries);
    let sol = lpsolve::solve_milp(&mp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "big-M worst-case MILP reported {:?}",
            sol.status
        )));
    }
    let xi: Vec<f64> = (0..nr)
        .map(|r| match z_cols[r] {
            Some(z) if sol.x[z] > 0.5 => set.upper[r][t0],
            _ => set.lower[r][t0],
        })
        .collect();
    Ok((xi, -sol.objective))
}
