//! Validation and economics: an exact worst-case oracle at desk scale and
//! Monte-Carlo sequential-dispatch evaluation of converged policies.
//!
//! The oracle exploits convexity of the stage value in the realization:
//! the per-stage maximum sits on a vertex of the box, so worst-case play
//! restricted to per-stage vertex sets is exact. For each first-stage
//! vertex it builds one extensive program over the vertex tree with
//! nonanticipative node decisions and an epigraph over every leaf path,
//! and takes the maximum across the first-stage vertices.

use crate::driver::Pools;
use crate::lower::{solve_lower_stage, CutPool};
use crate::lpsolve::{self, LinearProgram, LpStatus, RowOp, SolverConfig};
use crate::model::{compile, CommitmentSchedule, StageForm, SystemCase, UncertaintySet};
use crate::ucstage::{apply_envelope, RobustEnvelope};
use crate::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Exact worst-case total dispatch cost for a fixed commitment (startup
/// costs excluded). Errors when the vertex tree exceeds `path_cap` paths.
pub fn oracle_worst_case(
    case: &SystemCase,
    x: &CommitmentSchedule,
    set: &UncertaintySet,
    penalty: f64,
    path_cap: usize,
    cfg: &SolverConfig,
) -> Result<f64> {
    let forms = compile(case, set, x, penalty)?;
    let t_len = case.horizon.t;
    let mut vertices = Vec::with_capacity(t_len);
    let mut total_paths: usize = 1;
    for t0 in 0..t_len {
        let v = set.stage_vertices(t0, path_cap)?;
        total_paths = total_paths.saturating_mul(v.len());
        if total_paths > path_cap {
            return Err(Error::Resource(format!(
                "vertex tree has more than {path_cap} paths"
            )));
        }
        vertices.push(v);
    }

    let y0 = case.initial_state();
    let mut best = f64::NEG_INFINITY;
    for v1 in &vertices[0] {
        let value = subtree_value(&forms, &vertices, v1, &y0, cfg)?;
        best = best.max(value);
    }
    Ok(best)
}

/// Worst-path value of the subtree rooted at a fixed first-stage vertex:
/// minimize, over nonanticipative node decisions, the maximum path cost.
fn subtree_value(
    forms: &[StageForm],
    vertices: &[Vec<Vec<f64>>],
    root_xi: &[f64],
    y0: &[f64],
    cfg: &SolverConfig,
) -> Result<f64> {
    let t_len = forms.len();
    let ncols = forms[0].cost.len();

    struct Node {
        t0: usize,
        xi: Vec<f64>,
        parent: Option<usize>,
        col0: usize,
    }
    let mut nodes: Vec<Node> = vec![Node {
        t0: 0,
        xi: root_xi.to_vec(),
        parent: None,
        col0: 0,
    }];
    let mut frontier = vec![0usize];
    for t0 in 1..t_len {
        let mut next = Vec::new();
        for &p in &frontier {
            for xi in &vertices[t0] {
                nodes.push(Node {
                    t0,
                    xi: xi.clone(),
                    parent: Some(p),
                    col0: 0,
                });
                next.push(nodes.len() - 1);
            }
        }
        frontier = next;
    }

    let mut lp = LinearProgram::new();
    for node in nodes.iter_mut() {
        let form = &forms[node.t0];
        node.col0 = lp.num_cols();
        for j in 0..ncols {
            lp.add_col(0.0, form.lb[j], form.ub[j]);
        }
    }
    let z = lp.add_named_col("worst_path_cost", 1.0, 0.0, f64::INFINITY);

    for (idx, node) in nodes.iter().enumerate() {
        let form = &forms[node.t0];
        let state_cols = form.layout.state_cols();
        let rhs = match node.parent {
            None => form.rhs(y0, &node.xi),
            Some(_) => {
                let mut r: Vec<f64> = form.rows.iter().map(|row| row.h0).collect();
                for &(row, rn, c) in &form.h_entries {
                    r[row] += c * node.xi[rn];
                }
                r
            }
        };
        for (k, row) in form.rows.iter().enumerate() {
            let mut coeffs: Vec<(usize, f64)> = row
                .coeffs
                .iter()
                .map(|&(j, a)| (node.col0 + j, a))
                .collect();
            if let Some(p) = node.parent {
                let parent_col0 = nodes[p].col0;
                for &(rk, npos, c) in &form.a_entries {
                    if rk == k {
                        coeffs.push((parent_col0 + state_cols[npos], c));
                    }
                }
            }
            lp.add_row(coeffs, row.op, rhs[k]);
        }
        let _ = idx;
    }
    // one epigraph row per leaf path
    for (idx, node) in nodes.iter().enumerate() {
        if node.t0 + 1 != t_len {
            continue;
        }
        let mut coeffs: Vec<(usize, f64)> = vec![(z, 1.0)];
        let mut walk = Some(idx);
        while let Some(w) = walk {
            let n = &nodes[w];
            let form = &forms[n.t0];
            for (j, &c) in form.cost.iter().enumerate() {
                if c != 0.0 {
                    coeffs.push((n.col0 + j, -c));
                }
            }
            walk = n.parent;
        }
        lp.add_row(coeffs, RowOp::Ge, 0.0);
    }

    let sol = lpsolve::solve_lp(&lp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "vertex-tree program reported {:?}",
            sol.status
        )));
    }
    Ok(sol.objective)
}

/// Minimum dispatch cost over the horizon with the whole realization path
/// fixed and known in advance (the anticipative bound).
pub fn path_extensive_cost(
    case: &SystemCase,
    x: &CommitmentSchedule,
    set: &UncertaintySet,
    path: &[Vec<f64>],
    penalty: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let forms = compile(case, set, x, penalty)?;
    let y0 = case.initial_state();
    let ncols = forms[0].cost.len();
    let mut lp = LinearProgram::new();
    for form in &forms {
        for j in 0..ncols {
            lp.add_col(form.cost[j], form.lb[j], form.ub[j]);
        }
    }
    for (t0, form) in forms.iter().enumerate() {
        let state_cols = form.layout.state_cols();
        let rhs = if t0 == 0 {
            form.rhs(&y0, &path[0])
        } else {
            let mut r: Vec<f64> = form.rows.iter().map(|row| row.h0).collect();
            for &(row, rn, c) in &form.h_entries {
                r[row] += c * path[t0][rn];
            }
            r
        };
        for (k, row) in form.rows.iter().enumerate() {
            let mut coeffs: Vec<(usize, f64)> = row
                .coeffs
                .iter()
                .map(|&(j, a)| (t0 * ncols + j, a))
                .collect();
            if t0 > 0 {
                for &(rk, npos, c) in &form.a_entries {
                    if rk == k {
                        coeffs.push(((t0 - 1) * ncols + state_cols[npos], c));
                    }
                }
            }
            lp.add_row(coeffs, row.op, rhs[k]);
        }
    }
    let sol = lpsolve::solve_lp(&lp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "path-extensive program reported {:?}",
            sol.status
        )));
    }
    Ok(sol.objective)
}

/// Anticipative cross-check of the oracle: the maximum of the extensive
/// cost over all vertex paths. Never exceeds [`oracle_worst_case`].
pub fn oracle_flat_enumeration(
    case: &SystemCase,
    x: &CommitmentSchedule,
    set: &UncertaintySet,
    penalty: f64,
    path_cap: usize,
    cfg: &SolverConfig,
) -> Result<f64> {
    let t_len = case.horizon.t;
    let mut vertices = Vec::with_capacity(t_len);
    let mut total: usize = 1;
    for t0 in 0..t_len {
        let v = set.stage_vertices(t0, path_cap)?;
        total = total.saturating_mul(v.len());
        if total > path_cap {
            return Err(Error::Resource(format!(
                "vertex enumeration has more than {path_cap} paths"
            )));
        }
        vertices.push(v);
    }
    let mut idx = vec![0usize; t_len];
    let mut best = f64::NEG_INFINITY;
    loop {
        let path: Vec<Vec<f64>> = (0..t_len).map(|t0| vertices[t0][idx[t0]].clone()).collect();
        best = best.max(path_extensive_cost(case, x, set, &path, penalty, cfg)?);
        let mut k = 0;
        loop {
            if k == t_len {
                return Ok(best);
            }
            idx[k] += 1;
            if idx[k] < vertices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// A dispatch policy to simulate stage by stage.
pub enum Policy<'a> {
    /// Dispatch by the cutting-plane stage problems with converged pools.
    CutPools {
        x: &'a CommitmentSchedule,
        pools: &'a Pools,
    },
    /// Myopic dispatch inside the robust envelopes.
    Envelope {
        x: &'a CommitmentSchedule,
        envelope: &'a RobustEnvelope,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathOutcome {
    pub path_id: usize,
    /// Startup plus fuel cost, currency.
    pub cost: f64,
    /// Stage-slack activations along the path.
    pub slack_activations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationRun {
    pub seed: u64,
    pub outcomes: Vec<PathOutcome>,
    pub mean_cost: f64,
    pub max_cost: f64,
    pub total_slack_activations: usize,
}

/// Simulate sequential (nonanticipative) dispatch under a policy over
/// seeded uniform box samples; stage decisions see only the current state
/// and realization.
pub fn simulate_policy(
    case: &SystemCase,
    set: &UncertaintySet,
    policy: &Policy,
    n_paths: usize,
    seed: u64,
    penalty: f64,
    cfg: &SolverConfig,
) -> Result<SimulationRun> {
    let (x, forms, pools): (&CommitmentSchedule, Vec<StageForm>, Option<&Pools>) = match policy {
        Policy::CutPools { x, pools } => (x, compile(case, set, x, penalty)?, Some(pools)),
        Policy::Envelope { x, envelope } => {
            let mut f = compile(case, set, x, penalty)?;
            apply_envelope(&mut f, envelope);
            (x, f, None)
        }
    };
    let t_len = case.horizon.t;
    let dt = case.horizon.t_delta_hours;
    let startup = x.startup_cost(case);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = Vec::with_capacity(n_paths);
    let mut total_slacks = 0usize;
    let mut mean = 0.0;
    let mut max_cost = f64::NEG_INFINITY;
    for path_id in 0..n_paths {
        let path: Vec<Vec<f64>> = (0..t_len)
            .map(|t0| {
                (0..set.num_renewables())
                    .map(|r| {
                        let (lo, hi) = (set.lower[r][t0], set.upper[r][t0]);
                        if hi > lo {
                            rng.gen_range(lo..=hi)
                        } else {
                            lo
                        }
                    })
                    .collect()
            })
            .collect();
        let (cost, slacks) = dispatch_path(case, &forms, pools, &path, dt, cfg)?;
        let total = startup + cost;
        mean += total;
        max_cost = max_cost.max(total);
        total_slacks += slacks;
        outcomes.push(PathOutcome {
            path_id,
            cost: total,
            slack_activations: slacks,
        });
    }
    mean /= n_paths.max(1) as f64;
    Ok(SimulationRun {
        seed,
        outcomes,
        mean_cost: mean,
        max_cost,
        total_slack_activations: total_slacks,
    })
}

/// Sequentially dispatch one realization path; returns fuel cost and the
/// slack activation count. Stage `t0` sees only the state and the stage
/// realization.
pub fn dispatch_path(
    case: &SystemCase,
    forms: &[StageForm],
    pools: Option<&Pools>,
    path: &[Vec<f64>],
    dt: f64,
    cfg: &SolverConfig,
) -> Result<(f64, usize)> {
    let t_len = forms.len();
    let empty = CutPool::new();
    let mut y_prev = case.initial_state();
    let mut fuel = 0.0;
    let mut slacks = 0usize;
    for t0 in 0..t_len {
        let (pool, last) = match pools {
            Some(p) => (&p.cuts[t0], t0 + 1 == t_len),
            None => (&empty, true),
        };
        let sol = solve_lower_stage(&forms[t0], &y_prev, &path[t0], pool, last, cfg)?;
        let lay = &forms[t0].layout;
        for (i, g) in case.generators.iter().enumerate() {
            fuel += g.cost * sol.dispatch[lay.pg(i)] * dt;
        }
        slacks += forms[t0].active_slacks(&sol.dispatch, 1e-6);
        // balance residual must close to numerical precision
        let bal: f64 = (0..lay.n_gens).map(|i| sol.dispatch[lay.pg(i)]).sum::<f64>()
            + (0..lay.n_storages)
                .map(|s| sol.dispatch[lay.sd(s)] - sol.dispatch[lay.sc(s)])
                .sum::<f64>()
            + sol.dispatch[lay.shed()]
            - sol.dispatch[lay.spill()]
            + path[t0].iter().sum::<f64>()
            - case.stage_demand(t0);
        if bal.abs() > 1e-7 * (1.0 + case.stage_demand(t0)) {
            return Err(Error::Internal(format!(
                "stage {} balance residual {bal}",
                t0 + 1
            )));
        }
        y_prev = sol.state;
    }
    Ok((fuel, slacks))
}
