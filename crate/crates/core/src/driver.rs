//! Orchestration of the three solve modes.
//!
//! The outer loop alternates a commitment master solve with an inner
//! bounding loop on the dispatch stages. Each inner iteration runs a
//! forward pass (worst-case scenario, then the cutting-plane stage solve,
//! walking the state forward) and a backward pass (fresh worst case
//! against the just-updated upper pool, a primal upper evaluation that
//! extends the candidate pool, and a dual cut that extends the cut pool).
//! The inner loop stops when the root bounds meet; the backward scenarios
//! then join the master's scenario set and the outer loop repeats until
//! the commitment reaches a fixed point.
//!
//! Pools are rebuilt at every outer iteration because the stage right-hand
//! sides change with the commitment, which invalidates earlier cuts and
//! candidate values.

use crate::lower::{solve_lower_stage, CutPool};
use crate::lpsolve::SolverConfig;
use crate::model::{
    compile, state_dimension, CommitmentSchedule, StageForm, SystemCase, UncertaintySet,
};
use crate::ucstage::{apply_envelope, solve_master, RobustEnvelope, ScenarioSet};
use crate::upper::{eval_upper_primal, init_candidates, update_envelope, CandidatePool};
use crate::worstcase::{
    eta_bounds, worst_case_exact_bigm, worst_case_exact_vertex, worst_case_mccormick, EtaBounds,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Solve mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Radp,
    Rddp,
    Rfr,
}

/// How worst-case scenarios are generated in the exact modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorstCaseMethod {
    Mccormick,
    Vertex,
    Bigm,
}

/// Run parameters; defaults match the documented scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// Inner-loop relative gap tolerance.
    pub epsilon: f64,
    pub outer_cap: usize,
    pub inner_cap: usize,
    /// Exact-mode scenario method; `radp` always relaxes.
    pub worst_case: WorstCaseMethod,
    /// Slack penalty as a multiple of the maximum fuel cost.
    pub penalty_multiplier: f64,
    pub seed: u64,
    /// Monte-Carlo path count for simulation commands.
    pub paths: usize,
    /// Cap on enumerated scenario vertices per stage.
    pub vertex_cap: usize,
    /// Cap on vertex-tree paths in the exact-oracle computation.
    pub oracle_path_cap: usize,
    pub solver: SolverConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Radp,
            epsilon: 1e-6,
            outer_cap: 100,
            inner_cap: 200,
            worst_case: WorstCaseMethod::Vertex,
            penalty_multiplier: 1e4,
            seed: 7,
            paths: 200,
            vertex_cap: 1 << 20,
            oracle_path_cap: 4096,
            solver: SolverConfig::default(),
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    CommitmentFixedPoint,
    MaxIterations,
    GapConverged,
}

/// One inner-iteration record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub outer: usize,
    pub inner: usize,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub seconds: f64,
}

/// Per-stage cut and candidate pools (index `t0` serves stage `t0+1`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pools {
    pub cuts: Vec<CutPool>,
    pub cands: Vec<CandidatePool>,
}

/// The a-priori valid upper value assigned to initialization candidates at
/// non-terminal stages: recovering any state costs at most the penalty on
/// the whole horizon's demand.
pub fn sentinel_upper_value(case: &SystemCase, penalty: f64) -> f64 {
    penalty * case.total_demand() * case.horizon.t_delta_hours * case.horizon.t as f64
}

/// Fresh pools for one outer iteration.
pub fn make_pools(case: &SystemCase, penalty: f64) -> Pools {
    let t_len = case.horizon.t;
    let (lo, hi) = case.state_bounds();
    let v0 = sentinel_upper_value(case, penalty);
    let cands = (0..t_len)
        .map(|t0| {
            let value = if t0 + 1 == t_len { 0.0 } else { v0 };
            init_candidates(&lo, &hi, value)
        })
        .collect();
    let cuts = (0..t_len).map(|_| CutPool::new()).collect();
    Pools { cuts, cands }
}

/// Full run report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub mode: Mode,
    pub x: CommitmentSchedule,
    pub envelope: RobustEnvelope,
    pub objective_uc: f64,
    pub pools: Pools,
    pub traces: Vec<IterationTrace>,
    pub termination: Termination,
    pub outer_iterations: usize,
    pub config: RunConfig,
}

struct WcContext<'a> {
    method: WorstCaseMethod,
    set: &'a UncertaintySet,
    vertex_cap: usize,
    scfg: &'a SolverConfig,
    eta: Vec<Option<EtaBounds>>,
}

impl<'a> WcContext<'a> {
    fn new(method: WorstCaseMethod, set: &'a UncertaintySet, t_len: usize, vertex_cap: usize, scfg: &'a SolverConfig) -> Self {
        Self {
            method,
            set,
            vertex_cap,
            scfg,
            eta: vec![None; t_len],
        }
    }

    /// Worst-case scenario for stage `t0+1` at the given previous state.
    /// Returns the scenario and, when the method evaluates the primal
    /// upper problem anyway, its value.
    fn scenario(
        &mut self,
        forms: &[StageForm],
        t0: usize,
        y_prev: &[f64],
        pool: &CandidatePool,
    ) -> Result<(Vec<f64>, Option<f64>)> {
        let form = &forms[t0];
        match self.method {
            WorstCaseMethod::Mccormick => {
                if self.eta[t0].is_none() {
                    self.eta[t0] =
                        Some(eta_bounds(form, pool, y_prev, self.set, self.scfg)?);
                }
                let eta = self.eta[t0].as_ref().unwrap();
                let (xi, _relaxed) =
                    worst_case_mccormick(form, pool, self.set, t0, y_prev, eta, self.scfg)?;
                Ok((xi, None))
            }
            WorstCaseMethod::Vertex => {
                let (xi, value) = worst_case_exact_vertex(
                    form,
                    pool,
                    self.set,
                    t0,
                    y_prev,
                    self.vertex_cap,
                    self.scfg,
                )?;
                Ok((xi, Some(value)))
            }
            WorstCaseMethod::Bigm => {
                if self.eta[t0].is_none() {
                    self.eta[t0] =
                        Some(eta_bounds(form, pool, y_prev, self.set, self.scfg)?);
                }
                let eta = self.eta[t0].as_ref().unwrap();
                let (xi, _val) =
                    worst_case_exact_bigm(form, pool, self.set, t0, y_prev, eta, self.scfg)?;
                Ok((xi, None))
            }
        }
    }
}

/// Outcome of one inner bounding loop.
#[derive(Debug, Clone)]
pub struct InnerReport {
    pub converged: bool,
    pub iterations: usize,
    pub lower: f64,
    pub upper: f64,
    /// Backward-pass scenarios of the final iteration, `path[t0][r]`.
    pub bw_path: Vec<Vec<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn inner_loop(
    case: &SystemCase,
    forms: &[StageForm],
    set: &UncertaintySet,
    pools: &mut Pools,
    method: WorstCaseMethod,
    cfg: &RunConfig,
    outer: usize,
    traces: &mut Vec<IterationTrace>,
    clock: &Instant,
) -> Result<InnerReport> {
    let t_len = case.horizon.t;
    let y0 = case.initial_state();
    let n = state_dimension(case);
    let mut wc = WcContext::new(method, set, t_len, cfg.vertex_cap, &cfg.solver);

    let mut root_lower = f64::NEG_INFINITY;
    let mut root_upper = f64::INFINITY;
    let mut bw_path = vec![vec![0.0; set.num_renewables()]; t_len];

    for m2 in 1..=cfg.inner_cap {
        // forward pass: walk the cutting-plane argmins
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(t_len + 1);
        states.push(y0.clone());
        for t0 in 0..t_len {
            let (xi, _) = wc.scenario(forms, t0, &states[t0], &pools.cands[t0])?;
            let sol = solve_lower_stage(
                &forms[t0],
                &states[t0],
                &xi,
                &pools.cuts[t0],
                t0 + 1 == t_len,
                &cfg.solver,
            )?;
            states.push(sol.state);
        }

        // backward pass: refine both pools along the forward trajectory
        for t0 in (0..t_len).rev() {
            let anchor = &states[t0];
            let (xi, wc_value) = wc.scenario(forms, t0, anchor, &pools.cands[t0])?;
            let up_value = match wc_value {
                Some(v) => v,
                None => eval_upper_primal(&forms[t0], anchor, &xi, &pools.cands[t0], &cfg.solver)?
                    .value,
            };
            if t0 >= 1 {
                update_envelope(&mut pools.cands[t0 - 1], anchor, up_value, m2);
            } else {
                root_upper = root_upper.min(up_value);
            }
            let lo = solve_lower_stage(
                &forms[t0],
                anchor,
                &xi,
                &pools.cuts[t0],
                t0 + 1 == t_len,
                &cfg.solver,
            )?;
            if t0 >= 1 {
                let cut = lo.to_cut(&forms[t0], anchor, &xi, m2);
                debug_assert_eq!(cut.coeffs.len(), n);
                pools.cuts[t0 - 1].add(cut);
            } else {
                root_lower = root_lower.max(lo.value);
            }
            bw_path[t0] = xi;
        }

        let gap = (root_upper - root_lower) / root_lower.abs().max(1.0);
        traces.push(IterationTrace {
            outer,
            inner: m2,
            lower: root_lower,
            upper: root_upper,
            gap,
            seconds: clock.elapsed().as_secs_f64(),
        });
        if gap <= cfg.epsilon {
            return Ok(InnerReport {
                converged: true,
                iterations: m2,
                lower: root_lower,
                upper: root_upper,
                bw_path,
            });
        }
    }
    Ok(InnerReport {
        converged: false,
        iterations: cfg.inner_cap,
        lower: root_lower,
        upper: root_upper,
        bw_path,
    })
}

fn exact_method(cfg: &RunConfig) -> WorstCaseMethod {
    match cfg.worst_case {
        WorstCaseMethod::Mccormick => WorstCaseMethod::Vertex,
        other => other,
    }
}

/// Run the inner bounding loop for a fixed commitment with exact worst
/// cases; the converged value is the exact worst-case dispatch cost.
pub fn run_rddp_inner(
    case: &SystemCase,
    x: &CommitmentSchedule,
    set: &UncertaintySet,
    config: &RunConfig,
) -> Result<(Pools, Vec<IterationTrace>, InnerReport)> {
    let penalty = case.penalty_cost(config.penalty_multiplier);
    let forms = compile(case, set, x, penalty)?;
    let mut pools = make_pools(case, penalty);
    let mut traces = Vec::new();
    let clock = Instant::now();
    let report = inner_loop(
        case,
        &forms,
        set,
        &mut pools,
        exact_method(config),
        config,
        1,
        &mut traces,
        &clock,
    )?;
    Ok((pools, traces, report))
}

/// Relaxed-worst-case scheme: the full outer/inner iteration with
/// McCormick scenario generation.
pub fn run_radp(case: &SystemCase, set: &UncertaintySet, config: &RunConfig) -> Result<SolveReport> {
    run_bounded(case, set, config, Mode::Radp)
}

/// Exact-worst-case baseline: identical loop with exact scenarios.
pub fn run_rddp(case: &SystemCase, set: &UncertaintySet, config: &RunConfig) -> Result<SolveReport> {
    run_bounded(case, set, config, Mode::Rddp)
}

/// Dispatch on the configured mode.
pub fn run(case: &SystemCase, set: &UncertaintySet, config: &RunConfig) -> Result<SolveReport> {
    match config.mode {
        Mode::Radp => run_radp(case, set, config),
        Mode::Rddp => run_rddp(case, set, config),
        Mode::Rfr => run_rfr(case, set, config),
    }
}

fn run_bounded(
    case: &SystemCase,
    set: &UncertaintySet,
    config: &RunConfig,
    mode: Mode,
) -> Result<SolveReport> {
    let mut config = config.clone();
    config.mode = mode;
    let method = match mode {
        Mode::Radp => WorstCaseMethod::Mccormick,
        _ => exact_method(&config),
    };
    let penalty = case.penalty_cost(config.penalty_multiplier);
    let clock = Instant::now();

    let mut scenarios = ScenarioSet::new();
    scenarios.append_path(set.nominal_path());

    let mut traces = Vec::new();
    let mut prev: Option<(CommitmentSchedule, MasterState)> = None;
    let mut termination = Termination::MaxIterations;
    let mut outer_done = 0;

    for m1 in 1..=config.outer_cap {
        outer_done = m1;
        let warm = prev.as_ref().map(|(x, _)| x);
        let master = solve_master(case, &scenarios, warm, penalty, &config.solver)?;
        if let Some((px, pstate)) = &prev {
            if *px == master.x {
                termination = Termination::CommitmentFixedPoint;
                return Ok(SolveReport {
                    mode,
                    x: px.clone(),
                    envelope: master.envelope,
                    objective_uc: master.objective,
                    pools: pstate.pools.clone(),
                    traces,
                    termination,
                    outer_iterations: m1,
                    config,
                });
            }
        }
        let forms = compile(case, set, &master.x, penalty)?;
        let mut pools = make_pools(case, penalty);
        let inner = inner_loop(
            case, &forms, set, &mut pools, method, &config, m1, &mut traces, &clock,
        )?;
        if !inner.converged {
            return Ok(SolveReport {
                mode,
                x: master.x,
                envelope: master.envelope,
                objective_uc: master.objective,
                pools,
                traces,
                termination: Termination::MaxIterations,
                outer_iterations: m1,
                config,
            });
        }
        scenarios.append_path(inner.bw_path.clone());
        prev = Some((
            master.x,
            MasterState {
                pools,
                envelope: master.envelope,
                objective: master.objective,
            },
        ));
    }

    // outer cap exhausted; report the last iterate
    let (x, state) = prev.ok_or_else(|| Error::Internal("no outer iteration ran".into()))?;
    Ok(SolveReport {
        mode,
        x,
        envelope: state.envelope,
        objective_uc: state.objective,
        pools: state.pools,
        traces,
        termination,
        outer_iterations: outer_done,
        config,
    })
}

struct MasterState {
    pools: Pools,
    envelope: RobustEnvelope,
    objective: f64,
}

/// Envelope-only baseline: the master loop alone, with worst paths
/// generated stage by stage against the envelope-restricted dispatch and
/// no cost-to-go machinery.
pub fn run_rfr(case: &SystemCase, set: &UncertaintySet, config: &RunConfig) -> Result<SolveReport> {
    let mut config = config.clone();
    config.mode = Mode::Rfr;
    let penalty = case.penalty_cost(config.penalty_multiplier);

    let mut scenarios = ScenarioSet::new();
    scenarios.append_path(set.nominal_path());

    let empty_cuts = CutPool::new();
    let mut prev: Option<CommitmentSchedule> = None;
    let mut termination = Termination::MaxIterations;
    let mut outer_done = 0;
    let mut last: Option<(CommitmentSchedule, RobustEnvelope, f64)> = None;

    for m1 in 1..=config.outer_cap {
        outer_done = m1;
        let master = solve_master(case, &scenarios, prev.as_ref(), penalty, &config.solver)?;
        if prev.as_ref() == Some(&master.x) {
            termination = Termination::CommitmentFixedPoint;
            last = Some((master.x, master.envelope, master.objective));
            break;
        }
        let mut forms = compile(case, set, &master.x, penalty)?;
        apply_envelope(&mut forms, &master.envelope);

        // myopic adversary against the envelope-restricted dispatch
        let mut y_prev = case.initial_state();
        let mut path = Vec::with_capacity(case.horizon.t);
        for t0 in 0..case.horizon.t {
            let mut worst: Option<(Vec<f64>, f64, Vec<f64>)> = None;
            for xi in set.stage_vertices(t0, config.vertex_cap)? {
                let sol =
                    solve_lower_stage(&forms[t0], &y_prev, &xi, &empty_cuts, true, &config.solver)?;
                match &worst {
                    Some((_, v, _)) if sol.value <= *v => {}
                    _ => worst = Some((xi, sol.value, sol.state)),
                }
            }
            let (xi, _, state) =
                worst.ok_or_else(|| Error::Internal("empty vertex list".into()))?;
            path.push(xi);
            y_prev = state;
        }
        scenarios.append_path(path);
        prev = Some(master.x.clone());
        last = Some((master.x, master.envelope, master.objective));
    }

    let (x, envelope, objective) =
        last.ok_or_else(|| Error::Internal("no outer iteration ran".into()))?;
    Ok(SolveReport {
        mode: Mode::Rfr,
        x,
        envelope,
        objective_uc: objective,
        pools: make_pools(case, penalty),
        traces: Vec::new(),
        termination,
        outer_iterations: outer_done,
        config,
    })
}

#[cfg(test)]
mod tests;
