//! Commitment-stage master problem with nonanticipative robust-envelope
//! constraints, expanded by representative scenario paths.
//!
//! The master decides the on/off and charge/discharge binaries together
//! with per-stage dispatch envelopes `[min, max]` for every dispatch
//! variable. The envelopes are built so that any stage-wise dispatch kept
//! inside them satisfies the ramp and storage-dynamics couplings for any
//! realization, which is what makes the sequential (nonanticipative)
//! operation safe. Each scenario path in the working set contributes a
//! full recourse block pinned inside the envelopes, and an epigraph
//! variable dominates every block's dispatch cost.

use crate::lpsolve::{self, LinearProgram, LpStatus, MixedProgram, RowOp, SolverConfig};
use crate::model::{StageForm, SystemCase};
use crate::model::{compute_shift_factors, CommitmentSchedule};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

const INF: f64 = f64::INFINITY;

/// Per-stage robust feasible regions of the dispatch decisions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustEnvelope {
    /// `p_min[i][t0]`, MW.
    pub p_min: Vec<Vec<f64>>,
    pub p_max: Vec<Vec<f64>>,
    /// `e_min[s][t0]`, MWh.
    pub e_min: Vec<Vec<f64>>,
    pub e_max: Vec<Vec<f64>>,
    pub sc_min: Vec<Vec<f64>>,
    pub sc_max: Vec<Vec<f64>>,
    pub sd_min: Vec<Vec<f64>>,
    pub sd_max: Vec<Vec<f64>>,
}

impl RobustEnvelope {
    /// Componentwise `min <= max` sanity check.
    pub fn is_ordered(&self, tol: f64) -> bool {
        let ok = |lo: &Vec<Vec<f64>>, hi: &Vec<Vec<f64>>| {
            lo.iter()
                .zip(hi)
                .all(|(l, h)| l.iter().zip(h).all(|(a, b)| a <= &(b + tol)))
        };
        ok(&self.p_min, &self.p_max)
            && ok(&self.e_min, &self.e_max)
            && ok(&self.sc_min, &self.sc_max)
            && ok(&self.sd_min, &self.sd_max)
    }
}

/// Restrict compiled stage boxes to an envelope (dispatch within the
/// robust feasible regions). Slack columns keep their bounds. Pairs that
/// cross by solver roundoff collapse to their midpoint.
pub fn apply_envelope(forms: &mut [StageForm], env: &RobustEnvelope) {
    let ordered = |lo: f64, hi: f64| -> (f64, f64) {
        if lo <= hi {
            (lo, hi)
        } else {
            debug_assert!(lo - hi < 1e-6, "envelope crossed by {}", lo - hi);
            let mid = 0.5 * (lo + hi);
            (mid, mid)
        }
    };
    for (t0, form) in forms.iter_mut().enumerate() {
        let lay = form.layout.clone();
        for i in 0..lay.n_gens {
            let (lo, hi) = ordered(env.p_min[i][t0], env.p_max[i][t0]);
            form.tighten_box(lay.pg(i), lo, hi);
        }
        for s in 0..lay.n_storages {
            let (lo, hi) = ordered(env.sc_min[s][t0], env.sc_max[s][t0]);
            form.tighten_box(lay.sc(s), lo, hi);
            let (lo, hi) = ordered(env.sd_min[s][t0], env.sd_max[s][t0]);
            form.tighten_box(lay.sd(s), lo, hi);
            let (lo, hi) = ordered(env.e_min[s][t0], env.e_max[s][t0]);
            form.tighten_box(lay.energy(s), lo, hi);
        }
    }
}

/// Working set of full-horizon scenario paths (`path[t0][r]`), deduplicated
/// after 1e-9 rounding.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub paths: Vec<Vec<Vec<f64>>>,
    #[serde(skip)]
    seen: HashSet<Vec<i64>>,
}

impl ScenarioSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Add a path unless an identical one is present. Returns growth.
    pub fn append_path(&mut self, path: Vec<Vec<f64>>) -> bool {
        let key: Vec<i64> = path
            .iter()
            .flatten()
            .map(|&x| (x / 1e-9).round() as i64)
            .collect();
        if self.seen.contains(&key) {
            return false;
        }
        self.seen.insert(key);
        self.paths.push(path);
        true
    }
}

/// Master solve output.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub x: CommitmentSchedule,
    pub envelope: RobustEnvelope,
    pub phi0: f64,
    pub objective: f64,
}

struct MasterCols {
    xg: Vec<Vec<usize>>,
    xs: Vec<Vec<usize>>,
    p_min: Vec<Vec<usize>>,
    p_max: Vec<Vec<usize>>,
    e_min: Vec<Vec<usize>>,
    e_max: Vec<Vec<usize>>,
    sc_min: Vec<Vec<usize>>,
    sc_max: Vec<Vec<usize>>,
    sd_min: Vec<Vec<usize>>,
    sd_max: Vec<Vec<usize>>,
    phi0: usize,
}

fn grid(lp: &mut LinearProgram, rows: usize, t: usize, f: impl Fn(&mut LinearProgram) -> usize) -> Vec<Vec<usize>> {
    (0..rows)
        .map(|_| (0..t).map(|_| f(lp)).collect())
        .collect()
}

fn build_master(
    case: &SystemCase,
    paths: &ScenarioSet,
    penalty: f64,
) -> Result<(MixedProgram, MasterCols)> {
    let t_len = case.horizon.t;
    let dt = case.horizon.t_delta_hours;
    let ng = case.num_gens();
    let ns = case.num_storages();
    let gamma = compute_shift_factors(case)?;
    let bus_idx = case.bus_index();

    let mut lp = LinearProgram::new();
    let xg = grid(&mut lp, ng, t_len, |lp| lp.add_col(0.0, 0.0, 1.0));
    let su: Vec<Vec<usize>> = case
        .generators
        .iter()
        .map(|g| {
            (0..t_len)
                .map(|_| lp.add_col(g.startup_cost, 0.0, 1.0))
                .collect()
        })
        .collect();
    let xs = grid(&mut lp, ns, t_len, |lp| lp.add_col(0.0, 0.0, 1.0));

    let p_min: Vec<Vec<usize>> = case
        .generators
        .iter()
        .map(|g| (0..t_len).map(|_| lp.add_col(0.0, 0.0, g.p_max)).collect())
        .collect();
    let p_max: Vec<Vec<usize>> = case
        .generators
        .iter()
        .map(|g| (0..t_len).map(|_| lp.add_col(0.0, 0.0, g.p_max)).collect())
        .collect();
    let e_min: Vec<Vec<usize>> = case
        .storages
        .iter()
        .map(|s| {
            (0..t_len)
                .map(|t0| {
                    let lo = if t0 + 1 == t_len {
                        s.e_min.max(s.e_terminal.unwrap_or(s.e_min))
                    } else {
                        s.e_min
                    };
                    lp.add_col(0.0, lo, s.e_max)
                })
                .collect()
        })
        .collect();
    let e_max: Vec<Vec<usize>> = case
        .storages
        .iter()
        .map(|s| (0..t_len).map(|_| lp.add_col(0.0, s.e_min, s.e_max)).collect())
        .collect();
    let sc_min: Vec<Vec<usize>> = case
        .storages
        .iter()
        .map(|s| (0..t_len).map(|_| lp.add_col(0.0, 0.0, s.p_charge_max)).collect())
        .collect();
    let sc_max: Vec<Vec<usize>> = case
        .storages
        .iter()
        .map(|s| (0..t_len).map(|_| lp.add_col(0.0, 0.0, s.p_charge_max)).collect())
        .collect();
    let sd_min: Vec<Vec<usize>> = case
        .storages
        .iter()
        .map(|s| {
            (0..t_len)
                .map(|_| lp.add_col(0.0, 0.0, s.p_discharge_max))
                .collect()
        })
        .collect();
    let sd_max: Vec<Vec<usize>> = case
        .storages
        .iter()
        .map(|s| {
            (0..t_len)
                .map(|_| lp.add_col(0.0, 0.0, s.p_discharge_max))
                .collect()
        })
        .collect();
    let phi0 = lp.add_named_col("phi0", 1.0, 0.0, INF);

    // commitment logic
    for (i, g) in case.generators.iter().enumerate() {
        let init = if g.initial_on { 1.0 } else { 0.0 };
        for t0 in 0..t_len {
            // startup definition
            if t0 == 0 {
                lp.add_row(
                    vec![(su[i][0], 1.0), (xg[i][0], -1.0)],
                    RowOp::Ge,
                    -init,
                );
            } else {
                lp.add_row(
                    vec![(su[i][t0], 1.0), (xg[i][t0], -1.0), (xg[i][t0 - 1], 1.0)],
                    RowOp::Ge,
                    0.0,
                );
            }
            // minimum up: a startup at t0 pins the unit on
            for d in 1..g.min_up {
                let tau = t0 + d;
                if tau >= t_len {
                    break;
                }
                if t0 == 0 {
                    lp.add_row(
                        vec![(xg[i][tau], 1.0), (xg[i][0], -1.0)],
                        RowOp::Ge,
                        -init,
                    );
                } else {
                    lp.add_row(
                        vec![
                            (xg[i][tau], 1.0),
                            (xg[i][t0], -1.0),
                            (xg[i][t0 - 1], 1.0),
                        ],
                        RowOp::Ge,
                        0.0,
                    );
                }
            }
            // minimum down: a shutdown at t0 pins the unit off
            for d in 1..g.min_down {
                let tau = t0 + d;
                if tau >= t_len {
                    break;
                }
                if t0 == 0 {
                    lp.add_row(
                        vec![(xg[i][tau], -1.0), (xg[i][0], 1.0)],
                        RowOp::Ge,
                        init - 1.0,
                    );
                } else {
                    lp.add_row(
                        vec![
                            (xg[i][tau], -1.0),
                            (xg[i][t0], 1.0),
                            (xg[i][t0 - 1], -1.0),
                        ],
                        RowOp::Ge,
                        -1.0,
                    );
                }
            }
        }
    }

    // generator envelope rows
    for (i, g) in case.generators.iter().enumerate() {
        let init = if g.initial_on { 1.0 } else { 0.0 };
        for t0 in 0..t_len {
            // ramp-up style coupling of the envelope
            if t0 == 0 {
                let rhs = g.p_max + g.initial_output + g.ramp_up * dt * init
                    - g.startup_limit * init;
                lp.add_row(
                    vec![(p_max[i][0], 1.0), (xg[i][0], g.p_max - g.startup_limit)],
                    RowOp::Le,
                    rhs,
                );
                let rhs_dn = g.p_max - g.initial_output + g.shutdown_limit * init
                    - g.p_max * init;
                lp.add_row(
                    vec![
                        (p_min[i][0], -1.0),
                        (xg[i][0], g.shutdown_limit - g.ramp_down * dt),
                    ],
                    RowOp::Le,
                    rhs_dn,
                );
            } else {
                lp.add_row(
                    vec![
                        (p_max[i][t0], 1.0),
                        (p_min[i][t0 - 1], -1.0),
                        (xg[i][t0 - 1], g.startup_limit - g.ramp_up * dt),
                        (xg[i][t0], g.p_max - g.startup_limit),
                    ],
                    RowOp::Le,
                    g.p_max,
                );
                lp.add_row(
                    vec![
                        (p_max[i][t0 - 1], 1.0),
                        (p_min[i][t0], -1.0),
                        (xg[i][t0], g.shutdown_limit - g.ramp_down * dt),
                        (xg[i][t0 - 1], g.p_max - g.shutdown_limit),
                    ],
                    RowOp::Le,
                    g.p_max,
                );
            }
            // commitment scaling and ordering
            lp.add_row(
                vec![(p_min[i][t0], 1.0), (xg[i][t0], -g.p_min)],
                RowOp::Ge,
                0.0,
            );
            lp.add_row(
                vec![(p_max[i][t0], 1.0), (xg[i][t0], -g.p_max)],
                RowOp::Le,
                0.0,
            );
            lp.add_row(
                vec![(p_min[i][t0], 1.0), (p_max[i][t0], -1.0)],
                RowOp::Le,
                0.0,
            );
        }
    }

    // storage envelope rows
    for (s, st) in case.storages.iter().enumerate() {
        for t0 in 0..t_len {
            lp.add_row(
                vec![(sc_max[s][t0], 1.0), (xs[s][t0], -st.p_charge_max)],
                RowOp::Le,
                0.0,
            );
            lp.add_row(
                vec![(sc_min[s][t0], 1.0), (sc_max[s][t0], -1.0)],
                RowOp::Le,
                0.0,
            );
            lp.add_row(
                vec![(sd_max[s][t0], 1.0), (xs[s][t0], st.p_discharge_max)],
                RowOp::Le,
                st.p_discharge_max,
            );
            lp.add_row(
                vec![(sd_min[s][t0], 1.0), (sd_max[s][t0], -1.0)],
                RowOp::Le,
                0.0,
            );
            // worst-direction energy recursions
            let mut lo_row = vec![
                (e_min[s][t0], 1.0),
                (sc_min[s][t0], -st.eff_charge * dt),
                (sd_max[s][t0], dt / st.eff_discharge),
            ];
            let mut hi_row = vec![
                (e_max[s][t0], 1.0),
                (sc_max[s][t0], -st.eff_charge * dt),
                (sd_min[s][t0], dt / st.eff_discharge),
            ];
            let rhs = if t0 == 0 {
                st.e_initial
            } else {
                lo_row.push((e_min[s][t0 - 1], -1.0));
                hi_row.push((e_max[s][t0 - 1], -1.0));
                0.0
            };
            lp.add_row(lo_row, RowOp::Eq, rhs);
            lp.add_row(hi_row, RowOp::Eq, rhs);
            lp.add_row(
                vec![(e_min[s][t0], 1.0), (e_max[s][t0], -1.0)],
                RowOp::Le,
                0.0,
            );
        }
    }

    // per-path recourse blocks
    for path in &paths.paths {
        let mut phi_terms: Vec<(usize, f64)> = vec![(phi0, 1.0)];
        let mut prev_pg: Option<Vec<usize>> = None;
        for t0 in 0..t_len {
            let xi = &path[t0];
            let pg: Vec<usize> = case
                .generators
                .iter()
                .map(|g| lp.add_col(0.0, 0.0, g.p_max))
                .collect();
            let sc: Vec<usize> = case
                .storages
                .iter()
                .map(|s| lp.add_col(0.0, 0.0, s.p_charge_max))
                .collect();
            let sd: Vec<usize> = case
                .storages
                .iter()
                .map(|s| lp.add_col(0.0, 0.0, s.p_discharge_max))
                .collect();
            let shed = lp.add_col(0.0, 0.0, INF);
            let spill = lp.add_col(0.0, 0.0, INF);
            let fr_up: Vec<usize> = (0..case.num_lines())
                .map(|_| lp.add_col(0.0, 0.0, INF))
                .collect();
            let fr_dn: Vec<usize> = (0..case.num_lines())
                .map(|_| lp.add_col(0.0, 0.0, INF))
                .collect();

            for (i, g) in case.generators.iter().enumerate() {
                // inside the envelope
                lp.add_row(vec![(pg[i], 1.0), (p_min[i][t0], -1.0)], RowOp::Ge, 0.0);
                lp.add_row(vec![(pg[i], 1.0), (p_max[i][t0], -1.0)], RowOp::Le, 0.0);
                // explicit ramp rows (implied by the envelopes; kept for safety)
                let init = if g.initial_on { 1.0 } else { 0.0 };
                if t0 == 0 {
                    let rhs_up = g.p_max + g.initial_output + g.ramp_up * dt * init
                        - g.startup_limit * init;
                    lp.add_row(
                        vec![(pg[i], 1.0), (xg[i][0], g.p_max - g.startup_limit)],
                        RowOp::Le,
                        rhs_up,
                    );
                    let rhs_dn = g.p_max - g.initial_output + g.shutdown_limit * init
                        - g.p_max * init;
                    lp.add_row(
                        vec![
                            (pg[i], -1.0),
                            (xg[i][0], g.shutdown_limit - g.ramp_down * dt),
                        ],
                        RowOp::Le,
                        rhs_dn,
                    );
                } else {
                    let prev = prev_pg.as_ref().unwrap()[i];
                    lp.add_row(
                        vec![
                            (pg[i], 1.0),
                            (prev, -1.0),
                            (xg[i][t0 - 1], g.startup_limit - g.ramp_up * dt),
                            (xg[i][t0], g.p_max - g.startup_limit),
                        ],
                        RowOp::Le,
                        g.p_max,
                    );
                    lp.add_row(
                        vec![
                            (prev, 1.0),
                            (pg[i], -1.0),
                            (xg[i][t0], g.shutdown_limit - g.ramp_down * dt),
                            (xg[i][t0 - 1], g.p_max - g.shutdown_limit),
                        ],
                        RowOp::Le,
                        g.p_max,
                    );
                }
            }
            for s in 0..ns {
                lp.add_row(vec![(sc[s], 1.0), (sc_min[s][t0], -1.0)], RowOp::Ge, 0.0);
                lp.add_row(vec![(sc[s], 1.0), (sc_max[s][t0], -1.0)], RowOp::Le, 0.0);
                lp.add_row(vec![(sd[s], 1.0), (sd_min[s][t0], -1.0)], RowOp::Ge, 0.0);
                lp.add_row(vec![(sd[s], 1.0), (sd_max[s][t0], -1.0)], RowOp::Le, 0.0);
            }
            // line flows with the path's realization folded in
            for (l, line) in case.lines.iter().enumerate() {
                let mut inj: Vec<(usize, f64)> = Vec::new();
                for (i, g) in case.generators.iter().enumerate() {
                    let f = gamma.get(l, bus_idx[&g.bus]);
                    if f != 0.0 {
                        inj.push((pg[i], f));
                    }
                }
                for (s, st) in case.storages.iter().enumerate() {
                    let f = gamma.get(l, bus_idx[&st.bus]);
                    if f != 0.0 {
                        inj.push((sd[s], f));
                        inj.push((sc[s], -f));
                    }
                }
                let d_l: f64 = case
                    .loads
                    .iter()
                    .map(|ld| gamma.get(l, bus_idx[&ld.bus]) * ld.demand[t0])
                    .sum();
                let xi_l: f64 = case
                    .renewables
                    .iter()
                    .enumerate()
                    .map(|(r, rn)| gamma.get(l, bus_idx[&rn.bus]) * xi[r])
                    .sum();
                let mut up = inj.clone();
                up.push((fr_up[l], -1.0));
                lp.add_row(up, RowOp::Le, line.limit + d_l - xi_l);
                let mut dn = inj;
                dn.push((fr_dn[l], 1.0));
                lp.add_row(dn, RowOp::Ge, -line.limit + d_l - xi_l);
            }
            // balance
            let mut bal: Vec<(usize, f64)> = Vec::new();
            for &c in &pg {
                bal.push((c, 1.0));
            }
            for s in 0..ns {
                bal.push((sd[s], 1.0));
                bal.push((sc[s], -1.0));
            }
            bal.push((shed, 1.0));
            bal.push((spill, -1.0));
            let xi_sum: f64 = xi.iter().sum();
            lp.add_row(bal, RowOp::Eq, case.stage_demand(t0) - xi_sum);

            // cost contribution of this stage
            for (i, g) in case.generators.iter().enumerate() {
                phi_terms.push((pg[i], -g.cost * dt));
            }
            for &c in [shed, spill].iter().chain(fr_up.iter()).chain(fr_dn.iter()) {
                phi_terms.push((c, -penalty * dt));
            }

            prev_pg = Some(pg);
        }
        lp.add_row(phi_terms, RowOp::Ge, 0.0);
    }

    let mut binaries: Vec<usize> = xg.iter().flatten().copied().collect();
    binaries.extend(xs.iter().flatten().copied());

    let cols = MasterCols {
        xg,
        xs,
        p_min,
        p_max,
        e_min,
        e_max,
        sc_min,
        sc_max,
        sd_min,
        sd_max,
        phi0,
    };
    Ok((MixedProgram::new(lp, binaries), cols))
}

/// Solve the commitment master over the current scenario set. `warm`
/// seeds the incumbent with a previous schedule, keeping restarts
/// deterministic around fixed points.
pub fn solve_master(
    case: &SystemCase,
    paths: &ScenarioSet,
    warm: Option<&CommitmentSchedule>,
    penalty: f64,
    cfg: &SolverConfig,
) -> Result<MasterSolution> {
    if paths.is_empty() {
        return Err(Error::Invalid {
            component: "scenario set".into(),
            reason: "must be seeded with at least one path".into(),
        });
    }
    let (mp, cols) = build_master(case, paths, penalty)?;
    let warm_vec = warm.map(|w| {
        let mut v = vec![0.0; mp.lp.num_cols()];
        for (i, row) in cols.xg.iter().enumerate() {
            for (t0, &c) in row.iter().enumerate() {
                v[c] = w.gen_on_f(i, t0);
            }
        }
        for (s, row) in cols.xs.iter().enumerate() {
            for (t0, &c) in row.iter().enumerate() {
                v[c] = if w.storage_charging[s][t0] { 1.0 } else { 0.0 };
            }
        }
        v
    });
    let sol = match warm_vec {
        Some(v) => lpsolve::solve_milp_warm(&mp, cfg, Some(&v))?,
        None => lpsolve::solve_milp(&mp, cfg)?,
    };
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "master reported {:?}; slack design keeps it feasible",
            sol.status
        )));
    }
    let take = |grid: &Vec<Vec<usize>>| -> Vec<Vec<f64>> {
        grid.iter()
            .map(|row| row.iter().map(|&c| sol.x[c]).collect())
            .collect()
    };
    let x = CommitmentSchedule {
        gen_on: cols
            .xg
            .iter()
            .map(|row| row.iter().map(|&c| sol.x[c] > 0.5).collect())
            .collect(),
        storage_charging: cols
            .xs
            .iter()
            .map(|row| row.iter().map(|&c| sol.x[c] > 0.5).collect())
            .collect(),
    };
    let envelope = RobustEnvelope {
        p_min: take(&cols.p_min),
        p_max: take(&cols.p_max),
        e_min: take(&cols.e_min),
        e_max: take(&cols.e_max),
        sc_min: take(&cols.sc_min),
        sc_max: take(&cols.sc_max),
        sd_min: take(&cols.sd_min),
        sd_max: take(&cols.sd_max),
    };
    debug_assert!(envelope.is_ordered(1e-7));
    Ok(MasterSolution {
        x,
        envelope,
        phi0: sol.x[cols.phi0],
        objective: sol.objective,
    })
}

/// Text dump of the master program for external auditing.
pub fn master_lp_text(case: &SystemCase, paths: &ScenarioSet, penalty: f64) -> Result<String> {
    let (mp, _) = build_master(case, paths, penalty)?;
    Ok(mp.lp.to_lp_text())
}

/// The master as a plain mixed program, for cross-checking its solves
/// against exhaustive enumeration.
pub fn master_program(
    case: &SystemCase,
    paths: &ScenarioSet,
    penalty: f64,
) -> Result<MixedProgram> {
    let (mp, _) = build_master(case, paths, penalty)?;
    Ok(mp)
}
