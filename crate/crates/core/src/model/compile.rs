//! Compilation of the physical constraints into per-stage matrix form.
//!
//! Each stage `t` is expressed as
//!
//! ```text
//!   A_t * state(y_{t-1}) + B_t * y_t  {>=,=}  h0 + H_t * xi_t
//! ```
//!
//! with box bounds on `y_t`. `A_t` touches only the previous stage's state
//! variables (generator outputs and storage energies), indexed by state
//! position, never by full column. Nonnegative penalized slack columns on
//! the balance, flow, and ramp rows make every stage feasible from any
//! in-box previous state, so downstream code may treat stage infeasibility
//! as an internal error.

use super::{compute_shift_factors, state_dimension, CommitmentSchedule, SystemCase, UncertaintySet};
use crate::lpsolve::RowOp;
use crate::{Error, Result};

const INF: f64 = f64::INFINITY;

/// Column layout of one dispatch stage.
#[derive(Debug, Clone)]
pub struct StageLayout {
    pub n_gens: usize,
    pub n_storages: usize,
    pub n_lines: usize,
}

impl StageLayout {
    pub fn pg(&self, i: usize) -> usize {
        i
    }
    pub fn sc(&self, s: usize) -> usize {
        self.n_gens + s
    }
    pub fn sd(&self, s: usize) -> usize {
        self.n_gens + self.n_storages + s
    }
    pub fn energy(&self, s: usize) -> usize {
        self.n_gens + 2 * self.n_storages + s
    }
    pub fn shed(&self) -> usize {
        self.n_gens + 3 * self.n_storages
    }
    pub fn spill(&self) -> usize {
        self.shed() + 1
    }
    pub fn flow_relief_up(&self, l: usize) -> usize {
        self.spill() + 1 + l
    }
    pub fn flow_relief_dn(&self, l: usize) -> usize {
        self.spill() + 1 + self.n_lines + l
    }
    pub fn ramp_relief_up(&self, i: usize) -> usize {
        self.spill() + 1 + 2 * self.n_lines + i
    }
    pub fn ramp_relief_dn(&self, i: usize) -> usize {
        self.spill() + 1 + 2 * self.n_lines + self.n_gens + i
    }
    pub fn n_cols(&self) -> usize {
        self.n_gens + 3 * self.n_storages + 2 + 2 * self.n_lines + 2 * self.n_gens
    }
    /// Columns of the state variables, generator outputs then energies.
    pub fn state_cols(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.n_gens).map(|i| self.pg(i)).collect();
        v.extend((0..self.n_storages).map(|s| self.energy(s)));
        v
    }
    /// Columns counted as slack relief in diagnostics.
    pub fn slack_cols(&self) -> Vec<usize> {
        let mut v = vec![self.shed(), self.spill()];
        v.extend((0..self.n_lines).map(|l| self.flow_relief_up(l)));
        v.extend((0..self.n_lines).map(|l| self.flow_relief_dn(l)));
        v.extend((0..self.n_gens).map(|i| self.ramp_relief_up(i)));
        v.extend((0..self.n_gens).map(|i| self.ramp_relief_dn(i)));
        v
    }
}

pub fn stage_layout(case: &SystemCase) -> StageLayout {
    StageLayout {
        n_gens: case.num_gens(),
        n_storages: case.num_storages(),
        n_lines: case.num_lines(),
    }
}

#[derive(Debug, Clone)]
pub struct StageRow {
    pub coeffs: Vec<(usize, f64)>,
    pub op: RowOp,
    pub h0: f64,
    pub name: String,
}

/// One compiled dispatch stage.
#[derive(Debug, Clone)]
pub struct StageForm {
    /// 1-based stage index.
    pub t: usize,
    pub cost: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub rows: Vec<StageRow>,
    /// Entries of `A_t`: (row, previous-state position, coefficient).
    pub a_entries: Vec<(usize, usize, f64)>,
    /// Entries of `H_t`: (row, renewable index, coefficient).
    pub h_entries: Vec<(usize, usize, f64)>,
    pub layout: StageLayout,
}

impl StageForm {
    /// Right-hand side `h0 + H xi - A y_prev_state` for each row.
    pub fn rhs(&self, y_prev_state: &[f64], xi: &[f64]) -> Vec<f64> {
        let mut rhs = self.rhs_no_xi(y_prev_state);
        for &(row, r, c) in &self.h_entries {
            rhs[row] += c * xi[r];
        }
        rhs
    }

    /// Right-hand side with the renewable term left out: `h0 - A y_prev`.
    pub fn rhs_no_xi(&self, y_prev_state: &[f64]) -> Vec<f64> {
        let mut rhs: Vec<f64> = self.rows.iter().map(|r| r.h0).collect();
        for &(row, n, c) in &self.a_entries {
            rhs[row] -= c * y_prev_state[n];
        }
        rhs
    }

    /// Extract the state sub-vector from a full stage solution.
    pub fn state_of(&self, y: &[f64]) -> Vec<f64> {
        self.layout.state_cols().iter().map(|&c| y[c]).collect()
    }

    /// `-A_t^T pi` over state positions: the sensitivity of the stage value
    /// to the previous state.
    pub fn state_subgradient(&self, duals: &[f64]) -> Vec<f64> {
        let n = self.layout.n_gens + self.layout.n_storages;
        let mut g = vec![0.0; n];
        for &(row, nstate, c) in &self.a_entries {
            g[nstate] -= c * duals[row];
        }
        g
    }

    /// Number of slack columns strictly above `tol` in a stage solution.
    pub fn active_slacks(&self, y: &[f64], tol: f64) -> usize {
        self.layout
            .slack_cols()
            .iter()
            .filter(|&&c| y[c] > tol)
            .count()
    }

    /// Replace dispatch-variable boxes with tighter per-stage limits
    /// (robust-envelope operation); slack columns are unaffected.
    pub fn tighten_box(&mut self, col: usize, lb: f64, ub: f64) {
        self.lb[col] = lb;
        self.ub[col] = ub;
    }
}

/// Compile the dispatch stages for a fixed commitment schedule.
///
/// Slack penalty is `penalty` currency per MWh, applied to the balance,
/// flow-relief, and ramp-relief columns.
pub fn compile(
    case: &SystemCase,
    set: &UncertaintySet,
    x: &CommitmentSchedule,
    penalty: f64,
) -> Result<Vec<StageForm>> {
    if set.num_renewables() != case.num_renewables()
        || (case.num_renewables() > 0 && set.num_stages() != case.horizon.t)
    {
        return Err(Error::Invalid {
            component: "uncertainty set".into(),
            reason: "dimensions differ from the case".into(),
        });
    }
    if x.gen_on.len() != case.num_gens()
        || x.gen_on.iter().any(|r| r.len() != case.horizon.t)
        || x.storage_charging.len() != case.num_storages()
        || x.storage_charging.iter().any(|r| r.len() != case.horizon.t)
    {
        return Err(Error::Invalid {
            component: "commitment schedule".into(),
            reason: "dimensions differ from the case".into(),
        });
    }

    let gamma = compute_shift_factors(case)?;
    let bus_idx = case.bus_index();
    let t_delta = case.horizon.t_delta_hours;
    let layout = stage_layout(case);
    let ncols = layout.n_cols();
    let n_state = state_dimension(case);

    let mut forms = Vec::with_capacity(case.horizon.t);
    for t0 in 0..case.horizon.t {
        let t = t0 + 1;
        let mut cost = vec![0.0; ncols];
        let mut lb = vec![0.0; ncols];
        let mut ub = vec![INF; ncols];

        for (i, g) in case.generators.iter().enumerate() {
            cost[layout.pg(i)] = g.cost * t_delta;
            let on = x.gen_on_f(i, t0);
            lb[layout.pg(i)] = on * g.p_min;
            ub[layout.pg(i)] = on * g.p_max;
        }
        for (s, st) in case.storages.iter().enumerate() {
            let charging = if x.storage_charging[s][t0] { 1.0 } else { 0.0 };
            ub[layout.sc(s)] = charging * st.p_charge_max;
            ub[layout.sd(s)] = (1.0 - charging) * st.p_discharge_max;
            lb[layout.energy(s)] = st.e_min;
            ub[layout.energy(s)] = st.e_max;
            if t == case.horizon.t {
                if let Some(et) = st.e_terminal {
                    lb[layout.energy(s)] = st.e_min.max(et);
                }
            }
        }
        for c in layout.slack_cols() {
            cost[c] = penalty * t_delta;
        }

        let mut rows = Vec::new();
        let mut a_entries = Vec::new();
        let mut h_entries = Vec::new();

        // ramp-up: p_t - p_{t-1} <= RU + relief
        for (i, g) in case.generators.iter().enumerate() {
            let x_now = x.gen_on_f(i, t0);
            let x_prev = if t0 == 0 {
                if g.initial_on {
                    1.0
                } else {
                    0.0
                }
            } else {
                x.gen_on_f(i, t0 - 1)
            };
            let ru = g.ramp_up * t_delta * x_prev
                + g.startup_limit * (x_now - x_prev)
                + g.p_max * (1.0 - x_now);
            a_entries.push((rows.len(), i, 1.0));
            rows.push(StageRow {
                coeffs: vec![(layout.pg(i), -1.0), (layout.ramp_relief_up(i), 1.0)],
                op: RowOp::Ge,
                h0: -ru,
                name: format!("ramp_up_g{}_t{}", g.id, t),
            });
        }
        // ramp-down: p_{t-1} - p_t <= RD + relief
        for (i, g) in case.generators.iter().enumerate() {
            let x_now = x.gen_on_f(i, t0);
            let x_prev = if t0 == 0 {
                if g.initial_on {
                    1.0
                } else {
                    0.0
                }
            } else {
                x.gen_on_f(i, t0 - 1)
            };
            let rd = g.ramp_down * t_delta * x_now
                + g.shutdown_limit * (x_prev - x_now)
                + g.p_max * (1.0 - x_prev);
            a_entries.push((rows.len(), i, -1.0));
            rows.push(StageRow {
                coeffs: vec![(layout.pg(i), 1.0), (layout.ramp_relief_dn(i), 1.0)],
                op: RowOp::Ge,
                h0: -rd,
                name: format!("ramp_dn_g{}_t{}", g.id, t),
            });
        }
        // storage dynamics: E_t = E_{t-1} + sc*eff_c*dt - sd*dt/eff_d
        for (s, st) in case.storages.iter().enumerate() {
            a_entries.push((rows.len(), layout.n_gens + s, -1.0));
            rows.push(StageRow {
                coeffs: vec![
                    (layout.energy(s), 1.0),
                    (layout.sc(s), -st.eff_charge * t_delta),
                    (layout.sd(s), t_delta / st.eff_discharge),
                ],
                op: RowOp::Eq,
                h0: 0.0,
                name: format!("energy_s{}_t{}", st.id, t),
            });
        }
        // line flows with relief
        for (l, line) in case.lines.iter().enumerate() {
            let mut inj: Vec<(usize, f64)> = Vec::new();
            for (i, g) in case.generators.iter().enumerate() {
                let f = gamma.get(l, bus_idx[&g.bus]);
                if f != 0.0 {
                    inj.push((layout.pg(i), f));
                }
            }
            for (s, st) in case.storages.iter().enumerate() {
                let f = gamma.get(l, bus_idx[&st.bus]);
                if f != 0.0 {
                    inj.push((layout.sd(s), f));
                    inj.push((layout.sc(s), -f));
                }
            }
            let d_l: f64 = case
                .loads
                .iter()
                .map(|ld| gamma.get(l, bus_idx[&ld.bus]) * ld.demand[t0])
                .sum();
            // upper direction: -inj + relief >= -limit - d_l + sum gamma_r xi_r
            let mut up: Vec<(usize, f64)> =
                inj.iter().map(|&(c, f)| (c, -f)).collect();
            up.push((layout.flow_relief_up(l), 1.0));
            for (r, rn) in case.renewables.iter().enumerate() {
                let f = gamma.get(l, bus_idx[&rn.bus]);
                if f != 0.0 {
                    h_entries.push((rows.len(), r, f));
                }
            }
            rows.push(StageRow {
                coeffs: up,
                op: RowOp::Ge,
                h0: -line.limit - d_l,
                name: format!("flow_up_l{}_t{}", line.id, t),
            });
            // lower direction: inj + relief >= -limit + d_l - sum gamma_r xi_r
            let mut dn = inj.clone();
            dn.push((layout.flow_relief_dn(l), 1.0));
            for (r, rn) in case.renewables.iter().enumerate() {
                let f = gamma.get(l, bus_idx[&rn.bus]);
                if f != 0.0 {
                    h_entries.push((rows.len(), r, -f));
                }
            }
            rows.push(StageRow {
                coeffs: dn,
                op: RowOp::Ge,
                h0: -line.limit + d_l,
                name: format!("flow_dn_l{}_t{}", line.id, t),
            });
        }
        // power balance with shed/spill slacks
        {
            let mut bal: Vec<(usize, f64)> = Vec::new();
            for i in 0..layout.n_gens {
                bal.push((layout.pg(i), 1.0));
            }
            for s in 0..layout.n_storages {
                bal.push((layout.sd(s), 1.0));
                bal.push((layout.sc(s), -1.0));
            }
            bal.push((layout.shed(), 1.0));
            bal.push((layout.spill(), -1.0));
            for r in 0..case.num_renewables() {
                h_entries.push((rows.len(), r, -1.0));
            }
            rows.push(StageRow {
                coeffs: bal,
                op: RowOp::Eq,
                h0: case.stage_demand(t0),
                name: format!("balance_t{}", t),
            });
        }

        debug_assert_eq!(
            rows.len(),
            2 * layout.n_gens + layout.n_storages + 2 * layout.n_lines + 1
        );
        debug_assert!(a_entries.iter().all(|&(_, n, _)| n < n_state));

        forms.push(StageForm {
            t,
            cost,
            lb,
            ub,
            rows,
            a_entries,
            h_entries,
            layout: layout.clone(),
        });
    }
    Ok(forms)
}
