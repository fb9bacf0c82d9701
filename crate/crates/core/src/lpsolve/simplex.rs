//! Two-phase bounded-variable revised simplex.
//!
//! Every row is turned into an equality by a logical column (`<=` gets a
//! slack in `[0, inf)`, `>=` in `(-inf, 0]`, `=` a fixed zero column).
//! Rows whose logical cannot absorb the initial residual get an artificial
//! column; phase 1 minimizes the artificial sum. The basis inverse is dense,
//! updated by pivot row operations and refactorized periodically and at
//! every phase boundary. Pricing is Dantzig with a switch to Bland's rule
//! after a run of degenerate pivots.

use super::{LinearProgram, LpSolution, LpStatus, RowOp, SolverConfig, SolverError};

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq)]
enum VState {
    Basic(usize),
    AtLower,
    AtUpper,
    FreeZero,
}

struct Work<'a> {
    cfg: &'a SolverConfig,
    m: usize,
    n_struct: usize,
    art_start: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    rhs: Vec<f64>,
    state: Vec<VState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    pivots_since_refactor: usize,
}

enum PhaseEnd {
    Converged,
    Unbounded,
    /// Refactorization exposed basic-variable drift; restart more carefully.
    Trouble,
}

pub(crate) fn solve(lp: &LinearProgram, cfg: &SolverConfig) -> Result<LpSolution, SolverError> {
    for j in 0..lp.num_cols() {
        if lp.lb[j] > lp.ub[j] {
            return Ok(LpSolution::non_optimal(LpStatus::Infeasible));
        }
    }
    if let Some(sol) = attempt(lp, cfg)? {
        return Ok(sol);
    }
    // numerical trouble: retry with aggressive refactorization
    let strict = SolverConfig {
        refactor_every: 5,
        ..cfg.clone()
    };
    match attempt(lp, &strict)? {
        Some(sol) => Ok(sol),
        None => Err(SolverError::NumericalBreakdown(
            "basis drift persisted under strict refactorization".into(),
        )),
    }
}

fn attempt(lp: &LinearProgram, cfg: &SolverConfig) -> Result<Option<LpSolution>, SolverError> {
    let mut w = Work::new(lp, cfg);
    let scale = 1.0 + w.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let viol_tol = 1e-7 * scale;
    if w.art_start < w.cols.len() {
        match w.optimize(true)? {
            PhaseEnd::Unbounded => {
                return Err(SolverError::NumericalBreakdown(
                    "phase-1 objective unbounded".into(),
                ))
            }
            PhaseEnd::Trouble => return Ok(None),
            PhaseEnd::Converged => {}
        }
        w.refactor().map_err(|e| {
            SolverError::NumericalBreakdown(format!("refactor after phase 1: {e}"))
        })?;
        if w.max_basic_violation() > viol_tol {
            return Ok(None);
        }
        let p1_obj = w.current_objective();
        if p1_obj > 1e-7 * scale {
            return Ok(Some(LpSolution::non_optimal(LpStatus::Infeasible)));
        }
        w.fix_artificials();
        w.evict_basic_artificials();
        w.refactor().map_err(|e| {
            SolverError::NumericalBreakdown(format!("refactor after eviction: {e}"))
        })?;
    }
    match w.optimize(false)? {
        PhaseEnd::Unbounded => return Ok(Some(LpSolution::non_optimal(LpStatus::Unbounded))),
        PhaseEnd::Trouble => return Ok(None),
        PhaseEnd::Converged => {}
    }
    w.refactor()
        .map_err(|e| SolverError::NumericalBreakdown(format!("final refactor: {e}")))?;
    if w.max_basic_violation() > viol_tol {
        return Ok(None);
    }
    let sol = w.extract(lp);
    #[cfg(debug_assertions)]
    {
        if let Err(msg) = verify(lp, &sol, cfg) {
            panic!("solver postcondition failed: {msg}");
        }
    }
    Ok(Some(sol))
}

impl<'a> Work<'a> {
    fn new(lp: &LinearProgram, cfg: &'a SolverConfig) -> Self {
        let n = lp.num_cols();
        let m = lp.num_rows();

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in lp.rows.iter().enumerate() {
            rhs.push(row.rhs);
            for &(j, a) in &row.coeffs {
                cols[j].push((i, a));
            }
        }
        let mut lb = lp.lb.clone();
        let mut ub = lp.ub.clone();
        let mut cost = lp.cost.clone();

        let mut state = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            state.push(initial_state(lb[j], ub[j]));
        }

        // logical columns
        for (i, row) in lp.rows.iter().enumerate() {
            cols.push(vec![(i, 1.0)]);
            cost.push(0.0);
            let (l, u, st) = match row.op {
                RowOp::Le => (0.0, INF, VState::AtLower),
                RowOp::Ge => (-INF, 0.0, VState::AtUpper),
                RowOp::Eq => (0.0, 0.0, VState::AtLower),
            };
            lb.push(l);
            ub.push(u);
            state.push(st);
        }
        let art_start = n + m;

        // residuals at the nonbasic point
        let mut resid = rhs.clone();
        for (j, st) in state.iter().enumerate().take(n) {
            let v = nb_value_of(*st, lb[j], ub[j]);
            if v != 0.0 {
                for &(i, a) in &cols[j] {
                    resid[i] -= a * v;
                }
            }
        }

        let mut basis = vec![usize::MAX; m];
        let mut xb = vec![0.0; m];
        for i in 0..m {
            let logical = n + i;
            let fits = resid[i] >= lb[logical] && resid[i] <= ub[logical];
            if fits {
                basis[i] = logical;
                state[logical] = VState::Basic(i);
                xb[i] = resid[i];
            } else {
                let sign = if resid[i] >= 0.0 { 1.0 } else { -1.0 };
                cols.push(vec![(i, sign)]);
                cost.push(0.0);
                lb.push(0.0);
                ub.push(INF);
                let art = cols.len() - 1;
                state.push(VState::Basic(i));
                basis[i] = art;
                xb[i] = resid[i] * sign;
            }
        }

        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            // initial basis is logicals (+1) and sign-matched artificials
            let sign = if basis[i] < art_start {
                1.0
            } else {
                cols[basis[i]][0].1
            };
            binv[i * m + i] = sign;
        }

        Work {
            cfg,
            m,
            n_struct: n,
            art_start,
            cols,
            cost,
            lb,
            ub,
            rhs,
            state,
            basis,
            binv,
            xb,
            pivots_since_refactor: 0,
        }
    }

    fn nb_value(&self, j: usize) -> f64 {
        nb_value_of(self.state[j], self.lb[j], self.ub[j])
    }

    fn current_costs(&self, phase1: bool) -> Vec<f64> {
        if phase1 {
            let mut c = vec![0.0; self.cols.len()];
            for j in self.art_start..self.cols.len() {
                c[j] = 1.0;
            }
            c
        } else {
            self.cost.clone()
        }
    }

    fn load_phase2_costs(&mut self) {}

    fn current_objective(&self) -> f64 {
        // phase-1 objective: sum of artificial values
        let mut obj = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            if b >= self.art_start {
                obj += self.xb[i];
            }
        }
        obj
    }

    fn fix_artificials(&mut self) {
        for j in self.art_start..self.cols.len() {
            self.lb[j] = 0.0;
            self.ub[j] = 0.0;
            if !matches!(self.state[j], VState::Basic(_)) {
                self.state[j] = VState::AtLower;
            }
        }
    }

    /// Try to drive artificial columns out of the basis with degenerate
    /// pivots; rows where no replacement column exists are redundant and
    /// keep their artificial basic at zero.
    fn evict_basic_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.art_start {
                continue;
            }
            let mut chosen: Option<(usize, f64)> = None;
            for j in 0..self.art_start {
                if matches!(self.state[j], VState::Basic(_)) {
                    continue;
                }
                let alpha: f64 = self.cols[j]
                    .iter()
                    .map(|&(i, a)| self.binv[r * self.m + i] * a)
                    .sum();
                if alpha.abs() > 1e-5 {
                    chosen = Some((j, alpha));
                    break;
                }
            }
            if let Some((j, _)) = chosen {
                let wcol = self.ftran(j);
                let old = self.basis[r];
                let enter_val = self.nb_value(j);
                self.pivot_update(r, &wcol);
                self.basis[r] = j;
                self.state[j] = VState::Basic(r);
                self.state[old] = VState::AtLower;
                self.xb[r] = enter_val;
            }
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.m];
        for &(i, a) in &self.cols[j] {
            if a == 0.0 {
                continue;
            }
            for r in 0..self.m {
                w[r] += self.binv[r * self.m + i] * a;
            }
        }
        w
    }

    fn duals(&self, costs: &[f64]) -> Vec<f64> {
        let mut pi = vec![0.0; self.m];
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb == 0.0 {
                continue;
            }
            let row = &self.binv[i * self.m..(i + 1) * self.m];
            for (k, &v) in row.iter().enumerate() {
                pi[k] += cb * v;
            }
        }
        pi
    }

    /// Replace linearly dependent basis columns with logical columns of
    /// uncovered rows. Returns whether anything changed. A logical of an
    /// uncovered row can never itself be basic (its single entry would have
    /// covered the row), so the swap always restores full rank.
    fn repair_basis(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (i, &b) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[b] {
                a[r * m + i] = v;
            }
        }
        let mut row_used = vec![false; m];
        let mut dependent: Vec<usize> = Vec::new();
        for k in 0..m {
            let scale = 1.0
                + self.cols[self.basis[k]]
                    .iter()
                    .fold(0.0f64, |acc, &(_, v)| acc.max(v.abs()));
            let mut p = usize::MAX;
            let mut best = 1e-9 * scale;
            for (r, used) in row_used.iter().enumerate() {
                if !used && a[r * m + k].abs() > best {
                    best = a[r * m + k].abs();
                    p = r;
                }
            }
            if p == usize::MAX {
                dependent.push(k);
                continue;
            }
            row_used[p] = true;
            let piv = a[p * m + k];
            for j in (k + 1)..m {
                let f = a[p * m + j] / piv;
                if f == 0.0 {
                    continue;
                }
                for r in 0..m {
                    if r != p {
                        a[r * m + j] -= f * a[r * m + k];
                    }
                }
                a[p * m + j] = 0.0;
            }
        }
        if dependent.is_empty() {
            return false;
        }
        let mut free_rows = (0..m).filter(|&r| !row_used[r]);
        for k in dependent {
            let r = free_rows.next().expect("rank deficit without a free row");
            let old = self.basis[k];
            self.state[old] = initial_state(self.lb[old], self.ub[old]);
            let logical = self.n_struct + r;
            debug_assert!(!matches!(self.state[logical], VState::Basic(_)));
            self.basis[k] = logical;
            self.state[logical] = VState::Basic(k);
        }
        true
    }

    /// Gauss-Jordan inversion of the current basis matrix, repairing rank
    /// deficits by swapping in logical columns.
    fn refactor(&mut self) -> Result<(), String> {
        let m = self.m;
        self.repair_basis();
        let mut a = vec![0.0; m * m];
        for (i, &b) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[b] {
                a[r * m + i] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let mut p = k;
            let mut best = a[k * m + k].abs();
            for i in (k + 1)..m {
                let v = a[i * m + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-12 {
                return Err(format!("singular basis at column {k}"));
            }
            if p != k {
                for j in 0..m {
                    a.swap(k * m + j, p * m + j);
                    inv.swap(k * m + j, p * m + j);
                }
            }
            let piv = a[k * m + k];
            for j in 0..m {
                a[k * m + j] /= piv;
                inv[k * m + j] /= piv;
            }
            for i in 0..m {
                if i == k {
                    continue;
                }
                let f = a[i * m + k];
                if f == 0.0 {
                    continue;
                }
                for j in 0..m {
                    a[i * m + j] -= f * a[k * m + j];
                    inv[i * m + j] -= f * inv[k * m + j];
                }
            }
        }
        self.binv = inv;
        self.recompute_xb();
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn max_basic_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &b) in self.basis.iter().enumerate() {
            worst = worst
                .max(self.lb[b] - self.xb[i])
                .max(self.xb[i] - self.ub[b]);
        }
        worst
    }

    fn recompute_xb(&mut self) {
        let mut eff = self.rhs.clone();
        for j in 0..self.cols.len() {
            if matches!(self.state[j], VState::Basic(_)) {
                continue;
            }
            let v = self.nb_value(j);
            if v != 0.0 {
                for &(i, a) in &self.cols[j] {
                    eff[i] -= a * v;
                }
            }
        }
        for r in 0..self.m {
            let row = &self.binv[r * self.m..(r + 1) * self.m];
            self.xb[r] = row.iter().zip(&eff).map(|(b, e)| b * e).sum();
        }
    }

    fn pivot_update(&mut self, r: usize, wcol: &[f64]) {
        let m = self.m;
        let piv = wcol[r];
        for j in 0..m {
            self.binv[r * m + j] /= piv;
        }
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = wcol[i];
            if f == 0.0 {
                continue;
            }
            for j in 0..m {
                self.binv[i * m + j] -= f * self.binv[r * m + j];
            }
        }
        self.pivots_since_refactor += 1;
    }

    fn optimize(&mut self, phase1: bool) -> Result<PhaseEnd, SolverError> {
        let costs = self.current_costs(phase1);
        let cost_scale = 1.0 + costs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let dual_tol = self.cfg.opt_tol * cost_scale;
        let mut bland = false;
        let mut degen_run = 0usize;

        let drift_tol =
            1e-7 * (1.0 + self.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs())));
        for _pivot in 0..self.cfg.max_pivots {
            if self.pivots_since_refactor >= self.cfg.refactor_every {
                self.refactor()
                    .map_err(SolverError::NumericalBreakdown)?;
                if self.max_basic_violation() > drift_tol {
                    return Ok(PhaseEnd::Trouble);
                }
            }
            let pi = self.duals(&costs);

            // entering selection
            let mut enter: Option<(usize, f64, f64)> = None; // (col, |d|, dir)
            for j in 0..self.cols.len() {
                if matches!(self.state[j], VState::Basic(_)) || self.lb[j] == self.ub[j] {
                    continue;
                }
                if !phase1 && j >= self.art_start {
                    continue;
                }
                let d = costs[j]
                    - self.cols[j]
                        .iter()
                        .map(|&(i, a)| pi[i] * a)
                        .sum::<f64>();
                let dir = match self.state[j] {
                    VState::AtLower if d < -dual_tol => 1.0,
                    VState::AtUpper if d > dual_tol => -1.0,
                    VState::FreeZero if d < -dual_tol => 1.0,
                    VState::FreeZero if d > dual_tol => -1.0,
                    _ => continue,
                };
                if bland {
                    enter = Some((j, d.abs(), dir));
                    break;
                }
                match enter {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => enter = Some((j, d.abs(), dir)),
                }
            }
            let Some((e, _, dir)) = enter else {
                return Ok(PhaseEnd::Converged);
            };

            let wcol = self.ftran(e);

            // two-pass ratio test: pass 1 finds the tolerance-relaxed
            // minimum ratio, pass 2 picks the largest pivot inside it, so
            // a tiny pivot is never chosen when a stable one blocks at an
            // indistinguishable ratio
            let span = self.ub[e] - self.lb[e]; // inf for free columns
            let feas = self.cfg.feas_tol.max(1e-9);
            let mut theta_max = INF;
            let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new(); // (row, cap, |rate|, hit_upper)
            for i in 0..self.m {
                let rate = -dir * wcol[i];
                if rate.abs() <= self.cfg.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let (cap, cap_rel, hit_upper) = if rate < 0.0 {
                    if self.lb[b] == -INF {
                        continue;
                    }
                    let dist = self.xb[i] - self.lb[b];
                    let slack = feas * (1.0 + self.lb[b].abs());
                    (
                        (dist / -rate).max(0.0),
                        ((dist + slack) / -rate).max(0.0),
                        false,
                    )
                } else {
                    if self.ub[b] == INF {
                        continue;
                    }
                    let dist = self.ub[b] - self.xb[i];
                    let slack = feas * (1.0 + self.ub[b].abs());
                    (
                        (dist / rate).max(0.0),
                        ((dist + slack) / rate).max(0.0),
                        true,
                    )
                };
                theta_max = theta_max.min(cap_rel);
                cands.push((i, cap, rate.abs(), hit_upper));
            }
            let mut leave: Option<(usize, bool)> = None;
            let mut limit = INF;
            let mut best_rate = 0.0;
            for &(i, cap, arate, hit_upper) in &cands {
                if cap <= theta_max && arate > best_rate {
                    leave = Some((i, hit_upper));
                    limit = cap;
                    best_rate = arate;
                }
            }

            let step = limit.min(span);
            if step == INF {
                return Ok(PhaseEnd::Unbounded);
            }

            // degenerate-run bookkeeping drives the Bland switch
            if step <= 1e-12 {
                degen_run += 1;
                if degen_run >= self.cfg.degen_limit {
                    bland = true;
                }
            } else {
                degen_run = 0;
                bland = false;
            }

            if span <= limit {
                // bound flip, basis unchanged
                for i in 0..self.m {
                    self.xb[i] -= dir * span * wcol[i];
                }
                self.state[e] = match self.state[e] {
                    VState::AtLower => VState::AtUpper,
                    VState::AtUpper => VState::AtLower,
                    s => s,
                };
                continue;
            }

            let (r, hit_upper) = leave.expect("finite ratio without a leaving row");
            let enter_from = match self.state[e] {
                VState::AtLower => self.lb[e],
                VState::AtUpper => self.ub[e],
                VState::FreeZero => 0.0,
                VState::Basic(_) => unreachable!(),
            };
            for i in 0..self.m {
                self.xb[i] -= dir * step * wcol[i];
            }
            let old = self.basis[r];
            self.state[old] = if self.lb[old] == self.ub[old] {
                VState::AtLower
            } else if hit_upper {
                VState::AtUpper
            } else {
                VState::AtLower
            };
            let small_pivot = wcol[r].abs() < 1e-6;
            self.pivot_update(r, &wcol);
            self.basis[r] = e;
            self.state[e] = VState::Basic(r);
            self.xb[r] = enter_from + dir * step;
            if small_pivot {
                // contain the amplification before it spreads
                self.pivots_since_refactor = self.cfg.refactor_every;
            }
        }
        Err(SolverError::NumericalBreakdown(
            "pivot limit exceeded".into(),
        ))
    }

    fn extract(&mut self, lp: &LinearProgram) -> LpSolution {
        let costs = self.current_costs(false);
        let pi = self.duals(&costs);
        let mut x = vec![0.0; self.n_struct];
        for (j, xv) in x.iter_mut().enumerate() {
            *xv = match self.state[j] {
                VState::Basic(r) => self.xb[r],
                _ => self.nb_value(j),
            };
        }
        let mut reduced = vec![0.0; self.n_struct];
        for (j, rc) in reduced.iter_mut().enumerate() {
            *rc = costs[j]
                - self.cols[j]
                    .iter()
                    .map(|&(i, a)| pi[i] * a)
                    .sum::<f64>();
        }
        let objective = lp.objective_value(&x);
        LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            duals: pi,
            reduced_costs: reduced,
        }
    }
}

fn initial_state(lb: f64, ub: f64) -> VState {
    match (lb > -INF, ub < INF) {
        (true, true) => {
            if lb.abs() <= ub.abs() {
                VState::AtLower
            } else {
                VState::AtUpper
            }
        }
        (true, false) => VState::AtLower,
        (false, true) => VState::AtUpper,
        (false, false) => VState::FreeZero,
    }
}

fn nb_value_of(state: VState, lb: f64, ub: f64) -> f64 {
    match state {
        VState::AtLower => lb,
        VState::AtUpper => ub,
        VState::FreeZero => 0.0,
        VState::Basic(_) => unreachable!("nonbasic value of a basic column"),
    }
}

/// Check the optimality certificate: primal feasibility, dual sign
/// conditions row-wise, complementary slackness, and the strong-duality
/// identity. Used by debug builds on every solve and by tests.
pub(crate) fn verify(
    lp: &LinearProgram,
    sol: &LpSolution,
    cfg: &SolverConfig,
) -> Result<(), String> {
    if sol.status != LpStatus::Optimal {
        return Ok(());
    }
    let scale = 1.0 + sol.objective.abs();
    let infeas = lp.infeasibility(&sol.x);
    if infeas > 1e-8 * scale.max(1.0) {
        // locate the worst violation for the report
        let mut worst = (String::new(), 0.0f64);
        for (j, (&l, &u)) in lp.lb.iter().zip(&lp.ub).enumerate() {
            let v = (l - sol.x[j]).max(sol.x[j] - u);
            if v > worst.1 {
                worst = (format!("bound of column {j} [{l},{u}] at {}", sol.x[j]), v);
            }
        }
        for (i, row) in lp.rows.iter().enumerate() {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * sol.x[j]).sum();
            let v = match row.op {
                RowOp::Le => lhs - row.rhs,
                RowOp::Ge => row.rhs - lhs,
                RowOp::Eq => (lhs - row.rhs).abs(),
            };
            if v > worst.1 {
                worst = (format!("row {i} '{}' lhs {lhs} rhs {}", row.name, row.rhs), v);
            }
        }
        return Err(format!("primal residual {infeas} too large at {}", worst.0));
    }
    let mut dual_obj = 0.0;
    for (i, row) in lp.rows.iter().enumerate() {
        let pi = sol.duals[i];
        match row.op {
            RowOp::Ge if pi < -1e-7 * scale => {
                return Err(format!("row {i} (>=) has negative dual {pi}"))
            }
            RowOp::Le if pi > 1e-7 * scale => {
                return Err(format!("row {i} (<=) has positive dual {pi}"))
            }
            _ => {}
        }
        let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * sol.x[j]).sum();
        let slack = row.rhs - lhs;
        if row.op != RowOp::Eq && (pi * slack).abs() > 1e-7 * scale {
            return Err(format!(
                "row {i} violates complementary slackness: pi={pi} slack={slack}"
            ));
        }
        dual_obj += pi * row.rhs;
    }
    for j in 0..lp.num_cols() {
        let d = sol.reduced_costs[j];
        let at_lb = (sol.x[j] - lp.lb[j]).abs() <= 1e-7 * (1.0 + lp.lb[j].abs());
        let at_ub = (sol.x[j] - lp.ub[j]).abs() <= 1e-7 * (1.0 + lp.ub[j].abs());
        if !at_lb && !at_ub && d.abs() > 1e-6 * scale {
            return Err(format!("interior column {j} has reduced cost {d}"));
        }
        if at_lb && !at_ub && d < -1e-6 * scale {
            return Err(format!("column {j} at lower bound has reduced cost {d}"));
        }
        if at_ub && !at_lb && d > 1e-6 * scale {
            return Err(format!("column {j} at upper bound has reduced cost {d}"));
        }
        // dual objective contribution of finite bounds
        if d != 0.0 {
            let bound = if d > 0.0 { lp.lb[j] } else { lp.ub[j] };
            if bound.is_finite() {
                dual_obj += d * bound;
            }
        }
    }
    let gap = (sol.objective - dual_obj).abs();
    if gap > cfg.feas_tol.max(1e-7) * scale {
        return Err(format!(
            "duality gap {gap} (primal {}, dual {dual_obj})",
            sol.objective
        ));
    }
    Ok(())
}
