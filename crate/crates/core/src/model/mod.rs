//! Power-system case description, validation, DC shift factors, and
//! compilation of the dispatch stages into a common matrix form.
//!
//! The physical model is a shift-factor DC network: thermal generators with
//! ramp and output limits, batteries with charge/discharge efficiencies,
//! nodal loads, and renewable injections whose per-stage output lives in a
//! box `[nominal - half_width, nominal + half_width]`, optionally cut by a
//! deviation budget.

mod compile;

pub use compile::{compile, stage_layout, StageForm, StageLayout, StageRow};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

/// Thermal generating unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    /// Fuel cost, currency per MWh.
    pub cost: f64,
    /// One-time startup cost, currency.
    pub startup_cost: f64,
    /// Output limits when committed, MW.
    pub p_min: f64,
    pub p_max: f64,
    /// Ramp rates, MW per hour.
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// Output cap in the startup/shutdown stage, MW.
    pub startup_limit: f64,
    pub shutdown_limit: f64,
    /// Minimum up/down times, stages.
    pub min_up: usize,
    pub min_down: usize,
    pub initial_on: bool,
    /// Output at the stage before the horizon, MW.
    pub initial_output: f64,
}

/// Battery energy storage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Storage {
    pub id: usize,
    pub bus: usize,
    /// Energy limits, MWh.
    pub e_min: f64,
    pub e_max: f64,
    /// Power limits, MW.
    pub p_charge_max: f64,
    pub p_discharge_max: f64,
    /// Efficiencies in (0, 1].
    pub eff_charge: f64,
    pub eff_discharge: f64,
    pub e_initial: f64,
    /// Optional minimum energy at the final stage; unconstrained if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_terminal: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Line {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    /// Flow limit, MW (both directions).
    pub limit: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadPoint {
    pub bus: usize,
    /// Demand per stage, MW.
    pub demand: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Renewable {
    pub id: usize,
    pub bus: usize,
    /// Nominal output per stage, MW.
    pub nominal: Vec<f64>,
    /// Deviation half-width per stage, MW.
    pub half_width: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Horizon {
    /// Number of stages.
    #[serde(rename = "T")]
    pub t: usize,
    pub t_delta_hours: f64,
    pub ref_bus: usize,
}

/// Full physical grid description over the horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemCase {
    pub buses: Vec<usize>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub storages: Vec<Storage>,
    pub loads: Vec<LoadPoint>,
    pub renewables: Vec<Renewable>,
    pub horizon: Horizon,
    /// Optional per-stage deviation budget in [0, number of renewables].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
}

/// Load a case file and validate every invariant.
pub fn load_case<P: AsRef<Path>>(path: P) -> Result<SystemCase> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))?;
    parse_case(&text)
}

/// Parse a case from JSON text and validate it.
pub fn parse_case(text: &str) -> Result<SystemCase> {
    let case: SystemCase = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    case.validate()?;
    Ok(case)
}

fn invalid(component: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Invalid {
        component: component.into(),
        reason: reason.into(),
    }
}

impl SystemCase {
    pub fn num_gens(&self) -> usize {
        self.generators.len()
    }

    pub fn num_storages(&self) -> usize {
        self.storages.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn num_renewables(&self) -> usize {
        self.renewables.len()
    }

    pub fn num_stages(&self) -> usize {
        self.horizon.t
    }

    /// Map from bus id to contiguous index.
    pub fn bus_index(&self) -> HashMap<usize, usize> {
        self.buses.iter().enumerate().map(|(i, &b)| (b, i)).collect()
    }

    /// Total demand at stage `t0` (0-based), MW.
    pub fn stage_demand(&self, t0: usize) -> f64 {
        self.loads.iter().map(|l| l.demand[t0]).sum()
    }

    /// Demand summed over all loads and stages, MW.
    pub fn total_demand(&self) -> f64 {
        (0..self.horizon.t).map(|t0| self.stage_demand(t0)).sum()
    }

    pub fn max_fuel_cost(&self) -> f64 {
        self.generators.iter().fold(0.0, |a, g| a.max(g.cost))
    }

    /// Slack penalty cost coefficient, currency per MWh.
    pub fn penalty_cost(&self, multiplier: f64) -> f64 {
        multiplier * self.max_fuel_cost().max(1.0)
    }

    /// Initial state vector: generator outputs then storage energies.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut y0 = Vec::with_capacity(state_dimension(self));
        y0.extend(self.generators.iter().map(|g| g.initial_output));
        y0.extend(self.storages.iter().map(|s| s.e_initial));
        y0
    }

    /// Physical state-variable bounds ignoring commitments: `[0, p_max]`
    /// per generator, `[e_min, e_max]` per storage.
    pub fn state_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = Vec::with_capacity(state_dimension(self));
        let mut hi = Vec::with_capacity(state_dimension(self));
        for g in &self.generators {
            lo.push(0.0);
            hi.push(g.p_max);
        }
        for s in &self.storages {
            lo.push(s.e_min);
            hi.push(s.e_max);
        }
        (lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.horizon;
        if h.t < 1 {
            return Err(invalid("horizon", "T must be at least 1"));
        }
        if h.t_delta_hours <= 0.0 {
            return Err(invalid("horizon", "t_delta_hours must be positive"));
        }
        let idx = self.bus_index();
        if idx.len() != self.buses.len() {
            return Err(invalid("buses", "duplicate bus ids"));
        }
        if !idx.contains_key(&h.ref_bus) {
            return Err(invalid("horizon", format!("ref_bus {} not a bus", h.ref_bus)));
        }
        for l in &self.lines {
            if !idx.contains_key(&l.from) || !idx.contains_key(&l.to) {
                return Err(invalid(
                    format!("line {}", l.id),
                    "endpoint bus does not exist",
                ));
            }
            if l.susceptance <= 0.0 {
                return Err(invalid(format!("line {}", l.id), "susceptance must be positive"));
            }
            if l.limit <= 0.0 {
                return Err(invalid(format!("line {}", l.id), "flow limit must be positive"));
            }
        }
        for g in &self.generators {
            let name = format!("generator {}", g.id);
            if !idx.contains_key(&g.bus) {
                return Err(invalid(&name, "bus does not exist"));
            }
            if !(0.0 <= g.p_min && g.p_min <= g.p_max) {
                return Err(invalid(&name, "requires 0 <= p_min <= p_max"));
            }
            if g.ramp_up < 0.0 || g.ramp_down < 0.0 {
                return Err(invalid(&name, "ramp rates must be nonnegative"));
            }
            if g.startup_limit < g.p_min || g.shutdown_limit < g.p_min {
                return Err(invalid(&name, "startup/shutdown limits must be >= p_min"));
            }
            if g.min_up < 1 || g.min_down < 1 {
                return Err(invalid(&name, "minimum up/down times must be >= 1"));
            }
            if g.initial_on {
                if g.initial_output < 0.0 || g.initial_output > g.p_max {
                    return Err(invalid(&name, "initial output outside [0, p_max]"));
                }
            } else if g.initial_output != 0.0 {
                return Err(invalid(&name, "initial output must be 0 for an offline unit"));
            }
        }
        for s in &self.storages {
            let name = format!("storage {}", s.id);
            if !idx.contains_key(&s.bus) {
                return Err(invalid(&name, "bus does not exist"));
            }
            if !(0.0 <= s.e_min && s.e_min <= s.e_initial && s.e_initial <= s.e_max) {
                return Err(invalid(&name, "requires 0 <= e_min <= e_initial <= e_max"));
            }
            if s.p_charge_max <= 0.0 || s.p_discharge_max <= 0.0 {
                return Err(invalid(&name, "power limits must be positive"));
            }
            for (label, eff) in [("charge", s.eff_charge), ("discharge", s.eff_discharge)] {
                if !(eff > 0.0 && eff <= 1.0) {
                    return Err(invalid(&name, format!("{label} efficiency outside (0, 1]")));
                }
            }
            if let Some(et) = s.e_terminal {
                if et < s.e_min || et > s.e_max {
                    return Err(invalid(&name, "terminal energy outside [e_min, e_max]"));
                }
            }
        }
        for l in &self.loads {
            if !idx.contains_key(&l.bus) {
                return Err(invalid(format!("load at bus {}", l.bus), "bus does not exist"));
            }
            if l.demand.len() != h.t {
                return Err(invalid(
                    format!("load at bus {}", l.bus),
                    format!("demand has {} stages, horizon has {}", l.demand.len(), h.t),
                ));
            }
        }
        for r in &self.renewables {
            let name = format!("renewable {}", r.id);
            if !idx.contains_key(&r.bus) {
                return Err(invalid(&name, "bus does not exist"));
            }
            if r.nominal.len() != h.t || r.half_width.len() != h.t {
                return Err(invalid(&name, "profile length differs from horizon"));
            }
            if r.half_width.iter().any(|&w| w < 0.0) {
                return Err(invalid(&name, "half-width must be nonnegative"));
            }
        }
        if let Some(b) = self.budget {
            if b < 0.0 || b > self.renewables.len() as f64 {
                return Err(invalid("budget", "must lie in [0, number of renewables]"));
            }
        }
        self.check_connected()?;
        Ok(())
    }

    fn check_connected(&self) -> Result<()> {
        if self.buses.len() <= 1 {
            return Ok(());
        }
        let idx = self.bus_index();
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for l in &self.lines {
            let (f, t) = (idx[&l.from], idx[&l.to]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::Structural("network graph is disconnected".into()))
        }
    }
}

/// State dimension: number of generators plus number of storages.
pub fn state_dimension(case: &SystemCase) -> usize {
    case.num_gens() + case.num_storages()
}

/// Per-stage box bounds on renewable outputs, with optional deviation budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UncertaintySet {
    /// `lower[r][t0]`, MW.
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
    pub nominal: Vec<Vec<f64>>,
    pub budget: Option<f64>,
}

impl UncertaintySet {
    /// Box from the case's renewable profiles: `nominal ± half_width`.
    pub fn from_case(case: &SystemCase) -> Self {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut nominal = Vec::new();
        for r in &case.renewables {
            lower.push(
                r.nominal
                    .iter()
                    .zip(&r.half_width)
                    .map(|(&n, &w)| n - w)
                    .collect(),
            );
            upper.push(
                r.nominal
                    .iter()
                    .zip(&r.half_width)
                    .map(|(&n, &w)| n + w)
                    .collect(),
            );
            nominal.push(r.nominal.clone());
        }
        Self {
            lower,
            upper,
            nominal,
            budget: case.budget,
        }
    }

    /// Degenerate box pinned at the nominal profile.
    pub fn zero_width(case: &SystemCase) -> Self {
        let mut set = Self::from_case(case);
        set.lower = set.nominal.clone();
        set.upper = set.nominal.clone();
        set
    }

    pub fn num_renewables(&self) -> usize {
        self.lower.len()
    }

    pub fn num_stages(&self) -> usize {
        self.lower.first().map_or(0, |v| v.len())
    }

    /// Nominal realization for stage `t0`.
    pub fn nominal_at(&self, t0: usize) -> Vec<f64> {
        self.nominal.iter().map(|v| v[t0]).collect()
    }

    /// Full-horizon nominal path, `path[t0][r]`.
    pub fn nominal_path(&self) -> Vec<Vec<f64>> {
        (0..self.num_stages()).map(|t0| self.nominal_at(t0)).collect()
    }

    /// Budget usage of a stage realization: sum of |deviation|/half_width
    /// over renewables with positive half-width.
    pub fn budget_usage(&self, t0: usize, xi: &[f64]) -> f64 {
        let mut used = 0.0;
        for r in 0..self.num_renewables() {
            let hw = 0.5 * (self.upper[r][t0] - self.lower[r][t0]);
            if hw > 0.0 {
                used += (xi[r] - self.nominal[r][t0]).abs() / hw;
            }
        }
        used
    }

    /// Whether a stage realization lies in the box (and budget, if set).
    pub fn contains(&self, t0: usize, xi: &[f64], tol: f64) -> bool {
        for r in 0..self.num_renewables() {
            if xi[r] < self.lower[r][t0] - tol || xi[r] > self.upper[r][t0] + tol {
                return false;
            }
        }
        match self.budget {
            Some(b) => self.budget_usage(t0, xi) <= b + tol,
            None => true,
        }
    }

    /// Stage-`t0` candidate vertices for exact worst-case search: all corner
    /// combinations, budget-filtered, with nominal coordinates allowed when
    /// a budget is active. Capped at `cap` candidates.
    pub fn stage_vertices(&self, t0: usize, cap: usize) -> Result<Vec<Vec<f64>>> {
        let nr = self.num_renewables();
        if nr == 0 {
            return Ok(vec![Vec::new()]);
        }
        let levels: usize = if self.budget.is_some() { 3 } else { 2 };
        let count = levels.checked_pow(nr as u32).unwrap_or(usize::MAX);
        if count > cap {
            return Err(Error::Resource(format!(
                "{count} candidate vertices at stage {} exceed cap {cap}",
                t0 + 1
            )));
        }
        let mut out = Vec::new();
        let mut xi = vec![0.0; nr];
        self.enumerate_vertices(t0, 0, levels, &mut xi, &mut out);
        Ok(out)
    }

    fn enumerate_vertices(
        &self,
        t0: usize,
        r: usize,
        levels: usize,
        xi: &mut Vec<f64>,
        out: &mut Vec<Vec<f64>>,
    ) {
        if r == xi.len() {
            if self.contains(t0, xi, 1e-9) {
                out.push(xi.clone());
            }
            return;
        }
        let choices = [self.lower[r][t0], self.upper[r][t0], self.nominal[r][t0]];
        let mut seen: [f64; 3] = [f64::NAN; 3];
        for (k, &c) in choices.iter().take(levels).enumerate() {
            if seen[..k].iter().any(|&s| s == c) {
                continue; // degenerate box: identical levels emitted once
            }
            seen[k] = c;
            xi[r] = c;
            self.enumerate_vertices(t0, r + 1, levels, xi, out);
        }
    }
}

/// On/off schedule for generators and charge/discharge mode for storages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentSchedule {
    /// `gen_on[i][t0]`.
    pub gen_on: Vec<Vec<bool>>,
    /// `storage_charging[s][t0]`; true means the charge side is enabled.
    pub storage_charging: Vec<Vec<bool>>,
}

impl CommitmentSchedule {
    pub fn all_on(case: &SystemCase) -> Self {
        Self {
            gen_on: vec![vec![true; case.horizon.t]; case.num_gens()],
            storage_charging: vec![vec![false; case.horizon.t]; case.num_storages()],
        }
    }

    pub fn gen_on_f(&self, i: usize, t0: usize) -> f64 {
        if self.gen_on[i][t0] {
            1.0
        } else {
            0.0
        }
    }

    /// Startup indicator per generator and stage: on at `t` and off at `t-1`.
    pub fn startups(&self, case: &SystemCase) -> Vec<Vec<bool>> {
        self.gen_on
            .iter()
            .zip(&case.generators)
            .map(|(row, g)| {
                let mut prev = g.initial_on;
                row.iter()
                    .map(|&on| {
                        let s = on && !prev;
                        prev = on;
                        s
                    })
                    .collect()
            })
            .collect()
    }

    /// Total startup cost of the schedule.
    pub fn startup_cost(&self, case: &SystemCase) -> f64 {
        self.startups(case)
            .iter()
            .zip(&case.generators)
            .map(|(row, g)| row.iter().filter(|&&s| s).count() as f64 * g.startup_cost)
            .sum()
    }

    /// Check minimum up/down time logic against the case.
    pub fn satisfies_min_times(&self, case: &SystemCase) -> bool {
        let t_len = case.horizon.t;
        for (i, g) in case.generators.iter().enumerate() {
            let mut prev = g.initial_on;
            for t0 in 0..t_len {
                let on = self.gen_on[i][t0];
                if on && !prev {
                    let end = (t0 + g.min_up).min(t_len);
                    if self.gen_on[i][t0..end].iter().any(|&v| !v) {
                        return false;
                    }
                }
                if !on && prev {
                    let end = (t0 + g.min_down).min(t_len);
                    if self.gen_on[i][t0..end].iter().any(|&v| v) {
                        return false;
                    }
                }
                prev = on;
            }
        }
        true
    }
}

/// Shift-factor matrix mapping nodal injections to line flows under the DC
/// model. The reference-bus column is identically zero.
#[derive(Debug, Clone)]
pub struct ShiftFactors {
    /// `factor[l][b]`: flow change on line `l` (from->to positive) per MW
    /// injected at bus index `b`.
    pub factor: Vec<Vec<f64>>,
}

impl ShiftFactors {
    pub fn get(&self, line: usize, bus_idx: usize) -> f64 {
        self.factor[line][bus_idx]
    }
}

/// Compute line/bus shift factors by inverting the reduced susceptance
/// matrix. Fails structurally when the network is disconnected.
pub fn compute_shift_factors(case: &SystemCase) -> Result<ShiftFactors> {
    let idx = case.bus_index();
    let n = case.buses.len();
    let nl = case.lines.len();
    let refi = idx[&case.horizon.ref_bus];

    if nl == 0 {
        return Ok(ShiftFactors {
            factor: vec![vec![0.0; n]; 0],
        });
    }

    // reduced nodal susceptance matrix (reference row/column removed)
    let red: Vec<usize> = (0..n).filter(|&b| b != refi).collect();
    let pos: HashMap<usize, usize> = red.iter().enumerate().map(|(k, &b)| (b, k)).collect();
    let m = red.len();
    let mut bmat = vec![0.0; m * m];
    for l in &case.lines {
        let (f, t) = (idx[&l.from], idx[&l.to]);
        let b = l.susceptance;
        if let Some(&fp) = pos.get(&f) {
            bmat[fp * m + fp] += b;
        }
        if let Some(&tp) = pos.get(&t) {
            bmat[tp * m + tp] += b;
        }
        if let (Some(&fp), Some(&tp)) = (pos.get(&f), pos.get(&t)) {
            bmat[fp * m + tp] -= b;
            bmat[tp * m + fp] -= b;
        }
    }
    let inv = invert(&bmat, m).ok_or_else(|| {
        Error::Structural("singular susceptance matrix; network is disconnected".into())
    })?;

    // theta sensitivity padded with the zero reference row/column
    let theta = |bus: usize, col: usize| -> f64 {
        match (pos.get(&bus), pos.get(&col)) {
            (Some(&bp), Some(&cp)) => inv[bp * m + cp],
            _ => 0.0,
        }
    };

    let mut factor = vec![vec![0.0; n]; nl];
    for (l, line) in case.lines.iter().enumerate() {
        let (f, t) = (idx[&line.from], idx[&line.to]);
        for b in 0..n {
            if b == refi {
                continue; // reference column stays zero
            }
            factor[l][b] = line.susceptance * (theta(f, b) - theta(t, b));
        }
    }
    Ok(ShiftFactors { factor })
}

fn invert(a: &[f64], m: usize) -> Option<Vec<f64>> {
    if m == 0 {
        return Some(Vec::new());
    }
    let mut w = a.to_vec();
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for k in 0..m {
        let mut p = k;
        let mut best = w[k * m + k].abs();
        for i in (k + 1)..m {
            if w[i * m + k].abs() > best {
                best = w[i * m + k].abs();
                p = i;
            }
        }
        if best < 1e-10 {
            return None;
        }
        if p != k {
            for j in 0..m {
                w.swap(k * m + j, p * m + j);
                inv.swap(k * m + j, p * m + j);
            }
        }
        let piv = w[k * m + k];
        for j in 0..m {
            w[k * m + j] /= piv;
            inv[k * m + j] /= piv;
        }
        for i in 0..m {
            if i == k {
                continue;
            }
            let f = w[i * m + k];
            if f == 0.0 {
                continue;
            }
            for j in 0..m {
                w[i * m + j] -= f * w[k * m + j];
                inv[i * m + j] -= f * inv[k * m + j];
            }
        }
    }
    Some(inv)
}
