//! Deterministic random-case generation for desk-scale experiments.
//!
//! Instances follow the texture of transmission test systems scaled down:
//! a connected network, a cheap slow unit plus faster expensive ones,
//! storage sized for intra-horizon arbitrage, sinusoidal demand, and
//! renewables shaped against the load so that storage and look-ahead have
//! value. Generation is a pure function of the spec and seed.

use crate::model::{
    Generator, Horizon, Line, LoadPoint, Renewable, Storage, SystemCase,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub buses: usize,
    pub gens: usize,
    pub storages: usize,
    pub lines: usize,
    pub renewables: usize,
    pub loads: usize,
    pub stages: usize,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            buses: 5,
            gens: 3,
            storages: 1,
            lines: 6,
            renewables: 1,
            loads: 3,
            stages: 3,
            seed: 0,
        }
    }
}

/// Generate a validated case; identical spec and seed give identical
/// output byte for byte.
pub fn generate(spec: &GenSpec) -> SystemCase {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nb = spec.buses.max(1);
    let t_len = spec.stages.max(1);
    let buses: Vec<usize> = (1..=nb).collect();

    // spanning path plus random chords
    let mut lines = Vec::new();
    for b in 1..nb {
        lines.push((b, b + 1, rng.gen_range(5.0..15.0)));
    }
    while lines.len() < spec.lines.max(nb.saturating_sub(1)) && nb >= 2 {
        let f = rng.gen_range(1..=nb);
        let t = rng.gen_range(1..=nb);
        if f != t {
            lines.push((f.min(t), f.max(t), rng.gen_range(5.0..15.0)));
        }
    }

    // demand profile: sinusoidal swing with small noise
    let mut loads = Vec::new();
    let mut peak_total = 0.0f64;
    let mut stage_totals = vec![0.0f64; t_len];
    for k in 0..spec.loads.max(1) {
        let bus = buses[rng.gen_range(0..nb)];
        let base = rng.gen_range(25.0..55.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let demand: Vec<f64> = (0..t_len)
            .map(|t0| {
                let swing =
                    1.0 + 0.3 * (std::f64::consts::TAU * t0 as f64 / t_len as f64 + phase).sin();
                let noise = 1.0 + rng.gen_range(-0.04..0.04);
                (base * swing * noise).max(1.0)
            })
            .collect();
        for (t0, d) in demand.iter().enumerate() {
            stage_totals[t0] += d;
        }
        loads.push(LoadPoint { bus, demand });
        let _ = k;
    }
    for &s in &stage_totals {
        peak_total = peak_total.max(s);
    }
    let avg_total = stage_totals.iter().sum::<f64>() / t_len as f64;

    // renewables shaped against the load
    let mut renewables = Vec::new();
    for r in 0..spec.renewables {
        let bus = buses[rng.gen_range(0..nb)];
        let scale = rng.gen_range(0.12..0.25) * avg_total / spec.renewables.max(1) as f64;
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let nominal: Vec<f64> = (0..t_len)
            .map(|t0| {
                let shape = 1.0
                    - 0.5 * (std::f64::consts::TAU * t0 as f64 / t_len as f64 + phase).sin();
                (scale * shape).max(0.5)
            })
            .collect();
        let width = rng.gen_range(0.25..0.5);
        let half_width: Vec<f64> = nominal.iter().map(|&n| (width * n).min(n)).collect();
        renewables.push(Renewable {
            id: r + 1,
            bus,
            nominal,
            half_width,
        });
    }
    let renewable_low: f64 = renewables
        .iter()
        .map(|r| {
            (0..t_len)
                .map(|t0| r.nominal[t0] - r.half_width[t0])
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        .max(0.0);

    // generation fleet: capacity covers the worst net demand with margin
    let ng = spec.gens.max(1);
    let mut weights: Vec<f64> = (0..ng).map(|_| rng.gen_range(0.6..1.4)).collect();
    let wsum: f64 = weights.iter().sum();
    let need = 1.25 * (peak_total - renewable_low).max(1.0);
    for w in weights.iter_mut() {
        *w = *w / wsum * need;
    }
    let mut generators = Vec::new();
    for (i, &p_max) in weights.iter().enumerate() {
        let cheap = i == 0;
        let cost = if cheap {
            rng.gen_range(12.0..18.0)
        } else {
            rng.gen_range(28.0..70.0)
        };
        let p_min = rng.gen_range(0.08..0.2) * p_max;
        let ramp = if cheap {
            rng.gen_range(0.3..0.45) * p_max
        } else {
            rng.gen_range(0.6..0.95) * p_max
        };
        let su_limit = p_min.max(0.6 * p_max);
        let initial_on = cheap || i % 2 == 1;
        generators.push(Generator {
            id: i + 1,
            bus: buses[rng.gen_range(0..nb)],
            cost,
            startup_cost: rng.gen_range(150.0..600.0),
            p_min,
            p_max,
            ramp_up: ramp,
            ramp_down: ramp,
            startup_limit: su_limit,
            shutdown_limit: su_limit,
            min_up: rng.gen_range(1..=2usize.min(t_len)),
            min_down: 1,
            initial_on,
            initial_output: if initial_on {
                (0.5 * (p_min + p_max)).clamp(p_min, p_max)
            } else {
                0.0
            },
        });
    }

    let mut storages = Vec::new();
    for s in 0..spec.storages {
        let e_max = rng.gen_range(0.25..0.5) * avg_total;
        storages.push(Storage {
            id: s + 1,
            bus: buses[rng.gen_range(0..nb)],
            e_min: 0.1 * e_max,
            e_max,
            p_charge_max: 0.5 * e_max,
            p_discharge_max: 0.5 * e_max,
            eff_charge: 0.9,
            eff_discharge: 0.92,
            e_initial: 0.5 * e_max,
            e_terminal: None,
        });
    }

    // line limits comfortably above any plausible transfer
    let cap_sum: f64 = generators.iter().map(|g| g.p_max).sum();
    let limit = 1.1 * (peak_total + cap_sum);
    let lines: Vec<Line> = lines
        .into_iter()
        .enumerate()
        .map(|(l, (from, to, susceptance))| Line {
            id: l + 1,
            from,
            to,
            susceptance,
            limit,
        })
        .collect();

    let case = SystemCase {
        buses,
        lines,
        generators,
        storages,
        loads,
        renewables,
        horizon: Horizon {
            t: t_len,
            t_delta_hours: 1.0,
            ref_bus: 1,
        },
        budget: None,
    };
    debug_assert!(case.validate().is_ok());
    case
}
