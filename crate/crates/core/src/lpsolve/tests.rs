use super::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Independent textbook simplex used only as a test oracle.
///
/// Dense Big-M tableau over the standard form: variables shifted to start
/// at zero, upper bounds written as explicit rows, one slack/surplus per
/// inequality and artificials where needed. Shares no code with the
/// production solver.
mod reference {
    use super::{LinearProgram, RowOp};

    pub enum Outcome {
        Optimal(f64),
        Infeasible,
        Unbounded,
    }

    pub fn solve(lp: &LinearProgram) -> Outcome {
        let n = lp.num_cols();
        assert!(
            (0..n).all(|j| lp.lb[j].is_finite() && lp.ub[j].is_finite()),
            "reference oracle requires finite bounds"
        );
        // rows: originals plus one upper-bound row per shifted variable
        let mut rows: Vec<(Vec<f64>, RowOp, f64)> = Vec::new();
        for row in &lp.rows {
            let mut dense = vec![0.0; n];
            for &(j, a) in &row.coeffs {
                dense[j] += a;
            }
            let shift: f64 = (0..n).map(|j| dense[j] * lp.lb[j]).sum();
            rows.push((dense, row.op, row.rhs - shift));
        }
        for j in 0..n {
            let mut dense = vec![0.0; n];
            dense[j] = 1.0;
            rows.push((dense, RowOp::Le, lp.ub[j] - lp.lb[j]));
        }
        let m = rows.len();
        // normalize rhs >= 0
        for (dense, op, rhs) in rows.iter_mut() {
            if *rhs < 0.0 {
                for a in dense.iter_mut() {
                    *a = -*a;
                }
                *rhs = -*rhs;
                *op = match *op {
                    RowOp::Le => RowOp::Ge,
                    RowOp::Ge => RowOp::Le,
                    RowOp::Eq => RowOp::Eq,
                };
            }
        }
        let n_slack = rows
            .iter()
            .filter(|(_, op, _)| *op != RowOp::Eq)
            .count();
        let n_art = rows
            .iter()
            .filter(|(_, op, _)| *op != RowOp::Le)
            .count();
        let total = n + n_slack + n_art;
        let max_c = lp.cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let big_m = 1e7 * (1.0 + max_c);

        let mut t = vec![vec![0.0; total + 1]; m];
        let mut cost = vec![0.0; total];
        let mut basis = vec![usize::MAX; m];
        for j in 0..n {
            cost[j] = lp.cost[j];
        }
        let mut s_at = n;
        let mut a_at = n + n_slack;
        for (i, (dense, op, rhs)) in rows.iter().enumerate() {
            t[i][..n].copy_from_slice(dense);
            t[i][total] = *rhs;
            match op {
                RowOp::Le => {
                    t[i][s_at] = 1.0;
                    basis[i] = s_at;
                    s_at += 1;
                }
                RowOp::Ge => {
                    t[i][s_at] = -1.0;
                    s_at += 1;
                    t[i][a_at] = 1.0;
                    cost[a_at] = big_m;
                    basis[i] = a_at;
                    a_at += 1;
                }
                RowOp::Eq => {
                    t[i][a_at] = 1.0;
                    cost[a_at] = big_m;
                    basis[i] = a_at;
                    a_at += 1;
                }
            }
        }

        for _ in 0..200_000 {
            // reduced costs
            let mut enter = usize::MAX;
            let mut best = -1e-7;
            for j in 0..total {
                if basis.contains(&j) {
                    continue;
                }
                let zj: f64 = (0..m).map(|i| cost[basis[i]] * t[i][j]).sum();
                let d = cost[j] - zj;
                if d < best {
                    best = d;
                    enter = j;
                }
            }
            if enter == usize::MAX {
                break;
            }
            let mut leave = usize::MAX;
            let mut ratio = f64::INFINITY;
            for i in 0..m {
                if t[i][enter] > 1e-9 {
                    let r = t[i][total] / t[i][enter];
                    if r < ratio - 1e-12 {
                        ratio = r;
                        leave = i;
                    }
                }
            }
            if leave == usize::MAX {
                return Outcome::Unbounded;
            }
            let piv = t[leave][enter];
            for v in t[leave].iter_mut() {
                *v /= piv;
            }
            for i in 0..m {
                if i == leave {
                    continue;
                }
                let f = t[i][enter];
                if f == 0.0 {
                    continue;
                }
                for j in 0..=total {
                    t[i][j] -= f * t[leave][j];
                }
            }
            basis[leave] = enter;
        }

        let mut obj = 0.0;
        for i in 0..m {
            if basis[i] >= n + n_slack && t[i][total] > 1e-6 {
                return Outcome::Infeasible;
            }
            if basis[i] < n {
                obj += lp.cost[basis[i]] * t[i][total];
            }
        }
        let shift_cost: f64 = (0..n).map(|j| lp.cost[j] * lp.lb[j]).sum();
        Outcome::Optimal(obj + shift_cost)
    }
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn min_x_above_three() {
    let mut lp = LinearProgram::new();
    let x = lp.add_col(1.0, 0.0, 10.0);
    lp.add_row(vec![(x, 1.0)], RowOp::Ge, 3.0);
    let sol = solve_lp(&lp, &cfg()).unwrap();
    assert!(sol.is_optimal());
    assert!((sol.x[x] - 3.0).abs() < 1e-9);
    assert!((sol.duals[0] - 1.0).abs() < 1e-9);
}

#[test]
fn max_x_below_five() {
    let mut lp = LinearProgram::new();
    let x = lp.add_col(-1.0, 0.0, 100.0);
    lp.add_row(vec![(x, 1.0)], RowOp::Le, 5.0);
    let sol = solve_lp(&lp, &cfg()).unwrap();
    assert!(sol.is_optimal());
    assert!((sol.x[x] - 5.0).abs() < 1e-9);
    assert!((sol.objective + 5.0).abs() < 1e-9);
}

#[test]
fn detects_infeasible() {
    let mut lp = LinearProgram::new();
    let x = lp.add_col(1.0, 0.0, 1.0);
    lp.add_row(vec![(x, 1.0)], RowOp::Ge, 2.0);
    let sol = solve_lp(&lp, &cfg()).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
}

#[test]
fn detects_unbounded() {
    let mut lp = LinearProgram::new();
    let x = lp.add_col(-1.0, 0.0, f64::INFINITY);
    lp.add_row(vec![(x, 1.0)], RowOp::Ge, 1.0);
    let sol = solve_lp(&lp, &cfg()).unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
}

#[test]
fn equality_rows_and_free_duals() {
    // min x + y  s.t.  x + y = 2, x - y >= -1
    let mut lp = LinearProgram::new();
    let x = lp.add_col(1.0, 0.0, 10.0);
    let y = lp.add_col(1.0, 0.0, 10.0);
    lp.add_row(vec![(x, 1.0), (y, 1.0)], RowOp::Eq, 2.0);
    lp.add_row(vec![(x, 1.0), (y, -1.0)], RowOp::Ge, -1.0);
    let sol = solve_lp(&lp, &cfg()).unwrap();
    assert!(sol.is_optimal());
    assert!((sol.objective - 2.0).abs() < 1e-9);
}

#[test]
fn free_variable_handled() {
    // min |…|-style: free y pushed against an equality
    let mut lp = LinearProgram::new();
    let x = lp.add_col(2.0, 0.0, 10.0);
    let y = lp.add_col(1.0, f64::NEG_INFINITY, f64::INFINITY);
    lp.add_row(vec![(x, 1.0), (y, 1.0)], RowOp::Eq, 4.0);
    lp.add_row(vec![(y, 1.0)], RowOp::Le, 3.0);
    let sol = solve_lp(&lp, &cfg()).unwrap();
    assert!(sol.is_optimal());
    // cheapest: y = 3, x = 1 -> obj 5
    assert!((sol.objective - 5.0).abs() < 1e-8);
}

fn random_lp(rng: &mut ChaCha8Rng, m: usize, n: usize) -> LinearProgram {
    let mut lp = LinearProgram::new();
    for _ in 0..n {
        let ub = rng.gen_range(1.0..10.0);
        lp.add_col(rng.gen_range(-5.0..5.0), 0.0, ub);
    }
    // an interior point keeps most instances feasible by construction
    let anchor: Vec<f64> = (0..n).map(|j| rng.gen_range(0.0..lp.ub[j])).collect();
    for _ in 0..m {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.4) {
                coeffs.push((j, rng.gen_range(-3.0..3.0)));
            }
        }
        if coeffs.is_empty() {
            continue;
        }
        let at_anchor: f64 = coeffs.iter().map(|&(j, a)| a * anchor[j]).sum();
        let (op, rhs) = match rng.gen_range(0..3) {
            0 => (RowOp::Le, at_anchor + rng.gen_range(0.0..4.0)),
            1 => (RowOp::Ge, at_anchor - rng.gen_range(0.0..4.0)),
            _ => (RowOp::Eq, at_anchor),
        };
        lp.add_row(coeffs, op, rhs);
    }
    lp
}

#[test]
fn random_lps_match_reference_simplex() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut optimal_seen = 0;
    for case in 0..40 {
        let lp = random_lp(&mut rng, 20, 30);
        let sol = solve_lp(&lp, &cfg()).unwrap();
        match reference::solve(&lp) {
            reference::Outcome::Optimal(obj) => {
                assert!(
                    sol.is_optimal(),
                    "case {case}: reference optimal {obj}, solver says {:?}",
                    sol.status
                );
                let tol = 1e-7 * (1.0 + obj.abs());
                assert!(
                    (sol.objective - obj).abs() <= tol,
                    "case {case}: objectives differ: {} vs reference {obj}",
                    sol.objective
                );
                simplex::verify(&lp, &sol, &cfg()).unwrap();
                optimal_seen += 1;
            }
            reference::Outcome::Infeasible => {
                assert_eq!(sol.status, LpStatus::Infeasible, "case {case}");
            }
            reference::Outcome::Unbounded => unreachable!("bounded boxes"),
        }
    }
    assert!(optimal_seen >= 20, "corpus degenerate: {optimal_seen} optimal");
}

#[test]
fn duality_identity_on_random_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let lp = random_lp(&mut rng, 12, 18);
        let sol = solve_lp(&lp, &cfg()).unwrap();
        if !sol.is_optimal() {
            continue;
        }
        // strong duality: primal objective equals dual objective
        let mut dual_obj: f64 = sol
            .duals
            .iter()
            .zip(&lp.rows)
            .map(|(pi, row)| pi * row.rhs)
            .sum();
        for j in 0..lp.num_cols() {
            let d = sol.reduced_costs[j];
            if d > 0.0 {
                dual_obj += d * lp.lb[j];
            } else {
                dual_obj += d * lp.ub[j];
            }
        }
        let tol = 1e-7 * (1.0 + sol.objective.abs());
        assert!((sol.objective - dual_obj).abs() <= tol);
    }
}

#[test]
fn milp_two_binary_cover() {
    // min -x1 - x2, x1 + x2 <= 1, binaries -> objective -1
    let mut lp = LinearProgram::new();
    let a = lp.add_col(-1.0, 0.0, 1.0);
    let b = lp.add_col(-1.0, 0.0, 1.0);
    lp.add_row(vec![(a, 1.0), (b, 1.0)], RowOp::Le, 1.0);
    let mp = MixedProgram::new(lp, vec![a, b]);
    let sol = solve_milp(&mp, &cfg()).unwrap();
    assert!(sol.is_optimal());
    assert!((sol.objective + 1.0).abs() < 1e-9);
    for &j in &mp.binaries {
        assert!((sol.x[j] - sol.x[j].round()).abs() < 1e-6);
    }
}

#[test]
fn milp_integral_relaxation_terminates_at_root() {
    // assignment-style totally unimodular toy: LP relaxation is integral
    let mut lp = LinearProgram::new();
    let x11 = lp.add_col(1.0, 0.0, 1.0);
    let x12 = lp.add_col(3.0, 0.0, 1.0);
    let x21 = lp.add_col(4.0, 0.0, 1.0);
    let x22 = lp.add_col(1.5, 0.0, 1.0);
    lp.add_row(vec![(x11, 1.0), (x12, 1.0)], RowOp::Eq, 1.0);
    lp.add_row(vec![(x21, 1.0), (x22, 1.0)], RowOp::Eq, 1.0);
    lp.add_row(vec![(x11, 1.0), (x21, 1.0)], RowOp::Eq, 1.0);
    lp.add_row(vec![(x12, 1.0), (x22, 1.0)], RowOp::Eq, 1.0);
    let mp = MixedProgram::new(lp, vec![x11, x12, x21, x22]);
    let sol = solve_milp(&mp, &cfg()).unwrap();
    assert!((sol.objective - 2.5).abs() < 1e-8);
}

fn exhaustive_binary_min(mp: &MixedProgram, scfg: &SolverConfig) -> Option<f64> {
    let k = mp.binaries.len();
    let mut best: Option<f64> = None;
    for mask in 0..(1u32 << k) {
        let mut lp = mp.lp.clone();
        for (b, &j) in mp.binaries.iter().enumerate() {
            let v = if mask >> b & 1 == 1 { 1.0 } else { 0.0 };
            lp.set_bounds(j, v, v);
        }
        let sol = solve_lp(&lp, scfg).unwrap();
        if sol.is_optimal() {
            best = Some(best.map_or(sol.objective, |b: f64| b.min(sol.objective)));
        }
    }
    best
}

#[test]
fn milp_random_knapsacks_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..15 {
        let k = 8;
        let mut lp = LinearProgram::new();
        let cols: Vec<usize> = (0..k)
            .map(|_| lp.add_col(-rng.gen_range(1.0..10.0), 0.0, 1.0))
            .collect();
        let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..6.0)).collect();
        let capacity = weights.iter().sum::<f64>() * rng.gen_range(0.3..0.7);
        lp.add_row(
            cols.iter().zip(&weights).map(|(&j, &w)| (j, w)).collect(),
            RowOp::Le,
            capacity,
        );
        let mp = MixedProgram::new(lp, cols);
        let sol = solve_milp(&mp, &cfg()).unwrap();
        let brute = exhaustive_binary_min(&mp, &cfg()).unwrap();
        assert!(
            (sol.objective - brute).abs() < 1e-6,
            "case {case}: {} vs brute {brute}",
            sol.objective
        );
    }
}

#[test]
fn milp_infeasible_reported() {
    let mut lp = LinearProgram::new();
    let a = lp.add_col(1.0, 0.0, 1.0);
    let b = lp.add_col(1.0, 0.0, 1.0);
    lp.add_row(vec![(a, 1.0), (b, 1.0)], RowOp::Ge, 3.0);
    let mp = MixedProgram::new(lp, vec![a, b]);
    let sol = solve_milp(&mp, &cfg()).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
}

#[test]
fn lp_text_dump_runs() {
    let mut lp = LinearProgram::new();
    let x = lp.add_named_col("gen_p", 12.5, 0.0, 80.0);
    lp.add_named_row("balance", vec![(x, 1.0)], RowOp::Eq, 55.0);
    let text = lp.to_lp_text();
    assert!(text.contains("minimize"));
    assert!(text.contains("balance"));
    assert!(text.contains("gen_p"));
    assert!(text.contains("55"));
}

#[test]
fn warm_start_incumbent_respected() {
    // warm value is optimal; solver must return it unchanged
    let mut lp = LinearProgram::new();
    let a = lp.add_col(-2.0, 0.0, 1.0);
    let b = lp.add_col(-1.0, 0.0, 1.0);
    lp.add_row(vec![(a, 1.0), (b, 1.0)], RowOp::Le, 1.0);
    let mp = MixedProgram::new(lp, vec![a, b]);
    let warm = vec![1.0, 0.0];
    let sol = solve_milp_warm(&mp, &cfg(), Some(&warm)).unwrap();
    assert!((sol.objective + 2.0).abs() < 1e-9);
}
