use super::*;
use crate::eval::oracle_worst_case;
use crate::gen::{generate, GenSpec};
use crate::model::tests::one_gen_case;

fn small_config() -> RunConfig {
    RunConfig {
        epsilon: 1e-7,
        ..RunConfig::default()
    }
}

fn toy_case(seed: u64) -> SystemCase {
    generate(&GenSpec {
        buses: 3,
        gens: 2,
        storages: 1,
        lines: 3,
        renewables: 1,
        loads: 2,
        stages: 2,
        seed,
    })
}

#[test]
fn zero_width_box_terminates_in_two_outer_iterations() {
    let case = toy_case(3);
    let set = UncertaintySet::zero_width(&case);
    let cfg = small_config();
    let radp = run_radp(&case, &set, &cfg).unwrap();
    assert_eq!(radp.termination, Termination::CommitmentFixedPoint);
    assert_eq!(radp.outer_iterations, 2);

    let rddp = run_rddp(&case, &set, &cfg).unwrap();
    let rfr = run_rfr(&case, &set, &cfg).unwrap();
    let tol = 1e-6 * (1.0 + radp.objective_uc.abs());
    assert!((radp.objective_uc - rddp.objective_uc).abs() <= tol);
    assert!((radp.objective_uc - rfr.objective_uc).abs() <= tol);
    assert_eq!(radp.x, rfr.x);
}

#[test]
fn pinned_dispatch_inner_loop_converges_in_one_iteration() {
    // single generator, balance pins the dispatch: the first backward pass
    // already closes the gap
    let case = one_gen_case(2);
    let set = UncertaintySet::zero_width(&case);
    let x = CommitmentSchedule::all_on(&case);
    let (_, traces, inner) = run_rddp_inner(&case, &x, &set, &small_config()).unwrap();
    assert!(inner.converged);
    assert_eq!(inner.iterations, 1);
    assert_eq!(traces.len(), 1);
}

#[test]
fn small_uncertain_toy_converges_within_ten_inner_iterations() {
    let mut case = one_gen_case(2);
    case.renewables[0].half_width = vec![5.0; 2];
    let set = UncertaintySet::from_case(&case);
    let x = CommitmentSchedule::all_on(&case);
    let (_, _, inner) = run_rddp_inner(&case, &x, &set, &small_config()).unwrap();
    assert!(inner.converged, "gap never closed");
    assert!(inner.iterations <= 10, "took {}", inner.iterations);
}

#[test]
fn rddp_inner_brackets_and_matches_the_oracle() {
    for seed in [1u64, 4, 9] {
        let case = toy_case(seed);
        let set = UncertaintySet::from_case(&case);
        let cfg = small_config();
        let penalty = case.penalty_cost(cfg.penalty_multiplier);

        // commitment from a nominal-path master
        let mut paths = crate::ucstage::ScenarioSet::new();
        paths.append_path(set.nominal_path());
        let master =
            crate::ucstage::solve_master(&case, &paths, None, penalty, &cfg.solver).unwrap();

        let (_, traces, inner) = run_rddp_inner(&case, &master.x, &set, &cfg).unwrap();
        assert!(inner.converged);
        let oracle = oracle_worst_case(
            &case,
            &master.x,
            &set,
            penalty,
            cfg.oracle_path_cap,
            &cfg.solver,
        )
        .unwrap();
        let tol = 1e-6 * (1.0 + oracle.abs());
        assert!(
            (inner.lower - oracle).abs() <= tol && (inner.upper - oracle).abs() <= tol,
            "seed {seed}: [{}, {}] vs oracle {oracle}",
            inner.lower,
            inner.upper
        );
        // bracketing holds along the whole trace in exact mode
        for tr in &traces {
            assert!(tr.lower <= oracle + tol);
            assert!(tr.upper >= oracle - tol);
        }
    }
}

#[test]
fn traces_are_monotone_with_nonnegative_gap() {
    let case = toy_case(12);
    let set = UncertaintySet::from_case(&case);
    let report = run_radp(&case, &set, &small_config()).unwrap();
    let mut per_outer: std::collections::HashMap<usize, (f64, f64)> = Default::default();
    for tr in &report.traces {
        assert!(tr.gap >= -1e-9, "negative gap {}", tr.gap);
        let entry = per_outer
            .entry(tr.outer)
            .or_insert((f64::NEG_INFINITY, f64::INFINITY));
        assert!(tr.lower >= entry.0 - 1e-9, "lower regressed");
        assert!(tr.upper <= entry.1 + 1e-9, "upper regressed");
        *entry = (tr.lower, tr.upper);
    }
    assert_eq!(report.termination, Termination::CommitmentFixedPoint);
}

#[test]
fn radp_lower_bound_stays_below_the_oracle() {
    let case = toy_case(21);
    let set = UncertaintySet::from_case(&case);
    let cfg = small_config();
    let report = run_radp(&case, &set, &cfg).unwrap();
    let penalty = case.penalty_cost(cfg.penalty_multiplier);
    let oracle = oracle_worst_case(
        &case,
        &report.x,
        &set,
        penalty,
        cfg.oracle_path_cap,
        &cfg.solver,
    )
    .unwrap();
    let last = report.traces.last().unwrap();
    assert!(last.lower <= oracle + 1e-6 * (1.0 + oracle.abs()));
}

#[test]
fn rfr_objective_dominates_the_deterministic_master() {
    let case = toy_case(30);
    let set = UncertaintySet::from_case(&case);
    let cfg = small_config();
    let rfr = run_rfr(&case, &set, &cfg).unwrap();
    assert_eq!(rfr.termination, Termination::CommitmentFixedPoint);

    let zero = UncertaintySet::zero_width(&case);
    let det = run_rfr(&case, &zero, &cfg).unwrap();
    assert!(rfr.objective_uc >= det.objective_uc - 1e-7 * (1.0 + det.objective_uc.abs()));
}

#[test]
fn report_round_trips_through_json() {
    let case = toy_case(2);
    let set = UncertaintySet::zero_width(&case);
    let report = run_radp(&case, &set, &small_config()).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    let back: SolveReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back.x, report.x);
    assert_eq!(back.outer_iterations, report.outer_iterations);
    assert!((back.objective_uc - report.objective_uc).abs() < 1e-12);
    assert!(text.contains("commitment-fixed-point"));
}

#[test]
fn sentinel_value_dominates_sampled_cost_to_go() {
    let case = toy_case(5);
    let penalty = case.penalty_cost(1e4);
    let v0 = sentinel_upper_value(&case, penalty);
    // far above any toy's worst-case cost
    let set = UncertaintySet::from_case(&case);
    let x = CommitmentSchedule::all_on(&case);
    let oracle = oracle_worst_case(&case, &x, &set, penalty, 4096, &SolverConfig::default());
    assert!(v0 > oracle.unwrap());
}
