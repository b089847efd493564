mod common;

use common::{fixture, rel, ALL_FIXTURES, ORACLE_FIXTURES};
use robust_expansion::ccg::{relative_gap, run_ccg, run_gamma_ladder, CcgConfig, CcgTrace};
use robust_expansion::master::{dispatch_cost, solve_deterministic};
use robust_expansion::solver::DenseSimplex;
use robust_expansion::uncertainty::{realize, UncertaintyBudget};

fn assert_monotone(name: &str, t: &CcgTrace) {
    for w in t.iterations.windows(2) {
        assert!(w[1].lower_bound >= w[0].lower_bound, "{name}: LB fell");
        assert!(w[1].upper_bound <= w[0].upper_bound, "{name}: UB rose");
    }
    for it in &t.iterations {
        assert!(it.lower_bound <= it.upper_bound + 1e-9 * it.upper_bound.abs().max(1.0), "{name}");
    }
}

#[test]
fn gamma_zero_is_the_deterministic_plan() {
    let backend = DenseSimplex::default();
    for name in ALL_FIXTURES {
        let inst = fixture(name);
        let det = solve_deterministic(&inst, &backend).unwrap();
        let run = run_ccg(&inst, &UncertaintyBudget::uniform(0), &CcgConfig::default(), &backend).unwrap();
        assert!(run.trace.converged, "{name}");
        assert!(rel(run.solution.objective, det.objective) <= 1e-8, "{name}");
        assert!(run.worst_case.is_zero());
    }
}

#[test]
fn bounds_are_monotone_and_close() {
    let backend = DenseSimplex::default();
    let config = CcgConfig::default();
    for name in ORACLE_FIXTURES {
        let inst = fixture(name);
        for g in 0..=2 {
            let run = run_ccg(&inst, &UncertaintyBudget::uniform(g), &config, &backend).unwrap();
            let t = &run.trace;
            assert!(t.converged && !t.stalled, "{name} g{g}");
            assert!(t.gap() <= config.tolerance);
            assert_monotone(name, t);
            assert_eq!(t.realizations.len(), t.iterations.len());
            // Investment plus worst-case cost of the plan is its robust cost.
            let s = &run.solution;
            assert!(rel(s.investment_cost + run.worst_case_cost, s.objective) <= 1e-7, "{name} g{g}");
            let at_worst = dispatch_cost(&inst, &s.capacities, &realize(&inst, &run.worst_case).unwrap(), &backend).unwrap();
            assert!(rel(at_worst, run.worst_case_cost) <= 1e-6);
        }
    }
}

#[test]
fn known_robust_values() {
    let backend = DenseSimplex::default();
    let toy = fixture("toy_single_node.json");
    let run = run_ccg(&toy, &UncertaintyBudget::uniform(1), &CcgConfig::default(), &backend).unwrap();
    // Availability drops to zero, so building pv is pointless and all
    // 20 MWh are shed through the three tiers.
    let s = &toy.shedding;
    let want = 20.0 * (0..3).map(|k| s.fractions[k] * s.costs[k]).sum::<f64>();
    assert!(rel(run.solution.objective, want) <= 1e-9, "{}", run.solution.objective);
    assert_eq!(run.trace.iterations.len(), 2);
}

#[test]
fn iteration_limit_leaves_the_run_unconverged() {
    let backend = DenseSimplex::default();
    let inst = fixture("two_region_one_period.json");
    let config = CcgConfig {
        max_iterations: 1,
        ..CcgConfig::default()
    };
    let run = run_ccg(&inst, &UncertaintyBudget::uniform(1), &config, &backend).unwrap();
    assert!(!run.trace.converged);
    assert_eq!(run.trace.iterations.len(), 1);
    assert!(run.trace.gap() > config.tolerance);
    assert!(rel(run.solution.objective, run.trace.lower_bound()) <= 1e-12);
}

#[test]
fn bad_configs_are_rejected() {
    let backend = DenseSimplex::default();
    let inst = fixture("toy_single_node.json");
    let b = UncertaintyBudget::uniform(1);
    for config in [
        CcgConfig { tolerance: 0.0, ..CcgConfig::default() },
        CcgConfig { max_iterations: 0, ..CcgConfig::default() },
        CcgConfig { milp_gap: Some(1e-3), ..CcgConfig::default() },
    ] {
        let e = run_ccg(&inst, &b, &config, &backend).unwrap_err();
        assert!(e.is_input_error(), "{e}");
    }
}

#[test]
fn ladder_is_monotone_in_gamma() {
    let backend = DenseSimplex::default();
    for name in ["three_region.json", "two_region_storage.json", "symmetric_two_region.json"] {
        let inst = fixture(name);
        let budgets: Vec<_> = (0..=3).map(UncertaintyBudget::uniform).collect();
        let entries = run_gamma_ladder(&inst, &budgets, &CcgConfig::default(), &backend);
        let objs: Vec<f64> = entries.into_iter().map(|e| e.result.unwrap().solution.objective).collect();
        for w in objs.windows(2) {
            assert!(w[1] >= w[0] - 1e-8 * w[0].abs().max(1.0), "{name}: {objs:?}");
        }
    }
}

#[test]
fn gap_is_relative_to_the_upper_bound() {
    assert_eq!(relative_gap(90.0, 100.0), 0.1);
    assert_eq!(relative_gap(0.0, 0.5), 0.5);
    assert_eq!(relative_gap(5.0, 5.0), 0.0);
}
