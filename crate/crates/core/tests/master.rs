mod common;

use common::{fixture, rel, ALL_FIXTURES, ORACLE_FIXTURES};
use robust_expansion::ccg::{run_ccg, CcgConfig};
use robust_expansion::master::{
    build_deterministic, build_master, check_physics, dispatch_cost, solve_deterministic, solve_dispatch,
    solve_master, Capacities, MasterSolution,
};
use robust_expansion::solver::DenseSimplex;
use robust_expansion::uncertainty::{enumerate_set, realize, UncertaintyBudget};
use robust_expansion::grid::NetworkInstance;

const PHYSICS_TOL: f64 = 1e-6;

fn assert_physics(name: &str, inst: &NetworkInstance, sol: &MasterSolution) {
    for b in &sol.blocks {
        let rep = check_physics(inst, &sol.capacities, &b.cf, &b.dispatch);
        assert!(rep.worst() <= PHYSICS_TOL, "{name} block {}: {rep:?}", b.realization);
    }
}

#[test]
fn toy_deterministic_value() {
    let inst = fixture("toy_single_node.json");
    let sol = solve_deterministic(&inst, &DenseSimplex::default()).unwrap();
    // 10 MWh per step at cf 0.5 needs 20 MW of pv at 1 EUR/MW.
    assert!((sol.objective - 20.0).abs() <= 1e-9, "{}", sol.objective);
    assert!((sol.capacities.renewable[0] - 20.0).abs() <= 1e-9);
    assert_eq!(sol.blocks.len(), 1);
    assert!(sol.recourse_bound.abs() <= 1e-9);
}

#[test]
fn toy_model_shape() {
    let inst = fixture("toy_single_node.json");
    let mm = build_deterministic(&inst).unwrap();
    let m = &mm.model;
    // One capacity, two generation steps, three shedding tiers per step.
    assert_eq!(m.num_vars(), 1 + 2 + 6);
    assert_eq!(m.count_rows_with_prefix("balance"), 2);
    assert_eq!(m.count_rows_with_prefix("ren_limit"), 2);
    assert_eq!(m.num_rows(), 4);
    let master = build_master(&inst, &[mm.realizations[0].clone(), mm.realizations[0].clone()]).unwrap();
    assert_eq!(master.model.count_rows_with_prefix("epigraph"), 2);
    assert_eq!(master.model.count_rows_with_prefix("b1:balance"), 2);
    assert!(master.eta.is_some());
}

#[test]
fn deterministic_blocks_obey_physics() {
    let backend = DenseSimplex::default();
    for name in ALL_FIXTURES {
        let inst = fixture(name);
        let sol = solve_deterministic(&inst, &backend).unwrap();
        assert_physics(name, &inst, &sol);
        let inv = sol.capacities.investment_cost(&inst);
        assert!(rel(inv + sol.recourse_bound, sol.objective) <= 1e-9, "{name}");
    }
}

#[test]
fn robust_blocks_obey_physics() {
    let backend = DenseSimplex::default();
    for name in ORACLE_FIXTURES {
        let inst = fixture(name);
        for g in [1, 2] {
            let run = run_ccg(&inst, &UncertaintyBudget::uniform(g), &CcgConfig::default(), &backend).unwrap();
            assert_physics(name, &inst, &run.solution);
        }
    }
}

#[test]
fn dispatch_at_fixed_capacities_obeys_physics() {
    let backend = DenseSimplex::default();
    for name in ORACLE_FIXTURES {
        let inst = fixture(name);
        let caps = solve_deterministic(&inst, &backend).unwrap().capacities;
        for z in enumerate_set(&inst, &UncertaintyBudget::uniform(1), 1000).unwrap() {
            let cf = realize(&inst, &z).unwrap();
            let (cost, d) = solve_dispatch(&inst, &caps, &cf, &backend).unwrap();
            let rep = check_physics(&inst, &caps, &cf, &d);
            assert!(rep.worst() <= PHYSICS_TOL, "{name} {}: {rep:?}", z.summary(&inst));
            assert!(cost >= -1e-9);
        }
    }
}

#[test]
fn zero_capacity_sheds_in_tier_order() {
    let backend = DenseSimplex::default();
    let inst = fixture("toy_single_node.json");
    let caps = Capacities::zero(&inst);
    let cf = realize(&inst, &robust_expansion::uncertainty::DeviationMask::for_instance(&inst)).unwrap();
    let (cost, d) = solve_dispatch(&inst, &caps, &cf, &backend).unwrap();
    let [c1, c2, c3] = inst.shedding.costs_at("n1");
    let f = inst.shedding.fractions;
    // All 20 MWh are shed, each tier filled to its cap.
    let want = 20.0 * (f[0] * c1 + f[1] * c2 + f[2] * c3);
    assert!(rel(cost, want) <= 1e-9, "{cost} vs {want}");
    for t in 0..2 {
        for k in 0..3 {
            assert!((d.shed[0][t][k] - 10.0 * f[k]).abs() <= 1e-9);
        }
    }
}

#[test]
fn more_capacity_never_costs_more_to_dispatch() {
    let backend = DenseSimplex::default();
    for name in ORACLE_FIXTURES {
        let inst = fixture(name);
        let caps = solve_deterministic(&inst, &backend).unwrap().capacities;
        let mut bigger = caps.clone();
        for v in &mut bigger.renewable {
            *v += 5.0;
        }
        let cf = robust_expansion::master::reference_cf(&inst);
        let a = dispatch_cost(&inst, &caps, &cf, &backend).unwrap();
        let b = dispatch_cost(&inst, &bigger, &cf, &backend).unwrap();
        assert!(b <= a + 1e-7 * a.abs().max(1.0), "{name}: {b} > {a}");
    }
}

#[test]
fn master_rejects_bad_input() {
    let inst = fixture("toy_single_node.json");
    assert!(build_master(&inst, &[]).is_err());
    assert!(build_master(&inst, &[vec![vec![0.5]]]).is_err());
    let mut caps = Capacities::zero(&inst);
    caps.renewable[0] = -1.0;
    let cf = robust_expansion::master::reference_cf(&inst);
    assert!(dispatch_cost(&inst, &caps, &cf, &DenseSimplex::default()).is_err());
    let mm = build_deterministic(&inst).unwrap();
    assert!(solve_master(&mm, &DenseSimplex::default()).is_ok());
}
