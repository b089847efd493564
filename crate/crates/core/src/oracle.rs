//! Brute-force references for small instances.
//!
//! Both routes walk the whole uncertainty set, so they only make sense when
//! it is small. They share the dispatch block builder with CCG but nothing
//! else: no decomposition, no dualization, no big-M.

use serde::Serialize;

use crate::ccg::CcgResult;
use crate::grid::NetworkInstance;
use crate::master::{build_master, dispatch_cost, Capacities, MasterSolution};
use crate::solver::SolverBackend;
use crate::uncertainty::{enumerate_set, realize, DeviationMask, UncertaintyBudget};
use crate::{Error, Result};

/// Relative tolerance used by the certification checks.
pub const CERTIFY_TOLERANCE: f64 = 1e-6;

/// Drops flags on cells where no unit deviates, then removes duplicates.
/// Realizations that differ only in such flags give identical availability.
fn distinct_realizations(inst: &NetworkInstance, budget: &UncertaintyBudget, cap: u128) -> Result<Vec<DeviationMask>> {
    let regions = inst.regions.len();
    let periods = inst.timegrid.periods.len();
    let period_of = inst.timegrid.period_of_steps();
    let mut live = DeviationMask::zeros(regions, periods);
    for r in &inst.renewables {
        let g = inst.region_index(&r.region).expect("validated region");
        for (t, p) in period_of.iter().enumerate() {
            if let Some(p) = *p {
                if r.cf.deviation[t] > 0.0 {
                    live.set(r.technology.class(), g, p, true);
                }
            }
        }
    }
    let mut out: Vec<DeviationMask> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for z in enumerate_set(inst, budget, cap)? {
        let mut eff = DeviationMask::zeros(regions, periods);
        for (tech, g, p) in z.flagged() {
            if live.get(tech, g, p) {
                eff.set(tech, g, p, true);
            }
        }
        if seen.insert(eff.clone()) {
            out.push(eff);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnumeratedOptimum {
    pub objective: f64,
    pub solution: MasterSolution,
    /// Distinct realizations carried as blocks.
    pub blocks: usize,
}

/// Robust optimum from a single LP holding one dispatch block for every
/// distinct realization in the set.
pub fn robust_optimum_by_enumeration(
    inst: &NetworkInstance,
    budget: &UncertaintyBudget,
    backend: &dyn SolverBackend,
    cap: u128,
) -> Result<EnumeratedOptimum> {
    inst.ensure_valid()?;
    let zs = distinct_realizations(inst, budget, cap)?;
    let cfs = zs.iter().map(|z| realize(inst, z)).collect::<Result<Vec<_>>>()?;
    let mm = build_master(inst, &cfs)?;
    let solution = crate::master::solve_master(&mm, backend).map_err(|e| e.context("enumerated robust LP"))?;
    Ok(EnumeratedOptimum {
        objective: solution.objective,
        blocks: zs.len(),
        solution,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnumeratedWorstCase {
    pub cost: f64,
    /// Every realization attaining `cost` to within the certification tolerance.
    pub argmax: Vec<DeviationMask>,
    /// Dispatch cost of each distinct realization.
    pub costs: Vec<(DeviationMask, f64)>,
}

/// Worst operating cost at fixed capacities by solving one dispatch LP per
/// distinct realization.
pub fn worst_case_by_enumeration(
    inst: &NetworkInstance,
    caps: &Capacities,
    budget: &UncertaintyBudget,
    backend: &dyn SolverBackend,
    cap: u128,
) -> Result<EnumeratedWorstCase> {
    caps.check(inst)?;
    let zs = distinct_realizations(inst, budget, cap)?;
    let mut costs = Vec::with_capacity(zs.len());
    for z in zs {
        let c = dispatch_cost(inst, caps, &realize(inst, &z)?, backend)
            .map_err(|e| e.context(format!("dispatch under {}", z.summary(inst))))?;
        costs.push((z, c));
    }
    let cost = costs.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = CERTIFY_TOLERANCE * cost.abs().max(1.0);
    let argmax = costs
        .iter()
        .filter(|c| c.1 >= cost - tol)
        .map(|c| c.0.clone())
        .collect();
    Ok(EnumeratedWorstCase { cost, argmax, costs })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub budget: UncertaintyBudget,
    pub realizations: usize,
    pub checks: Vec<CertificationCheck>,
    pub passed: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Compares a CCG run against both enumeration routes:
///
/// * `objective`: CCG objective equals the enumerated robust optimum;
/// * `robustness`: no realization costs more to dispatch at the CCG
///   capacities than the reported recourse bound;
/// * `worst_case`: the subproblem's worst case at those capacities equals
///   the enumerated maximum.
///
/// A failing solve is recorded as a failed check. Only an oversized
/// uncertainty set is an error.
pub fn certify_run(
    inst: &NetworkInstance,
    budget: &UncertaintyBudget,
    run: &CcgResult,
    backend: &dyn SolverBackend,
    cap: u128,
) -> Result<CertificationReport> {
    let budget = budget.clamped(inst.regions.len());
    let realizations = distinct_realizations(inst, &budget, cap)?.len();
    let sol = &run.solution;
    let scale = sol.objective.abs().max(1.0);
    let mut checks = Vec::new();
    let failed = |name: &str, e: &Error| CertificationCheck {
        name: name.into(),
        passed: false,
        detail: format!("could not evaluate: {e}"),
    };

    checks.push(match robust_optimum_by_enumeration(inst, &budget, backend, cap) {
        Ok(opt) => {
            let d = rel(sol.objective, opt.objective);
            CertificationCheck {
                name: "objective".into(),
                passed: d <= CERTIFY_TOLERANCE,
                detail: format!(
                    "ccg {:.9e} vs enumerated {:.9e} (relative difference {d:.3e})",
                    sol.objective, opt.objective
                ),
            }
        }
        Err(e) => failed("objective", &e),
    });

    let worst = worst_case_by_enumeration(inst, &sol.capacities, &budget, backend, cap);
    checks.push(match &worst {
        Ok(w) => {
            let excess = w.cost - sol.recourse_bound;
            let passed = excess <= CERTIFY_TOLERANCE * scale;
            let offender = w.argmax.first().map_or("none".into(), |z| z.summary(inst));
            CertificationCheck {
                name: "robustness".into(),
                passed,
                detail: format!(
                    "worst dispatch cost {:.9e} ({offender}) vs recourse bound {:.9e}",
                    w.cost, sol.recourse_bound
                ),
            }
        }
        Err(e) => failed("robustness", e),
    });

    checks.push(match &worst {
        Ok(w) => {
            let d = rel(run.worst_case_cost, w.cost);
            let hit = w.argmax.contains(&run.worst_case);
            CertificationCheck {
                name: "worst_case".into(),
                passed: d <= CERTIFY_TOLERANCE,
                detail: format!(
                    "subproblem {:.9e} ({}) vs enumerated {:.9e} (relative difference {d:.3e}; realization {} the argmax set)",
                    run.worst_case_cost,
                    run.worst_case.summary(inst),
                    w.cost,
                    if hit { "in" } else { "not in" }
                ),
            }
        }
        Err(e) => failed("worst_case", e),
    });

    let passed = checks.iter().all(|c| c.passed);
    Ok(CertificationReport {
        budget,
        realizations,
        checks,
        passed,
    })
}
