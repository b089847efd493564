//! Column-and-constraint generation.
//!
//! Each iteration solves the master over every realization identified so far
//! (lower bound), then the worst-case subproblem at the master's capacities.
//! `investment + worst case` at those capacities is a feasible robust plan's
//! cost, so the running minimum is an upper bound. The plan returned is the
//! last master's, unless the bounds met on an earlier plan whose worst case
//! the last master does not cover.

use std::time::Instant;

use serde::Serialize;

use crate::grid::NetworkInstance;
use crate::master::{build_master, solve_dispatch, solve_master, CapacityHandoff, CfSeries, MasterSolution, ScenarioBlock};
use crate::solver::SolverBackend;
use crate::subproblem::{build_subproblem, default_big_m, solve_subproblem};
use crate::uncertainty::{realize, DeviationMask, UncertaintyBudget};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcgConfig {
    /// Relative gap `(UB - LB) / max(1, |UB|)` at which the loop stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Big-M for the subproblem; `None` uses [`default_big_m`].
    pub big_m: Option<f64>,
    /// Relative MILP gap for the subproblem; `None` uses `tolerance / 10`.
    pub milp_gap: Option<f64>,
}

impl Default for CcgConfig {
    fn default() -> Self {
        CcgConfig {
            tolerance: 1e-8,
            max_iterations: 50,
            big_m: None,
            milp_gap: None,
        }
    }
}

impl CcgConfig {
    fn check(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be > 0", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if let Some(g) = self.milp_gap {
            if !(g >= 0.0) || g > self.tolerance / 10.0 {
                return Err(Error::InvalidArgument(format!(
                    "MILP gap {g} must lie in [0, tolerance / 10]"
                )));
            }
        }
        Ok(())
    }

    pub fn milp_gap(&self) -> f64 {
        self.milp_gap.unwrap_or(self.tolerance / 10.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcgIteration {
    /// One-based iteration number.
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub master_objective: f64,
    pub investment_cost: f64,
    pub subproblem_objective: f64,
    pub z: DeviationMask,
    pub z_summary: String,
    /// The subproblem returned a realization already in the master.
    pub repeated: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcgTrace {
    pub budget: UncertaintyBudget,
    pub iterations: Vec<CcgIteration>,
    /// Realizations held by the final master, seed first.
    pub realizations: Vec<DeviationMask>,
    pub converged: bool,
    /// A repeated realization arrived while the gap was still open.
    pub stalled: bool,
}

impl CcgTrace {
    pub fn lower_bound(&self) -> f64 {
        self.iterations.last().map_or(f64::NEG_INFINITY, |i| i.lower_bound)
    }

    pub fn upper_bound(&self) -> f64 {
        self.iterations.last().map_or(f64::INFINITY, |i| i.upper_bound)
    }

    pub fn gap(&self) -> f64 {
        self.iterations.last().map_or(f64::INFINITY, |i| i.gap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcgResult {
    pub solution: MasterSolution,
    pub trace: CcgTrace,
    /// Worst realization at the returned capacities and its operating cost.
    pub worst_case: DeviationMask,
    pub worst_case_cost: f64,
}

pub fn relative_gap(lb: f64, ub: f64) -> f64 {
    (ub - lb) / ub.abs().max(1.0)
}

struct Incumbent {
    upper: f64,
    solution: MasterSolution,
    worst: DeviationMask,
    worst_cf: CfSeries,
    worst_cost: f64,
}

/// Runs column-and-constraint generation for one uncertainty budget.
pub fn run_ccg(
    inst: &NetworkInstance,
    budget: &UncertaintyBudget,
    config: &CcgConfig,
    backend: &dyn SolverBackend,
) -> Result<CcgResult> {
    config.check()?;
    inst.ensure_valid()?;
    let budget = budget.clamped(inst.regions.len());
    let big_m = config.big_m.unwrap_or_else(|| default_big_m(inst));

    let seed = DeviationMask::for_instance(inst);
    let mut memory = vec![seed.clone()];
    let mut cfs = vec![realize(inst, &seed)?];
    let mut iterations: Vec<CcgIteration> = Vec::new();
    let mut incumbent: Option<Incumbent> = None;
    let mut last: Option<(MasterSolution, DeviationMask, f64)> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut converged = false;
    let mut stalled = false;

    for k in 1..=config.max_iterations {
        let started = Instant::now();
        let ctx = |e: Error, what: &str| e.context(format!("iteration {k}: {what}"));
        let mm = build_master(inst, &cfs).map_err(|e| ctx(e, "building master"))?;
        let sol = solve_master(&mm, backend).map_err(|e| ctx(e, "master"))?;
        // The master grows by blocks, so its optimum cannot fall; the running
        // max only hides solver round-off.
        lower = lower.max(sol.objective);

        let handoff = CapacityHandoff::new(inst, &sol.capacities).map_err(|e| ctx(e, "handoff"))?;
        let sp = build_subproblem(inst, &handoff, &budget, big_m).map_err(|e| ctx(e, "building subproblem"))?;
        let (wc, _) = solve_subproblem(inst, &sp, config.milp_gap(), backend).map_err(|e| ctx(e, "subproblem"))?;

        let candidate = sol.investment_cost + wc.dual_objective;
        let improved = incumbent.as_ref().map_or(true, |inc| candidate < inc.upper);
        if improved {
            incumbent = Some(Incumbent {
                upper: candidate,
                solution: sol.clone(),
                worst: wc.z.clone(),
                worst_cf: wc.realized_cf.clone(),
                worst_cost: wc.dual_objective,
            });
        }
        let upper = incumbent.as_ref().expect("set above").upper;
        let gap = relative_gap(lower, upper);
        let repeated = memory.contains(&wc.z);
        log::info!(
            "ccg {budget} iteration {k}: LB {lower:.6e} UB {upper:.6e} gap {gap:.3e} z {}",
            wc.z.summary(inst)
        );
        iterations.push(CcgIteration {
            iteration: k,
            lower_bound: lower,
            upper_bound: upper,
            gap,
            master_objective: sol.objective,
            investment_cost: sol.investment_cost,
            subproblem_objective: wc.dual_objective,
            z_summary: wc.z.summary(inst),
            z: wc.z.clone(),
            repeated,
            seconds: started.elapsed().as_secs_f64(),
        });
        last = Some((sol.clone(), wc.z.clone(), wc.dual_objective));
        if gap <= config.tolerance {
            converged = true;
            break;
        }
        if repeated {
            log::warn!(
                "ccg {budget} iteration {k}: realization {} was already in the master but the gap \
                 {gap:.3e} exceeds {:.3e}; stopping on numerical stall (master recourse {:.9e}, \
                 subproblem {:.9e})",
                wc.z.summary(inst),
                config.tolerance,
                sol.recourse_bound,
                wc.dual_objective
            );
            stalled = true;
            break;
        }
        memory.push(wc.z.clone());
        cfs.push(wc.realized_cf);
    }

    let inc = incumbent.expect("at least one iteration ran");
    let (last_sol, last_z, last_worst) = last.expect("at least one iteration ran");
    let slack = config.tolerance * inc.upper.abs().max(1.0);
    let (solution, worst_case, worst_case_cost) = if !converged
        || last_sol.investment_cost + last_worst <= last_sol.objective + slack
    {
        (last_sol, last_z, last_worst)
    } else {
        // The bounds met on an earlier plan: return it with its certified
        // worst case attached as an extra block.
        let mut solution = inc.solution;
        let (cost, dispatch) = solve_dispatch(inst, &solution.capacities, &inc.worst_cf, backend)
            .map_err(|e| e.context("worst-case dispatch of the incumbent"))?;
        solution.blocks.push(ScenarioBlock {
            realization: solution.blocks.len(),
            cf: inc.worst_cf,
            dispatch,
            operating_cost: cost,
        });
        solution.recourse_bound = solution.recourse_bound.max(inc.worst_cost);
        solution.objective = solution.investment_cost + solution.recourse_bound;
        (solution, inc.worst, inc.worst_cost)
    };

    Ok(CcgResult {
        solution,
        trace: CcgTrace {
            budget,
            iterations,
            realizations: memory,
            converged,
            stalled,
        },
        worst_case,
        worst_case_cost,
    })
}

/// One ladder rung: the (clamped) budget and the run outcome.
#[derive(Debug)]
pub struct LadderEntry {
    pub budget: UncertaintyBudget,
    pub result: Result<CcgResult>,
}

/// Independent CCG runs for each budget in order. A failing rung is
/// recorded and the ladder continues.
pub fn run_gamma_ladder(
    inst: &NetworkInstance,
    gammas: &[UncertaintyBudget],
    config: &CcgConfig,
    backend: &dyn SolverBackend,
) -> Vec<LadderEntry> {
    let ascending = gammas
        .windows(2)
        .all(|w| w[0].gamma_pv <= w[1].gamma_pv && w[0].gamma_wind <= w[1].gamma_wind);
    if !ascending {
        log::warn!("ladder budgets are not sorted ascending");
    }
    gammas
        .iter()
        .map(|b| {
            let budget = b.clamped(inst.regions.len());
            LadderEntry {
                budget,
                result: run_ccg(inst, &budget, config, backend),
            }
        })
        .collect()
}
