//! Worst-case identification.
//!
//! The dispatch LP at reference availability is dualized mechanically. Its
//! renewable generation columns have upper bound `CAP * dt * cf_ref`, whose
//! dual `mu` enters the dual objective as `-CAP * dt * cf_ref * mu`. Dropping
//! a unit to its lower bound adds `CAP * dt * dev * z * mu`; the product
//! `z * mu` is replaced by `aux` under four big-M rows, which gives a MILP
//! maximizing the operating cost over the uncertainty set.

use serde::Serialize;

use crate::grid::{NetworkInstance, TechClass};
use crate::master::{build_dispatch, dispatch_cost, reference_cf, BlockVars, Capacities};
use crate::solver::{dualize, DualMap, Model, RowSense, Sense, SolverBackend, VarId, VarKind};
use crate::uncertainty::{realize, DeviationMask, UncertaintyBudget, WorstCaseRealization};
use crate::{Error, Result};

pub use crate::master::CapacityHandoff;

/// Multiplier applied to the top shedding cost for the default big-M.
pub const BIG_M_SAFETY: f64 = 10.0;

/// Default big-M: ten times the highest tier-3 shedding cost.
pub fn default_big_m(inst: &NetworkInstance) -> f64 {
    BIG_M_SAFETY * inst.shedding.max_cost()
}

/// Linearized product `z * mu` for one renewable unit and step.
#[derive(Clone, Copy, Debug)]
pub struct AuxTerm {
    pub unit: usize,
    pub step: usize,
    /// Index into [`SubproblemModel::z`].
    pub cell: usize,
    pub mu: VarId,
    pub aux: VarId,
    /// `CAP * dt * dev`, the objective weight of `aux`.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct SubproblemModel {
    pub model: Model,
    pub dual_map: DualMap,
    /// The primal dispatch LP that was dualized.
    pub primal: Model,
    pub primal_block: BlockVars,
    /// Deviation binaries `(tech, region, period, column)`.
    pub z: Vec<(TechClass, usize, usize, VarId)>,
    pub aux: Vec<AuxTerm>,
    pub big_m: f64,
    pub budget: UncertaintyBudget,
}

/// Dual values of interest from a subproblem solve.
#[derive(Clone, Debug, Serialize)]
pub struct DualSolution {
    /// Balance duals `[node][step]` (EUR/MWh).
    pub lambda: Vec<Vec<f64>>,
    /// Renewable limit duals `[unit][step]`.
    pub mu_renewable: Vec<Vec<f64>>,
    pub z: DeviationMask,
    pub objective: f64,
    /// Every dual column, indexed like the subproblem model.
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// Builds the worst-case MILP for fixed capacities.
pub fn build_subproblem(
    inst: &NetworkInstance,
    handoff: &CapacityHandoff,
    budget: &UncertaintyBudget,
    big_m: f64,
) -> Result<SubproblemModel> {
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(Error::InvalidArgument(format!("big-M must be positive, got {big_m}")));
    }
    let budget = budget.clamped(inst.regions.len());
    let (primal, block) = build_dispatch(inst, handoff, &reference_cf(inst))?;
    let (mut model, dual_map) = dualize(&primal);

    let regions = inst.regions.len();
    let periods = inst.timegrid.periods.len();
    let period_of = inst.timegrid.period_of_steps();
    let dt = inst.timegrid.step_hours;

    // A binary per cell that can actually deviate somewhere.
    let mut cell_of = vec![None; 2 * regions * periods];
    let mut z = Vec::new();
    for r in &inst.renewables {
        let tech = r.technology.class();
        let g = inst.region_index(&r.region).expect("validated region");
        for (t, p) in period_of.iter().enumerate() {
            let Some(p) = *p else { continue };
            let key = (tech.index() * regions + g) * periods + p;
            if r.cf.deviation[t] > 0.0 && cell_of[key].is_none() {
                let id = inst.regions[g].id.as_str();
                let pid = inst.timegrid.periods[p].id.as_str();
                let v = model.add_binary(format!("z[{},{id},{pid}]", tech.label()), 0.0);
                cell_of[key] = Some(z.len());
                z.push((tech, g, p, v));
            }
        }
    }
    z.sort_by_key(|&(tech, g, p, _)| (tech, g, p));
    for (k, &(tech, g, p, _)) in z.iter().enumerate() {
        cell_of[(tech.index() * regions + g) * periods + p] = Some(k);
    }

    for tech in TechClass::ALL {
        for p in 0..periods {
            let terms: Vec<(VarId, f64)> = z
                .iter()
                .filter(|c| c.0 == tech && c.2 == p)
                .map(|c| (c.3, 1.0))
                .collect();
            if !terms.is_empty() {
                model.add_row(
                    format!("budget[{},{}]", tech.label(), inst.timegrid.periods[p].id),
                    terms,
                    RowSense::Le,
                    budget.gamma(tech) as f64,
                );
            }
        }
    }

    let mut aux = Vec::new();
    for (i, r) in inst.renewables.iter().enumerate() {
        let tech = r.technology.class();
        let g = inst.region_index(&r.region).expect("validated region");
        for (t, p) in period_of.iter().enumerate() {
            let Some(p) = *p else { continue };
            let weight = handoff.renewable[i] * dt * r.cf.deviation[t];
            if weight <= 0.0 {
                continue;
            }
            let cell = cell_of[(tech.index() * regions + g) * periods + p].expect("cell exists for deviating unit");
            let zv = z[cell].3;
            let gen = block.gen_renewable[i][t];
            let mu = dual_map.upper_dual[gen.0].expect("renewable generation has a finite upper bound");
            let name = format!("{},{t}", r.id);
            let a = model.add_var(format!("aux[{name}]"), 0.0, f64::INFINITY, weight);
            model.add_row(format!("bigm_aux_up[{name}]"), [(a, 1.0), (zv, -big_m)], RowSense::Le, 0.0);
            model.add_row(format!("bigm_aux_lo[{name}]"), [(a, 1.0), (zv, big_m)], RowSense::Ge, 0.0);
            model.add_row(
                format!("bigm_mu_up[{name}]"),
                [(mu, 1.0), (a, -1.0), (zv, big_m)],
                RowSense::Le,
                big_m,
            );
            model.add_row(
                format!("bigm_mu_lo[{name}]"),
                [(mu, 1.0), (a, -1.0), (zv, -big_m)],
                RowSense::Ge,
                -big_m,
            );
            aux.push(AuxTerm {
                unit: i,
                step: t,
                cell,
                mu,
                aux: a,
                weight,
            });
        }
    }

    Ok(SubproblemModel {
        model,
        dual_map,
        primal,
        primal_block: block,
        z,
        aux,
        big_m,
        budget,
    })
}

impl SubproblemModel {
    fn mask(&self, inst: &NetworkInstance, x: &[f64]) -> DeviationMask {
        let mut m = DeviationMask::for_instance(inst);
        for (k, &(tech, g, p, v)) in self.z.iter().enumerate() {
            // Flags that weigh nothing at these capacities are left unset.
            let effective = self.aux.iter().any(|a| a.cell == k);
            if effective && x[v.0] > 0.5 {
                m.set(tech, g, p, true);
            }
        }
        m
    }

    /// Copy of the model with every binary fixed to `z`.
    fn with_fixed_z(&self, z: &DeviationMask) -> Model {
        let mut m = self.model.clone();
        for &(tech, g, p, v) in &self.z {
            let val = if z.get(tech, g, p) { 1.0 } else { 0.0 };
            let var = m.var_mut(v);
            var.kind = VarKind::Continuous;
            var.lb = val;
            var.ub = val;
        }
        m
    }

    fn dual_solution(&self, z: DeviationMask, objective: f64, x: Vec<f64>) -> DualSolution {
        let lambda = self
            .primal_block
            .balance
            .iter()
            .map(|row| row.iter().map(|r| x[self.dual_map.row_dual[r.0].0]).collect())
            .collect();
        let mu_renewable = self
            .primal_block
            .gen_renewable
            .iter()
            .map(|row| {
                row.iter()
                    .map(|g| self.dual_map.upper_dual[g.0].map_or(0.0, |v| x[v.0]))
                    .collect()
            })
            .collect();
        DualSolution {
            lambda,
            mu_renewable,
            z,
            objective,
            values: x,
        }
    }

    /// Re-solves with `z` fixed and the objective held at `value`, pushing
    /// the big-M-coupled duals as low as they go, then checks none of them
    /// sits at M. Returns the polished point.
    fn polish(&self, z: &DeviationMask, value: f64, backend: &dyn SolverBackend) -> Result<Vec<f64>> {
        let mut m = self.with_fixed_z(z);
        let obj: Vec<(VarId, f64)> = m
            .vars()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.obj != 0.0)
            .map(|(j, v)| (VarId(j), v.obj))
            .collect();
        let slack = 1e-9 * value.abs().max(1.0);
        m.add_row("objective_floor", obj, RowSense::Ge, value - slack);
        for j in 0..m.num_vars() {
            m.set_obj(VarId(j), 0.0);
        }
        for a in &self.aux {
            m.set_obj(a.mu, 1.0);
            m.set_obj(a.aux, 1.0);
        }
        m.sense = Sense::Minimize;
        let res = backend.solve_lp(&m)?;
        crate::master::require_optimal(&res, "subproblem polishing")?;
        let x = res.primal.expect("optimal result carries values");
        let limit = self.big_m * (1.0 - 1e-6);
        for a in &self.aux {
            for v in [a.mu, a.aux] {
                if x[v.0] >= limit {
                    return Err(Error::BigMSaturated {
                        variable: m.var(v).name.clone(),
                        value: x[v.0],
                        big_m: self.big_m,
                    });
                }
            }
        }
        Ok(x)
    }

    /// Solves the subproblem with the deviation binaries fixed to `z`. By
    /// strong duality the objective equals the dispatch cost under
    /// `realize(z)`.
    pub fn solve_fixed(
        &self,
        z: &DeviationMask,
        backend: &dyn SolverBackend,
    ) -> Result<DualSolution> {
        let m = self.with_fixed_z(z);
        let res = backend.solve_lp(&m)?;
        crate::master::require_optimal(&res, "fixed-z subproblem")?;
        let value = res.objective.expect("optimal result carries an objective");
        let x = self.polish(z, value, backend)?;
        Ok(self.dual_solution(z.clone(), value, x))
    }
}

/// Solves the worst-case MILP to within `gap_tol` relative.
pub fn solve_subproblem(
    inst: &NetworkInstance,
    sp: &SubproblemModel,
    gap_tol: f64,
    backend: &dyn SolverBackend,
) -> Result<(WorstCaseRealization, DualSolution)> {
    let res = backend.solve_milp(&sp.model, gap_tol)?;
    crate::master::require_optimal(&res, "subproblem")?;
    let x = res.primal.as_ref().expect("optimal result carries values");
    let value = res.objective.expect("optimal result carries an objective");
    let z = sp.mask(inst, x);
    let polished = sp.polish(&z, value, backend)?;
    let realized_cf = realize(inst, &z)?;
    let duals = sp.dual_solution(z.clone(), value, polished);
    Ok((
        WorstCaseRealization {
            z,
            realized_cf,
            dual_objective: value,
        },
        duals,
    ))
}

/// `|subproblem(z) - dispatch_cost(realize(z))| / max(1, dispatch_cost)`
/// for capacities `caps`.
pub fn verify_strong_duality(
    inst: &NetworkInstance,
    caps: &Capacities,
    z: &DeviationMask,
    backend: &dyn SolverBackend,
) -> Result<f64> {
    let handoff = CapacityHandoff::new(inst, caps)?;
    let sp = build_subproblem(inst, &handoff, &UncertaintyBudget::uniform(inst.regions.len()), default_big_m(inst))?;
    let dual = sp.solve_fixed(z, backend)?.objective;
    let primal = dispatch_cost(inst, caps, &realize(inst, z)?, backend)?;
    Ok((dual - primal).abs() / primal.abs().max(1.0))
}
