//! Scenario-expanded master problem, the deterministic model and the
//! fixed-capacity dispatch LP.

mod block;
mod physics;

use serde::{Deserialize, Serialize};

pub use block::{add_block, BlockVars, CapacityMode, CapacityVars};
pub use physics::{check_physics, PhysicsReport};

use crate::grid::NetworkInstance;
use crate::solver::{Model, RowSense, Sense, SolveResult, SolveStatus, SolverBackend, VarId};
use crate::{Error, Result};

/// Capacity factors per renewable unit and step, `[unit][t]`.
pub type CfSeries = Vec<Vec<f64>>;

/// The expected availability of every renewable unit.
pub fn reference_cf(inst: &NetworkInstance) -> CfSeries {
    inst.renewables.iter().map(|r| r.cf.reference.clone()).collect()
}

/// First-stage decisions: built capacity per expandable asset, in instance
/// order. Line entries are the expansion on top of the existing capacity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Capacities {
    pub renewable: Vec<f64>,
    pub battery_inverter: Vec<f64>,
    pub battery_storage: Vec<f64>,
    pub h2_ocgt: Vec<f64>,
    pub h2_electrolyzer: Vec<f64>,
    pub h2_storage: Vec<f64>,
    pub line_expansion: Vec<f64>,
}

impl Capacities {
    pub fn zero(inst: &NetworkInstance) -> Capacities {
        Capacities {
            renewable: vec![0.0; inst.renewables.len()],
            battery_inverter: vec![0.0; inst.batteries.len()],
            battery_storage: vec![0.0; inst.batteries.len()],
            h2_ocgt: vec![0.0; inst.hydrogens.len()],
            h2_electrolyzer: vec![0.0; inst.hydrogens.len()],
            h2_storage: vec![0.0; inst.hydrogens.len()],
            line_expansion: vec![0.0; inst.lines.len()],
        }
    }

    fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.renewable
            .iter()
            .chain(&self.battery_inverter)
            .chain(&self.battery_storage)
            .chain(&self.h2_ocgt)
            .chain(&self.h2_electrolyzer)
            .chain(&self.h2_storage)
            .chain(&self.line_expansion)
            .copied()
    }

    /// Annualized investment cost of these capacities.
    pub fn investment_cost(&self, inst: &NetworkInstance) -> f64 {
        let dot = |a: &[f64], c: &mut dyn Iterator<Item = f64>| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
        dot(&self.renewable, &mut inst.renewables.iter().map(|r| r.annualized_cost))
            + dot(&self.battery_inverter, &mut inst.batteries.iter().map(|b| b.inverter_cost))
            + dot(&self.battery_storage, &mut inst.batteries.iter().map(|b| b.storage_cost))
            + dot(&self.h2_ocgt, &mut inst.hydrogens.iter().map(|h| h.ocgt_cost))
            + dot(&self.h2_electrolyzer, &mut inst.hydrogens.iter().map(|h| h.electrolyzer_cost))
            + dot(&self.h2_storage, &mut inst.hydrogens.iter().map(|h| h.storage_cost))
            + dot(&self.line_expansion, &mut inst.lines.iter().map(|l| l.expansion_cost))
    }

    pub fn check(&self, inst: &NetworkInstance) -> Result<()> {
        let sizes = [
            (self.renewable.len(), inst.renewables.len()),
            (self.battery_inverter.len(), inst.batteries.len()),
            (self.battery_storage.len(), inst.batteries.len()),
            (self.h2_ocgt.len(), inst.hydrogens.len()),
            (self.h2_electrolyzer.len(), inst.hydrogens.len()),
            (self.h2_storage.len(), inst.hydrogens.len()),
            (self.line_expansion.len(), inst.lines.len()),
        ];
        if sizes.iter().any(|(a, b)| a != b) {
            return Err(Error::InvalidArgument("capacity vector does not match the instance".into()));
        }
        if let Some(v) = self.all().find(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("capacity {v} must be finite and >= 0")));
        }
        Ok(())
    }
}

/// Capacities as seen by the second stage: line entries are total capacity
/// (existing plus expansion).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityHandoff {
    pub renewable: Vec<f64>,
    pub battery_inverter: Vec<f64>,
    pub battery_storage: Vec<f64>,
    pub h2_ocgt: Vec<f64>,
    pub h2_electrolyzer: Vec<f64>,
    pub h2_storage: Vec<f64>,
    pub line_total: Vec<f64>,
}

impl CapacityHandoff {
    pub fn new(inst: &NetworkInstance, caps: &Capacities) -> Result<CapacityHandoff> {
        caps.check(inst)?;
        Ok(CapacityHandoff {
            renewable: caps.renewable.clone(),
            battery_inverter: caps.battery_inverter.clone(),
            battery_storage: caps.battery_storage.clone(),
            h2_ocgt: caps.h2_ocgt.clone(),
            h2_electrolyzer: caps.h2_electrolyzer.clone(),
            h2_storage: caps.h2_storage.clone(),
            line_total: inst
                .lines
                .iter()
                .zip(&caps.line_expansion)
                .map(|(l, e)| l.existing_cap + e)
                .collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.renewable
            .iter()
            .chain(&self.battery_inverter)
            .chain(&self.battery_storage)
            .chain(&self.h2_ocgt)
            .chain(&self.h2_electrolyzer)
            .chain(&self.h2_storage)
            .chain(&self.line_total)
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Solved dispatch of one block, indexed like [`BlockVars`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DispatchValues {
    pub gen_renewable: Vec<Vec<f64>>,
    pub gen_conventional: Vec<Vec<f64>>,
    pub gen_hydro: Vec<Vec<f64>>,
    pub charge_psp: Vec<Vec<f64>>,
    pub level_psp: Vec<Vec<f64>>,
    pub discharge_battery: Vec<Vec<f64>>,
    pub charge_battery: Vec<Vec<f64>>,
    pub level_battery: Vec<Vec<f64>>,
    pub discharge_h2: Vec<Vec<f64>>,
    pub charge_h2: Vec<Vec<f64>>,
    pub level_h2: Vec<Vec<f64>>,
    pub flow: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub shed: Vec<Vec<[f64; 3]>>,
}

impl DispatchValues {
    pub fn extract(b: &BlockVars, x: &[f64]) -> DispatchValues {
        let grid = |v: &Vec<Vec<VarId>>| -> Vec<Vec<f64>> {
            v.iter().map(|row| row.iter().map(|id| x[id.0]).collect()).collect()
        };
        DispatchValues {
            gen_renewable: grid(&b.gen_renewable),
            gen_conventional: grid(&b.gen_conventional),
            gen_hydro: grid(&b.gen_hydro),
            charge_psp: grid(&b.charge_psp),
            level_psp: grid(&b.level_psp),
            discharge_battery: grid(&b.discharge_battery),
            charge_battery: grid(&b.charge_battery),
            level_battery: grid(&b.level_battery),
            discharge_h2: grid(&b.discharge_h2),
            charge_h2: grid(&b.charge_h2),
            level_h2: grid(&b.level_h2),
            flow: grid(&b.flow),
            theta: grid(&b.theta),
            shed: b
                .shed
                .iter()
                .map(|row| row.iter().map(|k| k.map(|id| x[id.0])).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBlock {
    /// Position of the realization in the master's realization list.
    pub realization: usize,
    pub cf: CfSeries,
    pub dispatch: DispatchValues,
    /// Generation plus shedding cost of this block.
    pub operating_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterSolution {
    pub capacities: Capacities,
    pub blocks: Vec<ScenarioBlock>,
    pub investment_cost: f64,
    /// Worst block operating cost (the epigraph variable).
    pub recourse_bound: f64,
    pub objective: f64,
}

impl MasterSolution {
    /// Block attaining the recourse bound (the first one on ties).
    pub fn worst_block(&self) -> &ScenarioBlock {
        let mut best = &self.blocks[0];
        for b in &self.blocks[1..] {
            if b.operating_cost > best.operating_cost {
                best = b;
            }
        }
        best
    }
}

/// A built master (or deterministic) LP with its column handles.
#[derive(Clone, Debug)]
pub struct MasterModel {
    pub model: Model,
    pub caps: CapacityVars,
    pub blocks: Vec<BlockVars>,
    /// Epigraph variable; `None` for the deterministic model, whose single
    /// block's cost sits directly in the objective.
    pub eta: Option<VarId>,
    pub realizations: Vec<CfSeries>,
}

fn check_realization(inst: &NetworkInstance, cf: &[Vec<f64>]) -> Result<()> {
    let t = inst.steps();
    if cf.len() != inst.renewables.len() || cf.iter().any(|s| s.len() != t) {
        return Err(Error::InvalidArgument(format!(
            "realization must have {} series of {t} steps",
            inst.renewables.len()
        )));
    }
    Ok(())
}

/// Builds the master LP: shared capacity columns, one dispatch block per
/// realization, and `eta >= cost(block)` for each block.
pub fn build_master(inst: &NetworkInstance, realizations: &[CfSeries]) -> Result<MasterModel> {
    if realizations.is_empty() {
        return Err(Error::InvalidArgument("master needs at least one realization".into()));
    }
    for cf in realizations {
        check_realization(inst, cf)?;
    }
    let mut model = Model::new(Sense::Minimize);
    let caps = CapacityVars::add(&mut model, inst);
    let eta = model.add_var("eta", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let mut blocks = Vec::with_capacity(realizations.len());
    for (k, cf) in realizations.iter().enumerate() {
        let b = add_block(&mut model, inst, cf, CapacityMode::Variables(&caps), &format!("b{k}:"));
        let mut terms = vec![(eta, 1.0)];
        terms.extend(b.cost.iter().map(|&(v, c)| (v, -c)));
        model.add_row(format!("epigraph[{k}]"), terms, RowSense::Ge, 0.0);
        blocks.push(b);
    }
    Ok(MasterModel {
        model,
        caps,
        blocks,
        eta: Some(eta),
        realizations: realizations.to_vec(),
    })
}

/// The single-scenario model at reference availability, with operating cost
/// in the objective.
pub fn build_deterministic(inst: &NetworkInstance) -> Result<MasterModel> {
    let cf = reference_cf(inst);
    check_realization(inst, &cf)?;
    let mut model = Model::new(Sense::Minimize);
    let caps = CapacityVars::add(&mut model, inst);
    let b = add_block(&mut model, inst, &cf, CapacityMode::Variables(&caps), "");
    for &(v, c) in &b.cost {
        let cur = model.var(v).obj;
        model.set_obj(v, cur + c);
    }
    Ok(MasterModel {
        model,
        caps,
        blocks: vec![b],
        eta: None,
        realizations: vec![cf],
    })
}

pub(crate) fn require_optimal(res: &SolveResult, what: &str) -> Result<()> {
    match res.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::Infeasible => Err(Error::Internal(format!(
            "{what} is infeasible; shedding tiers must cover all demand"
        ))),
        SolveStatus::Unbounded => Err(Error::Internal(format!("{what} is unbounded; check cost data"))),
        SolveStatus::Limit => Err(Error::Internal(format!("{what} hit the solver iteration limit"))),
    }
}

fn expr(terms: &[(VarId, f64)], x: &[f64]) -> f64 {
    terms.iter().map(|&(v, c)| c * x[v.0]).sum()
}

/// Solves a built master and extracts capacities and every block's dispatch.
/// The objective is a lower bound on the robust optimum.
pub fn solve_master(mm: &MasterModel, backend: &dyn SolverBackend) -> Result<MasterSolution> {
    let res = backend.solve_lp(&mm.model)?;
    require_optimal(&res, "master problem")?;
    let x = res.primal.as_ref().expect("optimal result carries values");
    // Round-off below 1e-12 MW is reported as zero.
    let pick = |v: &[VarId]| {
        v.iter()
            .map(|id| if x[id.0] < 1e-12 { 0.0 } else { x[id.0] })
            .collect::<Vec<f64>>()
    };
    let cv = &mm.caps;
    let capacities = Capacities {
        renewable: pick(&cv.renewable),
        battery_inverter: pick(&cv.battery_inverter),
        battery_storage: pick(&cv.battery_storage),
        h2_ocgt: pick(&cv.h2_ocgt),
        h2_electrolyzer: pick(&cv.h2_electrolyzer),
        h2_storage: pick(&cv.h2_storage),
        line_expansion: pick(&cv.line),
    };
    let blocks: Vec<ScenarioBlock> = mm
        .blocks
        .iter()
        .zip(&mm.realizations)
        .enumerate()
        .map(|(k, (b, cf))| ScenarioBlock {
            realization: k,
            cf: cf.clone(),
            dispatch: DispatchValues::extract(b, x),
            operating_cost: expr(&b.cost, x),
        })
        .collect();
    let objective = res.objective.expect("optimal result carries an objective");
    let investment_cost = cv
        .all()
        .map(|v| mm.model.var(v).obj * x[v.0])
        .sum();
    let recourse_bound = match mm.eta {
        Some(e) => x[e.0],
        None => blocks[0].operating_cost,
    };
    Ok(MasterSolution {
        capacities,
        blocks,
        investment_cost,
        recourse_bound,
        objective,
    })
}

/// Solves the deterministic model at reference availability.
pub fn solve_deterministic(inst: &NetworkInstance, backend: &dyn SolverBackend) -> Result<MasterSolution> {
    solve_master(&build_deterministic(inst)?, backend)
}

/// Dispatch LP for fixed capacities and one realization; objective is the
/// operating cost.
pub fn build_dispatch(
    inst: &NetworkInstance,
    handoff: &CapacityHandoff,
    cf: &[Vec<f64>],
) -> Result<(Model, BlockVars)> {
    check_realization(inst, cf)?;
    if !handoff.is_finite() {
        return Err(Error::InvalidArgument("capacity handoff has a non-finite or negative entry".into()));
    }
    let mut model = Model::new(Sense::Minimize);
    let b = add_block(&mut model, inst, cf, CapacityMode::Fixed(handoff), "");
    for &(v, c) in &b.cost {
        let cur = model.var(v).obj;
        model.set_obj(v, cur + c);
    }
    Ok((model, b))
}

/// Optimal operating cost and dispatch with capacities fixed.
pub fn solve_dispatch(
    inst: &NetworkInstance,
    caps: &Capacities,
    cf: &[Vec<f64>],
    backend: &dyn SolverBackend,
) -> Result<(f64, DispatchValues)> {
    let handoff = CapacityHandoff::new(inst, caps)?;
    let (model, b) = build_dispatch(inst, &handoff, cf)?;
    let res = backend.solve_lp(&model)?;
    require_optimal(&res, "dispatch problem")?;
    let x = res.primal.as_ref().expect("optimal result carries values");
    Ok((res.objective.unwrap_or(0.0), DispatchValues::extract(&b, x)))
}

/// Optimal operating cost (generation plus shedding) with capacities fixed.
pub fn dispatch_cost(
    inst: &NetworkInstance,
    caps: &Capacities,
    cf: &[Vec<f64>],
    backend: &dyn SolverBackend,
) -> Result<f64> {
    Ok(solve_dispatch(inst, caps, cf, backend)?.0)
}
