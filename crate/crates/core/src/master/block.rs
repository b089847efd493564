//! One dispatch block: every operating variable and row for a single
//! capacity-factor realization.
//!
//! Dispatch quantities are energies per step (MWh). Power ratings enter as
//! `capacity * step_hours`. When capacities are first-stage variables the
//! capacity-dependent limits are rows; when capacities are fixed they become
//! variable bounds, so the renewable limit of unit `r` at step `t` is the
//! upper bound of its generation variable.

use std::f64::consts::PI;

use crate::grid::{HydroKind, LineKind, NetworkInstance};
use crate::solver::{Model, RowId, RowSense, VarId};

use super::CapacityHandoff;

/// First-stage capacity columns of a master model.
#[derive(Clone, Debug)]
pub struct CapacityVars {
    pub renewable: Vec<VarId>,
    pub battery_inverter: Vec<VarId>,
    pub battery_storage: Vec<VarId>,
    pub h2_ocgt: Vec<VarId>,
    pub h2_electrolyzer: Vec<VarId>,
    pub h2_storage: Vec<VarId>,
    pub line: Vec<VarId>,
}

impl CapacityVars {
    pub fn all(&self) -> impl Iterator<Item = VarId> + '_ {
        self.renewable
            .iter()
            .chain(&self.battery_inverter)
            .chain(&self.battery_storage)
            .chain(&self.h2_ocgt)
            .chain(&self.h2_electrolyzer)
            .chain(&self.h2_storage)
            .chain(&self.line)
            .copied()
    }

    /// Adds one investment column per expandable asset, costed at its
    /// annualized price.
    pub fn add(model: &mut Model, inst: &NetworkInstance) -> CapacityVars {
        let cap = |o: Option<f64>| o.unwrap_or(f64::INFINITY);
        CapacityVars {
            renewable: inst
                .renewables
                .iter()
                .map(|r| model.add_var(format!("cap_ren[{}]", r.id), 0.0, cap(r.max_capacity), r.annualized_cost))
                .collect(),
            battery_inverter: inst
                .batteries
                .iter()
                .map(|b| model.add_var(format!("cap_bat_inv[{}]", b.id), 0.0, cap(b.max_inverter), b.inverter_cost))
                .collect(),
            battery_storage: inst
                .batteries
                .iter()
                .map(|b| model.add_var(format!("cap_bat_stor[{}]", b.id), 0.0, cap(b.max_storage), b.storage_cost))
                .collect(),
            h2_ocgt: inst
                .hydrogens
                .iter()
                .map(|h| model.add_var(format!("cap_h2_ocgt[{}]", h.id), 0.0, cap(h.max_ocgt), h.ocgt_cost))
                .collect(),
            h2_electrolyzer: inst
                .hydrogens
                .iter()
                .map(|h| {
                    model.add_var(format!("cap_h2_el[{}]", h.id), 0.0, cap(h.max_electrolyzer), h.electrolyzer_cost)
                })
                .collect(),
            h2_storage: inst
                .hydrogens
                .iter()
                .map(|h| model.add_var(format!("cap_h2_stor[{}]", h.id), 0.0, cap(h.max_storage), h.storage_cost))
                .collect(),
            line: inst
                .lines
                .iter()
                .map(|l| model.add_var(format!("cap_line[{}]", l.id), 0.0, l.max_expansion(), l.expansion_cost))
                .collect(),
        }
    }
}

/// Where capacity-dependent limits come from.
#[derive(Clone, Copy)]
pub enum CapacityMode<'a> {
    Variables(&'a CapacityVars),
    Fixed(&'a CapacityHandoff),
}

/// Column and row handles of one block, indexed `[entity][step]`.
#[derive(Clone, Debug, Default)]
pub struct BlockVars {
    pub gen_renewable: Vec<Vec<VarId>>,
    pub gen_conventional: Vec<Vec<VarId>>,
    pub gen_hydro: Vec<Vec<VarId>>,
    /// Pumped-storage charging and level, indexed like `hydros` (empty rows
    /// for non-pumped units).
    pub charge_psp: Vec<Vec<VarId>>,
    pub level_psp: Vec<Vec<VarId>>,
    pub discharge_battery: Vec<Vec<VarId>>,
    pub charge_battery: Vec<Vec<VarId>>,
    pub level_battery: Vec<Vec<VarId>>,
    pub discharge_h2: Vec<Vec<VarId>>,
    pub charge_h2: Vec<Vec<VarId>>,
    pub level_h2: Vec<Vec<VarId>>,
    pub flow: Vec<Vec<VarId>>,
    /// Empty when the network has no AC line.
    pub theta: Vec<Vec<VarId>>,
    /// `[node][step][tier]`.
    pub shed: Vec<Vec<[VarId; 3]>>,
    pub balance: Vec<Vec<RowId>>,
    /// Operating cost as a linear expression.
    pub cost: Vec<(VarId, f64)>,
}

/// Adds a dispatch block for the realized capacity factors `cf[unit][t]`.
/// Names carry `prefix` so several blocks can share one model.
pub fn add_block(
    model: &mut Model,
    inst: &NetworkInstance,
    cf: &[Vec<f64>],
    caps: CapacityMode<'_>,
    prefix: &str,
) -> BlockVars {
    let steps = inst.steps();
    let dt = inst.timegrid.step_hours;
    let inf = f64::INFINITY;
    let mut b = BlockVars::default();
    let p = prefix;

    // Node injections collected per (node, t) for the balance rows.
    let mut inject: Vec<Vec<Vec<(VarId, f64)>>> = vec![vec![Vec::new(); steps]; inst.nodes.len()];
    let node = |id: &str| inst.node_index(id).expect("validated node reference");

    // A capacity-limited variable: either a row against the capacity column,
    // or a plain bound.
    let limited = |model: &mut Model,
                       name: String,
                       row: String,
                       cap_var: Option<VarId>,
                       fixed: f64,
                       scale: f64|
     -> VarId {
        match cap_var {
            Some(c) => {
                let v = model.add_var(name, 0.0, inf, 0.0);
                model.add_row(row, [(v, 1.0), (c, -scale)], RowSense::Le, 0.0);
                v
            }
            None => model.add_var(name, 0.0, fixed * scale, 0.0),
        }
    };

    for (i, r) in inst.renewables.iter().enumerate() {
        let n = node(&r.node);
        let (cap_var, fixed) = match caps {
            CapacityMode::Variables(cv) => (Some(cv.renewable[i]), 0.0),
            CapacityMode::Fixed(h) => (None, h.renewable[i]),
        };
        let row: Vec<VarId> = (0..steps)
            .map(|t| {
                let v = limited(
                    model,
                    format!("{p}gen[{},{t}]", r.id),
                    format!("{p}ren_limit[{},{t}]", r.id),
                    cap_var,
                    fixed,
                    dt * cf[i][t],
                );
                inject[n][t].push((v, 1.0));
                v
            })
            .collect();
        b.gen_renewable.push(row);
    }

    for c in &inst.conventionals {
        let n = node(&c.node);
        let row: Vec<VarId> = (0..steps)
            .map(|t| {
                let v = model.add_var(format!("{p}gen_conv[{},{t}]", c.id), 0.0, c.existing_cap * dt, 0.0);
                inject[n][t].push((v, 1.0));
                b.cost.push((v, c.variable_cost));
                v
            })
            .collect();
        b.gen_conventional.push(row);
    }

    for h in &inst.hydros {
        let n = node(&h.node);
        let mut gen = Vec::with_capacity(steps);
        let mut ch = Vec::new();
        let mut lvl = Vec::new();
        for t in 0..steps {
            let avail = match h.kind {
                HydroKind::Rsv => h.availability.as_ref().map_or(1.0, |a| a[t]),
                _ => 1.0,
            };
            let g = model.add_var(format!("{p}gen_hydro[{},{t}]", h.id), 0.0, h.existing_cap * avail * dt, 0.0);
            inject[n][t].push((g, 1.0));
            gen.push(g);
            if h.kind == HydroKind::Psp {
                let csf = h.storage_scale.unwrap_or(0.0);
                let eff = h.efficiency.unwrap_or(1.0);
                let c = model.add_var(format!("{p}ch_psp[{},{t}]", h.id), 0.0, h.existing_cap * dt, 0.0);
                let l = model.add_var(format!("{p}lvl_psp[{},{t}]", h.id), 0.0, h.existing_cap * csf, 0.0);
                inject[n][t].push((c, -1.0));
                let mut terms = vec![(l, 1.0), (c, -eff), (g, 1.0)];
                let rhs = if t == 0 {
                    h.existing_cap * csf / 2.0
                } else {
                    terms.push((lvl[t - 1], -1.0));
                    0.0
                };
                model.add_row(format!("{p}psp_level[{},{t}]", h.id), terms, RowSense::Eq, rhs);
                ch.push(c);
                lvl.push(l);
            }
        }
        b.gen_hydro.push(gen);
        b.charge_psp.push(ch);
        b.level_psp.push(lvl);
    }

    for (i, bat) in inst.batteries.iter().enumerate() {
        let n = node(&bat.node);
        let (inv, stor, fi, fs) = match caps {
            CapacityMode::Variables(cv) => (Some(cv.battery_inverter[i]), Some(cv.battery_storage[i]), 0.0, 0.0),
            CapacityMode::Fixed(h) => (None, None, h.battery_inverter[i], h.battery_storage[i]),
        };
        let (mut dis, mut ch, mut lvl) = (Vec::new(), Vec::new(), Vec::new());
        for t in 0..steps {
            let d = limited(model, format!("{p}dis_bat[{},{t}]", bat.id), format!("{p}bat_dis_cap[{},{t}]", bat.id), inv, fi, dt);
            let c = limited(model, format!("{p}ch_bat[{},{t}]", bat.id), format!("{p}bat_ch_cap[{},{t}]", bat.id), inv, fi, dt);
            let l = limited(model, format!("{p}lvl_bat[{},{t}]", bat.id), format!("{p}bat_lvl_cap[{},{t}]", bat.id), stor, fs, 1.0);
            inject[n][t].push((d, 1.0));
            inject[n][t].push((c, -1.0));
            let mut terms = vec![(l, 1.0), (c, -bat.efficiency), (d, 1.0)];
            if t > 0 {
                terms.push((lvl[t - 1], -1.0));
            }
            model.add_row(format!("{p}bat_level[{},{t}]", bat.id), terms, RowSense::Eq, 0.0);
            dis.push(d);
            ch.push(c);
            lvl.push(l);
        }
        b.discharge_battery.push(dis);
        b.charge_battery.push(ch);
        b.level_battery.push(lvl);
    }

    for (i, h2) in inst.hydrogens.iter().enumerate() {
        let n = node(&h2.node);
        let (oc, el, st, fo, fe, fs) = match caps {
            CapacityMode::Variables(cv) => (
                Some(cv.h2_ocgt[i]),
                Some(cv.h2_electrolyzer[i]),
                Some(cv.h2_storage[i]),
                0.0,
                0.0,
                0.0,
            ),
            CapacityMode::Fixed(h) => (None, None, None, h.h2_ocgt[i], h.h2_electrolyzer[i], h.h2_storage[i]),
        };
        let (mut dis, mut ch, mut lvl) = (Vec::new(), Vec::new(), Vec::new());
        for t in 0..steps {
            let d = limited(model, format!("{p}dis_h2[{},{t}]", h2.id), format!("{p}h2_ocgt_cap[{},{t}]", h2.id), oc, fo, dt);
            let c = limited(model, format!("{p}ch_h2[{},{t}]", h2.id), format!("{p}h2_el_cap[{},{t}]", h2.id), el, fe, dt);
            let l = limited(model, format!("{p}lvl_h2[{},{t}]", h2.id), format!("{p}h2_lvl_cap[{},{t}]", h2.id), st, fs, 1.0);
            inject[n][t].push((d, 1.0));
            inject[n][t].push((c, -1.0));
            let mut terms = vec![(l, 1.0), (c, -h2.eta_el), (d, 1.0 / h2.eta_ocgt)];
            if t > 0 {
                terms.push((lvl[t - 1], -1.0));
            }
            model.add_row(format!("{p}h2_level[{},{t}]", h2.id), terms, RowSense::Eq, 0.0);
            dis.push(d);
            ch.push(c);
            lvl.push(l);
        }
        b.discharge_h2.push(dis);
        b.charge_h2.push(ch);
        b.level_h2.push(lvl);
    }

    let has_ac = inst.lines.iter().any(|l| l.kind == LineKind::Ac);
    if has_ac {
        for n in &inst.nodes {
            b.theta.push(
                (0..steps)
                    .map(|t| model.add_var(format!("{p}theta[{},{t}]", n.id), -PI, PI, 0.0))
                    .collect(),
            );
        }
        let r = inst.reference_node().expect("validated reference node");
        for t in 0..steps {
            model.add_row(format!("{p}slack[{t}]"), [(b.theta[r][t], 1.0)], RowSense::Eq, 0.0);
        }
    }

    for (i, l) in inst.lines.iter().enumerate() {
        let (s, r) = (node(&l.from), node(&l.to));
        let mut row = Vec::with_capacity(steps);
        for t in 0..steps {
            let f = match caps {
                // A line that cannot be expanded needs no coupling rows.
                CapacityMode::Variables(_) if l.max_expansion() <= 0.0 => {
                    let lim = l.existing_cap * dt;
                    model.add_var(format!("{p}flow[{},{t}]", l.id), -lim, lim, 0.0)
                }
                CapacityMode::Variables(cv) => {
                    let f = model.add_var(format!("{p}flow[{},{t}]", l.id), -inf, inf, 0.0);
                    let c = cv.line[i];
                    let lim = l.existing_cap * dt;
                    model.add_row(format!("{p}flow_up[{},{t}]", l.id), [(f, 1.0), (c, -dt)], RowSense::Le, lim);
                    model.add_row(format!("{p}flow_lo[{},{t}]", l.id), [(f, 1.0), (c, dt)], RowSense::Ge, -lim);
                    f
                }
                CapacityMode::Fixed(h) => {
                    let lim = h.line_total[i] * dt;
                    model.add_var(format!("{p}flow[{},{t}]", l.id), -lim, lim, 0.0)
                }
            };
            if l.kind == LineKind::Ac {
                let k = dt * l.susceptance;
                model.add_row(
                    format!("{p}flow_def[{},{t}]", l.id),
                    [(f, 1.0), (b.theta[s][t], -k), (b.theta[r][t], k)],
                    RowSense::Eq,
                    0.0,
                );
            }
            inject[s][t].push((f, -1.0));
            inject[r][t].push((f, 1.0));
            row.push(f);
        }
        b.flow.push(row);
    }

    let fr = inst.shedding.fractions;
    for (n, nd) in inst.nodes.iter().enumerate() {
        let sc = inst.shedding.costs_at(&nd.id);
        let mut shed_row = Vec::with_capacity(steps);
        let mut bal_row = Vec::with_capacity(steps);
        for t in 0..steps {
            let dem = inst.demand.at(&nd.id, t);
            let tiers: [VarId; 3] = std::array::from_fn(|k| {
                let v = model.add_var(format!("{p}shed{}[{},{t}]", k + 1, nd.id), 0.0, dem * fr[k], 0.0);
                b.cost.push((v, sc[k]));
                v
            });
            let mut terms = std::mem::take(&mut inject[n][t]);
            terms.extend(tiers.iter().map(|&v| (v, 1.0)));
            bal_row.push(model.add_row(format!("{p}balance[{},{t}]", nd.id), terms, RowSense::Eq, dem));
            shed_row.push(tiers);
        }
        b.shed.push(shed_row);
        b.balance.push(bal_row);
    }

    b
}
