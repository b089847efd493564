//! Residual checks on a solved dispatch block, recomputed from the instance
//! data rather than from the LP rows.

use serde::Serialize;

use super::{Capacities, DispatchValues};
use crate::grid::{HydroKind, LineKind, NetworkInstance};

/// Largest residual per constraint family. Balance residuals are relative
/// to `max(1, demand)`; the rest are absolute MWh (or radians).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhysicsReport {
    pub balance: f64,
    pub storage: f64,
    pub psp_start: f64,
    pub storage_bounds: f64,
    pub shedding: f64,
    pub flow: f64,
    pub flow_limit: f64,
    pub generation_limit: f64,
}

impl PhysicsReport {
    pub fn worst(&self) -> f64 {
        [
            self.balance,
            self.storage,
            self.psp_start,
            self.storage_bounds,
            self.shedding,
            self.flow,
            self.flow_limit,
            self.generation_limit,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn over(v: f64, ub: f64) -> f64 {
    (v - ub).max(0.0)
}

fn outside(v: f64, lb: f64, ub: f64) -> f64 {
    (lb - v).max(v - ub).max(0.0)
}

pub fn check_physics(
    inst: &NetworkInstance,
    caps: &Capacities,
    cf: &[Vec<f64>],
    d: &DispatchValues,
) -> PhysicsReport {
    let steps = inst.steps();
    let dt = inst.timegrid.step_hours;
    let mut rep = PhysicsReport::default();
    let mut net = vec![vec![0.0; steps]; inst.nodes.len()];
    let node = |id: &str| inst.node_index(id).expect("validated node reference");

    for (i, r) in inst.renewables.iter().enumerate() {
        let n = node(&r.node);
        for t in 0..steps {
            let g = d.gen_renewable[i][t];
            net[n][t] += g;
            rep.generation_limit = rep
                .generation_limit
                .max(outside(g, 0.0, caps.renewable[i] * dt * cf[i][t]));
        }
    }
    for (i, c) in inst.conventionals.iter().enumerate() {
        let n = node(&c.node);
        for t in 0..steps {
            let g = d.gen_conventional[i][t];
            net[n][t] += g;
            rep.generation_limit = rep.generation_limit.max(outside(g, 0.0, c.existing_cap * dt));
        }
    }
    for (i, h) in inst.hydros.iter().enumerate() {
        let n = node(&h.node);
        for t in 0..steps {
            let g = d.gen_hydro[i][t];
            net[n][t] += g;
            let avail = if h.kind == HydroKind::Rsv {
                h.availability.as_ref().map_or(1.0, |a| a[t])
            } else {
                1.0
            };
            rep.generation_limit = rep.generation_limit.max(outside(g, 0.0, h.existing_cap * avail * dt));
            if h.kind == HydroKind::Psp {
                let csf = h.storage_scale.unwrap_or(0.0);
                let eff = h.efficiency.unwrap_or(1.0);
                let ch = d.charge_psp[i][t];
                let lvl = d.level_psp[i][t];
                net[n][t] -= ch;
                let prev = if t == 0 { h.existing_cap * csf / 2.0 } else { d.level_psp[i][t - 1] };
                let res = (lvl - (prev + ch * eff - g)).abs();
                if t == 0 {
                    rep.psp_start = rep.psp_start.max(res);
                }
                rep.storage = rep.storage.max(res);
                rep.storage_bounds = rep
                    .storage_bounds
                    .max(outside(lvl, 0.0, h.existing_cap * csf))
                    .max(outside(ch, 0.0, h.existing_cap * dt));
            }
        }
    }
    for (i, b) in inst.batteries.iter().enumerate() {
        let n = node(&b.node);
        for t in 0..steps {
            let (dis, ch, lvl) = (d.discharge_battery[i][t], d.charge_battery[i][t], d.level_battery[i][t]);
            net[n][t] += dis - ch;
            let prev = if t == 0 { 0.0 } else { d.level_battery[i][t - 1] };
            rep.storage = rep.storage.max((lvl - (prev + ch * b.efficiency - dis)).abs());
            let p = caps.battery_inverter[i] * dt;
            rep.storage_bounds = rep
                .storage_bounds
                .max(outside(lvl, 0.0, caps.battery_storage[i]))
                .max(outside(dis, 0.0, p))
                .max(outside(ch, 0.0, p));
        }
    }
    for (i, h) in inst.hydrogens.iter().enumerate() {
        let n = node(&h.node);
        for t in 0..steps {
            let (dis, ch, lvl) = (d.discharge_h2[i][t], d.charge_h2[i][t], d.level_h2[i][t]);
            net[n][t] += dis - ch;
            let prev = if t == 0 { 0.0 } else { d.level_h2[i][t - 1] };
            rep.storage = rep
                .storage
                .max((lvl - (prev + ch * h.eta_el - dis / h.eta_ocgt)).abs());
            rep.storage_bounds = rep
                .storage_bounds
                .max(outside(lvl, 0.0, caps.h2_storage[i]))
                .max(outside(dis, 0.0, caps.h2_ocgt[i] * dt))
                .max(outside(ch, 0.0, caps.h2_electrolyzer[i] * dt));
        }
    }
    let pi = std::f64::consts::PI;
    for t in 0..steps {
        for theta in &d.theta {
            rep.flow = rep.flow.max(outside(theta[t], -pi, pi));
        }
        if let Some(r) = inst.reference_node() {
            if let Some(row) = d.theta.get(r) {
                rep.flow = rep.flow.max(row[t].abs());
            }
        }
    }
    for (i, l) in inst.lines.iter().enumerate() {
        let (s, r) = (node(&l.from), node(&l.to));
        let lim = (l.existing_cap + caps.line_expansion[i]) * dt;
        for t in 0..steps {
            let f = d.flow[i][t];
            net[s][t] -= f;
            net[r][t] += f;
            rep.flow_limit = rep.flow_limit.max(over(f.abs(), lim));
            if l.kind == LineKind::Ac {
                let def = dt * l.susceptance * (d.theta[s][t] - d.theta[r][t]);
                rep.flow = rep.flow.max((f - def).abs());
            }
        }
    }
    let fr = inst.shedding.fractions;
    for (n, nd) in inst.nodes.iter().enumerate() {
        for t in 0..steps {
            let dem = inst.demand.at(&nd.id, t);
            let shed = d.shed[n][t];
            for k in 0..3 {
                rep.shedding = rep.shedding.max(outside(shed[k], 0.0, dem * fr[k]));
            }
            let lhs = net[n][t] + shed.iter().sum::<f64>();
            rep.balance = rep.balance.max((lhs - dem).abs() / dem.max(1.0));
        }
    }
    rep
}
