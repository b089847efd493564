//! Result artifacts: metrics, convergence trace, realization matrix, ladder
//! summary and the solution document.
//!
//! Regional figures use the most expensive dispatch block of a solution,
//! which for a converged robust plan is the worst case it was sized for.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ccg::{CcgResult, CcgTrace};
use crate::grid::{NetworkInstance, TechClass, Technology};
use crate::master::{Capacities, MasterSolution};
use crate::uncertainty::{is_dunkelflaute, FlaggedCell, UncertaintyBudget};
use crate::{Error, Result};

/// Formats a number with six significant digits. Parsing the output and
/// formatting again gives the same string.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0.00000e0".
        return "0.00000e0".into();
    }
    format!("{x:.5e}")
}

/// Capacity categories in reporting order. Power in MW, storage in MWh.
pub const POWER_CATEGORIES: [&str; 8] = [
    "solar_pv",
    "wind_onshore",
    "wind_offshore",
    "conventional",
    "hydro",
    "battery_inverter",
    "h2_ocgt",
    "h2_electrolyzer",
];

fn tech_key(t: Technology) -> &'static str {
    match t {
        Technology::SolarPv => "solar_pv",
        Technology::WindOnshore => "wind_onshore",
        Technology::WindOffshore => "wind_offshore",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub region: String,
    pub investment_cost: f64,
    /// Dispatch cost of conventional generation.
    pub operating_cost: f64,
    pub shedding_cost: f64,
    pub total_cost: f64,
    /// Share of the system total cost.
    pub cost_share: f64,
    /// Installed power per category (MW).
    pub capacity_mw: BTreeMap<String, f64>,
    pub battery_storage_mwh: f64,
    pub h2_storage_mwh: f64,
    /// Generation from renewable, conventional and hydro units (MWh).
    pub generation_mwh: f64,
    pub demand_mwh: f64,
    pub shed_mwh: f64,
    /// Flow leaving the region minus flow entering it (MWh).
    pub net_export_mwh: f64,
    pub net_exporter: bool,
    /// `(battery MWh + H2 MWh) / demand over the horizon`.
    pub storage_demand_ratio: f64,
    /// `CAP_h2_storage * eta_ocgt / average daily demand`; absent without demand.
    pub h2_discharge_days: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineMetrics {
    pub line: String,
    pub from_region: String,
    pub to_region: String,
    pub initial_mw: f64,
    pub expansion_mw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemMetrics {
    pub investment_cost: f64,
    pub operating_cost: f64,
    pub shedding_cost: f64,
    pub total_cost: f64,
    pub capacity_mw: BTreeMap<String, f64>,
    /// Percent of installed power per category; empty when nothing is installed.
    pub capacity_mix_percent: BTreeMap<String, f64>,
    pub battery_storage_mwh: f64,
    pub h2_storage_mwh: f64,
    pub demand_mwh: f64,
    pub storage_demand_ratio: f64,
    pub h2_discharge_days: Option<f64>,
    pub transmission_initial_mw: f64,
    pub transmission_expansion_mw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Index of the dispatch block the operating figures come from.
    pub block: usize,
    pub horizon_days: f64,
    pub regions: Vec<RegionMetrics>,
    pub lines: Vec<LineMetrics>,
    pub system: SystemMetrics,
}

fn discharge_days(h2_mwh_out: f64, demand: f64, days: f64) -> Option<f64> {
    (demand > 0.0 && days > 0.0).then(|| h2_mwh_out / (demand / days))
}

/// Cost, capacity, energy and storage figures per region and system-wide.
pub fn report_metrics(inst: &NetworkInstance, sol: &MasterSolution) -> Result<Metrics> {
    if sol.blocks.is_empty() {
        return Err(Error::InvalidArgument("solution has no dispatch block".into()));
    }
    let caps: &Capacities = &sol.capacities;
    caps.check(inst)?;
    let block = sol
        .blocks
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.operating_cost.total_cmp(&b.1.operating_cost))
        .map(|(k, _)| k)
        .expect("non-empty");
    let d = &sol.blocks[block].dispatch;
    let steps = inst.steps();
    let days = steps as f64 * inst.timegrid.step_hours / 24.0;

    let region_of_node: Vec<usize> = inst
        .nodes
        .iter()
        .map(|n| inst.region_index(&n.region).expect("validated region"))
        .collect();
    let rn = |node: &str| region_of_node[inst.node_index(node).expect("validated node")];

    let mut regions: Vec<RegionMetrics> = inst
        .regions
        .iter()
        .map(|g| RegionMetrics {
            region: g.id.clone(),
            investment_cost: 0.0,
            operating_cost: 0.0,
            shedding_cost: 0.0,
            total_cost: 0.0,
            cost_share: 0.0,
            capacity_mw: POWER_CATEGORIES.iter().map(|c| (c.to_string(), 0.0)).collect(),
            battery_storage_mwh: 0.0,
            h2_storage_mwh: 0.0,
            generation_mwh: 0.0,
            demand_mwh: 0.0,
            shed_mwh: 0.0,
            net_export_mwh: 0.0,
            net_exporter: false,
            storage_demand_ratio: 0.0,
            h2_discharge_days: None,
        })
        .collect();
    let mut h2_out = vec![0.0; inst.regions.len()];

    for (i, r) in inst.renewables.iter().enumerate() {
        let m = &mut regions[rn(&r.node)];
        m.investment_cost += r.annualized_cost * caps.renewable[i];
        *m.capacity_mw.get_mut(tech_key(r.technology)).expect("category") += caps.renewable[i];
        m.generation_mwh += d.gen_renewable[i].iter().sum::<f64>();
    }
    for (i, c) in inst.conventionals.iter().enumerate() {
        let m = &mut regions[rn(&c.node)];
        let gen: f64 = d.gen_conventional[i].iter().sum();
        m.operating_cost += c.variable_cost * gen;
        *m.capacity_mw.get_mut("conventional").expect("category") += c.existing_cap;
        m.generation_mwh += gen;
    }
    for (i, h) in inst.hydros.iter().enumerate() {
        let m = &mut regions[rn(&h.node)];
        *m.capacity_mw.get_mut("hydro").expect("category") += h.existing_cap;
        m.generation_mwh += d.gen_hydro[i].iter().sum::<f64>();
    }
    for (i, b) in inst.batteries.iter().enumerate() {
        let m = &mut regions[rn(&b.node)];
        m.investment_cost += b.inverter_cost * caps.battery_inverter[i] + b.storage_cost * caps.battery_storage[i];
        *m.capacity_mw.get_mut("battery_inverter").expect("category") += caps.battery_inverter[i];
        m.battery_storage_mwh += caps.battery_storage[i];
    }
    for (i, h) in inst.hydrogens.iter().enumerate() {
        let g = rn(&h.node);
        let m = &mut regions[g];
        m.investment_cost += h.ocgt_cost * caps.h2_ocgt[i]
            + h.electrolyzer_cost * caps.h2_electrolyzer[i]
            + h.storage_cost * caps.h2_storage[i];
        *m.capacity_mw.get_mut("h2_ocgt").expect("category") += caps.h2_ocgt[i];
        *m.capacity_mw.get_mut("h2_electrolyzer").expect("category") += caps.h2_electrolyzer[i];
        m.h2_storage_mwh += caps.h2_storage[i];
        h2_out[g] += caps.h2_storage[i] * h.eta_ocgt;
    }

    let mut lines = Vec::with_capacity(inst.lines.len());
    for (i, l) in inst.lines.iter().enumerate() {
        let (a, b) = (rn(&l.from), rn(&l.to));
        // Line investment is split evenly between the endpoint regions.
        let cost = l.expansion_cost * caps.line_expansion[i];
        regions[a].investment_cost += cost / 2.0;
        regions[b].investment_cost += cost / 2.0;
        if a != b {
            let f: f64 = d.flow[i].iter().sum();
            regions[a].net_export_mwh += f;
            regions[b].net_export_mwh -= f;
        }
        lines.push(LineMetrics {
            line: l.id.clone(),
            from_region: inst.regions[a].id.clone(),
            to_region: inst.regions[b].id.clone(),
            initial_mw: l.existing_cap,
            expansion_mw: caps.line_expansion[i],
        });
    }

    for (n, nd) in inst.nodes.iter().enumerate() {
        let m = &mut regions[region_of_node[n]];
        let costs = inst.shedding.costs_at(&nd.id);
        for t in 0..steps {
            m.demand_mwh += inst.demand.at(&nd.id, t);
            for k in 0..3 {
                m.shed_mwh += d.shed[n][t][k];
                m.shedding_cost += costs[k] * d.shed[n][t][k];
            }
        }
    }

    let mut sys = SystemMetrics {
        investment_cost: 0.0,
        operating_cost: 0.0,
        shedding_cost: 0.0,
        total_cost: 0.0,
        capacity_mw: POWER_CATEGORIES.iter().map(|c| (c.to_string(), 0.0)).collect(),
        capacity_mix_percent: BTreeMap::new(),
        battery_storage_mwh: 0.0,
        h2_storage_mwh: 0.0,
        demand_mwh: 0.0,
        storage_demand_ratio: 0.0,
        h2_discharge_days: None,
        transmission_initial_mw: inst.lines.iter().map(|l| l.existing_cap).sum(),
        transmission_expansion_mw: caps.line_expansion.iter().sum(),
    };
    for (g, m) in regions.iter_mut().enumerate() {
        m.total_cost = m.investment_cost + m.operating_cost + m.shedding_cost;
        let scale = m.demand_mwh.max(1.0);
        m.net_exporter = m.net_export_mwh > 1e-9 * scale;
        if m.demand_mwh > 0.0 {
            m.storage_demand_ratio = (m.battery_storage_mwh + m.h2_storage_mwh) / m.demand_mwh;
        }
        m.h2_discharge_days = discharge_days(h2_out[g], m.demand_mwh, days);
        sys.investment_cost += m.investment_cost;
        sys.operating_cost += m.operating_cost;
        sys.shedding_cost += m.shedding_cost;
        sys.battery_storage_mwh += m.battery_storage_mwh;
        sys.h2_storage_mwh += m.h2_storage_mwh;
        sys.demand_mwh += m.demand_mwh;
        for (k, v) in &m.capacity_mw {
            *sys.capacity_mw.get_mut(k).expect("category") += v;
        }
    }
    sys.total_cost = sys.investment_cost + sys.operating_cost + sys.shedding_cost;
    for m in &mut regions {
        if sys.total_cost != 0.0 {
            m.cost_share = m.total_cost / sys.total_cost;
        }
    }
    let installed: f64 = sys.capacity_mw.values().sum();
    if installed > 0.0 {
        sys.capacity_mix_percent = sys
            .capacity_mw
            .iter()
            .map(|(k, v)| (k.clone(), 100.0 * v / installed))
            .collect();
    }
    if sys.demand_mwh > 0.0 {
        sys.storage_demand_ratio = (sys.battery_storage_mwh + sys.h2_storage_mwh) / sys.demand_mwh;
    }
    sys.h2_discharge_days = discharge_days(h2_out.iter().sum(), sys.demand_mwh, days);

    Ok(Metrics {
        block,
        horizon_days: days,
        regions,
        lines,
        system: sys,
    })
}

/// Convergence trace as CSV: iteration, bounds, gap, realization, seconds.
pub fn trace_csv(trace: &CcgTrace) -> String {
    let mut out = String::from("iteration,lower_bound,upper_bound,gap,z_summary,seconds\n");
    for it in &trace.iterations {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            it.iteration,
            fmt_sig(it.lower_bound),
            fmt_sig(it.upper_bound),
            fmt_sig(it.gap),
            it.z_summary,
            fmt_sig(it.seconds)
        );
    }
    out
}

/// Cell code for one region and period: `-` none, `S` solar, `W` wind,
/// `D` both (Dunkelflaute).
pub fn cell_code(pv: bool, wind: bool) -> char {
    match (pv, wind) {
        (false, false) => '-',
        (true, false) => 'S',
        (false, true) => 'W',
        (true, true) => 'D',
    }
}

/// The realization found at each iteration, one row per (iteration,
/// period), one column per region.
pub fn realization_matrix(inst: &NetworkInstance, trace: &CcgTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# budget {}; cells: - none, S solar, W wind, D Dunkelflaute (solar and wind)",
        trace.budget
    );
    let width = inst.regions.iter().map(|g| g.id.len()).max().unwrap_or(1).max(1);
    let pwidth = inst
        .timegrid
        .periods
        .iter()
        .map(|p| p.id.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let _ = write!(out, "{:>9} {:<pwidth$}", "iteration", "period");
    for g in &inst.regions {
        let _ = write!(out, " {:>width$}", g.id);
    }
    out.push('\n');
    for it in &trace.iterations {
        for (p, period) in inst.timegrid.periods.iter().enumerate() {
            let _ = write!(out, "{:>9} {:<pwidth$}", it.iteration, period.id);
            for g in 0..inst.regions.len() {
                let (pv, wind) = (it.z.get(TechClass::Pv, g, p), it.z.get(TechClass::Wind, g, p));
                debug_assert_eq!(pv && wind, is_dunkelflaute(&it.z, g, p));
                let _ = write!(out, " {:>width$}", cell_code(pv, wind));
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub gamma_pv: usize,
    pub gamma_wind: usize,
    pub objective: f64,
    /// Relative increase over the first rung, in percent.
    pub increase_percent: f64,
    /// Objective divided by total demand over the horizon (EUR/MWh).
    pub avg_cost_per_mwh: f64,
    pub converged: bool,
}

/// Summary rows for a ladder; `runs` holds each rung's budget, objective and
/// convergence flag, with the Γ=0 (or lowest) rung first.
pub fn ladder_summary(inst: &NetworkInstance, runs: &[(UncertaintyBudget, f64, bool)]) -> Vec<LadderRow> {
    let base = runs.first().map_or(0.0, |r| r.1);
    let demand = inst.total_demand();
    runs.iter()
        .map(|&(b, obj, converged)| LadderRow {
            gamma_pv: b.gamma_pv,
            gamma_wind: b.gamma_wind,
            objective: obj,
            increase_percent: if base != 0.0 { 100.0 * (obj - base) / base.abs() } else { 0.0 },
            avg_cost_per_mwh: if demand > 0.0 { obj / demand } else { 0.0 },
            converged,
        })
        .collect()
}

pub const SUMMARY_HEADER: &str =
    "gamma_pv,gamma_wind,objective,increase_percent,avg_cost_per_mwh_objective_over_demand,converged";

pub fn summary_csv(rows: &[LadderRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.gamma_pv,
            r.gamma_wind,
            fmt_sig(r.objective),
            fmt_sig(r.increase_percent),
            fmt_sig(r.avg_cost_per_mwh),
            r.converged
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityDocument {
    pub renewable_mw: BTreeMap<String, f64>,
    pub battery_inverter_mw: BTreeMap<String, f64>,
    pub battery_storage_mwh: BTreeMap<String, f64>,
    pub h2_ocgt_mw: BTreeMap<String, f64>,
    pub h2_electrolyzer_mw: BTreeMap<String, f64>,
    pub h2_storage_mwh: BTreeMap<String, f64>,
    pub line_expansion_mw: BTreeMap<String, f64>,
}

impl CapacityDocument {
    pub fn new(inst: &NetworkInstance, caps: &Capacities) -> Self {
        fn by_id<'a>(ids: impl Iterator<Item = &'a str>, v: &[f64]) -> BTreeMap<String, f64> {
            ids.zip(v).map(|(id, x)| (id.to_string(), *x)).collect()
        }
        CapacityDocument {
            renewable_mw: by_id(inst.renewables.iter().map(|r| r.id.as_str()), &caps.renewable),
            battery_inverter_mw: by_id(inst.batteries.iter().map(|b| b.id.as_str()), &caps.battery_inverter),
            battery_storage_mwh: by_id(inst.batteries.iter().map(|b| b.id.as_str()), &caps.battery_storage),
            h2_ocgt_mw: by_id(inst.hydrogens.iter().map(|h| h.id.as_str()), &caps.h2_ocgt),
            h2_electrolyzer_mw: by_id(inst.hydrogens.iter().map(|h| h.id.as_str()), &caps.h2_electrolyzer),
            h2_storage_mwh: by_id(inst.hydrogens.iter().map(|h| h.id.as_str()), &caps.h2_storage),
            line_expansion_mw: by_id(inst.lines.iter().map(|l| l.id.as_str()), &caps.line_expansion),
        }
    }
}

/// Contents of `solution.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub gamma_pv: usize,
    pub gamma_wind: usize,
    pub converged: bool,
    pub stalled: bool,
    pub iterations: usize,
    pub objective: f64,
    pub investment_cost: f64,
    pub recourse_bound: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub capacities: CapacityDocument,
    pub worst_case: Vec<FlaggedCell>,
    pub worst_case_cost: f64,
}

impl SolutionDocument {
    pub fn new(inst: &NetworkInstance, run: &CcgResult) -> Self {
        let s = &run.solution;
        let t = &run.trace;
        SolutionDocument {
            gamma_pv: t.budget.gamma_pv,
            gamma_wind: t.budget.gamma_wind,
            converged: t.converged,
            stalled: t.stalled,
            iterations: t.iterations.len(),
            objective: s.objective,
            investment_cost: s.investment_cost,
            recourse_bound: s.recourse_bound,
            lower_bound: t.lower_bound(),
            upper_bound: t.upper_bound(),
            gap: t.gap(),
            capacities: CapacityDocument::new(inst, &s.capacities),
            worst_case: run.worst_case.cells(inst),
            worst_case_cost: run.worst_case_cost,
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Internal(format!("serializing report: {e}")))
}

/// Writes `solution.json`, `trace.csv`, `realizations.txt` and
/// `metrics.json` for one run into an existing directory.
pub fn write_run_artifacts(dir: &Path, inst: &NetworkInstance, run: &CcgResult) -> Result<()> {
    write_file(&dir.join("solution.json"), &to_json(&SolutionDocument::new(inst, run))?)?;
    write_file(&dir.join("trace.csv"), &trace_csv(&run.trace))?;
    write_file(&dir.join("realizations.txt"), &realization_matrix(inst, &run.trace))?;
    write_file(&dir.join("metrics.json"), &to_json(&report_metrics(inst, &run.solution)?)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_format_is_stable() {
        for x in [0.0, -0.0, 1.0, -2.5, 123456.789, 1.0e-12, 9.999995e5, f64::MAX] {
            let s = fmt_sig(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(fmt_sig(y), s, "{x}");
        }
        assert_eq!(fmt_sig(202000.0), "2.02000e5");
    }

    #[test]
    fn cell_codes() {
        assert_eq!(cell_code(false, false), '-');
        assert_eq!(cell_code(true, false), 'S');
        assert_eq!(cell_code(false, true), 'W');
        assert_eq!(cell_code(true, true), 'D');
    }
}
