//! Network instance data model.
//!
//! Units follow the dispatch formulation: capacities in MW (storage energy in
//! MWh), demand in MWh per step, annualized costs per MW (or MWh) per year,
//! variable and shedding costs per MWh.

mod costs;
mod io;
mod validate;

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use costs::{annualize_cost, capital_recovery_factor, TechnologyCost, TECHNOLOGY_COSTS};
pub use io::{load_instance, load_instance_json, read_instance, save_instance};
pub use validate::{validate, Violation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkInstance {
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub renewables: Vec<RenewableUnit>,
    #[serde(default)]
    pub conventionals: Vec<ConventionalUnit>,
    #[serde(default)]
    pub hydros: Vec<HydroUnit>,
    #[serde(default)]
    pub batteries: Vec<BatteryUnit>,
    #[serde(default)]
    pub hydrogens: Vec<HydrogenUnit>,
    #[serde(default)]
    pub demand: DemandSeries,
    pub regions: Vec<WeatherRegion>,
    #[serde(default)]
    pub shedding: LoadSheddingPolicy,
    pub timegrid: TimeGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub region: String,
    /// Slack node whose voltage angle is pinned to zero.
    #[serde(default, skip_serializing_if = "is_false")]
    pub reference: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineKind {
    #[serde(rename = "AC")]
    Ac,
    #[serde(rename = "DC")]
    Dc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: String,
    pub kind: LineKind,
    pub from: String,
    pub to: String,
    /// Per-unit susceptance; flows are `sus * angle difference` in MW.
    #[serde(default)]
    pub susceptance: f64,
    pub existing_cap: f64,
    pub expansion_cost: f64,
    /// Additional MW that may be built; defaults to the existing capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion_limit: Option<f64>,
}

impl Line {
    pub fn max_expansion(&self) -> f64 {
        self.expansion_limit.unwrap_or(self.existing_cap)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technology {
    SolarPv,
    WindOnshore,
    WindOffshore,
}

/// Technology axis of the uncertainty set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechClass {
    Pv,
    Wind,
}

impl TechClass {
    pub const ALL: [TechClass; 2] = [TechClass::Pv, TechClass::Wind];

    pub fn index(self) -> usize {
        match self {
            TechClass::Pv => 0,
            TechClass::Wind => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TechClass::Pv => "pv",
            TechClass::Wind => "wind",
        }
    }
}

impl Technology {
    pub fn class(self) -> TechClass {
        match self {
            Technology::SolarPv => TechClass::Pv,
            Technology::WindOnshore | Technology::WindOffshore => TechClass::Wind,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityFactorBundle {
    pub reference: Vec<f64>,
    pub deviation: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized: Option<Vec<f64>>,
}

impl CapacityFactorBundle {
    /// Reference minus deviation, the worst availability the unit can see.
    pub fn lower_bound(&self) -> Vec<f64> {
        self.reference
            .iter()
            .zip(&self.deviation)
            .map(|(r, d)| r - d)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewableUnit {
    pub id: String,
    pub node: String,
    pub technology: Technology,
    pub region: String,
    pub annualized_cost: f64,
    pub cf: CapacityFactorBundle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_capacity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConventionalUnit {
    pub id: String,
    pub node: String,
    pub existing_cap: f64,
    pub variable_cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HydroKind {
    Ror,
    Rsv,
    Psp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydroUnit {
    pub id: String,
    pub node: String,
    pub kind: HydroKind,
    pub existing_cap: f64,
    /// Reservoir inflow availability per step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub availability: Option<Vec<f64>>,
    /// Pumped-storage energy-to-power ratio in hours.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage_scale: Option<f64>,
    /// Pumped-storage charging efficiency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryUnit {
    pub id: String,
    pub node: String,
    pub inverter_cost: f64,
    pub storage_cost: f64,
    pub efficiency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_inverter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_storage: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydrogenUnit {
    pub id: String,
    pub node: String,
    pub ocgt_cost: f64,
    pub electrolyzer_cost: f64,
    pub storage_cost: f64,
    pub eta_el: f64,
    pub eta_ocgt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ocgt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_electrolyzer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_storage: Option<f64>,
}

/// Demand per node in MWh per step. Nodes without an entry have no demand.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandSeries(pub BTreeMap<String, Vec<f64>>);

impl DemandSeries {
    pub fn at(&self, node: &str, t: usize) -> f64 {
        self.0.get(node).and_then(|s| s.get(t)).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.0.values().flatten().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherRegion {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub nodes: Vec<String>,
}

/// Stepwise shedding curve: tier `k` may shed `fractions[k]` of nodal demand
/// at `costs[k]` EUR/MWh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSheddingPolicy {
    pub fractions: [f64; 3],
    pub costs: [f64; 3],
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub node_costs: BTreeMap<String, [f64; 3]>,
}

impl Default for LoadSheddingPolicy {
    fn default() -> Self {
        LoadSheddingPolicy {
            fractions: [0.05, 0.15, 0.80],
            costs: [1000.0, 3000.0, 12000.0],
            node_costs: BTreeMap::new(),
        }
    }
}

impl LoadSheddingPolicy {
    pub fn costs_at(&self, node: &str) -> [f64; 3] {
        self.node_costs.get(node).copied().unwrap_or(self.costs)
    }

    /// Highest tier cost over all nodes.
    pub fn max_cost(&self) -> f64 {
        self.node_costs
            .values()
            .map(|c| c[2])
            .fold(self.costs[2], f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub step_count: usize,
    #[serde(default = "default_step_hours")]
    pub step_hours: f64,
    #[serde(default)]
    pub periods: Vec<Period>,
}

fn default_step_hours() -> f64 {
    1.0
}

/// Contiguous, zero-based, half-open step range `[start, end)` over which one
/// deviation binary per (technology, region) applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Period {
    pub id: String,
    pub start: usize,
    pub end: usize,
}

impl Period {
    pub fn steps(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl TimeGrid {
    /// Period index of each step, `None` for steps outside every period.
    pub fn period_of_steps(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.step_count];
        for (p, period) in self.periods.iter().enumerate() {
            for t in period.steps() {
                if t < out.len() {
                    out[t] = Some(p);
                }
            }
        }
        out
    }
}

impl NetworkInstance {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn region_index(&self, id: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.id == id)
    }

    pub fn reference_node(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.reference)
    }

    pub fn steps(&self) -> usize {
        self.timegrid.step_count
    }

    pub fn total_demand(&self) -> f64 {
        self.demand.total()
    }

    /// Returns `Err` with every violation when the instance is not valid.
    pub fn ensure_valid(&self) -> crate::Result<()> {
        let v = validate(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::InvalidInstance(v))
        }
    }
}
