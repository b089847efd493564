use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{HydroKind, LineKind, NetworkInstance};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.entity, self.rule, self.detail)
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, entity: impl Into<String>, rule: &'static str, detail: impl Into<String>) {
        self.out.push(Violation {
            entity: entity.into(),
            rule,
            detail: detail.into(),
        });
    }

    fn unique<'a>(&mut self, family: &str, ids: impl Iterator<Item = &'a str>) {
        let mut seen = BTreeSet::new();
        for id in ids {
            if !seen.insert(id) {
                self.push(format!("{family} {id}"), "duplicate_id", "id is not unique");
            }
        }
    }

    fn node_ref(&mut self, entity: &str, node: &str, nodes: &BTreeSet<&str>) {
        if !nodes.contains(node) {
            self.push(entity, "unresolved_reference", node);
        }
    }

    fn nonneg(&mut self, entity: &str, field: &str, v: f64) {
        if !(v >= 0.0) || !v.is_finite() {
            self.push(entity, "negative_value", format!("{field} = {v} must be finite and >= 0"));
        }
    }

    fn efficiency(&mut self, entity: &str, field: &str, v: f64) {
        if !(v > 0.0 && v <= 1.0) {
            self.push(entity, "efficiency_range", format!("{field} = {v} must lie in (0, 1]"));
        }
    }

    fn series(&mut self, entity: &str, field: &str, s: &[f64], len: usize) -> bool {
        if s.len() != len {
            self.push(
                entity,
                "series_length",
                format!("{field} has {} steps, time grid has {len}", s.len()),
            );
            return false;
        }
        true
    }
}

/// Checks every structural and numeric invariant of an instance. An empty
/// result means the instance is valid.
pub fn validate(inst: &NetworkInstance) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    let t_len = inst.timegrid.step_count;
    let node_ids: BTreeSet<&str> = inst.nodes.iter().map(|n| n.id.as_str()).collect();
    let region_ids: BTreeSet<&str> = inst.regions.iter().map(|r| r.id.as_str()).collect();

    c.unique("node", inst.nodes.iter().map(|n| n.id.as_str()));
    c.unique("line", inst.lines.iter().map(|x| x.id.as_str()));
    c.unique("renewable", inst.renewables.iter().map(|x| x.id.as_str()));
    c.unique("conventional", inst.conventionals.iter().map(|x| x.id.as_str()));
    c.unique("hydro", inst.hydros.iter().map(|x| x.id.as_str()));
    c.unique("battery", inst.batteries.iter().map(|x| x.id.as_str()));
    c.unique("hydrogen", inst.hydrogens.iter().map(|x| x.id.as_str()));
    c.unique("region", inst.regions.iter().map(|x| x.id.as_str()));

    let refs = inst.nodes.iter().filter(|n| n.reference).count();
    if refs != 1 {
        c.push(
            "network",
            "reference_node",
            format!("exactly one reference node required, found {refs}"),
        );
    }

    // Regions partition the node set and agree with each node's own region.
    let mut member_of: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in &inst.regions {
        for n in &r.nodes {
            c.node_ref(&format!("region {}", r.id), n, &node_ids);
            member_of.entry(n.as_str()).or_default().push(r.id.as_str());
        }
    }
    for n in &inst.nodes {
        let entity = format!("node {}", n.id);
        if !region_ids.contains(n.region.as_str()) {
            c.push(&entity, "unresolved_reference", n.region.as_str());
        }
        match member_of.get(n.id.as_str()).map(|v| v.as_slice()) {
            Some([g]) if *g == n.region => {}
            Some([g]) => c.push(
                &entity,
                "region_partition",
                format!("listed under region {g} but declares region {}", n.region),
            ),
            Some(gs) => c.push(
                &entity,
                "region_partition",
                format!("member of {} regions: {}", gs.len(), gs.join(", ")),
            ),
            None => c.push(&entity, "region_partition", "not a member of any region"),
        }
    }

    for l in &inst.lines {
        let entity = format!("line {}", l.id);
        c.node_ref(&entity, &l.from, &node_ids);
        c.node_ref(&entity, &l.to, &node_ids);
        if l.from == l.to {
            c.push(&entity, "self_loop", "line connects a node to itself");
        }
        c.nonneg(&entity, "existing_cap", l.existing_cap);
        c.nonneg(&entity, "expansion_cost", l.expansion_cost);
        if let Some(lim) = l.expansion_limit {
            c.nonneg(&entity, "expansion_limit", lim);
        }
        if l.kind == LineKind::Ac && !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
            c.push(&entity, "susceptance", format!("AC susceptance {} must be > 0", l.susceptance));
        }
    }

    for r in &inst.renewables {
        let entity = format!("renewable {}", r.id);
        c.node_ref(&entity, &r.node, &node_ids);
        if !region_ids.contains(r.region.as_str()) {
            c.push(&entity, "unresolved_reference", r.region.as_str());
        } else if let Some(n) = inst.nodes.iter().find(|n| n.id == r.node) {
            if n.region != r.region {
                c.push(
                    &entity,
                    "region_mismatch",
                    format!("unit region {} differs from node region {}", r.region, n.region),
                );
            }
        }
        c.nonneg(&entity, "annualized_cost", r.annualized_cost);
        if let Some(cap) = r.max_capacity {
            c.nonneg(&entity, "max_capacity", cap);
        }
        let ok_ref = c.series(&entity, "cf.reference", &r.cf.reference, t_len);
        let ok_dev = c.series(&entity, "cf.deviation", &r.cf.deviation, t_len);
        if ok_ref {
            for (t, &v) in r.cf.reference.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    c.push(&entity, "cf_range", format!("reference {v} outside [0, 1] at step {t}"));
                }
            }
        }
        if ok_ref && ok_dev {
            for (t, (&re, &de)) in r.cf.reference.iter().zip(&r.cf.deviation).enumerate() {
                if !(de >= 0.0) {
                    c.push(&entity, "deviation_negative", format!("deviation {de} < 0 at step {t}"));
                } else if de > re {
                    c.push(
                        &entity,
                        "deviation_exceeds_reference",
                        format!("deviation {de} > reference {re} at step {t}"),
                    );
                }
            }
        }
        if let Some(real) = &r.cf.realized {
            if c.series(&entity, "cf.realized", real, t_len) && ok_ref && ok_dev {
                for t in 0..t_len {
                    let (re, de, v) = (r.cf.reference[t], r.cf.deviation[t], real[t]);
                    let tol = 1e-12 * re.abs().max(1.0);
                    if (v - re).abs() > tol && (v - (re - de)).abs() > tol {
                        c.push(
                            &entity,
                            "realized_inconsistent",
                            format!("realized {v} is neither reference nor lower bound at step {t}"),
                        );
                    }
                }
            }
        }
    }

    for u in &inst.conventionals {
        let entity = format!("conventional {}", u.id);
        c.node_ref(&entity, &u.node, &node_ids);
        c.nonneg(&entity, "existing_cap", u.existing_cap);
        c.nonneg(&entity, "variable_cost", u.variable_cost);
    }

    for h in &inst.hydros {
        let entity = format!("hydro {}", h.id);
        c.node_ref(&entity, &h.node, &node_ids);
        c.nonneg(&entity, "existing_cap", h.existing_cap);
        match (&h.availability, h.kind) {
            (Some(a), HydroKind::Rsv) => {
                if c.series(&entity, "availability", a, t_len) {
                    for (t, &v) in a.iter().enumerate() {
                        if !(0.0..=1.0).contains(&v) {
                            c.push(
                                &entity,
                                "availability_range",
                                format!("availability {v} outside [0, 1] at step {t}"),
                            );
                        }
                    }
                }
            }
            (None, HydroKind::Rsv) => c.push(&entity, "availability", "reservoir needs availability"),
            (Some(_), _) => c.push(&entity, "availability", "only reservoirs carry availability"),
            (None, _) => {}
        }
        if h.kind == HydroKind::Psp {
            match h.storage_scale {
                Some(s) if s > 0.0 && s.is_finite() => {}
                _ => c.push(&entity, "storage_scale", "pumped storage needs storage_scale > 0"),
            }
            match h.efficiency {
                Some(e) => c.efficiency(&entity, "efficiency", e),
                None => c.push(&entity, "efficiency_range", "pumped storage needs an efficiency"),
            }
        } else if h.storage_scale.is_some() || h.efficiency.is_some() {
            c.push(
                &entity,
                "storage_scale",
                "storage_scale and efficiency apply to pumped storage only",
            );
        }
    }

    for b in &inst.batteries {
        let entity = format!("battery {}", b.id);
        c.node_ref(&entity, &b.node, &node_ids);
        c.nonneg(&entity, "inverter_cost", b.inverter_cost);
        c.nonneg(&entity, "storage_cost", b.storage_cost);
        c.efficiency(&entity, "efficiency", b.efficiency);
        for (f, v) in [("max_inverter", b.max_inverter), ("max_storage", b.max_storage)] {
            if let Some(v) = v {
                c.nonneg(&entity, f, v);
            }
        }
    }

    for h in &inst.hydrogens {
        let entity = format!("hydrogen {}", h.id);
        c.node_ref(&entity, &h.node, &node_ids);
        c.nonneg(&entity, "ocgt_cost", h.ocgt_cost);
        c.nonneg(&entity, "electrolyzer_cost", h.electrolyzer_cost);
        c.nonneg(&entity, "storage_cost", h.storage_cost);
        c.efficiency(&entity, "eta_el", h.eta_el);
        c.efficiency(&entity, "eta_ocgt", h.eta_ocgt);
        for (f, v) in [
            ("max_ocgt", h.max_ocgt),
            ("max_electrolyzer", h.max_electrolyzer),
            ("max_storage", h.max_storage),
        ] {
            if let Some(v) = v {
                c.nonneg(&entity, f, v);
            }
        }
    }

    for (node, series) in &inst.demand.0 {
        let entity = format!("demand {node}");
        c.node_ref(&entity, node, &node_ids);
        if c.series(&entity, "demand", series, t_len) {
            for (t, &v) in series.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    c.push(&entity, "negative_value", format!("demand {v} at step {t}"));
                }
            }
        }
    }

    let s = &inst.shedding;
    let [f1, f2, f3] = s.fractions;
    if !(0.0 <= f1 && f1 < f2 && f2 < f3) {
        c.push(
            "shedding",
            "shedding tiers not increasing",
            format!("fractions {f1}, {f2}, {f3} must satisfy 0 <= f1 < f2 < f3"),
        );
    }
    let mut check_costs = |entity: String, k: [f64; 3]| {
        if !(k[0] < k[1] && k[1] < k[2]) || k.iter().any(|v| !v.is_finite()) {
            c.push(
                entity,
                "shedding costs not increasing",
                format!("costs {}, {}, {} must be strictly increasing", k[0], k[1], k[2]),
            );
        }
    };
    check_costs("shedding".into(), s.costs);
    for (node, k) in &s.node_costs {
        check_costs(format!("shedding {node}"), *k);
    }
    for node in s.node_costs.keys() {
        c.node_ref(&format!("shedding {node}"), node, &node_ids);
    }

    let tg = &inst.timegrid;
    if tg.step_count == 0 {
        c.push("timegrid", "step_count", "time grid needs at least one step");
    }
    if !(tg.step_hours > 0.0 && tg.step_hours.is_finite()) {
        c.push("timegrid", "step_hours", format!("step_hours {} must be > 0", tg.step_hours));
    }
    c.unique("period", tg.periods.iter().map(|p| p.id.as_str()));
    let mut covered = vec![false; tg.step_count];
    for p in &tg.periods {
        let entity = format!("period {}", p.id);
        if p.is_empty() {
            c.push(&entity, "period_empty", format!("range {}..{} is empty", p.start, p.end));
            continue;
        }
        if p.end > tg.step_count {
            c.push(
                &entity,
                "period_range",
                format!("range {}..{} exceeds {} steps", p.start, p.end, tg.step_count),
            );
            continue;
        }
        for t in p.steps() {
            if covered[t] {
                c.push(&entity, "period_overlap", format!("step {t} belongs to another period"));
                break;
            }
            covered[t] = true;
        }
    }

    c.out
}
