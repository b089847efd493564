//! Cardinality-constrained set of downward availability deviations.
//!
//! A realization flags, per technology class, weather region and period,
//! whether that region's units drop from their reference to their lower
//! bound for the period's steps. At most `gamma` regions per technology may
//! be flagged in each period.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::{NetworkInstance, TechClass};
use crate::master::CfSeries;
use crate::{Error, Result};

/// Default ceiling on the number of enumerated realizations.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UncertaintyBudget {
    pub gamma_pv: usize,
    pub gamma_wind: usize,
}

impl UncertaintyBudget {
    pub fn new(gamma_pv: usize, gamma_wind: usize) -> Self {
        UncertaintyBudget { gamma_pv, gamma_wind }
    }

    /// Same budget for both technologies.
    pub fn uniform(gamma: usize) -> Self {
        Self::new(gamma, gamma)
    }

    pub fn gamma(&self, tech: TechClass) -> usize {
        match tech {
            TechClass::Pv => self.gamma_pv,
            TechClass::Wind => self.gamma_wind,
        }
    }

    /// Caps both budgets at the number of regions, warning when it has to.
    pub fn clamped(self, regions: usize) -> Self {
        let clamp = |g: usize, tech: &str| {
            if g > regions {
                log::warn!("{tech} budget {g} exceeds the {regions} weather regions; clamped to {regions}");
                regions
            } else {
                g
            }
        };
        UncertaintyBudget {
            gamma_pv: clamp(self.gamma_pv, "pv"),
            gamma_wind: clamp(self.gamma_wind, "wind"),
        }
    }
}

impl fmt::Display for UncertaintyBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pv={} wind={}", self.gamma_pv, self.gamma_wind)
    }
}

/// Binary tensor `z[tech][region][period]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviationMask {
    regions: usize,
    periods: usize,
    bits: Vec<bool>,
}

/// One flagged `(technology, region, period)` triple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedCell {
    pub technology: TechClass,
    pub region: String,
    pub period: String,
}

impl DeviationMask {
    pub fn zeros(regions: usize, periods: usize) -> Self {
        DeviationMask {
            regions,
            periods,
            bits: vec![false; 2 * regions * periods],
        }
    }

    pub fn for_instance(inst: &NetworkInstance) -> Self {
        Self::zeros(inst.regions.len(), inst.timegrid.periods.len())
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    fn idx(&self, tech: TechClass, g: usize, p: usize) -> usize {
        assert!(g < self.regions && p < self.periods, "mask index out of range");
        (tech.index() * self.regions + g) * self.periods + p
    }

    pub fn get(&self, tech: TechClass, g: usize, p: usize) -> bool {
        self.bits[self.idx(tech, g, p)]
    }

    pub fn set(&mut self, tech: TechClass, g: usize, p: usize, on: bool) {
        let i = self.idx(tech, g, p);
        self.bits[i] = on;
    }

    /// Number of regions flagged for `tech` in period `p`.
    pub fn count(&self, tech: TechClass, p: usize) -> usize {
        (0..self.regions).filter(|&g| self.get(tech, g, p)).count()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    /// Flagged `(tech, region, period)` index triples in canonical order.
    pub fn flagged(&self) -> Vec<(TechClass, usize, usize)> {
        let mut out = Vec::new();
        for tech in TechClass::ALL {
            for g in 0..self.regions {
                for p in 0..self.periods {
                    if self.get(tech, g, p) {
                        out.push((tech, g, p));
                    }
                }
            }
        }
        out
    }

    pub fn cells(&self, inst: &NetworkInstance) -> Vec<FlaggedCell> {
        self.flagged()
            .into_iter()
            .map(|(technology, g, p)| FlaggedCell {
                technology,
                region: inst.regions[g].id.clone(),
                period: inst.timegrid.periods[p].id.clone(),
            })
            .collect()
    }

    /// Rebuilds a mask from flagged cells.
    pub fn from_cells(inst: &NetworkInstance, cells: &[FlaggedCell]) -> Result<Self> {
        let mut z = Self::for_instance(inst);
        for c in cells {
            let g = inst
                .region_index(&c.region)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown region `{}`", c.region)))?;
            let p = inst
                .timegrid
                .periods
                .iter()
                .position(|p| p.id == c.period)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown period `{}`", c.period)))?;
            z.set(c.technology, g, p, true);
        }
        Ok(z)
    }

    /// Checks the per-period budget of each technology.
    pub fn within(&self, budget: &UncertaintyBudget) -> Result<()> {
        for tech in TechClass::ALL {
            for p in 0..self.periods {
                let n = self.count(tech, p);
                if n > budget.gamma(tech) {
                    return Err(Error::InvalidArgument(format!(
                        "{} regions flagged for {} in period {p}, budget is {}",
                        n,
                        tech.label(),
                        budget.gamma(tech)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Compact text form, e.g. `pv:g1@p1 wind:g2@p1`, or `none`.
    pub fn summary(&self, inst: &NetworkInstance) -> String {
        let cells = self.cells(inst);
        if cells.is_empty() {
            return "none".into();
        }
        cells
            .iter()
            .map(|c| format!("{}:{}@{}", c.technology.label(), c.region, c.period))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Both technologies flagged for region `g` in period `p`.
pub fn is_dunkelflaute(z: &DeviationMask, g: usize, p: usize) -> bool {
    z.get(TechClass::Pv, g, p) && z.get(TechClass::Wind, g, p)
}

/// Applies the flagged deviations: `reference - z * deviation` on steps of
/// flagged periods, reference elsewhere.
pub fn realize(inst: &NetworkInstance, z: &DeviationMask) -> Result<CfSeries> {
    if z.regions != inst.regions.len() || z.periods != inst.timegrid.periods.len() {
        return Err(Error::InvalidArgument(format!(
            "mask covers {} regions x {} periods, instance has {} x {}",
            z.regions,
            z.periods,
            inst.regions.len(),
            inst.timegrid.periods.len()
        )));
    }
    let period_of = inst.timegrid.period_of_steps();
    inst.renewables
        .iter()
        .map(|r| {
            let g = inst
                .region_index(&r.region)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown region `{}`", r.region)))?;
            let tech = r.technology.class();
            Ok(r.cf
                .reference
                .iter()
                .zip(&r.cf.deviation)
                .zip(&period_of)
                .map(|((&re, &de), p)| match p {
                    Some(p) if z.get(tech, g, *p) => (re - de).clamp(0.0, 1.0),
                    _ => re,
                })
                .collect())
        })
        .collect()
}

/// Output of a worst-case search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseRealization {
    pub z: DeviationMask,
    pub realized_cf: CfSeries,
    /// Worst-case operating cost in EUR.
    pub dual_objective: f64,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of subsets of `regions` with at most `gamma` members.
fn subsets_up_to(regions: usize, gamma: usize) -> u128 {
    (0..=gamma.min(regions)).map(|k| binomial(regions, k)).sum()
}

/// Closed-form size of the uncertainty set.
pub fn enumeration_count(regions: usize, periods: usize, budget: &UncertaintyBudget) -> u128 {
    let per_period = subsets_up_to(regions, budget.gamma_pv).saturating_mul(subsets_up_to(regions, budget.gamma_wind));
    (0..periods).fold(1u128, |acc, _| acc.saturating_mul(per_period))
}

/// Region subsets as bitmasks with at most `gamma` members, smallest first.
fn subsets(regions: usize, gamma: usize) -> Vec<u64> {
    let mut out: Vec<u64> = (0..(1u64 << regions))
        .filter(|m| m.count_ones() as usize <= gamma)
        .collect();
    out.sort_by_key(|m| (m.count_ones(), *m));
    out
}

/// Iterator over every member of the uncertainty set.
pub struct Enumeration {
    regions: usize,
    periods: usize,
    pv: Vec<u64>,
    wind: Vec<u64>,
    /// Mixed-radix counter over `2 * periods` digits (pv then wind per period).
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for Enumeration {
    type Item = DeviationMask;

    fn next(&mut self) -> Option<DeviationMask> {
        if self.done {
            return None;
        }
        let mut z = DeviationMask::zeros(self.regions, self.periods);
        for p in 0..self.periods {
            for (tech, list, d) in [
                (TechClass::Pv, &self.pv, self.digits[2 * p]),
                (TechClass::Wind, &self.wind, self.digits[2 * p + 1]),
            ] {
                let mask = list[d];
                for g in 0..self.regions {
                    if mask >> g & 1 == 1 {
                        z.set(tech, g, p, true);
                    }
                }
            }
        }
        // Advance the counter.
        let mut i = 0;
        loop {
            if i == self.digits.len() {
                self.done = true;
                break;
            }
            let radix = if i % 2 == 0 { self.pv.len() } else { self.wind.len() };
            self.digits[i] += 1;
            if self.digits[i] < radix {
                break;
            }
            self.digits[i] = 0;
            i += 1;
        }
        Some(z)
    }
}

/// Every realization within `budget` (clamped to the region count). Fails
/// when the set would exceed `cap` members.
pub fn enumerate_set(inst: &NetworkInstance, budget: &UncertaintyBudget, cap: u128) -> Result<Enumeration> {
    let regions = inst.regions.len();
    let periods = inst.timegrid.periods.len();
    let budget = budget.clamped(regions);
    let count = enumeration_count(regions, periods, &budget);
    if count > cap || regions >= 64 {
        return Err(Error::EnumerationCap { count, cap });
    }
    Ok(Enumeration {
        regions,
        periods,
        pv: subsets(regions, budget.gamma_pv),
        wind: subsets(regions, budget.gamma_wind),
        digits: vec![0; 2 * periods],
        done: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_counts() {
        assert_eq!(enumeration_count(2, 1, &UncertaintyBudget::uniform(1)), 9);
        assert_eq!(enumeration_count(3, 1, &UncertaintyBudget::new(3, 0)), 8);
        assert_eq!(enumeration_count(4, 0, &UncertaintyBudget::uniform(2)), 1);
        assert_eq!(enumeration_count(6, 1, &UncertaintyBudget::uniform(0)), 1);
    }

    #[test]
    fn subsets_respect_budget() {
        let s = subsets(3, 1);
        assert_eq!(s, vec![0b000, 0b001, 0b010, 0b100]);
    }

    #[test]
    fn mask_round_trip_and_budget() {
        let mut z = DeviationMask::zeros(3, 2);
        z.set(TechClass::Wind, 2, 1, true);
        z.set(TechClass::Pv, 2, 1, true);
        assert!(is_dunkelflaute(&z, 2, 1));
        assert!(!is_dunkelflaute(&z, 2, 0));
        assert_eq!(z.flagged(), vec![(TechClass::Pv, 2, 1), (TechClass::Wind, 2, 1)]);
        assert!(z.within(&UncertaintyBudget::uniform(1)).is_ok());
        assert!(z.within(&UncertaintyBudget::new(0, 1)).is_err());
    }
}
