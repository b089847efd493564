use crate::{Error, Result};

/// Capital recovery factor `r (1+r)^L / ((1+r)^L - 1)`, or `1/L` at `r = 0`.
pub fn capital_recovery_factor(rate: f64, lifetime: f64) -> Result<f64> {
    if !(lifetime >= 1.0) || !lifetime.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lifetime must be at least one year, got {lifetime}"
        )));
    }
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("interest rate must be >= 0, got {rate}")));
    }
    if rate == 0.0 {
        return Ok(1.0 / lifetime);
    }
    let growth = (1.0 + rate).powf(lifetime);
    Ok(rate * growth / (growth - 1.0))
}

/// Yearly cost of one unit of capacity: `overnight * CRF + fixed_om`.
/// Units are whatever the inputs share (e.g. EUR/kW and EUR/kW/yr).
pub fn annualize_cost(overnight: f64, lifetime: f64, rate: f64, fixed_om: f64) -> Result<f64> {
    Ok(overnight * capital_recovery_factor(rate, lifetime)? + fixed_om)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TechnologyCost {
    pub name: &'static str,
    pub lifetime: f64,
    pub rate: f64,
    /// EUR/kW, or EUR/kWh for energy components.
    pub overnight: f64,
    /// EUR/kW/yr, or EUR/kWh/yr for energy components.
    pub fixed_om: f64,
}

impl TechnologyCost {
    /// Annualized cost in EUR/MW/yr (or EUR/MWh/yr).
    pub fn annualized_per_mw(&self) -> f64 {
        1000.0
            * annualize_cost(self.overnight, self.lifetime, self.rate, self.fixed_om)
                .expect("table entries are well formed")
    }
}

/// Default investment data for expandable technologies.
pub const TECHNOLOGY_COSTS: [TechnologyCost; 8] = [
    TechnologyCost { name: "wind_onshore", lifetime: 30.0, rate: 0.075, overnight: 963.0, fixed_om: 9.63 },
    TechnologyCost { name: "wind_offshore", lifetime: 30.0, rate: 0.093, overnight: 1380.0, fixed_om: 13.80 },
    TechnologyCost { name: "solar_pv", lifetime: 35.0, rate: 0.069, overnight: 370.0, fixed_om: 7.40 },
    TechnologyCost { name: "battery_inverter", lifetime: 10.0, rate: 0.06, overnight: 60.0, fixed_om: 0.6 },
    TechnologyCost { name: "battery_storage", lifetime: 30.0, rate: 0.06, overnight: 75.0, fixed_om: 0.6 },
    TechnologyCost { name: "electrolyzer", lifetime: 25.0, rate: 0.08, overnight: 350.0, fixed_om: 14.0 },
    TechnologyCost { name: "h2_storage", lifetime: 30.0, rate: 0.08, overnight: 21.0, fixed_om: 0.5 },
    TechnologyCost { name: "h2_ocgt", lifetime: 25.0, rate: 0.08, overnight: 411.0, fixed_om: 8.7 },
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_straight_line() {
        assert_eq!(annualize_cost(100.0, 10.0, 0.0, 0.0).unwrap(), 10.0);
    }

    #[test]
    fn rejects_short_lifetime() {
        assert!(annualize_cost(100.0, 0.0, 0.05, 0.0).is_err());
        assert!(annualize_cost(100.0, -3.0, 0.05, 0.0).is_err());
        assert!(annualize_cost(100.0, 10.0, -0.01, 0.0).is_err());
    }
}
