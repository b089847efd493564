//! Model-ready capacity-factor series from raw multi-year hourly history.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::grid::{CapacityFactorBundle, NetworkInstance, Period};
use crate::{Error, Result};

/// Hours per week; weeks are consecutive blocks from the series start.
pub const WEEK_HOURS: usize = 168;

/// Hourly capacity factors per unit, one row per historical year.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawHistorySet {
    pub years: Vec<String>,
    pub units: BTreeMap<String, Vec<Vec<f64>>>,
}

impl RawHistorySet {
    pub fn hours(&self) -> usize {
        self.units.values().next().and_then(|m| m.first()).map_or(0, Vec::len)
    }

    pub fn unit(&self, id: &str) -> Result<&[Vec<f64>]> {
        self.units
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidArgument(format!("history has no unit `{id}`")))
    }

    /// Checks value ranges and that every unit shares the same shape.
    pub fn check(&self) -> Result<()> {
        let y = self.years.len();
        let h = self.hours();
        for (id, m) in &self.units {
            if m.len() != y || m.iter().any(|row| row.len() != h) {
                return Err(Error::InvalidArgument(format!(
                    "history of `{id}` is not {y} years x {h} hours"
                )));
            }
            if let Some(v) = m.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidArgument(format!(
                    "history of `{id}` has capacity factor {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

fn mean(s: &[f64]) -> f64 {
    s.iter().sum::<f64>() / s.len() as f64
}

/// Block means over consecutive windows of `window` steps.
pub fn reduce_series(hourly: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least one step".into()));
    }
    if hourly.len() % window != 0 {
        return Err(Error::InvalidArgument(format!(
            "series length {} is not divisible by window {window}",
            hourly.len()
        )));
    }
    Ok(hourly.chunks(window).map(mean).collect())
}

/// Block sums, for energy quantities such as demand.
pub fn reduce_energy(hourly: &[f64], window: usize) -> Result<Vec<f64>> {
    Ok(reduce_series(hourly, window)?
        .into_iter()
        .map(|m| m * window as f64)
        .collect())
}

/// Pointwise mean over years, the expected availability.
pub fn reference_series(history: &RawHistorySet, unit: &str) -> Result<Vec<f64>> {
    let m = history.unit(unit)?;
    let h = m.first().map_or(0, Vec::len);
    Ok((0..h)
        .map(|t| m.iter().map(|row| row[t]).sum::<f64>() / m.len() as f64)
        .collect())
}

/// For each week, the historical year whose week has the lowest mean
/// availability, concatenated. A trailing partial week is dropped.
pub fn synthesize_lower_bound(
    history: &RawHistorySet,
    unit: &str,
    week_len: usize,
) -> Result<Vec<f64>> {
    let m = history.unit(unit)?;
    if m.is_empty() {
        return Err(Error::InvalidArgument(format!("history of `{unit}` has no years")));
    }
    let h = m[0].len();
    if week_len == 0 || h < week_len {
        return Err(Error::InvalidArgument(format!(
            "weeks of {week_len} steps do not align with {h} history steps"
        )));
    }
    let weeks = h / week_len;
    let mut out = Vec::with_capacity(weeks * week_len);
    for w in 0..weeks {
        let span = w * week_len..(w + 1) * week_len;
        let mut best = 0;
        let mut best_mean = f64::INFINITY;
        for (y, row) in m.iter().enumerate() {
            let wm = mean(&row[span.clone()]);
            if wm < best_mean {
                best = y;
                best_mean = wm;
            }
        }
        out.extend_from_slice(&m[best][span]);
    }
    Ok(out)
}

/// `reference - lower_bound`, clipped at zero where the bound exceeds the
/// reference.
pub fn compute_deviation(reference: &[f64], lower_bound: &[f64]) -> Result<Vec<f64>> {
    if reference.len() != lower_bound.len() {
        return Err(Error::InvalidArgument(format!(
            "reference has {} steps, lower bound has {}",
            reference.len(),
            lower_bound.len()
        )));
    }
    let mut clipped = 0;
    let out = reference
        .iter()
        .zip(lower_bound)
        .map(|(r, l)| {
            let d = r - l;
            if d < 0.0 {
                clipped += 1;
                0.0
            } else {
                d
            }
        })
        .collect();
    if clipped > 0 {
        log::warn!("lower bound exceeded the reference at {clipped} steps; deviation clipped to 0");
    }
    Ok(out)
}

/// Reference, lower bound and deviation for one unit after reducing every
/// year to `window`-hour blocks. `window` must divide a week.
pub fn prepare_bundle(
    history: &RawHistorySet,
    unit: &str,
    window: usize,
) -> Result<CapacityFactorBundle> {
    if window == 0 || WEEK_HOURS % window != 0 {
        return Err(Error::InvalidArgument(format!(
            "window {window} h does not divide a {WEEK_HOURS} h week"
        )));
    }
    let years = history.unit(unit)?;
    let hours = years.first().map_or(0, Vec::len);
    let usable = hours / WEEK_HOURS * WEEK_HOURS;
    let reduced = RawHistorySet {
        years: history.years.clone(),
        units: BTreeMap::from([(
            unit.to_string(),
            years
                .iter()
                .map(|row| reduce_series(&row[..usable], window))
                .collect::<Result<Vec<_>>>()?,
        )]),
    };
    let reference = reference_series(&reduced, unit)?;
    let lower = synthesize_lower_bound(&reduced, unit, WEEK_HOURS / window)?;
    let deviation = compute_deviation(&reference, &lower)?;
    Ok(CapacityFactorBundle {
        reference,
        deviation,
        realized: None,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HistoryManifest {
    years: Vec<String>,
    units: BTreeMap<String, PathBuf>,
}

/// Reads a history manifest: `{"years": [...], "units": {"id": "file.csv"}}`
/// where each CSV has one row per year and one column per hour, no header.
pub fn load_history(path: impl AsRef<Path>) -> Result<RawHistorySet> {
    let path = path.as_ref();
    let io = |p: &Path, source| Error::Io {
        path: p.to_path_buf(),
        source,
    };
    let schema = |p: &Path, msg: String| Error::Schema {
        path: p.to_path_buf(),
        msg,
    };
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    let manifest: HistoryManifest =
        serde_json::from_str(&text).map_err(|e| schema(path, e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut units = BTreeMap::new();
    for (id, file) in manifest.units {
        let p = base.join(file);
        let body = fs::read_to_string(&p).map_err(|e| io(&p, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| schema(&p, e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| schema(&p, format!("`{f}` is not a number"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        units.insert(id, rows);
    }
    let set = RawHistorySet {
        years: manifest.years,
        units,
    };
    set.check()?;
    Ok(set)
}

/// Rewrites an instance's renewable series from history reduced to
/// `window`-hour steps. Hourly demand of matching length is summed into the
/// same steps, `step_hours` becomes `window`, and `weeks` (zero-based week
/// indices) become the uncertainty periods.
pub fn prepare_instance(
    inst: &NetworkInstance,
    history: &RawHistorySet,
    window: usize,
    weeks: &[usize],
) -> Result<NetworkInstance> {
    history.check()?;
    let mut out = inst.clone();
    let hours = history.hours();
    let usable = hours / WEEK_HOURS * WEEK_HOURS;
    let steps = usable / window.max(1);
    for r in &mut out.renewables {
        r.cf = prepare_bundle(history, &r.id, window)?;
    }
    for series in out.demand.0.values_mut() {
        if series.len() >= usable && series.len() == hours {
            *series = reduce_energy(&series[..usable], window)?;
        }
    }
    let per_week = WEEK_HOURS / window;
    out.timegrid.step_count = steps;
    out.timegrid.step_hours = window as f64;
    out.timegrid.periods = weeks
        .iter()
        .map(|&w| Period {
            id: format!("w{}", w + 1),
            start: w * per_week,
            end: (w + 1) * per_week,
        })
        .collect();
    Ok(out)
}
