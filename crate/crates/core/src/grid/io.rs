//! Instance files: a single JSON document, or a CSV bundle manifest.
//!
//! A manifest is a JSON object `{"format": "csv-bundle", "instance": ...,
//! "series": {...}}`. `instance` points to a JSON instance whose time series
//! may be left empty; each entry of `series` names a CSV file with one column
//! per entity id (header row) and one row per step. Recognized families are
//! `demand` (node ids), `cf_reference` and `cf_deviation` (renewable ids) and
//! `availability` (reservoir ids). Relative paths resolve against the
//! manifest's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{validate, NetworkInstance};
use crate::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    instance: PathBuf,
    #[serde(default)]
    series: BTreeMap<String, PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn schema(path: &Path, msg: impl ToString) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    }
}

/// Reads a column-per-entity CSV into `id -> series`.
fn read_columns(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = read(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| schema(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| schema(path, e))?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| schema(path, format!("row {}: `{field}` is not a number", i + 2)))?;
            cols[j].push(v);
        }
    }
    Ok(headers.into_iter().zip(cols).collect())
}

fn check(inst: NetworkInstance) -> Result<NetworkInstance> {
    let violations = validate(&inst);
    if let Some(v) = violations.iter().find(|v| v.rule == "unresolved_reference") {
        return Err(Error::UnresolvedReference {
            entity: v.entity.clone(),
            missing: v.detail.clone(),
        });
    }
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    Ok(inst)
}

/// Parses and validates a JSON instance document.
pub fn load_instance_json(text: &str, origin: &Path) -> Result<NetworkInstance> {
    let inst: NetworkInstance = serde_json::from_str(text).map_err(|e| schema(origin, e))?;
    check(inst)
}

fn apply_bundle(inst: &mut NetworkInstance, family: &str, path: &Path) -> Result<()> {
    let cols = read_columns(path)?;
    let unknown = |id: &str| schema(path, format!("column `{id}` matches no entity"));
    match family {
        "demand" => {
            for (id, s) in cols {
                if inst.node_index(&id).is_none() {
                    return Err(unknown(&id));
                }
                inst.demand.0.insert(id, s);
            }
        }
        "cf_reference" | "cf_deviation" => {
            for (id, s) in cols {
                let unit = inst
                    .renewables
                    .iter_mut()
                    .find(|r| r.id == id)
                    .ok_or_else(|| unknown(&id))?;
                if family == "cf_reference" {
                    unit.cf.reference = s;
                } else {
                    unit.cf.deviation = s;
                }
            }
        }
        "availability" => {
            for (id, s) in cols {
                let unit = inst
                    .hydros
                    .iter_mut()
                    .find(|h| h.id == id)
                    .ok_or_else(|| unknown(&id))?;
                unit.availability = Some(s);
            }
        }
        other => return Err(schema(path, format!("unknown series family `{other}`"))),
    }
    Ok(())
}

/// Loads an instance from a JSON document or a CSV bundle manifest, then
/// validates it.
pub fn load_instance(path: impl AsRef<Path>) -> Result<NetworkInstance> {
    check(read_instance(path)?)
}

/// Like [`load_instance`] without validation, for instances whose series
/// are filled in later (e.g. by time-series preparation).
pub fn read_instance(path: impl AsRef<Path>) -> Result<NetworkInstance> {
    let path = path.as_ref();
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| schema(path, e))?;
    if value.get("format").is_none() {
        return serde_json::from_value(value).map_err(|e| schema(path, e));
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| schema(path, e))?;
    if manifest.format != "csv-bundle" {
        return Err(schema(path, format!("unknown format `{}`", manifest.format)));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let inst_path = base.join(&manifest.instance);
    let mut inst: NetworkInstance =
        serde_json::from_str(&read(&inst_path)?).map_err(|e| schema(&inst_path, e))?;
    for (family, file) in &manifest.series {
        apply_bundle(&mut inst, family, &base.join(file))?;
    }
    Ok(inst)
}

/// Writes the instance as pretty-printed JSON.
pub fn save_instance(inst: &NetworkInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(inst).map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
