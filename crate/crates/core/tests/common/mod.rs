#![allow(dead_code)]

use std::path::PathBuf;

use robust_expansion::grid::{load_instance, NetworkInstance};

/// Small instances whose uncertainty sets are cheap to enumerate.
pub const ORACLE_FIXTURES: [&str; 6] = [
    "toy_single_node.json",
    "two_region_one_period.json",
    "two_region_two_period.json",
    "three_region.json",
    "symmetric_two_region.json",
    "two_region_storage.json",
];

pub const ALL_FIXTURES: [&str; 7] = [
    "toy_single_node.json",
    "two_region_one_period.json",
    "two_region_two_period.json",
    "three_region.json",
    "symmetric_two_region.json",
    "two_region_storage.json",
    "six_region.json",
];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> NetworkInstance {
    load_instance(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
