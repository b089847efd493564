mod common;

use common::{fixture, fixture_path, rel, ALL_FIXTURES};
use robust_expansion::grid::{
    annualize_cost, capital_recovery_factor, load_instance, load_instance_json, read_instance, save_instance, validate,
    TECHNOLOGY_COSTS,
};
use robust_expansion::Error;
use std::path::Path;

fn rules(json: &serde_json::Value) -> Vec<&'static str> {
    let inst = serde_json::from_value(json.clone()).expect("schema");
    validate(&inst).into_iter().map(|v| v.rule).collect()
}

fn base_json() -> serde_json::Value {
    let text = std::fs::read_to_string(fixture_path("two_region_one_period.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn every_fixture_is_valid() {
    for name in ALL_FIXTURES {
        let inst = fixture(name);
        assert!(validate(&inst).is_empty(), "{name}");
        assert!(inst.steps() > 0);
    }
}

#[test]
fn json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ALL_FIXTURES {
        let inst = fixture(name);
        let p = dir.path().join(name);
        save_instance(&inst, &p).unwrap();
        assert_eq!(load_instance(&p).unwrap(), inst, "{name}");
    }
}

#[test]
fn csv_bundle_matches_json() {
    let bundle = load_instance(fixture_path("bundle/manifest.json")).unwrap();
    assert_eq!(bundle, fixture("two_region_one_period.json"));
}

#[test]
fn unresolved_node_is_reported_by_id() {
    let mut j = base_json();
    j["renewables"][0]["node"] = "nowhere".into();
    let err = load_instance_json(&j.to_string(), Path::new("x.json")).unwrap_err();
    match err {
        Error::UnresolvedReference { missing, .. } => assert_eq!(missing, "nowhere"),
        e => panic!("unexpected {e}"),
    }
    assert!(err_is_input(&j));
}

fn err_is_input(j: &serde_json::Value) -> bool {
    load_instance_json(&j.to_string(), Path::new("x.json")).unwrap_err().is_input_error()
}

#[test]
fn violations_name_their_rule() {
    let mut j = base_json();
    j["renewables"][1]["id"] = "pv1".into();
    assert!(rules(&j).contains(&"duplicate_id"));

    let mut j = base_json();
    j["renewables"][0]["cf"]["deviation"][1] = 0.9.into();
    assert!(rules(&j).contains(&"deviation_exceeds_reference"));

    let mut j = base_json();
    j["renewables"][0]["cf"]["deviation"][0] = (-0.1).into();
    assert!(rules(&j).contains(&"deviation_negative"));

    let mut j = base_json();
    j["renewables"][0]["region"] = "g2".into();
    assert!(rules(&j).contains(&"region_mismatch"));

    let mut j = base_json();
    j["demand"]["n1"] = serde_json::json!([1.0, 2.0]);
    assert!(rules(&j).contains(&"series_length"));

    let mut j = base_json();
    j["timegrid"]["periods"] = serde_json::json!([
        {"id": "a", "start": 0, "end": 3},
        {"id": "b", "start": 2, "end": 4}
    ]);
    assert!(rules(&j).contains(&"period_overlap"));

    let mut j = base_json();
    j["lines"][0]["to"] = "n1".into();
    assert!(rules(&j).contains(&"self_loop"));

    assert!(rules(&base_json()).is_empty());
}

#[test]
fn malformed_json_is_a_schema_error() {
    let err = load_instance_json("{\"nodes\": 3}", Path::new("bad.json")).unwrap_err();
    assert!(matches!(err, Error::Schema { .. }), "{err}");
    let err = load_instance(fixture_path("does_not_exist.json")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn read_instance_skips_validation() {
    let inst = read_instance(fixture_path("history/instance.json")).unwrap();
    assert!(!validate(&inst).is_empty());
    assert!(load_instance(fixture_path("history/instance.json")).is_err());
}

/// `r / (1 - (1+r)^-L)` with the power taken by repeated multiplication.
fn crf_oracle(rate: f64, years: u32) -> f64 {
    let mut discount = 1.0;
    for _ in 0..years {
        discount /= 1.0 + rate;
    }
    rate / (1.0 - discount)
}

#[test]
fn annualization_matches_closed_form() {
    for t in TECHNOLOGY_COSTS {
        let want = t.overnight * crf_oracle(t.rate, t.lifetime as u32) + t.fixed_om;
        let got = annualize_cost(t.overnight, t.lifetime, t.rate, t.fixed_om).unwrap();
        assert!(rel(got, want) <= 1e-10, "{}: {got} vs {want}", t.name);
        assert!(rel(t.annualized_per_mw(), 1000.0 * want) <= 1e-10);
    }
    let onshore = TECHNOLOGY_COSTS.iter().find(|t| t.name == "wind_onshore").unwrap();
    let v = annualize_cost(onshore.overnight, onshore.lifetime, onshore.rate, onshore.fixed_om).unwrap();
    assert!((v - 91.2).abs() < 0.05, "{v}");
}

#[test]
fn crf_edge_cases() {
    assert_eq!(capital_recovery_factor(0.0, 20.0).unwrap(), 0.05);
    assert!(capital_recovery_factor(0.05, 0.5).is_err());
    assert!(capital_recovery_factor(-0.01, 10.0).is_err());
    assert!(capital_recovery_factor(f64::NAN, 10.0).is_err());
    // One year: pay back principal plus one year of interest.
    assert!((capital_recovery_factor(0.07, 1.0).unwrap() - 1.07).abs() < 1e-14);
}
