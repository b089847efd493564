use std::ffi::{CStr, CString};
use std::ptr;

use robust_expansion_ffi::*;

fn fixture(name: &str) -> CString {
    CString::new(format!("{}/../core/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn last_error() -> String {
    let p = re_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn plan_round_trip_through_handles() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(re_instance_load(fixture("toy_single_node.json").as_ptr(), &mut inst), ReStatus::Ok);
        assert_eq!(re_instance_violation_count(inst), 0);
        assert_eq!(re_instance_region_count(inst), 1);
        assert_eq!(re_instance_step_count(inst), 2);

        let mut plan = ptr::null_mut();
        assert_eq!(re_plan_run(inst, 1, 1, 0.0, 0, &mut plan), ReStatus::Ok);
        assert!(re_plan_converged(plan));
        assert_eq!(re_plan_iterations(plan), 2);
        // Shedding the whole 10 MWh in both steps once the unit drops to zero:
        // tiers 0.5 + 1.5 + 8 MWh at 1000/3000/12000 EUR/MWh per step.
        let expected = 2.0 * (0.5 * 1000.0 + 1.5 * 3000.0 + 8.0 * 12000.0);
        assert!((re_plan_objective(plan) - expected).abs() <= 1e-6 * expected);
        let (mut lb, mut ub, mut gap) = (0.0, 0.0, 1.0);
        assert_eq!(re_plan_bounds(plan, &mut lb, &mut ub, &mut gap), ReStatus::Ok);
        assert!(lb <= ub + 1e-9 * ub && gap <= 1e-8);

        let json = re_plan_solution_json(plan);
        assert!(!json.is_null());
        let doc: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(doc["gamma_pv"], 1);
        assert_eq!(doc["converged"], true);
        re_string_free(json);

        re_plan_free(plan);
        re_instance_free(inst);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut inst = ptr::null_mut();
        let missing = CString::new("/nonexistent/instance.json").unwrap();
        assert_eq!(re_instance_load(missing.as_ptr(), &mut inst), ReStatus::InputError);
        assert!(inst.is_null());
        assert!(last_error().contains("instance.json"));

        assert_eq!(re_instance_load(ptr::null(), &mut inst), ReStatus::NullArgument);
        let bad = CString::new("{\"nodes\": 3}").unwrap();
        assert_eq!(re_instance_from_json(bad.as_ptr(), &mut inst), ReStatus::InputError);

        let mut plan = ptr::null_mut();
        assert_eq!(re_plan_run(ptr::null(), 0, 0, 0.0, 0, &mut plan), ReStatus::NullArgument);
        assert!(re_plan_objective(ptr::null()).is_nan());
        assert!(re_plan_solution_json(ptr::null()).is_null());

        // Null handles are accepted by the destructors.
        re_plan_free(ptr::null_mut());
        re_instance_free(ptr::null_mut());
        re_string_free(ptr::null_mut());
    }
}

#[test]
fn annualization_matches_closed_form() {
    let (overnight, lifetime, rate, om) = (963.0, 30.0, 0.075, 9.63);
    let crf = rate * (1.0_f64 + rate).powf(lifetime) / ((1.0_f64 + rate).powf(lifetime) - 1.0);
    let mut out = 0.0;
    assert_eq!(unsafe { re_annualize_cost(overnight, lifetime, rate, om, &mut out) }, ReStatus::Ok);
    assert!((out - (overnight * crf + om)).abs() <= 1e-10 * out);
    assert_eq!(unsafe { re_annualize_cost(1.0, 0.0, 0.05, 0.0, &mut out) }, ReStatus::InputError);
    assert_eq!(unsafe { re_annualize_cost(1.0, 10.0, 0.05, 0.0, ptr::null_mut()) }, ReStatus::NullArgument);
}

#[test]
fn version_and_header_are_present() {
    let v = unsafe { CStr::from_ptr(re_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/robust_expansion.h")).unwrap();
    for sym in ["re_instance_load", "re_plan_run", "re_plan_free", "RE_STATUS_ENUMERATION_CAP", "typedef struct RePlan RePlan"] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}
