mod common;

use common::{fixture, rel, ORACLE_FIXTURES};
use robust_expansion::ccg::{run_ccg, CcgConfig};
use robust_expansion::master::solve_deterministic;
use robust_expansion::report::{
    ladder_summary, realization_matrix, report_metrics, summary_csv, trace_csv, write_run_artifacts,
    SolutionDocument, SUMMARY_HEADER,
};
use robust_expansion::solver::DenseSimplex;
use robust_expansion::uncertainty::UncertaintyBudget;

#[test]
fn region_costs_add_up() {
    let backend = DenseSimplex::default();
    for name in ORACLE_FIXTURES {
        let inst = fixture(name);
        let run = run_ccg(&inst, &UncertaintyBudget::uniform(1), &CcgConfig::default(), &backend).unwrap();
        let m = report_metrics(&inst, &run.solution).unwrap();
        let total: f64 = m.regions.iter().map(|r| r.total_cost).sum();
        assert!((total - m.system.total_cost).abs() <= 1e-9 * total.abs().max(1.0), "{name}");
        if m.system.total_cost != 0.0 {
            let shares: f64 = m.regions.iter().map(|r| r.cost_share).sum();
            assert!((shares - 1.0).abs() <= 1e-9, "{name}: {shares}");
        }
        // The reported block is the worst one, so the totals rebuild the objective.
        assert!(rel(m.system.total_cost, run.solution.objective) <= 1e-7, "{name}");
        if m.system.capacity_mw.values().sum::<f64>() > 0.0 {
            let mix: f64 = m.system.capacity_mix_percent.values().sum();
            assert!((mix - 100.0).abs() <= 1e-9, "{name}: {mix}");
        } else {
            assert!(m.system.capacity_mix_percent.is_empty());
        }
        let exports: f64 = m.regions.iter().map(|r| r.net_export_mwh).sum();
        assert!(exports.abs() <= 1e-9 * m.system.demand_mwh.max(1.0));
        assert!(rel(m.system.demand_mwh, inst.total_demand()) <= 1e-12);
    }
}

#[test]
fn storage_ratio_and_discharge_days() {
    let backend = DenseSimplex::default();
    let mut inst = fixture("two_region_storage.json");
    let scale = 1000.0 / inst.total_demand();
    for s in inst.demand.0.values_mut() {
        s.iter_mut().for_each(|d| *d *= scale);
    }
    let mut sol = solve_deterministic(&inst, &backend).unwrap();
    sol.capacities.battery_storage = vec![0.0];
    sol.capacities.h2_storage = vec![4.0];
    let m = report_metrics(&inst, &sol).unwrap();
    assert!((m.system.storage_demand_ratio - 0.004).abs() <= 1e-15);
    // Four steps of one hour: the horizon is a sixth of a day, so average
    // daily demand is 6000 MWh and 4 MWh of hydrogen at 40 % yields 1.6 MWh.
    assert!((m.horizon_days - 1.0 / 6.0).abs() <= 1e-15);
    let days = m.system.h2_discharge_days.unwrap();
    assert!((days - 1.6 / 6000.0).abs() <= 1e-15, "{days}");
    let g1 = &m.regions[0];
    assert!((g1.h2_discharge_days.unwrap() - 1.6 / (g1.demand_mwh * 6.0)).abs() <= 1e-15);
    assert_eq!(m.regions[1].h2_discharge_days, Some(0.0));
}

#[test]
fn csv_artifacts_parse_back() {
    let backend = DenseSimplex::default();
    let inst = fixture("two_region_one_period.json");
    let run = run_ccg(&inst, &UncertaintyBudget::uniform(1), &CcgConfig::default(), &backend).unwrap();

    let text = trace_csv(&run.trace);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["iteration", "lower_bound", "upper_bound", "gap", "z_summary", "seconds"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), run.trace.iterations.len());
    for (row, it) in rows.iter().zip(&run.trace.iterations) {
        assert_eq!(row[0].parse::<usize>().unwrap(), it.iteration);
        assert!(rel(row[1].parse::<f64>().unwrap(), it.lower_bound) <= 1e-5);
        assert!(rel(row[2].parse::<f64>().unwrap(), it.upper_bound) <= 1e-5);
        assert_eq!(&row[4], it.z_summary.as_str());
    }

    let budgets = [UncertaintyBudget::uniform(0), UncertaintyBudget::uniform(1)];
    let base = run_ccg(&inst, &budgets[0], &CcgConfig::default(), &backend).unwrap();
    let rows = ladder_summary(
        &inst,
        &[
            (budgets[0], base.solution.objective, true),
            (budgets[1], run.solution.objective, true),
        ],
    );
    assert_eq!(rows[0].increase_percent, 0.0);
    let want = 100.0 * (run.solution.objective - base.solution.objective) / base.solution.objective;
    assert!(rel(rows[1].increase_percent, want) <= 1e-12);
    assert!(rel(rows[1].avg_cost_per_mwh, run.solution.objective / inst.total_demand()) <= 1e-12);
    let text = summary_csv(&rows);
    assert!(text.starts_with(SUMMARY_HEADER));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let parsed: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(parsed.len(), 2);
    assert!(rel(parsed[1][2].parse::<f64>().unwrap(), run.solution.objective) <= 1e-5);
    assert_eq!(&parsed[1][5], "true");
}

#[test]
fn realization_matrix_marks_cells() {
    let backend = DenseSimplex::default();
    let inst = fixture("toy_single_node.json");
    let run = run_ccg(&inst, &UncertaintyBudget::uniform(1), &CcgConfig::default(), &backend).unwrap();
    let text = realization_matrix(&inst, &run.trace);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["iteration", "period", "g1"]);
    assert_eq!(lines.len(), 2 + run.trace.iterations.len());
    assert_eq!(lines[2].split_whitespace().collect::<Vec<_>>(), ["1", "p1", "S"]);
}

#[test]
fn artifacts_are_written() {
    let backend = DenseSimplex::default();
    let inst = fixture("two_region_two_period.json");
    let run = run_ccg(&inst, &UncertaintyBudget::uniform(1), &CcgConfig::default(), &backend).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run_artifacts(dir.path(), &inst, &run).unwrap();
    for f in ["solution.json", "trace.csv", "realizations.txt", "metrics.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let doc: SolutionDocument =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solution.json")).unwrap()).unwrap();
    assert_eq!(doc, SolutionDocument::new(&inst, &run));
    assert_eq!(doc.capacities.renewable_mw.len(), inst.renewables.len());
    assert!(doc.converged);
}
