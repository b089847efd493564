//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fixture, fixture_path, rel, ALL_FIXTURES, ORACLE_FIXTURES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_expansion::ccg::{run_ccg, CcgConfig, CcgResult, CcgTrace};
use robust_expansion::grid::{annualize_cost, read_instance, NetworkInstance, TechClass, TECHNOLOGY_COSTS};
use robust_expansion::master::{check_physics, dispatch_cost, solve_deterministic, CapacityHandoff, Capacities, MasterSolution};
use robust_expansion::oracle::{certify_run, robust_optimum_by_enumeration};
use robust_expansion::prep::{compute_deviation, load_history, prepare_instance, reduce_series, synthesize_lower_bound, RawHistorySet};
use robust_expansion::solver::DenseSimplex;
use robust_expansion::subproblem::{build_subproblem, default_big_m, verify_strong_duality};
use robust_expansion::uncertainty::{enumerate_set, enumeration_count, realize, DeviationMask, UncertaintyBudget};

const ORACLE_REALIZATIONS: u128 = 200;
const CAP: u128 = 10_000;
const RANDOM_PAIRS: usize = 20;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(failures: Vec<String>, ok: String) -> Outcome {
    if failures.is_empty() {
        Outcome { passed: true, detail: ok }
    } else {
        let n = failures.len();
        let mut shown: Vec<String> = failures.into_iter().take(3).collect();
        if n > 3 {
            shown.push(format!("{} more", n - 3));
        }
        Outcome {
            passed: false,
            detail: shown.join("; "),
        }
    }
}

/// A solved run kept for the later criteria.
struct Run {
    fixture: &'static str,
    budget: UncertaintyBudget,
    result: CcgResult,
}

struct Context {
    backend: DenseSimplex,
    instances: BTreeMap<&'static str, NetworkInstance>,
    runs: Vec<Run>,
}

impl Context {
    fn inst(&self, name: &str) -> &NetworkInstance {
        &self.instances[name]
    }

    fn traces(&self) -> impl Iterator<Item = (&Run, &CcgTrace)> {
        self.runs.iter().map(|r| (r, &r.result.trace))
    }
}

/// Budgets with Γ <= 2 whose full uncertainty set stays small.
fn oracle_budgets(inst: &NetworkInstance) -> Vec<UncertaintyBudget> {
    (1..=2)
        .map(UncertaintyBudget::uniform)
        .filter(|b| {
            let c = b.clamped(inst.regions.len());
            c == *b && enumeration_count(inst.regions.len(), inst.timegrid.periods.len(), &c) <= ORACLE_REALIZATIONS
        })
        .collect()
}

fn deterministic_equivalence(cx: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let mut slowest = Duration::ZERO;
    for name in ALL_FIXTURES {
        let started = Instant::now();
        let inst = cx.inst(name).clone();
        let det = solve_deterministic(&inst, &cx.backend);
        let run = run_ccg(&inst, &UncertaintyBudget::uniform(0), &CcgConfig::default(), &cx.backend);
        let took = started.elapsed();
        slowest = slowest.max(took);
        match (det, run) {
            (Ok(det), Ok(run)) => {
                let d = rel(run.solution.objective, det.objective);
                if d > 1e-8 {
                    fails.push(format!("{name}: relative difference {d:.2e}"));
                }
                if took >= Duration::from_secs(5) {
                    fails.push(format!("{name}: {took:.2?}"));
                }
                cx.runs.push(Run {
                    fixture: name,
                    budget: UncertaintyBudget::uniform(0),
                    result: run,
                });
            }
            (Err(e), _) | (_, Err(e)) => fails.push(format!("{name}: {e}")),
        }
    }
    outcome(fails, format!("{} fixtures within 1e-8, slowest {slowest:.2?}", ALL_FIXTURES.len()))
}

fn oracle_equivalence(cx: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let mut checked = 0;
    let mut fixtures = 0;
    for name in ORACLE_FIXTURES {
        let inst = cx.inst(name).clone();
        let started = Instant::now();
        let budgets = oracle_budgets(&inst);
        if !budgets.is_empty() {
            fixtures += 1;
        }
        for b in budgets {
            let run = match run_ccg(&inst, &b, &CcgConfig::default(), &cx.backend) {
                Ok(r) => r,
                Err(e) => {
                    fails.push(format!("{name} {b}: {e}"));
                    continue;
                }
            };
            if !run.trace.converged {
                fails.push(format!("{name} {b}: not converged"));
            }
            match robust_optimum_by_enumeration(&inst, &b, &cx.backend, CAP) {
                Ok(opt) => {
                    let d = rel(run.solution.objective, opt.objective);
                    if d > 1e-6 {
                        fails.push(format!("{name} {b}: relative difference {d:.2e}"));
                    }
                }
                Err(e) => fails.push(format!("{name} {b}: {e}")),
            }
            checked += 1;
            cx.runs.push(Run {
                fixture: name,
                budget: b,
                result: run,
            });
        }
        let took = started.elapsed();
        if took >= Duration::from_secs(120) {
            fails.push(format!("{name}: {took:.2?}"));
        }
    }
    if fixtures < 5 {
        fails.push(format!("only {fixtures} fixtures qualify"));
    }
    outcome(fails, format!("{checked} runs on {fixtures} fixtures within 1e-6"))
}

fn random_caps(inst: &NetworkInstance, base: &Capacities, rng: &mut ChaCha8Rng) -> Capacities {
    let mut c = base.clone();
    for v in [
        &mut c.renewable,
        &mut c.battery_inverter,
        &mut c.battery_storage,
        &mut c.h2_ocgt,
        &mut c.h2_electrolyzer,
        &mut c.h2_storage,
    ] {
        for x in v.iter_mut() {
            *x = rng.gen_range(0.0..=2.0 * *x + 20.0);
        }
    }
    for (x, l) in c.line_expansion.iter_mut().zip(&inst.lines) {
        *x = rng.gen_range(0.0..=l.max_expansion().min(50.0));
    }
    c
}

fn random_mask(inst: &NetworkInstance, rng: &mut ChaCha8Rng) -> DeviationMask {
    let mut z = DeviationMask::for_instance(inst);
    for tech in TechClass::ALL {
        for g in 0..z.regions() {
            for p in 0..z.periods() {
                z.set(tech, g, p, rng.gen_bool(0.5));
            }
        }
    }
    z
}

fn strong_duality(cx: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut check = |what: String, r: robust_expansion::Result<f64>| match r {
        Ok(g) => {
            worst = worst.max(g);
            count += 1;
            if g > 1e-6 {
                fails.push(format!("{what}: gap {g:.2e}"));
            }
        }
        Err(e) => fails.push(format!("{what}: {e}")),
    };
    for run in &cx.runs {
        if run.result.trace.converged {
            let inst = cx.inst(run.fixture);
            let caps = &run.result.solution.capacities;
            check(
                format!("{} {}", run.fixture, run.budget),
                verify_strong_duality(inst, caps, &run.result.worst_case, &cx.backend),
            );
        }
    }
    for (k, name) in ALL_FIXTURES.iter().enumerate() {
        let inst = cx.inst(name);
        let base = match solve_deterministic(inst, &cx.backend) {
            Ok(s) => s.capacities,
            Err(e) => {
                check(name.to_string(), Err(e));
                continue;
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7919 * (k as u64 + 1));
        for i in 0..RANDOM_PAIRS {
            let caps = random_caps(inst, &base, &mut rng);
            let z = random_mask(inst, &mut rng);
            check(format!("{name} sample {i}"), verify_strong_duality(inst, &caps, &z, &cx.backend));
        }
    }
    outcome(fails, format!("{count} points, largest relative gap {worst:.2e}"))
}

fn robustness_certificate(cx: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let mut count = 0;
    for run in cx.runs.iter().filter(|r| r.budget.gamma_pv > 0 && ORACLE_FIXTURES.contains(&r.fixture)) {
        let inst = cx.inst(run.fixture);
        match certify_run(inst, &run.budget, &run.result, &cx.backend, CAP) {
            Ok(rep) => {
                let b = rep.checks.iter().find(|c| c.name == "robustness").expect("check present");
                if !b.passed {
                    fails.push(format!("{} {}: {}", run.fixture, run.budget, b.detail));
                }
                count += 1;
            }
            Err(e) => fails.push(format!("{} {}: {e}", run.fixture, run.budget)),
        }
    }
    outcome(fails, format!("{count} converged plans certified"))
}

fn ladder(cx: &mut Context) -> Vec<f64> {
    let name = "six_region.json";
    let inst = cx.inst(name).clone();
    let mut objs = Vec::new();
    for g in 0..=inst.regions.len() {
        let b = UncertaintyBudget::uniform(g);
        match run_ccg(&inst, &b, &CcgConfig::default(), &cx.backend) {
            Ok(run) => {
                objs.push(run.solution.objective);
                cx.runs.push(Run {
                    fixture: name,
                    budget: b,
                    result: run,
                });
            }
            Err(_) => objs.push(f64::NAN),
        }
    }
    objs
}

fn gamma_monotonicity(cx: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let six = ladder(cx);
    if six.iter().any(|v| v.is_nan()) {
        fails.push(format!("six-region ladder failed: {six:?}"));
    }
    // Every fixture's runs, grouped by fixture and sorted by Γ.
    let mut by_fixture: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for r in &cx.runs {
        by_fixture
            .entry(r.fixture)
            .or_default()
            .push((r.budget.gamma_pv, r.result.solution.objective));
    }
    for (name, mut v) in by_fixture {
        v.sort_by_key(|x| x.0);
        v.dedup_by_key(|x| x.0);
        for w in v.windows(2) {
            if w[1].1 < w[0].1 - 1e-8 * w[0].1.abs().max(1.0) {
                fails.push(format!("{name}: Γ{} {} < Γ{} {}", w[1].0, w[1].1, w[0].0, w[0].1));
            }
        }
    }
    let inc: Vec<f64> = six.windows(2).map(|w| w[1] - w[0]).collect();
    let total = (six[six.len() - 1] - six[0]) / six[0];
    if !(total > 0.0) {
        fails.push(format!("six-region increase {total:e} is not positive"));
    }
    let last = inc[inc.len() - 1];
    if inc[..inc.len() - 1].iter().any(|d| *d <= last) {
        fails.push(format!("last increment {last:.4} is not the smallest: {inc:?}"));
    }
    let pct: Vec<String> = six.iter().map(|v| format!("{:+.1}%", 100.0 * (v - six[0]) / six[0])).collect();
    outcome(fails, format!("six-region ladder {}", pct.join(" ")))
}

fn bound_monotonicity(cx: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let mut count = 0;
    for (r, t) in cx.traces() {
        count += 1;
        for w in t.iterations.windows(2) {
            if w[1].lower_bound < w[0].lower_bound || w[1].upper_bound > w[0].upper_bound {
                fails.push(format!("{} {} iteration {}", r.fixture, r.budget, w[1].iteration));
            }
        }
        if !t.converged || t.gap() > 1e-8 {
            fails.push(format!("{} {}: final gap {:.2e}", r.fixture, r.budget, t.gap()));
        }
    }
    outcome(fails, format!("{count} traces monotone, final gaps <= 1e-8"))
}

fn big_m_soundness(cx: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let mut count = 0;
    for run in cx.runs.iter().filter(|r| r.budget.gamma_pv > 0 && ORACLE_FIXTURES.contains(&r.fixture)) {
        let inst = cx.inst(run.fixture);
        let caps = &run.result.solution.capacities;
        let m = default_big_m(inst);
        let sp = match CapacityHandoff::new(inst, caps).and_then(|h| build_subproblem(inst, &h, &run.budget, m)) {
            Ok(sp) => sp,
            Err(e) => {
                fails.push(format!("{}: {e}", run.fixture));
                continue;
            }
        };
        for z in enumerate_set(inst, &run.budget, CAP).expect("small set") {
            let what = format!("{} {}", run.fixture, z.summary(inst));
            let dual = sp.solve_fixed(&z, &cx.backend);
            let primal = realize(inst, &z).and_then(|cf| dispatch_cost(inst, caps, &cf, &cx.backend));
            match (dual, primal) {
                (Ok(d), Ok(p)) => {
                    count += 1;
                    if rel(d.objective, p) > 1e-6 {
                        fails.push(format!("{what}: {} vs {p}", d.objective));
                    }
                    if d.values.iter().any(|v| (v.abs() - m).abs() <= 1e-6 * m) {
                        fails.push(format!("{what}: a variable sits at M"));
                    }
                }
                (Err(e), _) | (_, Err(e)) => fails.push(format!("{what}: {e}")),
            }
        }
    }
    outcome(fails, format!("{count} fixed-z subproblems match dispatch, none at M"))
}

fn physics_of(inst: &NetworkInstance, sol: &MasterSolution) -> f64 {
    sol.blocks
        .iter()
        .map(|b| check_physics(inst, &sol.capacities, &b.cf, &b.dispatch).worst())
        .fold(0.0, f64::max)
}

fn model_physics(cx: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    let mut blocks = 0;
    for run in &cx.runs {
        let inst = cx.inst(run.fixture);
        let w = physics_of(inst, &run.result.solution);
        blocks += run.result.solution.blocks.len();
        worst = worst.max(w);
        if w > 1e-6 {
            fails.push(format!("{} {}: residual {w:.2e}", run.fixture, run.budget));
        }
    }
    outcome(fails, format!("{blocks} blocks, largest residual {worst:.2e}"))
}

fn worst_week_oracle(m: &[Vec<f64>], week: usize) -> Vec<f64> {
    let weeks = m[0].len() / week;
    (0..weeks)
        .map(|w| {
            m.iter()
                .map(|row| row[w * week..(w + 1) * week].iter().sum::<f64>() / week as f64)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn data_prep(cx: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..50 {
        let window = [1, 2, 3, 4, 6, 8, 12, 24][trial % 8];
        let hourly: Vec<f64> = (0..window * 42).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let reduced = reduce_series(&hourly, window).expect("divisible");
        let a = hourly.iter().sum::<f64>() / hourly.len() as f64;
        let b = reduced.iter().sum::<f64>() / reduced.len() as f64;
        if rel(b, a) > 1e-12 {
            fails.push(format!("mean drift {:.2e} at window {window}", rel(b, a)));
        }

        let week = 1 + trial % 7;
        let m: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4 * week).map(|_| rng.gen_range(0.0..=1.0)).collect())
            .collect();
        let set = RawHistorySet {
            years: (0..5).map(|y| y.to_string()).collect(),
            units: BTreeMap::from([("u".to_string(), m.clone())]),
        };
        let lb = synthesize_lower_bound(&set, "u", week).expect("aligned");
        let got: Vec<f64> = lb.chunks(week).map(|c| c.iter().sum::<f64>() / week as f64).collect();
        if got != worst_week_oracle(&m, week) {
            fails.push(format!("weekly minima differ at week length {week}"));
        }
    }
    let mut instances: Vec<NetworkInstance> = cx.instances.values().cloned().collect();
    let history = load_history(fixture_path("history/manifest.json"));
    let base = read_instance(fixture_path("history/instance.json"));
    match (history, base) {
        (Ok(h), Ok(b)) => match prepare_instance(&b, &h, 4, &[0, 1]) {
            Ok(p) => instances.push(p),
            Err(e) => fails.push(format!("history fixture: {e}")),
        },
        (Err(e), _) | (_, Err(e)) => fails.push(format!("history fixture: {e}")),
    }
    for inst in &instances {
        for r in &inst.renewables {
            let dev = compute_deviation(&r.cf.reference, &r.cf.lower_bound()).expect("same length");
            if r.cf.deviation.iter().chain(&dev).any(|d| *d < 0.0) {
                fails.push(format!("{}: negative deviation", r.id));
            }
        }
    }
    outcome(fails, format!("50 random trials, {} instances with non-negative deviation", instances.len()))
}

/// `r / (1 - (1+r)^-L)` by repeated division.
fn crf_oracle(rate: f64, years: u32) -> f64 {
    let mut discount = 1.0;
    for _ in 0..years {
        discount /= 1.0 + rate;
    }
    rate / (1.0 - discount)
}

fn annualization(_: &mut Context) -> Outcome {
    let mut fails = Vec::new();
    let mut onshore = f64::NAN;
    for t in TECHNOLOGY_COSTS {
        let want = t.overnight * crf_oracle(t.rate, t.lifetime as u32) + t.fixed_om;
        match annualize_cost(t.overnight, t.lifetime, t.rate, t.fixed_om) {
            Ok(got) => {
                if rel(got, want) > 1e-10 {
                    fails.push(format!("{}: {got} vs {want}", t.name));
                }
                if t.name == "wind_onshore" {
                    onshore = got;
                }
            }
            Err(e) => fails.push(format!("{}: {e}", t.name)),
        }
    }
    if !((onshore - 91.2).abs() < 0.05) {
        fails.push(format!("onshore wind {onshore} EUR/kW/yr"));
    }
    outcome(fails, format!("{} rows within 1e-10, onshore wind {onshore:.2} EUR/kW/yr", TECHNOLOGY_COSTS.len()))
}

type Criterion = (&'static str, fn(&mut Context) -> Outcome);

fn main() -> ExitCode {
    let mut cx = Context {
        backend: DenseSimplex::default(),
        instances: ALL_FIXTURES.iter().map(|n| (*n, fixture(n))).collect(),
        runs: Vec::new(),
    };
    // Order matters: later criteria reuse the runs gathered by earlier ones.
    let criteria: [(usize, Criterion); 10] = [
        (1, ("deterministic equivalence", deterministic_equivalence)),
        (2, ("oracle equivalence", oracle_equivalence)),
        (6, ("gamma monotonicity", gamma_monotonicity)),
        (3, ("strong duality", strong_duality)),
        (4, ("robustness certificate", robustness_certificate)),
        (5, ("bound monotonicity", bound_monotonicity)),
        (7, ("big-M soundness", big_m_soundness)),
        (8, ("model physics", model_physics)),
        (9, ("data preparation", data_prep)),
        (10, ("annualization", annualization)),
    ];
    let mut results = BTreeMap::new();
    for (id, (name, f)) in criteria {
        let started = Instant::now();
        let o = f(&mut cx);
        results.insert(id, (name, o, started.elapsed()));
    }
    let mut failed = 0;
    for (id, (name, o, took)) in &results {
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} {name}: {} [{took:.2?}]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
