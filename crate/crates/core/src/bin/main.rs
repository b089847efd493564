use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use robust_expansion::ccg::{run_ccg, run_gamma_ladder, CcgConfig};
use robust_expansion::grid::{load_instance, read_instance, save_instance, NetworkInstance};
use robust_expansion::oracle::certify_run;
use robust_expansion::prep::{load_history, prepare_instance};
use robust_expansion::report::{ladder_summary, summary_csv, write_run_artifacts};
use robust_expansion::solver::DenseSimplex;
use robust_expansion::uncertainty::{enumerate_set, UncertaintyBudget, DEFAULT_ENUMERATION_CAP};
use robust_expansion::{Error, Result};

const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_CERTIFICATION: u8 = 4;
const EXIT_CAP: u8 = 5;

#[derive(Parser)]
#[command(name = "robust-expansion", version, about = "Capacity expansion planning robust to regional renewable shortfalls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one uncertainty budget and write the plan artifacts.
    Plan {
        instance: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Solve a list of uniform budgets and write a summary table.
    Ladder {
        instance: PathBuf,
        /// Comma-separated budgets applied to both technologies.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6")]
        gammas: Vec<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Solve one budget, then check it against exhaustive enumeration.
    Certify {
        instance: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Largest uncertainty set the check will enumerate.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u128,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rebuild an instance's renewable series from hourly history.
    Prep {
        instance: PathBuf,
        /// History manifest (JSON listing years and one CSV per unit).
        #[arg(long)]
        history: PathBuf,
        /// Averaging window in hours.
        #[arg(long, default_value_t = 4)]
        window: usize,
        /// Zero-based week indices that become uncertainty periods.
        #[arg(long, value_delimiter = ',', required = true)]
        weeks: Vec<usize>,
        #[arg(long, env = "ROBUST_EXPANSION_OUT", default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BudgetArgs {
    /// Budget for both technologies; overridden per technology below.
    #[arg(long, default_value_t = 0)]
    gamma: usize,
    #[arg(long)]
    gamma_pv: Option<usize>,
    #[arg(long)]
    gamma_wind: Option<usize>,
}

impl BudgetArgs {
    fn budget(&self) -> UncertaintyBudget {
        UncertaintyBudget::new(self.gamma_pv.unwrap_or(self.gamma), self.gamma_wind.unwrap_or(self.gamma))
    }
}

#[derive(Args)]
struct RunArgs {
    /// Relative optimality gap at which CCG stops.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long, default_value_t = 50)]
    max_iterations: usize,
    /// Big-M for the worst-case MILP (default: ten times the top shedding cost).
    #[arg(long)]
    big_m: Option<f64>,
    /// Override the instance's step length in hours.
    #[arg(long)]
    step_hours: Option<f64>,
    #[arg(long, env = "ROBUST_EXPANSION_OUT", default_value = "out")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> CcgConfig {
        CcgConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            big_m: self.big_m,
            milp_gap: None,
        }
    }

    fn load(&self, path: &Path) -> Result<NetworkInstance> {
        let mut inst = load_instance(path)?;
        if let Some(h) = self.step_hours {
            inst.timegrid.step_hours = h;
            inst.ensure_valid()?;
        }
        Ok(inst)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::EnumerationCap { .. } => EXIT_CAP,
        _ if e.is_input_error() => EXIT_INPUT,
        _ => EXIT_INTERNAL,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn plan(instance: &Path, budget: UncertaintyBudget, args: &RunArgs) -> Result<u8> {
    let inst = args.load(instance)?;
    let backend = DenseSimplex::default();
    let run = run_ccg(&inst, &budget, &args.config(), &backend)?;
    create_dir(&args.out)?;
    write_run_artifacts(&args.out, &inst, &run)?;
    let t = &run.trace;
    println!(
        "{}: objective {:.6e} after {} iterations (gap {:.3e}){}",
        t.budget,
        run.solution.objective,
        t.iterations.len(),
        t.gap(),
        if t.converged { "" } else { ", not converged" }
    );
    Ok(if t.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn ladder(instance: &Path, gammas: &[usize], args: &RunArgs) -> Result<u8> {
    let inst = args.load(instance)?;
    let backend = DenseSimplex::default();
    let budgets: Vec<UncertaintyBudget> = gammas.iter().map(|&g| UncertaintyBudget::uniform(g)).collect();
    let entries = run_gamma_ladder(&inst, &budgets, &args.config(), &backend);
    create_dir(&args.out)?;
    let mut code = 0;
    let mut rows = Vec::new();
    for e in entries {
        match e.result {
            Ok(run) => {
                let dir = args.out.join(format!("gamma_{}_{}", e.budget.gamma_pv, e.budget.gamma_wind));
                create_dir(&dir)?;
                write_run_artifacts(&dir, &inst, &run)?;
                if !run.trace.converged {
                    code = code.max(EXIT_NOT_CONVERGED);
                }
                println!("{}: objective {:.6e}", e.budget, run.solution.objective);
                rows.push((e.budget, run.solution.objective, run.trace.converged));
            }
            Err(err) => {
                eprintln!("error: {}: {err}", e.budget);
                code = code.max(exit_code(&err));
            }
        }
    }
    write(&args.out.join("summary.csv"), &summary_csv(&ladder_summary(&inst, &rows)))?;
    Ok(code)
}

fn certify(instance: &Path, budget: UncertaintyBudget, cap: u128, args: &RunArgs) -> Result<u8> {
    let inst = args.load(instance)?;
    // Fail on an oversized set before spending time on CCG.
    enumerate_set(&inst, &budget, cap)?;
    let backend = DenseSimplex::default();
    let run = run_ccg(&inst, &budget, &args.config(), &backend)?;
    create_dir(&args.out)?;
    write_run_artifacts(&args.out, &inst, &run)?;
    let report = certify_run(&inst, &budget, &run, &backend, cap)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?;
    write(&args.out.join("certification.json"), &json)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if report.passed { 0 } else { EXIT_CERTIFICATION })
}

fn prep(instance: &Path, history: &Path, window: usize, weeks: &[usize], out: &Path) -> Result<u8> {
    let inst = read_instance(instance)?;
    let hist = load_history(history)?;
    let prepared = prepare_instance(&inst, &hist, window, weeks)?;
    prepared.ensure_valid()?;
    create_dir(out)?;
    let path = out.join("instance.json");
    save_instance(&prepared, &path)?;
    println!("wrote {}", path.display());
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Plan { instance, budget, run } => plan(instance, budget.budget(), run),
        Command::Ladder { instance, gammas, run } => ladder(instance, gammas, run),
        Command::Certify {
            instance,
            budget,
            cap,
            run,
        } => certify(instance, budget.budget(), *cap, run),
        Command::Prep {
            instance,
            history,
            window,
            weeks,
            out,
        } => prep(instance, history, *window, weeks, out),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
