//! Pluggable LP/MILP solving.
//!
//! Model builders produce a [`Model`]; anything implementing [`SolverBackend`]
//! can solve it. [`DenseSimplex`] ships in-tree: a bounded-variable tableau
//! simplex for LPs and depth-first branch-and-bound for binary columns.

mod duality;
pub mod lpformat;
mod milp;
mod model;
mod simplex;

use std::time::Instant;

pub use duality::{dualize, DualMap};
pub use model::{Constraint, Model, ModelError, RowId, RowSense, Sense, VarId, VarKind, Variable};

use simplex::{Outcome, Tableau};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub nodes: usize,
    pub rows: usize,
    pub columns: usize,
    pub seconds: f64,
}

/// Outcome of a solve. Values are present only when `status` is optimal;
/// row duals and reduced costs only for LPs.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub primal: Option<Vec<f64>>,
    /// d objective / d rhs for every row, in the model's own sense.
    pub duals: Option<Vec<f64>>,
    pub reduced_costs: Option<Vec<f64>>,
    pub stats: SolveStats,
}

impl SolveResult {
    fn without_values(status: SolveStatus, stats: SolveStats) -> Self {
        SolveResult {
            status,
            objective: None,
            primal: None,
            duals: None,
            reduced_costs: None,
            stats,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.primal.as_ref().expect("solution values on a non-optimal result")[v.0]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid model: {0}")]
    InvalidModel(#[from] ModelError),
    #[error("model contains binary variables; use solve_milp")]
    NotAnLp,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &str;

    fn solve_lp(&self, model: &Model) -> Result<SolveResult, SolverError>;

    /// Solves to within `gap_tol` relative of the MILP optimum.
    fn solve_milp(&self, model: &Model, gap_tol: f64) -> Result<SolveResult, SolverError>;
}

/// In-tree simplex + branch-and-bound backend.
#[derive(Clone, Debug)]
pub struct DenseSimplex {
    /// Per-solve pivot budget on top of `50 * (rows + columns)`.
    pub iteration_budget: usize,
    pub node_limit: usize,
    /// Largest violation accepted on a returned primal point.
    pub feasibility_check: f64,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex {
            iteration_budget: 100_000,
            node_limit: 200_000,
            feasibility_check: 1e-6,
        }
    }
}

impl DenseSimplex {
    fn budget(&self, model: &Model) -> usize {
        self.iteration_budget + 50 * (model.num_rows() + model.num_vars())
    }

    fn check_point(&self, model: &Model, x: &[f64]) -> Result<(), SolverError> {
        let scale = model
            .rows()
            .iter()
            .map(|r| r.rhs.abs())
            .fold(1.0_f64, f64::max);
        let viol = model.max_violation(x);
        if viol > self.feasibility_check * scale {
            return Err(SolverError::Numerical(format!(
                "returned point violates the model by {viol:.3e}"
            )));
        }
        Ok(())
    }
}

fn map_outcome(out: Outcome) -> SolveStatus {
    match out {
        Outcome::Optimal => SolveStatus::Optimal,
        Outcome::Infeasible => SolveStatus::Infeasible,
        Outcome::Unbounded => SolveStatus::Unbounded,
        Outcome::IterationLimit => SolveStatus::Limit,
    }
}

impl SolverBackend for DenseSimplex {
    fn name(&self) -> &str {
        "dense-simplex"
    }

    fn solve_lp(&self, model: &Model) -> Result<SolveResult, SolverError> {
        model.check()?;
        if model.has_binaries() {
            return Err(SolverError::NotAnLp);
        }
        let start = Instant::now();
        let mut tab = Tableau::new(model);
        let out = tab.solve(self.budget(model));
        let (m, n) = tab.size();
        let stats = SolveStats {
            iterations: tab.iterations,
            nodes: 0,
            rows: m,
            columns: n,
            seconds: start.elapsed().as_secs_f64(),
        };
        if out != Outcome::Optimal {
            return Ok(SolveResult::without_values(map_outcome(out), stats));
        }
        let x = tab.primal_values();
        self.check_point(model, &x)?;
        let flip = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let duals = tab.row_duals().into_iter().map(|y| flip * y).collect();
        let reduced = tab.reduced_costs().into_iter().map(|d| flip * d).collect();
        Ok(SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(model.objective_value(&x)),
            primal: Some(x),
            duals: Some(duals),
            reduced_costs: Some(reduced),
            stats,
        })
    }

    fn solve_milp(&self, model: &Model, gap_tol: f64) -> Result<SolveResult, SolverError> {
        model.check()?;
        if !(gap_tol >= 0.0) {
            return Err(SolverError::Numerical(format!("gap tolerance {gap_tol} must be >= 0")));
        }
        let start = Instant::now();
        let res = milp::branch_and_bound(model, gap_tol, self.node_limit, self.budget(model));
        if res.hit_node_limit {
            log::warn!("branch-and-bound stopped at the node limit of {}", self.node_limit);
        }
        let stats = SolveStats {
            iterations: res.iterations,
            nodes: res.nodes,
            rows: model.num_rows(),
            columns: model.num_vars(),
            seconds: start.elapsed().as_secs_f64(),
        };
        match (res.status, res.incumbent) {
            (Outcome::Optimal, Some((obj, x))) => {
                self.check_point(model, &x)?;
                Ok(SolveResult {
                    status: SolveStatus::Optimal,
                    objective: Some(obj),
                    primal: Some(x),
                    duals: None,
                    reduced_costs: None,
                    stats,
                })
            }
            (out, _) => Ok(SolveResult::without_values(map_outcome(out), stats)),
        }
    }
}
