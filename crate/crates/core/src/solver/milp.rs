//! Depth-first branch-and-bound over binary columns, warm-started from the
//! parent tableau with the dual simplex.

use super::model::{Model, Sense, VarKind};
use super::simplex::{Outcome, Tableau};

const INT_TOL: f64 = 1e-6;

pub(crate) struct BranchOutcome {
    pub status: Outcome,
    pub incumbent: Option<(f64, Vec<f64>)>,
    pub nodes: usize,
    pub iterations: usize,
    pub hit_node_limit: bool,
}

struct Search<'a> {
    model: &'a Model,
    flip: f64,
    binaries: Vec<usize>,
    gap_tol: f64,
    node_limit: usize,
    iter_limit: usize,
    nodes: usize,
    iterations: usize,
    hit_node_limit: bool,
    incumbent: Option<(f64, Vec<f64>)>,
}

impl Search<'_> {
    fn prune_threshold(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|(inc, _)| {
            let scale = inc.abs().max(1.0);
            inc - (self.gap_tol * scale).max(1e-12 * scale)
        })
    }

    fn visit(&mut self, mut tab: Tableau) {
        if self.nodes >= self.node_limit {
            self.hit_node_limit = true;
            return;
        }
        self.nodes += 1;
        let x = tab.primal_values();
        let value = self.flip * self.model.objective_value(&x);
        if let Some(threshold) = self.prune_threshold() {
            if value >= threshold {
                return;
            }
        }

        let mut branch: Option<(usize, f64)> = None;
        let mut best_frac = INT_TOL;
        for &j in &self.binaries {
            let frac = x[j] - x[j].floor();
            let dist = frac.min(1.0 - frac);
            if dist > best_frac {
                best_frac = dist;
                branch = Some((j, x[j]));
            }
        }

        let Some((j, xj)) = branch else {
            // Integral within tolerance: pin binaries to exact values and polish.
            let mut leaf = tab;
            for &b in &self.binaries {
                let v = x[b].round();
                leaf.set_bounds(b, v, v);
            }
            let before = leaf.iterations;
            let out = leaf.reoptimize(self.iter_limit);
            self.iterations += leaf.iterations - before;
            if out == Outcome::Optimal {
                let xl = leaf.primal_values();
                let val = self.flip * self.model.objective_value(&xl);
                if self.incumbent.as_ref().map_or(true, |(inc, _)| val < *inc) {
                    self.incumbent = Some((val, xl));
                }
            }
            return;
        };

        let first = if xj >= 0.5 { 1.0 } else { 0.0 };
        let mut child = tab.clone();
        child.set_bounds(j, first, first);
        let before = child.iterations;
        let out = child.reoptimize(self.iter_limit);
        self.iterations += child.iterations - before;
        if out == Outcome::Optimal {
            self.visit(child);
        }
        let second = 1.0 - first;
        tab.set_bounds(j, second, second);
        let before = tab.iterations;
        let out = tab.reoptimize(self.iter_limit);
        self.iterations += tab.iterations - before;
        if out == Outcome::Optimal {
            self.visit(tab);
        }
    }
}

pub(crate) fn branch_and_bound(
    model: &Model,
    gap_tol: f64,
    node_limit: usize,
    iter_limit: usize,
) -> BranchOutcome {
    let flip = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let binaries: Vec<usize> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    let mut root = Tableau::new(model);
    let out = root.solve(iter_limit);
    if out != Outcome::Optimal {
        return BranchOutcome {
            status: out,
            incumbent: None,
            nodes: 1,
            iterations: root.iterations,
            hit_node_limit: false,
        };
    }
    let mut search = Search {
        model,
        flip,
        binaries,
        gap_tol,
        node_limit,
        iter_limit,
        nodes: 0,
        iterations: root.iterations,
        hit_node_limit: false,
        incumbent: None,
    };
    search.visit(root);
    let status = match (&search.incumbent, search.hit_node_limit) {
        (_, true) => Outcome::IterationLimit,
        (Some(_), false) => Outcome::Optimal,
        (None, false) => Outcome::Infeasible,
    };
    BranchOutcome {
        status,
        incumbent: search.incumbent.map(|(v, x)| (flip * v, x)),
        nodes: search.nodes,
        iterations: search.iterations,
        hit_node_limit: search.hit_node_limit,
    }
}
