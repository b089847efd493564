//! Bounded-variable tableau simplex.
//!
//! The tableau holds `B^-1 A` densely but every pivot only touches the
//! nonzeros of the pivot row and pivot column, which keeps block-structured
//! planning models cheap. One artificial column per row is kept for the whole
//! solve: it seeds phase 1, is fixed at zero afterwards, and its reduced cost
//! yields the row dual.

use super::model::{Model, RowSense, Sense};

const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 40;
const REFACTOR_EVERY: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free column resting at zero.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone)]
pub(crate) struct Tableau {
    m: usize,
    ncols: usize,
    n_struct: usize,
    art_start: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    row_sign: Vec<f64>,
    /// Scaled original rows (structural + slack + artificial), for refactoring.
    orig_rows: Vec<Vec<(usize, f64)>>,
    orig_rhs: Vec<f64>,
    dual_tol: f64,
    pub(crate) iterations: usize,
    pivots_since_refactor: usize,
    prow: Vec<(usize, f64)>,
}

impl Tableau {
    /// Builds the phase-1 tableau. Objective is always minimized internally.
    pub(crate) fn new(model: &Model) -> Self {
        let n_struct = model.num_vars();
        let m = model.num_rows();
        let flip = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };

        let mut slack_of_row = vec![None; m];
        let mut n_slack = 0;
        for (i, r) in model.rows().iter().enumerate() {
            if r.sense != RowSense::Eq {
                slack_of_row[i] = Some(n_struct + n_slack);
                n_slack += 1;
            }
        }
        let art_start = n_struct + n_slack;
        let ncols = art_start + m;

        let mut lb = vec![0.0; ncols];
        let mut ub = vec![f64::INFINITY; ncols];
        let mut cost = vec![0.0; ncols];
        let mut status = vec![Status::Lower; ncols];
        let mut value = vec![0.0; ncols];
        for (j, v) in model.vars().iter().enumerate() {
            lb[j] = v.lb;
            ub[j] = v.ub;
            cost[j] = flip * v.obj;
            if v.lb.is_finite() {
                status[j] = Status::Lower;
                value[j] = v.lb;
            } else if v.ub.is_finite() {
                status[j] = Status::Upper;
                value[j] = v.ub;
            } else {
                status[j] = Status::Zero;
            }
        }

        let mut a = vec![0.0; m * ncols];
        let mut rhs = vec![0.0; m];
        let mut beta = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut row_sign = vec![1.0; m];
        let mut orig_rows = Vec::with_capacity(m);
        let mut orig_rhs = Vec::with_capacity(m);

        for (i, r) in model.rows().iter().enumerate() {
            let activity: f64 = r.terms.iter().map(|&(v, c)| c * value[v.0]).sum();
            let resid = r.rhs - activity;
            let slack_coef = match r.sense {
                RowSense::Le => 1.0,
                RowSense::Ge => -1.0,
                RowSense::Eq => 0.0,
            };
            // Slack is basic when it can absorb the residual; otherwise the artificial is.
            let (sign, basic_col) = match (r.sense, slack_of_row[i]) {
                (RowSense::Le, Some(s)) if resid >= 0.0 => (1.0, s),
                (RowSense::Ge, Some(s)) if resid <= 0.0 => (-1.0, s),
                _ => (if resid >= 0.0 { 1.0 } else { -1.0 }, art_start + i),
            };
            row_sign[i] = sign;
            let mut row = Vec::with_capacity(r.terms.len() + 2);
            for &(v, c) in &r.terms {
                row.push((v.0, sign * c));
            }
            if let Some(s) = slack_of_row[i] {
                row.push((s, sign * slack_coef));
            }
            row.push((art_start + i, 1.0));
            for &(j, c) in &row {
                a[i * ncols + j] = c;
            }
            rhs[i] = sign * r.rhs;
            beta[i] = sign * resid;
            basis[i] = basic_col;
            status[basic_col] = Status::Basic;
            orig_rows.push(row);
            orig_rhs.push(rhs[i]);
        }
        for i in 0..m {
            let col = art_start + i;
            if status[col] != Status::Basic {
                ub[col] = 0.0;
            }
        }

        let cscale = cost.iter().fold(1.0_f64, |acc, c| acc.max(c.abs()));
        Tableau {
            m,
            ncols,
            n_struct,
            art_start,
            a,
            rhs,
            beta,
            basis,
            status,
            lb,
            ub,
            cost,
            d: vec![0.0; ncols],
            row_sign,
            orig_rows,
            orig_rhs,
            dual_tol: 1e-10 * cscale,
            iterations: 0,
            pivots_since_refactor: 0,
            prow: Vec::new(),
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::Lower => self.lb[j],
            Status::Upper => self.ub[j],
            Status::Zero | Status::Basic => 0.0,
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lb[j] == self.ub[j]
    }

    fn compute_reduced_costs(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * self.ncols..(i + 1) * self.ncols];
            for (dj, &aij) in self.d.iter_mut().zip(row) {
                if aij != 0.0 {
                    *dj -= cb * aij;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    fn recompute_beta(&mut self) {
        let mut xn = vec![0.0; self.ncols];
        for (j, x) in xn.iter_mut().enumerate() {
            if self.status[j] != Status::Basic {
                *x = self.nonbasic_value(j);
            }
        }
        for i in 0..self.m {
            let row = &self.a[i * self.ncols..(i + 1) * self.ncols];
            let mut v = self.rhs[i];
            for (j, &aij) in row.iter().enumerate() {
                if aij != 0.0 && self.status[j] != Status::Basic {
                    v -= aij * xn[j];
                }
            }
            self.beta[i] = v;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.ncols;
        let inv = 1.0 / self.a[r * n + q];
        self.prow.clear();
        for j in 0..n {
            let v = self.a[r * n + j];
            if v != 0.0 {
                let s = v * inv;
                self.a[r * n + j] = s;
                self.prow.push((j, s));
            }
        }
        self.a[r * n + q] = 1.0;
        self.rhs[r] *= inv;
        let rhs_r = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * n..(i + 1) * n];
            for &(j, s) in &self.prow {
                let v = row[j] - f * s;
                row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[q] = 0.0;
            self.rhs[i] -= f * rhs_r;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &(j, s) in &self.prow {
                self.d[j] -= f * s;
            }
        }
        self.d[q] = 0.0;
        self.pivots_since_refactor += 1;
    }

    /// Rebuilds `B^-1 A` from the original rows for the current basis.
    fn refactor(&mut self) {
        let n = self.ncols;
        self.a.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.orig_rows.iter().enumerate() {
            for &(j, c) in row {
                self.a[i * n + j] = c;
            }
        }
        self.rhs.copy_from_slice(&self.orig_rhs);
        let wanted: Vec<usize> = self.basis.clone();
        let mut assigned = vec![false; self.m];
        let mut new_basis = vec![usize::MAX; self.m];
        for &q in &wanted {
            let mut best = None;
            let mut best_abs = 1e-11;
            for i in 0..self.m {
                if !assigned[i] {
                    let v = self.a[i * n + q].abs();
                    if v > best_abs {
                        best_abs = v;
                        best = Some(i);
                    }
                }
            }
            match best {
                Some(r) => {
                    self.pivot(r, q);
                    assigned[r] = true;
                    new_basis[r] = q;
                }
                None => {
                    self.status[q] = if self.lb[q].is_finite() {
                        Status::Lower
                    } else if self.ub[q].is_finite() {
                        Status::Upper
                    } else {
                        Status::Zero
                    };
                }
            }
        }
        // Rows left without a basic column take their artificial.
        for r in 0..self.m {
            if !assigned[r] {
                let q = self.art_start + r;
                self.pivot(r, q);
                new_basis[r] = q;
                self.status[q] = Status::Basic;
            }
        }
        self.basis = new_basis;
        self.pivots_since_refactor = 0;
        self.recompute_beta();
    }

    fn update_beta_along(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let n = self.ncols;
        for i in 0..self.m {
            let aiq = self.a[i * n + q];
            if aiq != 0.0 {
                self.beta[i] -= aiq * delta;
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let st = self.status[j];
            if st == Status::Basic || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let dir = match st {
                Status::Lower if dj < -self.dual_tol => 1.0,
                Status::Upper if dj > self.dual_tol => -1.0,
                Status::Zero if dj.abs() > self.dual_tol => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Primal simplex on the given cost vector from a primal-feasible basis.
    fn primal(&mut self, cost: &[f64], max_iter: usize) -> Outcome {
        self.compute_reduced_costs(cost);
        let n = self.ncols;
        let mut degenerate = 0usize;
        let mut refreshed = false;
        loop {
            if self.iterations >= max_iter {
                return Outcome::IterationLimit;
            }
            let bland = degenerate > DEGENERATE_STREAK;
            let Some((q, dir)) = self.choose_entering(bland) else {
                if refreshed {
                    return Outcome::Optimal;
                }
                self.compute_reduced_costs(cost);
                refreshed = true;
                continue;
            };
            refreshed = false;
            self.iterations += 1;

            // Harris two-pass ratio test.
            let flip_len = self.ub[q] - self.lb[q];
            let mut bound1 = if flip_len.is_finite() { flip_len } else { f64::INFINITY };
            for i in 0..self.m {
                let alpha = self.a[i * n + q];
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let rate = dir * alpha;
                let b = self.basis[i];
                let t = if rate > 0.0 {
                    if self.lb[b].is_finite() {
                        (self.beta[i] - self.lb[b] + FEAS_TOL) / rate
                    } else {
                        continue;
                    }
                } else if self.ub[b].is_finite() {
                    (self.ub[b] - self.beta[i] + FEAS_TOL) / -rate
                } else {
                    continue;
                };
                // A basic value drifted past its bound gives a negative step; treat as 0.
                bound1 = bound1.min(t.max(0.0));
            }
            if bound1 == f64::INFINITY {
                return Outcome::Unbounded;
            }
            let mut leave: Option<(usize, f64)> = None;
            let mut best_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.a[i * n + q];
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let rate = dir * alpha;
                let b = self.basis[i];
                let t = if rate > 0.0 {
                    if self.lb[b].is_finite() {
                        ((self.beta[i] - self.lb[b]) / rate).max(0.0)
                    } else {
                        continue;
                    }
                } else if self.ub[b].is_finite() {
                    ((self.ub[b] - self.beta[i]) / -rate).max(0.0)
                } else {
                    continue;
                };
                if t <= bound1 {
                    let better = match leave {
                        None => true,
                        Some((r, _)) if bland => self.basis[i] < self.basis[r],
                        Some(_) => alpha.abs() > best_alpha,
                    };
                    if better {
                        best_alpha = alpha.abs();
                        leave = Some((i, t));
                    }
                }
            }

            let flip_wins = flip_len.is_finite()
                && leave.map_or(true, |(_, t)| flip_len <= t);
            if flip_wins {
                self.update_beta_along(q, dir * flip_len);
                self.status[q] = if dir > 0.0 { Status::Upper } else { Status::Lower };
                degenerate = 0;
                continue;
            }
            let Some((r, theta)) = leave else {
                // Only reachable through NaNs in the tableau.
                return Outcome::IterationLimit;
            };
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            let entering_value = self.nonbasic_value(q) + dir * theta;
            self.update_beta_along(q, dir * theta);
            let leaving = self.basis[r];
            let rate = dir * self.a[r * n + q];
            self.status[leaving] = if self.is_fixed(leaving) || rate > 0.0 {
                Status::Lower
            } else {
                Status::Upper
            };
            self.pivot(r, q);
            self.basis[r] = q;
            self.status[q] = Status::Basic;
            self.beta[r] = entering_value;
            if self.pivots_since_refactor > REFACTOR_EVERY {
                self.refactor();
                self.compute_reduced_costs(cost);
            }
        }
    }

    /// Dual simplex from a dual-feasible basis.
    fn dual(&mut self, cost: &[f64], max_iter: usize) -> Outcome {
        self.compute_reduced_costs(cost);
        let n = self.ncols;
        loop {
            if self.iterations >= max_iter {
                return Outcome::IterationLimit;
            }
            let mut r = None;
            let mut worst = FEAS_TOL;
            for i in 0..self.m {
                let b = self.basis[i];
                let viol = (self.lb[b] - self.beta[i]).max(self.beta[i] - self.ub[b]);
                if viol > worst {
                    worst = viol;
                    r = Some(i);
                }
            }
            let Some(r) = r else {
                return Outcome::Optimal;
            };
            self.iterations += 1;
            let b = self.basis[r];
            let below = self.beta[r] < self.lb[b];
            let target = if below { self.lb[b] } else { self.ub[b] };

            let mut enter: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0;
            for j in 0..n {
                let st = self.status[j];
                if st == Status::Basic || self.is_fixed(j) {
                    continue;
                }
                let alpha = self.a[r * n + j];
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                // x_B[r] moves by -alpha * dx_j; it must move towards `target`.
                let dx_sign = if below { -alpha.signum() } else { alpha.signum() };
                let ok = match st {
                    Status::Lower => dx_sign > 0.0,
                    Status::Upper => dx_sign < 0.0,
                    Status::Zero => true,
                    Status::Basic => false,
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / alpha.abs();
                if ratio < best_ratio - 1e-12
                    || (ratio <= best_ratio + 1e-12 && alpha.abs() > best_alpha)
                {
                    best_ratio = ratio;
                    best_alpha = alpha.abs();
                    enter = Some(j);
                }
            }
            let Some(q) = enter else {
                return Outcome::Infeasible;
            };
            let alpha = self.a[r * n + q];
            let dx = (self.beta[r] - target) / alpha;
            let entering_value = self.nonbasic_value(q) + dx;
            self.update_beta_along(q, dx);
            self.status[b] = if below || self.is_fixed(b) {
                Status::Lower
            } else {
                Status::Upper
            };
            self.pivot(r, q);
            self.basis[r] = q;
            self.status[q] = Status::Basic;
            self.beta[r] = entering_value;
            if self.pivots_since_refactor > REFACTOR_EVERY {
                self.refactor();
                self.compute_reduced_costs(cost);
            }
        }
    }

    fn artificial_infeasibility(&self) -> f64 {
        (0..self.m)
            .filter(|&i| self.basis[i] >= self.art_start)
            .map(|i| self.beta[i].abs())
            .sum()
    }

    fn fix_artificials(&mut self) {
        for j in self.art_start..self.ncols {
            self.ub[j] = 0.0;
        }
    }

    /// Two-phase solve from the initial basis.
    pub(crate) fn solve(&mut self, budget: usize) -> Outcome {
        let max_iter = self.iterations + budget;
        if (self.art_start..self.ncols).any(|j| self.status[j] == Status::Basic) {
            let mut phase1 = vec![0.0; self.ncols];
            for c in &mut phase1[self.art_start..] {
                *c = 1.0;
            }
            match self.primal(&phase1, max_iter) {
                Outcome::Optimal => {}
                Outcome::Unbounded => unreachable!("phase 1 is bounded below by zero"),
                other => return other,
            }
            self.recompute_beta();
            let scale = self.orig_rhs.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
            if self.artificial_infeasibility() > 1e-7 * scale {
                return Outcome::Infeasible;
            }
        }
        self.fix_artificials();
        self.finish(max_iter)
    }

    /// Phase 2 followed by accuracy checks; refactors once if the solution drifted.
    fn finish(&mut self, max_iter: usize) -> Outcome {
        let cost = self.cost.clone();
        for attempt in 0..3 {
            let out = self.primal(&cost, max_iter);
            if out != Outcome::Optimal {
                return out;
            }
            self.recompute_beta();
            if self.primal_infeasibility() <= 1e-7 || attempt == 2 {
                return Outcome::Optimal;
            }
            self.refactor();
            if self.primal_infeasibility() > 1e-7 {
                match self.dual(&cost, max_iter) {
                    Outcome::Optimal => {}
                    other => return other,
                }
            }
        }
        Outcome::Optimal
    }

    fn primal_infeasibility(&self) -> f64 {
        (0..self.m)
            .map(|i| {
                let b = self.basis[i];
                (self.lb[b] - self.beta[i]).max(self.beta[i] - self.ub[b]).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Changes the bounds of a structural column, keeping the basis.
    pub(crate) fn set_bounds(&mut self, j: usize, lb: f64, ub: f64) {
        match self.status[j] {
            Status::Basic => {
                self.lb[j] = lb;
                self.ub[j] = ub;
            }
            _ => {
                let old = self.nonbasic_value(j);
                self.lb[j] = lb;
                self.ub[j] = ub;
                self.status[j] = if lb.is_finite() {
                    Status::Lower
                } else if ub.is_finite() {
                    Status::Upper
                } else {
                    Status::Zero
                };
                let new = self.nonbasic_value(j);
                self.update_beta_along(j, new - old);
            }
        }
    }

    /// Re-optimizes after bound changes on an optimal tableau.
    pub(crate) fn reoptimize(&mut self, budget: usize) -> Outcome {
        let max_iter = self.iterations + budget;
        let cost = self.cost.clone();
        match self.dual(&cost, max_iter) {
            Outcome::Optimal => self.finish(max_iter),
            other => other,
        }
    }

    /// Values of all structural columns.
    pub(crate) fn primal_values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_struct];
        for (j, xj) in x.iter_mut().enumerate() {
            if self.status[j] != Status::Basic {
                *xj = self.nonbasic_value(j);
            }
        }
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.n_struct {
                // Basic values are clamped onto their bounds to absorb roundoff.
                x[b] = self.beta[i].max(self.lb[b]).min(self.ub[b]);
            }
        }
        x
    }

    /// Row duals in the internal (minimization) sense: d obj / d rhs.
    pub(crate) fn row_duals(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| -self.row_sign[i] * self.d[self.art_start + i])
            .collect()
    }

    pub(crate) fn reduced_costs(&self) -> Vec<f64> {
        self.d[..self.n_struct].to_vec()
    }

    pub(crate) fn size(&self) -> (usize, usize) {
        (self.m, self.ncols)
    }
}
