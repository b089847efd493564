//! Mechanical LP dual.
//!
//! For `min c'x` subject to rows `a_i x {<=,>=,=} b_i` and bounds
//! `l <= x <= u`, the dual is
//!
//! ```text
//! max  sum_i b_i y_i + sum_j l_j r_j - sum_j u_j s_j
//! s.t. sum_i a_ij y_i + r_j - s_j = c_j      for every primal column j
//!      y_i <= 0 (<= rows), y_i >= 0 (>= rows), y_i free (= rows)
//!      r_j >= 0 when l_j is finite, s_j >= 0 when u_j is finite
//! ```
//!
//! A zero lower bound contributes nothing to the objective, so its `r_j`
//! is folded into the column row as `<=`. Upper-bound duals `s_j` are the
//! nonnegative multipliers that capacity-style bounds price.

use super::model::{Model, RowId, RowSense, Sense, VarId};

/// Correspondence between a primal model and its dual.
#[derive(Clone, Debug)]
pub struct DualMap {
    /// Dual variable of each primal row.
    pub row_dual: Vec<VarId>,
    /// Dual variable of each finite, nonzero primal lower bound.
    pub lower_dual: Vec<Option<VarId>>,
    /// Dual variable of each finite primal upper bound.
    pub upper_dual: Vec<Option<VarId>>,
    /// Dual constraint generated by each primal column.
    pub column_row: Vec<RowId>,
}

/// Builds the dual of a minimization LP. Dual variable and row names are
/// the primal names prefixed with `dual:`, `lo:`, `up:` and `col:`.
pub fn dualize(primal: &Model) -> (Model, DualMap) {
    assert_eq!(primal.sense, Sense::Minimize, "dualize expects a minimization model");
    let mut dual = Model::new(Sense::Maximize);

    let row_dual: Vec<VarId> = primal
        .rows()
        .iter()
        .map(|r| {
            let (lb, ub) = match r.sense {
                RowSense::Le => (f64::NEG_INFINITY, 0.0),
                RowSense::Ge => (0.0, f64::INFINITY),
                RowSense::Eq => (f64::NEG_INFINITY, f64::INFINITY),
            };
            dual.add_var(format!("dual:{}", r.name), lb, ub, r.rhs)
        })
        .collect();

    let mut columns: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); primal.num_vars()];
    for (i, r) in primal.rows().iter().enumerate() {
        for &(v, c) in &r.terms {
            columns[v.0].push((row_dual[i], c));
        }
    }

    let mut lower_dual = Vec::with_capacity(primal.num_vars());
    let mut upper_dual = Vec::with_capacity(primal.num_vars());
    let mut column_row = Vec::with_capacity(primal.num_vars());
    for (j, v) in primal.vars().iter().enumerate() {
        let mut terms = std::mem::take(&mut columns[j]);
        let lower_folds = v.lb == 0.0;
        let lo = if v.lb.is_finite() && !lower_folds {
            let r = dual.add_var(format!("lo:{}", v.name), 0.0, f64::INFINITY, v.lb);
            terms.push((r, 1.0));
            Some(r)
        } else {
            None
        };
        let up = if v.ub.is_finite() {
            let s = dual.add_var(format!("up:{}", v.name), 0.0, f64::INFINITY, -v.ub);
            terms.push((s, -1.0));
            Some(s)
        } else {
            None
        };
        let sense = if lower_folds { RowSense::Le } else { RowSense::Eq };
        column_row.push(dual.add_row(format!("col:{}", v.name), terms, sense, v.obj));
        lower_dual.push(lo);
        upper_dual.push(up);
    }

    (
        dual,
        DualMap {
            row_dual,
            lower_dual,
            upper_dual,
            column_row,
        },
    )
}
