//! Solver-independent linear and mixed-binary model representation.

use std::fmt;

/// Index of a variable inside a [`Model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Index of a constraint row inside a [`Model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub kind: VarKind,
    pub obj: f64,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Problems reported by [`Model::check`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("variable `{0}` has a non-finite objective coefficient")]
    NonFiniteObjective(String),
    #[error("variable `{name}` has inconsistent bounds [{lb}, {ub}]")]
    BadBounds { name: String, lb: f64, ub: f64 },
    #[error("constraint `{0}` has a non-finite coefficient or right-hand side")]
    NonFiniteRow(String),
    #[error("constraint `{row}` references undeclared variable index {var}")]
    UnknownVariable { row: String, var: usize },
}

/// A linear model: variables with bounds and kinds, linear rows, and a
/// linear objective.
#[derive(Clone, Debug)]
pub struct Model {
    pub sense: Sense,
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl Model {
    pub fn new(sense: Sense) -> Self {
        Model {
            sense,
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, obj: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lb,
            ub,
            kind: VarKind::Continuous,
            obj,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lb: 0.0,
            ub: 1.0,
            kind: VarKind::Binary,
            obj,
        });
        VarId(self.vars.len() - 1)
    }

    /// Adds a row; repeated variables in `terms` are merged.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> RowId {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, c) in terms {
            if let Some(slot) = merged.iter_mut().find(|(w, _)| *w == v) {
                slot.1 += c;
            } else {
                merged.push((v, c));
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.rows.push(Constraint {
            name: name.into(),
            terms: merged,
            sense,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn var_mut(&mut self, id: VarId) -> &mut Variable {
        &mut self.vars[id.0]
    }

    pub fn row(&self, id: RowId) -> &Constraint {
        &self.rows[id.0]
    }

    pub fn set_obj(&mut self, id: VarId, coeff: f64) {
        self.vars[id.0].obj = coeff;
    }

    pub fn set_bounds(&mut self, id: VarId, lb: f64, ub: f64) {
        self.vars[id.0].lb = lb;
        self.vars[id.0].ub = ub;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn has_binaries(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn find_row(&self, name: &str) -> Option<RowId> {
        self.rows.iter().position(|r| r.name == name).map(RowId)
    }

    /// Rows whose name starts with `prefix`.
    pub fn count_rows_with_prefix(&self, prefix: &str) -> usize {
        self.rows.iter().filter(|r| r.name.starts_with(prefix)).count()
    }

    pub fn count_vars_with_prefix(&self, prefix: &str) -> usize {
        self.vars.iter().filter(|v| v.name.starts_with(prefix)).count()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.obj * xi).sum()
    }

    pub fn row_activity(&self, row: RowId, x: &[f64]) -> f64 {
        self.rows[row.0].terms.iter().map(|&(v, c)| c * x[v.0]).sum()
    }

    /// Largest violation of any row or bound at point `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lb - xi).max(xi - v.ub);
        }
        for (i, r) in self.rows.iter().enumerate() {
            let act = self.row_activity(RowId(i), x);
            let viol = match r.sense {
                RowSense::Le => act - r.rhs,
                RowSense::Ge => r.rhs - act,
                RowSense::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn check(&self) -> Result<(), ModelError> {
        for v in &self.vars {
            if !v.obj.is_finite() {
                return Err(ModelError::NonFiniteObjective(v.name.clone()));
            }
            if v.lb.is_nan() || v.ub.is_nan() || v.lb > v.ub || v.lb == f64::INFINITY || v.ub == f64::NEG_INFINITY {
                return Err(ModelError::BadBounds {
                    name: v.name.clone(),
                    lb: v.lb,
                    ub: v.ub,
                });
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() || r.terms.iter().any(|(_, c)| !c.is_finite()) {
                return Err(ModelError::NonFiniteRow(r.name.clone()));
            }
            if let Some(&(v, _)) = r.terms.iter().find(|(v, _)| v.0 >= self.vars.len()) {
                return Err(ModelError::UnknownVariable {
                    row: r.name.clone(),
                    var: v.0,
                });
            }
        }
        Ok(())
    }
}
