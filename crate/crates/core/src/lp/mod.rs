//! Sparse linear programs and a deterministic bounded-variable simplex solver.
//!
//! Problems are always minimizations. Each variable carries its own bounds and
//! objective coefficient; constraints are sparse rows with a relation and a
//! right-hand side.

mod lp_format;
mod lu;
mod oracle;
mod simplex;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use lp_format::write_lp_format;
pub use oracle::{MAX_ORACLE_SUBSETS, enumerate_vertices_oracle};
pub use simplex::{PivotRule, SolverOptions, solve, solve_with};

/// Bound tolerance applied to reported variable values.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Maximum row violation accepted in an optimal solution.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("variable index {0} is not declared")]
    UnknownVariable(usize),
    #[error("variable index {var} appears twice in constraint {row}")]
    RepeatedTerm { row: usize, var: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("numeric breakdown at pivot step {step}: {reason}")]
    NumericBreakdown { step: usize, reason: &'static str },
    #[error("pivot limit of {0} steps exceeded")]
    PivotLimit(usize),
    #[error("problem too large for vertex enumeration ({subsets} candidate subsets)")]
    OracleTooLarge { subsets: u128 },
    #[error("feasible region contains a line; vertex enumeration does not apply")]
    OracleNotPointed,
}

/// Handle to a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization problem with sparse rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    names: BTreeMap<String, VarId>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
    ) -> Result<VarId, LpError> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY
        {
            return Err(LpError::NonFinite("variable bounds"));
        }
        if !cost.is_finite() {
            return Err(LpError::NonFinite("objective coefficient"));
        }
        if lower > upper {
            return Err(LpError::InvalidBounds { name, lower, upper });
        }
        if self.names.contains_key(&name) {
            return Err(LpError::DuplicateVariable(name));
        }
        let id = VarId(self.vars.len());
        self.names.insert(name.clone(), id);
        self.vars.push(Variable {
            name,
            lower,
            upper,
            cost,
        });
        Ok(id)
    }

    /// Appends a row and returns its index.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<usize, LpError> {
        let row = self.constraints.len();
        let terms: Vec<(VarId, f64)> = terms.into_iter().collect();
        if !rhs.is_finite() {
            return Err(LpError::NonFinite("right-hand side"));
        }
        let mut seen: Vec<usize> = terms.iter().map(|t| t.0.0).collect();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(LpError::RepeatedTerm { row, var: w[0] });
            }
        }
        for &(v, a) in &terms {
            if v.0 >= self.vars.len() {
                return Err(LpError::UnknownVariable(v.0));
            }
            if !a.is_finite() {
                return Err(LpError::NonFinite("constraint coefficient"));
            }
        }
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
        Ok(row)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    /// Number of variables with a nonzero objective coefficient.
    pub fn objective_terms(&self) -> usize {
        self.vars.iter().filter(|v| v.cost != 0.0).count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(v, x)| v.cost * x).sum()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        let rows = self.constraints.iter().map(|c| c.violation(values));
        bounds.chain(rows).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. `values` follows the problem's variable order and is empty
/// unless the status is optimal; `objective` is `+inf` for infeasible and
/// `-inf` for unbounded problems.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub(crate) fn infeasible(iterations: usize) -> Self {
        Self {
            status: LpStatus::Infeasible,
            values: Vec::new(),
            objective: f64::INFINITY,
            iterations,
        }
    }

    pub(crate) fn unbounded(iterations: usize) -> Self {
        Self {
            status: LpStatus::Unbounded,
            values: Vec::new(),
            objective: f64::NEG_INFINITY,
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn value_by_name(&self, problem: &LpProblem, name: &str) -> Option<f64> {
        problem
            .var_by_name(name)
            .and_then(|v| self.values.get(v.0).copied())
    }

    /// `(name, value)` pairs in variable order.
    pub fn named_values<'a>(
        &'a self,
        problem: &'a LpProblem,
    ) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        problem
            .variables()
            .iter()
            .zip(&self.values)
            .map(|(v, &x)| (v.name.as_str(), x))
    }
}
