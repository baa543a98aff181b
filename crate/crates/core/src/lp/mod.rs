//! Linear programs: a small modelling layer, two simplex backends, a text
//! exporter, and the phase relaxation of the scheduling problem.

mod export;
mod relaxation;
mod simplex;
mod sparse;

pub use export::to_lp_format;
pub use relaxation::{build_relaxation, embed_schedule_as_lp, Relaxation};

use serde::Serialize;

/// Feasibility tolerance used when checking solutions.
pub const FEAS_TOL: f64 = 1e-6;
/// Reduced-cost tolerance of the simplex backends.
pub const OPT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct Var {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Signed slack: negative means violated.
    pub fn residual(&self, values: &[f64]) -> f64 {
        let lhs = self.lhs(values);
        match self.sense {
            Sense::Ge => lhs - self.rhs,
            Sense::Le => self.rhs - lhs,
            Sense::Eq => -(lhs - self.rhs).abs(),
        }
    }

    /// Constraint family, taken from the row name up to the first `_`.
    pub fn family(&self) -> &str {
        self.name.split('_').next().unwrap_or("")
    }
}

/// Minimisation model with bounded variables and sparse rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpModel {
    pub vars: Vec<Var>,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<Row>,
}

impl LpModel {
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.vars.push(Var {
            name: name.into(),
            lower,
            upper,
        });
        self.vars.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        debug_assert!(terms.iter().all(|&(j, _)| j < self.vars.len()));
        self.rows.push(Row {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * values[j]).sum()
    }

    /// Row counts per family, in first-seen order.
    pub fn families(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(f, _)| f == r.family()) {
                Some((_, c)) => *c += 1,
                None => out.push((r.family().to_string(), 1)),
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    /// A feasible point that is not claimed optimal (certificates, embeddings).
    Feasible,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The solver finished but its point violates rows beyond tolerance.
    Inaccurate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
    /// For infeasible models: rows that could not be satisfied together.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub infeasible_rows: Vec<String>,
}

impl LpSolution {
    pub fn feasible_point(model: &LpModel, values: Vec<f64>) -> LpSolution {
        LpSolution {
            status: LpStatus::Feasible,
            objective: model.objective_value(&values),
            values,
            iterations: 0,
            infeasible_rows: Vec::new(),
        }
    }

    pub(crate) fn failed(status: LpStatus, n: usize, iterations: usize) -> LpSolution {
        LpSolution {
            status,
            objective: f64::NAN,
            values: vec![f64::NAN; n],
            iterations,
            infeasible_rows: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Dense tableau for small models, sparse revised simplex otherwise.
    Auto,
    /// Dense tableau primal simplex, largest-coefficient pricing with a Bland
    /// fallback on degenerate stalls.
    Dense,
    /// Sparse revised simplex (`microlp`).
    Sparse,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    pub tol: f64,
    /// Pivot cap; enforced by the dense backend only.
    pub max_iterations: usize,
    pub backend: Backend,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: OPT_TOL,
            max_iterations: 200_000,
            backend: Backend::Auto,
        }
    }
}

/// Tableau entries above which `Backend::Auto` switches to the sparse solver.
const DENSE_LIMIT: usize = 400_000;

pub fn solve_lp(model: &LpModel, opts: &SolveOptions) -> LpSolution {
    match opts.backend {
        Backend::Dense => simplex::solve(model, opts),
        Backend::Sparse => sparse::solve(model),
        Backend::Auto => {
            if simplex::tableau_size(model) <= DENSE_LIMIT {
                simplex::solve(model, opts)
            } else {
                sparse::solve(model)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowViolation {
    pub row: String,
    pub residual: f64,
}

/// Every row or bound whose residual falls below `-tol`. Bounds are reported
/// as `bound:<var>`.
pub fn check_lp_feasibility(values: &[f64], model: &LpModel, tol: f64) -> Vec<RowViolation> {
    let mut out = Vec::new();
    if values.len() != model.vars.len() {
        out.push(RowViolation {
            row: "assignment".into(),
            residual: -(values.len().abs_diff(model.vars.len()) as f64),
        });
        return out;
    }
    for (v, &x) in model.vars.iter().zip(values) {
        let r = if x.is_nan() {
            f64::NEG_INFINITY
        } else {
            (x - v.lower).min(v.upper - x)
        };
        if r < -tol {
            out.push(RowViolation {
                row: format!("bound:{}", v.name),
                residual: r,
            });
        }
    }
    for row in &model.rows {
        let r = row.residual(values);
        if r.is_nan() || r < -tol {
            out.push(RowViolation {
                row: row.name.clone(),
                residual: r,
            });
        }
    }
    out
}
