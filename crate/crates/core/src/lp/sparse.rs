//! Sparse revised simplex backend built on `microlp`.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome, Variable};

use super::{check_lp_feasibility, LpModel, LpSolution, LpStatus, Sense, FEAS_TOL};

const ELASTIC_TOL: f64 = 1e-7;
/// Re-solves allowed after tightening violated rows.
const TIGHTEN_ROUNDS: usize = 3;

fn merged(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut t = terms.to_vec();
    t.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
    for (j, a) in t {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out
}

fn op(sense: Sense) -> ComparisonOp {
    match sense {
        Sense::Le => ComparisonOp::Le,
        Sense::Ge => ComparisonOp::Ge,
        Sense::Eq => ComparisonOp::Eq,
    }
}

fn problem(model: &LpModel, elastic: bool) -> (Problem, Vec<Variable>, Vec<Vec<Variable>>) {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let mut cost = vec![0.0; model.vars.len()];
    if !elastic {
        for &(j, c) in &model.objective {
            cost[j] += c;
        }
    }
    let vars: Vec<Variable> = model
        .vars
        .iter()
        .zip(&cost)
        .map(|(v, &c)| p.add_var(c, (v.lower, v.upper)))
        .collect();
    let mut slack = Vec::new();
    for row in &model.rows {
        let terms = merged(&row.terms);
        let scale = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
        let scale = if scale > 0.0 { 1.0 / scale } else { 1.0 };
        let mut expr: Vec<(Variable, f64)> = terms
            .into_iter()
            .map(|(j, a)| (vars[j], a * scale))
            .collect();
        let mut own = Vec::new();
        if elastic {
            if row.sense != Sense::Le {
                let e = p.add_var(1.0, (0.0, f64::INFINITY));
                expr.push((e, 1.0));
                own.push(e);
            }
            if row.sense != Sense::Ge {
                let e = p.add_var(1.0, (0.0, f64::INFINITY));
                expr.push((e, -1.0));
                own.push(e);
            }
        }
        slack.push(own);
        p.add_constraint(expr, op(row.sense), row.rhs * scale);
    }
    (p, vars, slack)
}

/// Solves with `microlp`. Rows the returned point violates beyond a tenth of
/// the feasibility tolerance are tightened by their violation and the model
/// is solved again, a few times at most. Infeasible models are re-solved in
/// elastic form (every row may be violated at unit cost) to name the
/// conflicting rows.
pub(crate) fn solve(model: &LpModel) -> LpSolution {
    let mut work = model.clone();
    let mut last = None;
    for _ in 0..=TIGHTEN_ROUNDS {
        let sol = solve_once(&work);
        if sol.status != LpStatus::Optimal {
            return if last.is_some() { inaccurate(model, last) } else { sol };
        }
        let target = FEAS_TOL / 10.0;
        let mut tightened = false;
        for (row, orig) in work.rows.iter_mut().zip(&model.rows) {
            let r = orig.residual(&sol.values);
            if r >= -target {
                continue;
            }
            match row.sense {
                Sense::Ge => row.rhs += target - r,
                Sense::Le => row.rhs -= target - r,
                Sense::Eq => continue,
            }
            tightened = true;
        }
        if check_lp_feasibility(&sol.values, model, target).is_empty() {
            return sol;
        }
        last = Some(sol);
        if !tightened {
            break;
        }
    }
    inaccurate(model, last)
}

/// Best effort point: optimal if it meets the tolerance, else flagged.
fn inaccurate(model: &LpModel, last: Option<LpSolution>) -> LpSolution {
    let mut sol = last.expect("at least one optimal round");
    if !check_lp_feasibility(&sol.values, model, FEAS_TOL).is_empty() {
        sol.status = LpStatus::Inaccurate;
    }
    sol
}

fn solve_once(model: &LpModel) -> LpSolution {
    let (p, vars, _) = problem(model, false);
    match p.solve() {
        Ok(SolveOutcome::Solution(sol)) => {
            let values: Vec<f64> = vars
                .iter()
                .zip(&model.vars)
                .map(|(&v, var)| sol[v].clamp(var.lower, var.upper))
                .collect();
            LpSolution {
                status: LpStatus::Optimal,
                objective: model.objective_value(&values),
                values,
                iterations: 0,
                infeasible_rows: Vec::new(),
            }
        }
        Err(microlp::Error::Unbounded) => LpSolution::failed(LpStatus::Unbounded, model.vars.len(), 0),
        Err(microlp::Error::Infeasible) => {
            let mut out = LpSolution::failed(LpStatus::Infeasible, model.vars.len(), 0);
            let (p, _, slack) = problem(model, true);
            if let Ok(SolveOutcome::Solution(sol)) = p.solve() {
                out.infeasible_rows = model
                    .rows
                    .iter()
                    .zip(&slack)
                    .filter(|(_, es)| es.iter().any(|&e| sol[e] > ELASTIC_TOL))
                    .map(|(r, _)| r.name.clone())
                    .collect();
            }
            out
        }
        Ok(SolveOutcome::Interrupted(_)) => {
            LpSolution::failed(LpStatus::IterationLimit, model.vars.len(), 0)
        }
        Err(_) => LpSolution::failed(LpStatus::Inaccurate, model.vars.len(), 0),
    }
}
