//! Alternative relaxations used to compare integrality gaps.
//!
//! Every model minimises the variable `C`. Variable names follow the main
//! relaxation: `x_v_i`, `S_v`, `C`, plus `d_u_v_i` (same-machine),
//! `y_u_v` (same-phase) and `x_v_i_t` (time-indexed, steps `1..=horizon`).
//! Pairs `u < v` range over transitive predecessors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, PredMap};
use crate::lp::{LpModel, Sense};
use crate::EPS;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelaxationKind {
    /// Pairwise same-machine indicators bounded by both assignments.
    SameMachine,
    /// Unit-step start indicators over a fixed horizon. `None` uses twice the
    /// serial time on the fastest machine.
    TimeIndexed { horizon: Option<usize> },
    /// Pairwise same-phase indicators limited by the delay budget.
    SamePhase,
}

impl RelaxationKind {
    pub fn name(&self) -> &'static str {
        match self {
            RelaxationKind::SameMachine => "same_machine",
            RelaxationKind::TimeIndexed { .. } => "time_indexed",
            RelaxationKind::SamePhase => "same_phase",
        }
    }
}

/// Twice the serial time on the fastest machine, rounded up.
pub fn default_horizon(inst: &Instance) -> usize {
    (2.0 * inst.total_size() / inst.fastest_speed() - EPS).ceil().max(1.0) as usize
}

pub fn build_alternate_relaxation(inst: &Instance, kind: RelaxationKind) -> Result<LpModel> {
    let preds = PredMap::from_dag(&inst.dag()?);
    match kind {
        RelaxationKind::SameMachine => Ok(same_machine(inst, &preds)),
        RelaxationKind::SamePhase => Ok(same_phase(inst, &preds)),
        RelaxationKind::TimeIndexed { horizon } => {
            let h = horizon.unwrap_or_else(|| default_horizon(inst));
            time_indexed(inst, &preds, h)
        }
    }
}

/// Shared `x_v_i`, `S_v` and `C` columns plus the assignment rows.
struct Base {
    model: LpModel,
    m: usize,
    s_base: usize,
    c: usize,
}

impl Base {
    fn new(inst: &Instance) -> Base {
        let (n, m) = (inst.n(), inst.m());
        let mut model = LpModel::default();
        for v in 0..n {
            for i in 0..m {
                model.add_var(format!("x_{v}_{i}"), 0.0, 1.0);
            }
        }
        let s_base = model.vars.len();
        for v in 0..n {
            model.add_var(format!("S_{v}"), 0.0, f64::INFINITY);
        }
        let c = model.add_var("C", 0.0, f64::INFINITY);
        model.objective = vec![(c, 1.0)];
        for v in 0..n {
            let t = (0..m).map(|i| (v * m + i, 1.0)).collect();
            model.add_row(format!("assign_{v}"), t, Sense::Eq, 1.0);
        }
        for i in 0..m {
            let mut t = vec![(c, inst.machines[i].speed)];
            t.extend((0..n).map(|v| (v * m + i, -inst.jobs[v].size)));
            model.add_row(format!("load_{i}"), t, Sense::Ge, 0.0);
        }
        Base { model, m, s_base, c }
    }

    fn x(&self, v: usize, i: usize) -> usize {
        v * self.m + i
    }

    fn s(&self, v: usize) -> usize {
        self.s_base + v
    }

    /// `-p_v sum_i x_v_i / s_i`, the fractional processing time of `v`.
    fn work(&self, inst: &Instance, v: usize) -> Vec<(usize, f64)> {
        (0..self.m)
            .map(|i| (self.x(v, i), -inst.jobs[v].size / inst.machines[i].speed))
            .collect()
    }
}

fn same_machine(inst: &Instance, preds: &PredMap) -> LpModel {
    let mut b = Base::new(inst);
    let rho = inst.rho;
    for v in 0..inst.n() {
        let mut t = vec![(b.c, 1.0), (b.s(v), -1.0)];
        t.extend(b.work(inst, v));
        b.model.add_row(format!("finish_{v}"), t, Sense::Ge, 0.0);
    }
    for (u, v) in preds.pairs() {
        let d: Vec<usize> = (0..b.m)
            .map(|i| b.model.add_var(format!("d_{u}_{v}_{i}"), 0.0, 1.0))
            .collect();
        let mut t = vec![(b.s(v), 1.0), (b.s(u), -1.0)];
        t.extend(d.iter().map(|&k| (k, -rho)));
        b.model.add_row(format!("delay_{u}_{v}"), t, Sense::Ge, -rho);
        let mut t = vec![(b.s(v), 1.0), (b.s(u), -1.0)];
        t.extend(b.work(inst, u));
        b.model.add_row(format!("order_{u}_{v}"), t, Sense::Ge, 0.0);
        for (i, &k) in d.iter().enumerate() {
            let (xv, xu) = (b.x(v, i), b.x(u, i));
            b.model.add_row(format!("samev_{u}_{v}_{i}"), vec![(xv, 1.0), (k, -1.0)], Sense::Ge, 0.0);
            b.model.add_row(format!("sameu_{u}_{v}_{i}"), vec![(xu, 1.0), (k, -1.0)], Sense::Ge, 0.0);
        }
    }
    b.model
}

fn same_phase(inst: &Instance, preds: &PredMap) -> LpModel {
    let mut b = Base::new(inst);
    let rho = inst.rho;
    for v in 0..inst.n() {
        b.model.add_row(format!("finish_{v}"), vec![(b.c, 1.0), (b.s(v), -1.0)], Sense::Ge, 0.0);
    }
    let mut y = std::collections::HashMap::new();
    for (u, v) in preds.pairs() {
        let k = b.model.add_var(format!("y_{u}_{v}"), 0.0, 1.0);
        y.insert((u, v), k);
        let t = vec![(b.s(v), 1.0), (b.s(u), -1.0), (k, -rho)];
        b.model.add_row(format!("delay_{u}_{v}"), t, Sense::Ge, -rho);
        let t = vec![(b.s(v), 1.0), (b.s(u), -1.0)];
        b.model.add_row(format!("order_{u}_{v}"), t, Sense::Ge, 0.0);
    }
    for v in 0..inst.n() {
        if preds.of(v).is_empty() {
            continue;
        }
        let mut t: Vec<(usize, f64)> = (0..b.m)
            .map(|i| (b.x(v, i), rho * inst.machines[i].speed))
            .collect();
        t.extend(preds.of(v).iter().map(|&u| (y[&(u, v)], -inst.jobs[u].size)));
        b.model.add_row(format!("budget_{v}"), t, Sense::Ge, 0.0);
    }
    b.model
}

/// Unit-size, unit-speed jobs only: step `t` runs during `[t-1, t)`.
fn time_indexed(inst: &Instance, preds: &PredMap, horizon: usize) -> Result<LpModel> {
    let unit = inst.jobs.iter().all(|j| (j.size - 1.0).abs() <= EPS)
        && inst.machines.iter().all(|mc| (mc.speed - 1.0).abs() <= EPS);
    if !unit {
        return Err(Error::Parameter(
            "the time-indexed relaxation needs unit sizes and unit speeds".into(),
        ));
    }
    if horizon == 0 {
        return Err(Error::Parameter("horizon must be at least 1".into()));
    }
    let (n, m, h) = (inst.n(), inst.m(), horizon);
    let mut model = LpModel::default();
    // x_v_i_t for t in 1..=h lives at idx(v, i, t).
    let idx = |v: usize, i: usize, t: usize| (v * m + i) * h + (t - 1);
    for v in 0..n {
        for i in 0..m {
            for t in 1..=h {
                model.add_var(format!("x_{v}_{i}_{t}"), 0.0, 1.0);
            }
        }
    }
    let c = model.add_var("C", 0.0, f64::INFINITY);
    model.objective = vec![(c, 1.0)];
    for v in 0..n {
        let t = (0..m).flat_map(|i| (1..=h).map(move |t| (idx(v, i, t), 1.0))).collect();
        model.add_row(format!("start_{v}"), t, Sense::Eq, 1.0);
        let mut t = vec![(c, 1.0)];
        t.extend((0..m).flat_map(|i| (1..=h).map(move |t| (idx(v, i, t), -(t as f64)))));
        model.add_row(format!("finish_{v}"), t, Sense::Ge, 0.0);
    }
    for i in 0..m {
        for t in 1..=h {
            let terms = (0..n).map(|v| (idx(v, i, t), 1.0)).collect();
            model.add_row(format!("capacity_{i}_{t}"), terms, Sense::Le, 1.0);
        }
    }
    let window = inst.rho.ceil() as usize;
    for (u, v) in preds.pairs() {
        for i in 0..m {
            for t in 0..h {
                let mut terms = vec![(idx(v, i, t + 1), 1.0)];
                let lo = t.saturating_sub(window).max(1);
                for i2 in (0..m).filter(|&i2| i2 != i) {
                    terms.extend((lo..=t).map(|t2| (idx(u, i2, t2), 1.0)));
                }
                model.add_row(format!("delay_{u}_{v}_{i}_{t}"), terms, Sense::Le, 1.0);
            }
        }
        for t in 0..h {
            let mut terms: Vec<(usize, f64)> = (0..m)
                .flat_map(|i| (1..=t + 1).map(move |t2| (idx(v, i, t2), 1.0)))
                .collect();
            terms.extend((0..m).flat_map(|i| (1..=t).map(move |t2| (idx(u, i, t2), -1.0))));
            model.add_row(format!("order_{u}_{v}_{t}"), terms, Sense::Le, 0.0);
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{check_lp_feasibility, solve_lp, SolveOptions};
    use crate::testutil::unit;

    fn optimum(inst: &Instance, kind: RelaxationKind) -> f64 {
        let model = build_alternate_relaxation(inst, kind).unwrap();
        let sol = solve_lp(&model, &SolveOptions::default());
        assert!(sol.is_optimal(), "{:?}", sol.status);
        sol.objective
    }

    #[test]
    fn single_job_is_one() {
        let inst = unit(&["a"], 1, 3.0, &[]);
        for kind in [
            RelaxationKind::SameMachine,
            RelaxationKind::SamePhase,
            RelaxationKind::TimeIndexed { horizon: None },
        ] {
            assert!((optimum(&inst, kind) - 1.0).abs() < 1e-6, "{}", kind.name());
        }
    }

    #[test]
    fn time_indexed_chain_finishes_at_two() {
        let inst = unit(&["a", "b"], 1, 1.0, &[("a", "b")]);
        let kind = RelaxationKind::TimeIndexed { horizon: Some(2) };
        assert!((optimum(&inst, kind) - 2.0).abs() < 1e-6);
        let model = build_alternate_relaxation(&inst, kind).unwrap();
        let sol = solve_lp(&model, &SolveOptions::default());
        // b cannot start in step 1
        assert!(sol.values[2] < 1e-9 && (sol.values[3] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn time_indexed_rejects_sizes() {
        let mut inst = unit(&["a"], 1, 1.0, &[]);
        inst.jobs[0].size = 2.0;
        let kind = RelaxationKind::TimeIndexed { horizon: None };
        assert!(build_alternate_relaxation(&inst, kind).is_err());
    }

    #[test]
    fn same_machine_spread_point_on_complete_layers() {
        // two levels of two jobs, every lower job after every upper job
        let inst = unit(
            &["a", "b", "c", "d"],
            2,
            2.0,
            &[("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")],
        );
        let model = build_alternate_relaxation(&inst, RelaxationKind::SameMachine).unwrap();
        let level = |v: &str| if v == "S_2" || v == "S_3" { 1.0 } else { 0.0 };
        let values: Vec<f64> = model
            .vars
            .iter()
            .map(|var| match var.name.chars().next() {
                Some('x') | Some('d') => 0.5,
                Some('C') => 2.0,
                _ => level(&var.name),
            })
            .collect();
        assert!(check_lp_feasibility(&values, &model, 1e-9).is_empty());
        assert!(optimum(&inst, RelaxationKind::SameMachine) <= 2.0 + 1e-6);
    }
}
