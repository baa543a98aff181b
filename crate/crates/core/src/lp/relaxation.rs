//! The phase relaxation.
//!
//! Variables, for jobs `v`, machines `i` (slowest first) and transitive pairs
//! `u < v`:
//!
//! * `x_v_i` fraction of `v` whose primary copy runs on `i`,
//! * `z_u_v_i` whether `v` sits on machine `i` or slower and starts within
//!   `rho` of `u`,
//! * `S_v` start of `v`, and the makespan `C`.
//!
//! Rows, named by family:
//!
//! | row        | constraint |
//! |------------|------------|
//! | `c1_v`     | `C >= S_v + p_v sum_i x_v_i / s_i` |
//! | `c2_u_v`   | `S_v >= S_u + p_u sum_i x_u_i / s_i` |
//! | `c3_u_v_i` | `S_v >= S_u + rho (sum_{j<=i} x_v_j - z_u_v_i)` |
//! | `c4_v_i`   | `rho s_i sum_{j<=i} x_v_j >= sum_u p_u z_u_v_i` (jobs with predecessors) |
//! | `c5_i`     | `C s_i >= sum_v p_v x_v_i` |
//! | `c6_v`     | `sum_i x_v_i = 1` |
//!
//! plus the bounds `S >= 0` and `x, z` in `[0, 1]`.

use std::collections::HashMap;

use super::{LpModel, LpSolution, Sense};
use crate::error::Result;
use crate::instance::{Instance, PredMap};
use crate::schedmodel::{phase_of, Timeline};
use crate::{Schedule, EPS};

/// The relaxation of one instance together with its variable layout.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub model: LpModel,
    pub preds: PredMap,
    n: usize,
    m: usize,
    s_base: usize,
    c_var: usize,
    z_base: HashMap<(usize, usize), usize>,
}

impl Relaxation {
    pub fn x(&self, v: usize, i: usize) -> usize {
        v * self.m + i
    }

    pub fn s(&self, v: usize) -> usize {
        self.s_base + v
    }

    pub fn c(&self) -> usize {
        self.c_var
    }

    pub fn z(&self, u: usize, v: usize, i: usize) -> Option<usize> {
        self.z_base.get(&(u, v)).map(|b| b + i)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Fractional assignment of `v` to every machine.
    pub fn x_row<'a>(&self, values: &'a [f64], v: usize) -> &'a [f64] {
        &values[v * self.m..(v + 1) * self.m]
    }

    pub fn starts(&self, values: &[f64]) -> Vec<f64> {
        values[self.s_base..self.s_base + self.n].to_vec()
    }

    /// Row counts per family, including the bound families `S>=0`, `x` and `z`.
    pub fn family_counts(&self) -> Vec<(String, usize)> {
        let mut out = self.model.families();
        out.push(("bound_S".into(), self.n));
        out.push(("bound_x".into(), self.n * self.m));
        out.push(("bound_z".into(), self.z_base.len() * self.m));
        out
    }
}

pub fn build_relaxation(inst: &Instance) -> Result<Relaxation> {
    let dag = inst.dag()?;
    let preds = PredMap::from_dag(&dag);
    let (n, m, rho) = (inst.n(), inst.m(), inst.rho);
    let p: Vec<f64> = inst.jobs.iter().map(|j| j.size).collect();
    let s: Vec<f64> = inst.machines.iter().map(|mc| mc.speed).collect();

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
    let c_var = model.add_var("C", 0.0, f64::INFINITY);
    let mut z_base = HashMap::new();
    for (u, v) in preds.pairs() {
        z_base.insert((u, v), model.vars.len());
        for i in 0..m {
            model.add_var(format!("z_{u}_{v}_{i}"), 0.0, 1.0);
        }
    }
    model.objective = vec![(c_var, 1.0)];
    let x = |v: usize, i: usize| v * m + i;
    let sv = |v: usize| s_base + v;
    let work = |v: usize| -> Vec<(usize, f64)> { (0..m).map(|i| (x(v, i), -p[v] / s[i])).collect() };

    for v in 0..n {
        let mut t = vec![(c_var, 1.0), (sv(v), -1.0)];
        t.extend(work(v));
        model.add_row(format!("c1_{v}"), t, Sense::Ge, 0.0);
    }
    for (u, v) in preds.pairs() {
        let mut t = vec![(sv(v), 1.0), (sv(u), -1.0)];
        t.extend(work(u));
        model.add_row(format!("c2_{u}_{v}"), t, Sense::Ge, 0.0);
    }
    for (u, v) in preds.pairs() {
        let zb = z_base[&(u, v)];
        for i in 0..m {
            let mut t = vec![(sv(v), 1.0), (sv(u), -1.0)];
            t.extend((0..=i).map(|j| (x(v, j), -rho)));
            t.push((zb + i, rho));
            model.add_row(format!("c3_{u}_{v}_{i}"), t, Sense::Ge, 0.0);
        }
    }
    for v in 0..n {
        if preds.of(v).is_empty() {
            continue;
        }
        for i in 0..m {
            let mut t: Vec<(usize, f64)> = (0..=i).map(|j| (x(v, j), rho * s[i])).collect();
            t.extend(preds.of(v).iter().map(|&u| (z_base[&(u, v)] + i, -p[u])));
            model.add_row(format!("c4_{v}_{i}"), t, Sense::Ge, 0.0);
        }
    }
    for i in 0..m {
        let mut t = vec![(c_var, s[i])];
        t.extend((0..n).map(|v| (x(v, i), -p[v])));
        model.add_row(format!("c5_{i}"), t, Sense::Ge, 0.0);
    }
    for v in 0..n {
        let t = (0..m).map(|i| (x(v, i), 1.0)).collect();
        model.add_row(format!("c6_{v}"), t, Sense::Eq, 1.0);
    }
    Ok(Relaxation {
        model,
        preds,
        n,
        m,
        s_base,
        c_var,
        z_base,
    })
}

/// Maps a valid (possibly duplicated) schedule to a feasible LP point with
/// objective twice its makespan.
///
/// Every start is first delayed by `rho` per elapsed phase, which opens a
/// `rho` gap at each phase boundary. Each job is then pinned to its
/// earliest-finishing copy, and `z_u_v_i` is set for machines at or above
/// that copy's machine when `v` starts less than `rho` after `u`.
pub fn embed_schedule_as_lp(
    inst: &Instance,
    relax: &Relaxation,
    sched: &Schedule,
) -> Result<LpSolution> {
    let tl = Timeline::of_valid(inst, sched)?;
    let rho = inst.rho;
    let shifted = |t: f64| {
        if rho > 0.0 {
            t + phase_of(t, rho) as f64 * rho
        } else {
            t
        }
    };
    let mut values = vec![0.0; relax.model.vars.len()];
    let mut primary = vec![0usize; inst.n()];
    let mut start = vec![0.0; inst.n()];
    for v in 0..inst.n() {
        let mut best: Option<(f64, usize, f64)> = None;
        for &k in &tl.by_job[v] {
            let sl = &tl.slots[k];
            let st = shifted(sl.start);
            let end = st + (sl.end - sl.start);
            if best.map_or(true, |(e, _, _)| end < e - EPS) {
                best = Some((end, sl.machine, st));
            }
        }
        let (_, i, st) = best.expect("valid schedules place every job");
        primary[v] = i;
        start[v] = st;
        values[relax.x(v, i)] = 1.0;
        values[relax.s(v)] = st;
    }
    for (u, v) in relax.preds.pairs() {
        if start[v] - start[u] < rho - EPS {
            for i in primary[v]..inst.m() {
                values[relax.z(u, v, i).expect("pair has z variables")] = 1.0;
            }
        }
    }
    values[relax.c()] = 2.0 * tl.makespan();
    Ok(LpSolution::feasible_point(&relax.model, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{check_lp_feasibility, solve_lp, Backend, LpStatus, SolveOptions, FEAS_TOL};
    use crate::testutil::{sched, unit};

    fn optimum(inst: &Instance) -> f64 {
        let r = build_relaxation(inst).unwrap();
        let sol = solve_lp(&r.model, &SolveOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(check_lp_feasibility(&sol.values, &r.model, FEAS_TOL).is_empty());
        sol.objective
    }

    #[test]
    fn single_job_shape_and_value() {
        let inst = unit(&["a"], 1, 1.0, &[]);
        let r = build_relaxation(&inst).unwrap();
        assert_eq!(r.model.vars.len(), 3);
        let fams: Vec<String> = r.model.families().into_iter().map(|f| f.0).collect();
        assert_eq!(fams, ["c1", "c5", "c6"]);
        assert!((optimum(&inst) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn counts_on_chain_and_diamond() {
        let r = build_relaxation(&unit(&["a", "b"], 2, 1.0, &[("a", "b")])).unwrap();
        let fams = r.model.families();
        assert!(fams.contains(&("c3".into(), 2)));
        assert_eq!(r.z(0, 1, 1), Some(r.model.vars.len() - 1));
        let diamond = unit(
            &["a", "b", "c", "d"],
            2,
            1.0,
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        );
        let r = build_relaxation(&diamond).unwrap();
        let z = r.model.vars.iter().filter(|v| v.name.starts_with("z_")).count();
        assert_eq!(z, 10);
    }

    #[test]
    fn small_optima() {
        assert!((optimum(&unit(&["a", "b"], 2, 1.0, &[])) - 1.0).abs() < 1e-9);
        assert!((optimum(&unit(&["a", "b"], 1, 1.0, &[("a", "b")])) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn backends_match_on_relaxation() {
        let inst = unit(
            &["a", "b", "c", "d"],
            3,
            2.0,
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        );
        let r = build_relaxation(&inst).unwrap();
        let d = solve_lp(&r.model, &SolveOptions { backend: Backend::Dense, ..Default::default() });
        let s = solve_lp(&r.model, &SolveOptions { backend: Backend::Sparse, ..Default::default() });
        assert!((d.objective - s.objective).abs() < 1e-7);
    }

    #[test]
    fn embedding_of_serial_chain() {
        let inst = unit(&["a", "b"], 1, 5.0, &[("a", "b")]);
        let r = build_relaxation(&inst).unwrap();
        let sol = embed_schedule_as_lp(&inst, &r, &sched(&[("a", "m0", 0.0), ("b", "m0", 1.0)]))
            .unwrap();
        assert_eq!(sol.objective, 4.0);
        assert!(check_lp_feasibility(&sol.values, &r.model, FEAS_TOL).is_empty());
        assert_eq!(sol.values[r.z(0, 1, 0).unwrap()], 1.0);

        let one = unit(&["a"], 1, 1.0, &[]);
        let r = build_relaxation(&one).unwrap();
        let sol = embed_schedule_as_lp(&one, &r, &sched(&[("a", "m0", 0.0)])).unwrap();
        assert_eq!((sol.objective, sol.values[r.x(0, 0)], sol.values[r.s(0)]), (2.0, 1.0, 0.0));
    }

    #[test]
    fn embedding_rejects_invalid() {
        let inst = unit(&["a", "b"], 2, 5.0, &[("a", "b")]);
        let r = build_relaxation(&inst).unwrap();
        assert!(embed_schedule_as_lp(&inst, &r, &sched(&[("a", "m0", 0.0), ("b", "m1", 1.0)])).is_err());
    }
}
