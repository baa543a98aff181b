//! Event-driven group scheduler with duplication.
//!
//! The clock `T` walks through completion times and completion-plus-delay
//! times. At each value, every group visits its assigned jobs; a job is placed
//! on the least-loaded machine of its group together with every predecessor
//! whose result is not yet usable there, provided
//!
//! * (a) those predecessors weigh at most `8 rho gamma_k`,
//! * (b) at least a `1/eta` share of the bundle is new work, and
//! * (c) every job in the bundle is assigned to group `k` or faster.
//!
//! The bundle runs back to back in topological order from the machine's
//! frontier. Both bookkeeping invariants (frontier equals last completion,
//! clock visits exactly the event times) are shadow-checked while running.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grouping::GroupAssignment;
use crate::instance::{Instance, PredMap};
use crate::schedmodel::{Check, Placement, Schedule, Timeline};
use crate::EPS;

/// `max(2, ln rho / ln ln rho)`, using 2 whenever `rho <= e^e`.
pub fn default_eta(rho: f64) -> f64 {
    if rho <= std::f64::consts::E.exp() {
        return 2.0;
    }
    (rho.ln() / rho.ln().ln()).max(2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Place {
        job: String,
        machine: String,
        start: f64,
        end: f64,
        /// Job whose check produced the bundle.
        target: String,
    },
    Advance {
        clock: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SchedulerStats {
    pub iterations: usize,
    pub placements: usize,
    pub bundles: usize,
    /// Clock values in the order visited.
    pub clocks: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchedulerRun {
    pub schedule: Schedule,
    pub stats: SchedulerStats,
    pub trace: Vec<TraceEvent>,
}

pub fn run_group_scheduler(inst: &Instance, a: &GroupAssignment, eta: f64) -> Result<Schedule> {
    Ok(run_group_scheduler_traced(inst, a, eta, false)?.schedule)
}

struct State<'a> {
    inst: &'a Instance,
    preds: &'a PredMap,
    clock: f64,
    frontier: Vec<f64>,
    /// Shadow of the frontier: latest completion on each machine.
    last_end: Vec<f64>,
    /// Completion of `v` on machine `i`, if placed there.
    end_on: Vec<Vec<Option<f64>>>,
    first_end: Vec<f64>,
    placed: Vec<bool>,
    slots: Vec<(usize, usize, f64)>,
    events: Vec<f64>,
}

impl State<'_> {
    /// The bundle for `v` on machine `i`: `v` and its predecessors whose
    /// result is not usable on `i` at the frontier.
    fn bundle(&self, v: usize, i: usize) -> Vec<usize> {
        let t = self.frontier[i];
        let rho = self.inst.rho;
        let usable = |u: usize| {
            self.end_on[u][i].is_some_and(|e| e <= t + EPS) || self.first_end[u] <= t - rho + EPS
        };
        self.preds
            .of(v)
            .iter()
            .copied()
            .chain(std::iter::once(v))
            .filter(|&u| !usable(u))
            .collect()
    }

    fn check_frontier(&self, i: usize) -> Result<()> {
        let want = self.clock.max(self.last_end[i]);
        if (self.frontier[i] - want).abs() > EPS {
            return Err(Error::Invariant(format!(
                "frontier of machine {i} is {} but latest completion is {want}",
                self.frontier[i]
            )));
        }
        Ok(())
    }
}

pub fn run_group_scheduler_traced(
    inst: &Instance,
    a: &GroupAssignment,
    eta: f64,
    trace: bool,
) -> Result<SchedulerRun> {
    if !(eta >= 1.0) {
        return Err(Error::Parameter(format!("eta must be at least 1, got {eta}")));
    }
    let (n, m) = (inst.n(), inst.m());
    if a.kappa.len() != n {
        return Err(Error::Parameter("assignment does not cover every job".into()));
    }
    let dag = inst.dag()?;
    let preds = PredMap::from_dag(&dag);
    let order = dag.topo_order_by(|v| (a.band[v], dag.id_rank[v]));
    let rank = crate::instance::Dag::rank_of(&order);
    let size: Vec<f64> = inst.jobs.iter().map(|j| j.size).collect();
    let mut st = State {
        inst,
        preds: &preds,
        clock: 0.0,
        frontier: vec![0.0; m],
        last_end: vec![0.0; m],
        end_on: vec![vec![None; m]; n],
        first_end: vec![f64::INFINITY; n],
        placed: vec![false; n],
        slots: Vec::new(),
        events: vec![0.0],
    };
    let mut stats = SchedulerStats::default();
    let mut events = Vec::new();
    let mut remaining = n;
    let by_group: Vec<Vec<usize>> = a
        .groups
        .iter()
        .map(|g| {
            let mut jobs: Vec<usize> = a.jobs_in_group(g.index).collect();
            jobs.sort_by_key(|&v| rank[v]);
            jobs
        })
        .collect();

    while remaining > 0 {
        stats.iterations += 1;
        stats.clocks.push(st.clock);
        for g in &a.groups {
            for &v in &by_group[g.index] {
                // A placed job's bundle is all placed work, so (b) cannot hold.
                if st.placed[v] {
                    continue;
                }
                let i = *g
                    .machines
                    .iter()
                    .min_by(|&&x, &&y| st.frontier[x].total_cmp(&st.frontier[y]).then(x.cmp(&y)))
                    .expect("groups are nonempty");
                let mut bundle = st.bundle(v, i);
                let total: f64 = bundle.iter().map(|&u| size[u]).sum();
                let fresh: f64 = bundle.iter().filter(|&&u| !st.placed[u]).map(|&u| size[u]).sum();
                let cond_a = total - size[v] <= 8.0 * inst.rho * g.gamma + EPS;
                let cond_b = fresh >= total / eta - EPS;
                let cond_c = bundle.iter().all(|&u| a.kappa[u] >= g.index);
                if !(cond_a && cond_b && cond_c) {
                    continue;
                }
                bundle.sort_by_key(|&u| rank[u]);
                stats.bundles += 1;
                let speed = inst.machines[i].speed;
                for &u in &bundle {
                    let start = st.frontier[i];
                    let end = start + size[u] / speed;
                    st.slots.push((u, i, start));
                    st.end_on[u][i] = Some(end);
                    st.first_end[u] = st.first_end[u].min(end);
                    st.frontier[i] = end;
                    st.last_end[i] = st.last_end[i].max(end);
                    st.events.push(end);
                    st.events.push(end + inst.rho);
                    st.check_frontier(i)?;
                    if !st.placed[u] {
                        st.placed[u] = true;
                        remaining -= 1;
                    }
                    if trace {
                        events.push(TraceEvent::Place {
                            job: inst.jobs[u].id.clone(),
                            machine: inst.machines[i].id.clone(),
                            start,
                            end,
                            target: inst.jobs[v].id.clone(),
                        });
                    }
                }
            }
        }
        if remaining == 0 {
            break;
        }
        let next = st
            .events
            .iter()
            .copied()
            .filter(|&t| t > st.clock + EPS)
            .fold(f64::INFINITY, f64::min);
        if !next.is_finite() {
            return Err(Error::Stalled {
                clock: st.clock,
                remaining,
            });
        }
        st.clock = next;
        for i in 0..m {
            st.frontier[i] = st.frontier[i].max(next);
            st.check_frontier(i)?;
        }
        if trace {
            events.push(TraceEvent::Advance { clock: next });
        }
    }
    check_clock_sequence(&st.events, &stats.clocks)?;
    stats.placements = st.slots.len();
    let schedule = Schedule {
        placements: st
            .slots
            .iter()
            .map(|&(u, i, s)| Placement::new(inst.jobs[u].id.clone(), inst.machines[i].id.clone(), s))
            .collect(),
    };
    Ok(SchedulerRun {
        schedule,
        stats,
        trace: events,
    })
}

/// The visited clock values must be exactly the smallest distinct event
/// times of the finished run, in order.
fn check_clock_sequence(events: &[f64], clocks: &[f64]) -> Result<()> {
    let mut all = events.to_vec();
    all.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        if distinct.last().map_or(true, |&l| t > l + EPS) {
            distinct.push(t);
        }
    }
    for (k, (&c, &e)) in clocks.iter().zip(&distinct).enumerate() {
        if (c - e).abs() > EPS {
            return Err(Error::Invariant(format!(
                "clock step {k} visited {c} but event {k} is {e}"
            )));
        }
    }
    if clocks.len() > distinct.len() {
        return Err(Error::Invariant("clock visited a time outside the event set".into()));
    }
    Ok(())
}

/// For every group `k`, work placed on groups `k` and faster is at most
/// `eta` times the size of jobs assigned there. Reports the tightest group.
pub fn eta_load_check(inst: &Instance, a: &GroupAssignment, tl: &Timeline, eta: f64) -> Check {
    let mut placed = vec![0.0; a.groups.len()];
    let group_of = crate::grouping::group_of_machine(&a.groups, inst.m());
    for s in &tl.slots {
        placed[group_of[s.machine]] += inst.jobs[s.job].size;
    }
    let mut assigned = vec![0.0; a.groups.len()];
    for (v, &k) in a.kappa.iter().enumerate() {
        assigned[k] += inst.jobs[v].size;
    }
    let mut worst = (0.0, 0.0);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for k in (0..a.groups.len()).rev() {
        lhs += placed[k];
        rhs += assigned[k];
        if k == a.groups.len() - 1 || eta * rhs - lhs < worst.1 - worst.0 {
            worst = (lhs, eta * rhs);
        }
    }
    Check::asserted("eta_load", worst.0, worst.1)
}

/// Copies running longer than `8 rho` must sit in their job's assigned
/// group. The value counts offending copies.
pub fn long_copy_check(inst: &Instance, a: &GroupAssignment, tl: &Timeline) -> Check {
    let group_of = crate::grouping::group_of_machine(&a.groups, inst.m());
    let bad = tl
        .slots
        .iter()
        .filter(|s| s.end - s.start > 8.0 * inst.rho + EPS && group_of[s.machine] != a.kappa[s.job])
        .count();
    Check::asserted("long_copy_group", bad as f64, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::{assign_job_groups, partition_machine_groups};
    use crate::lp::{build_relaxation, solve_lp, SolveOptions};
    use crate::schedmodel::validate_schedule;
    use crate::testutil::unit;

    fn assignment(inst: &Instance) -> GroupAssignment {
        let r = build_relaxation(inst).unwrap();
        let sol = solve_lp(&r.model, &SolveOptions::default());
        assign_job_groups(inst, &r, &sol, partition_machine_groups(inst)).unwrap()
    }

    #[test]
    fn eta_values() {
        let e = std::f64::consts::E;
        assert!((default_eta(e.powf(e * e)) - e * e / 2.0).abs() < 1e-9);
        assert_eq!(default_eta(2.0), 2.0);
        assert_eq!(default_eta(0.0), 2.0);
        let big = 1e6f64;
        assert!((default_eta(big) - big.ln() / big.ln().ln()).abs() < 1e-12);
        assert!((default_eta(big) - 5.261).abs() < 1e-3);
    }

    #[test]
    fn independent_jobs_on_one_machine_run_serially() {
        let inst = unit(&["a", "b", "c", "d"], 1, 3.0, &[]);
        let s = run_group_scheduler(&inst, &assignment(&inst), 2.0).unwrap();
        let r = validate_schedule(&inst, &s);
        assert!(r.valid);
        assert!((r.makespan - 4.0).abs() < 1e-9);
    }

    #[test]
    fn chain_with_large_delay_stays_on_one_machine() {
        let inst = unit(&["a", "b"], 2, 10.0, &[("a", "b")]);
        let s = run_group_scheduler(&inst, &assignment(&inst), 2.0).unwrap();
        let r = validate_schedule(&inst, &s);
        assert!(r.valid);
        assert!((r.makespan - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_eta() {
        let inst = unit(&["a"], 1, 1.0, &[]);
        assert!(run_group_scheduler(&inst, &assignment(&inst), 0.5).is_err());
    }

    #[test]
    fn trace_has_one_place_event_per_copy() {
        let inst = unit(&["a", "b", "c"], 2, 1.0, &[("a", "b"), ("a", "c")]);
        let run = run_group_scheduler_traced(&inst, &assignment(&inst), 2.0, true).unwrap();
        let places = run
            .trace
            .iter()
            .filter(|e| matches!(e, TraceEvent::Place { .. }))
            .count();
        assert_eq!(places, run.schedule.placements.len());
        assert!(validate_schedule(&inst, &run.schedule).valid);
    }
}
