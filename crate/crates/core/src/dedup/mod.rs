//! Turning a schedule with duplication into one that runs every job once.
//!
//! The input is cut into delay-length phases. Jobs are attributed to the
//! phase of their first start and, within a phase, bucketed by how many
//! machines start them there (geometric buckets of ratio `1 + mu`). Buckets
//! are processed from the most duplicated down. Each round of a bucket takes
//! its current sinks, joins sinks sharing an in-bucket predecessor, splits
//! that conflict graph into separated balls, and for each ball picks the
//! machine hosting the most of its members; those members run there together
//! with their remaining in-bucket predecessors. Consecutive rounds are
//! separated by `rho`, so cross-machine results are always available.

mod ball;

pub use ball::{ball_grow_decomposition, conflict_graph, Ball, ConflictGraph};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Dag, Instance, PredMap};
use crate::schedmodel::{phase_of, validate_schedule, Placement, Schedule, Timeline};
use crate::EPS;

/// One round: machine lists that run in parallel after a `rho` gap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Round {
    pub phase: usize,
    pub bucket: usize,
    /// `(machine, jobs in execution order)`.
    pub assignments: Vec<(usize, Vec<usize>)>,
    /// Jobs whose input copy on their assigned machine outlives the phase.
    /// They run last on that machine and do not hold back the next round.
    pub marked: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DedupPlan {
    pub rounds: Vec<Round>,
}

/// One ball-growing call and the graph it ran on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub graph: ConflictGraph,
    pub balls: Vec<Ball>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DedupStats {
    pub rounds: usize,
    pub phases: usize,
    /// Nonempty duplication buckets over all phases.
    pub groups: usize,
    /// Buckets that needed more than `2 ceil(log2 n)` rounds.
    pub groups_over_round_bound: usize,
    pub input_makespan: f64,
    pub output_makespan: f64,
    pub ratio: f64,
    /// `ratio / (log2(n)^2 log2(m))`, report-only.
    pub ratio_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DedupOutcome {
    pub schedule: Schedule,
    pub plan: DedupPlan,
    pub stats: DedupStats,
    #[serde(skip)]
    pub decompositions: Vec<Decomposition>,
}

pub fn deduplicate_schedule(inst: &Instance, sched: &Schedule) -> Result<Schedule> {
    Ok(deduplicate_with_stats(inst, sched)?.schedule)
}

/// Bucket width `1 / (2 log2 n)`, or 1 for `n <= 2`.
pub fn bucket_ratio(n: usize) -> f64 {
    if n <= 2 {
        1.0
    } else {
        1.0 / (2.0 * (n as f64).log2())
    }
}

/// Bucket `r` with `(1 + mu)^r <= copies < (1 + mu)^(r + 1)`.
fn bucket_of(copies: usize, mu: f64) -> usize {
    let mut r = 0;
    let mut upper = 1.0 + mu;
    while upper <= copies as f64 + EPS {
        upper *= 1.0 + mu;
        r += 1;
    }
    r
}

pub fn deduplicate_with_stats(inst: &Instance, sched: &Schedule) -> Result<DedupOutcome> {
    let tl = Timeline::of_valid(inst, sched)?;
    let input_makespan = tl.makespan();
    let (schedule, plan, decompositions) = if sched.is_duplication_free() {
        (sched.clone(), DedupPlan::default(), Vec::new())
    } else if !(inst.rho > 0.0) {
        (earliest_copies(inst, &tl), DedupPlan::default(), Vec::new())
    } else {
        let dag = inst.dag()?;
        let preds = PredMap::from_dag(&dag);
        let (plan, decs) = plan_rounds(inst, &dag, &preds, &tl)?;
        (realize(inst, &dag, &plan)?, plan, decs)
    };
    let report = validate_schedule(inst, &schedule);
    if !report.valid || !schedule.is_duplication_free() {
        return Err(Error::Invariant(format!(
            "deduplicated schedule is not a valid single-copy schedule: {report}"
        )));
    }
    let output_makespan = report.makespan;
    let ratio = if input_makespan > 0.0 {
        output_makespan / input_makespan
    } else {
        1.0
    };
    let (n, m) = (inst.n().max(2) as f64, inst.m().max(2) as f64);
    let stats = DedupStats {
        rounds: plan.rounds.len(),
        phases: plan.rounds.iter().map(|r| r.phase + 1).max().unwrap_or(0),
        groups: count_buckets(&plan),
        groups_over_round_bound: over_bound(&plan, inst.n()),
        input_makespan,
        output_makespan,
        ratio,
        ratio_constant: ratio / (n.log2().powi(2) * m.log2()),
    };
    Ok(DedupOutcome {
        schedule,
        plan,
        stats,
        decompositions,
    })
}

fn count_buckets(plan: &DedupPlan) -> usize {
    let mut keys: Vec<(usize, usize)> = plan.rounds.iter().map(|r| (r.phase, r.bucket)).collect();
    keys.dedup();
    keys.len()
}

fn over_bound(plan: &DedupPlan, n: usize) -> usize {
    let bound = 2 * (n.max(2) as f64).log2().ceil() as usize;
    let mut out = 0;
    let mut i = 0;
    while i < plan.rounds.len() {
        let key = (plan.rounds[i].phase, plan.rounds[i].bucket);
        let j = plan.rounds[i..]
            .iter()
            .position(|r| (r.phase, r.bucket) != key)
            .map_or(plan.rounds.len(), |d| i + d);
        if j - i > bound {
            out += 1;
        }
        i = j;
    }
    out
}

/// Without delay every copy's result is usable everywhere at completion, so
/// the earliest-finishing copy of each job can stand in for all of them.
fn earliest_copies(inst: &Instance, tl: &Timeline) -> Schedule {
    let mut keep = Vec::new();
    for copies in &tl.by_job {
        let best = copies
            .iter()
            .copied()
            .min_by(|&a, &b| tl.slots[a].end.total_cmp(&tl.slots[b].end))
            .expect("valid schedules place every job");
        keep.push(tl.slots[best]);
    }
    Timeline::from_slots(inst, keep).to_schedule(inst)
}

fn plan_rounds(
    inst: &Instance,
    dag: &Dag,
    preds: &PredMap,
    tl: &Timeline,
) -> Result<(DedupPlan, Vec<Decomposition>)> {
    let rho = inst.rho;
    let n = inst.n();
    let mu = bucket_ratio(n);
    let first_phase: Vec<usize> = (0..n)
        .map(|v| {
            tl.by_job[v]
                .iter()
                .map(|&k| phase_of(tl.slots[k].start, rho))
                .min()
                .expect("valid schedules place every job")
        })
        .collect();
    // Machines starting `v` in its first phase.
    let hosts: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut h: Vec<usize> = tl.by_job[v]
                .iter()
                .map(|&k| tl.slots[k])
                .filter(|s| phase_of(s.start, rho) == first_phase[v])
                .map(|s| s.machine)
                .collect();
            h.sort_unstable();
            h
        })
        .collect();
    // Copy of `v` on `j` in its first phase runs past the phase end.
    let outlives = |v: usize, j: usize| {
        tl.by_job[v].iter().any(|&k| {
            let s = tl.slots[k];
            s.machine == j
                && phase_of(s.start, rho) == first_phase[v]
                && s.end > (first_phase[v] + 1) as f64 * rho + EPS
        })
    };
    let bucket: Vec<usize> = hosts.iter().map(|h| bucket_of(h.len(), mu)).collect();
    let topo_rank = Dag::rank_of(&dag.topo);

    let phases = first_phase.iter().copied().max().unwrap_or(0) + 1;
    let mut rounds = Vec::new();
    let mut decs = Vec::new();
    for phase in 0..phases {
        let jobs: Vec<usize> = (0..n).filter(|&v| first_phase[v] == phase).collect();
        for &v in &jobs {
            for &u in preds.of(v) {
                if first_phase[u] == phase && bucket[u] < bucket[v] {
                    return Err(Error::Invariant(format!(
                        "job {} has a less duplicated predecessor {} in its phase",
                        inst.jobs[v].id, inst.jobs[u].id
                    )));
                }
            }
        }
        let top = jobs.iter().map(|&v| bucket[v]).max().unwrap_or(0);
        for r in (0..=top).rev() {
            let mut remaining: Vec<usize> = jobs.iter().copied().filter(|&v| bucket[v] == r).collect();
            remaining.sort_by_key(|&v| dag.id_rank[v]);
            while !remaining.is_empty() {
                let h = conflict_graph(preds, &remaining);
                let balls = ball_grow_decomposition(&h);
                let mut by_machine: Vec<(usize, Vec<usize>)> = Vec::new();
                let mut done = vec![false; n];
                for ball in &balls {
                    let center = h.jobs[ball.center];
                    let members: Vec<usize> = ball.members.iter().map(|&k| h.jobs[k]).collect();
                    // Host of the center covering the most members; lowest index on ties.
                    let (machine, _) = hosts[center]
                        .iter()
                        .map(|&j| (j, members.iter().filter(|&&s| hosts[s].contains(&j)).count()))
                        .fold((usize::MAX, 0), |best, c| if c.1 > best.1 { c } else { best });
                    let mut list: Vec<usize> = Vec::new();
                    for &s in members.iter().filter(|&&s| hosts[s].contains(&machine)) {
                        for &u in preds.of(s).iter().chain(std::iter::once(&s)) {
                            if !done[u] && remaining.contains(&u) {
                                done[u] = true;
                                list.push(u);
                            }
                        }
                    }
                    match by_machine.iter_mut().find(|(j, _)| *j == machine) {
                        Some((_, l)) => l.extend(list),
                        None => by_machine.push((machine, list)),
                    }
                }
                let before = remaining.len();
                remaining.retain(|&v| !done[v]);
                if remaining.len() == before {
                    return Err(Error::Invariant("deduplication round placed no job".into()));
                }
                let mut marked = Vec::new();
                for (j, list) in &mut by_machine {
                    list.sort_by_key(|&v| (outlives(v, *j), topo_rank[v]));
                    marked.extend(list.iter().copied().filter(|&v| outlives(v, *j)));
                }
                by_machine.sort_by_key(|(j, _)| *j);
                marked.sort_unstable();
                rounds.push(Round {
                    phase,
                    bucket: r,
                    assignments: by_machine,
                    marked,
                });
                decs.push(Decomposition { graph: h, balls });
            }
        }
    }
    Ok((DedupPlan { rounds }, decs))
}

/// Runs rounds in order. A job starts at the latest of the round start, its
/// machine becoming free, and the availability of each direct predecessor.
/// The next round starts `rho` after every unmarked job of this one ends;
/// marked jobs keep their machine busy past the boundary.
fn realize(inst: &Instance, dag: &Dag, plan: &DedupPlan) -> Result<Schedule> {
    let rho = inst.rho;
    let mut free = vec![0.0f64; inst.m()];
    let mut placed: Vec<Option<(usize, f64)>> = vec![None; inst.n()];
    let mut round_start = 0.0f64;
    let mut placements = Vec::with_capacity(inst.n());
    for round in &plan.rounds {
        let mut round_end = round_start;
        for (machine, jobs) in &round.assignments {
            let speed = inst.machines[*machine].speed;
            for &v in jobs {
                let mut start = round_start.max(free[*machine]);
                for &u in &dag.preds[v] {
                    let Some((j, end)) = placed[u] else {
                        return Err(Error::Invariant(format!(
                            "job {} planned before its predecessor {}",
                            inst.jobs[v].id, inst.jobs[u].id
                        )));
                    };
                    start = start.max(if j == *machine { end } else { end + rho });
                }
                let end = start + inst.jobs[v].size / speed;
                free[*machine] = end;
                placed[v] = Some((*machine, end));
                if round.marked.binary_search(&v).is_err() {
                    round_end = round_end.max(end);
                }
                placements.push(Placement::new(
                    inst.jobs[v].id.clone(),
                    inst.machines[*machine].id.clone(),
                    start,
                ));
            }
        }
        round_start = round_end + rho;
    }
    Ok(Schedule { placements })
}
