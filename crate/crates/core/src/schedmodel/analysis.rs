//! Chain construction and phase classification over a finished schedule.

use serde::Serialize;

use super::{Schedule, Slot, Timeline};
use crate::error::{Error, Result};
use crate::grouping::{partition_machine_groups, MachineGroup};
use crate::instance::{Instance, PredMap};
use crate::EPS;

/// Phase index of time `t`; phases are `[k*rho, (k+1)*rho)`.
pub fn phase_of(t: f64, rho: f64) -> usize {
    ((t + EPS) / rho).floor().max(0.0) as usize
}

pub(crate) fn is_long(duration: f64, rho: f64) -> bool {
    duration > 8.0 * rho + EPS
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainLink {
    pub job: String,
    pub machine: String,
    pub start: f64,
    pub end: f64,
    #[serde(skip)]
    pub(crate) slot: Slot,
}

/// Backward chain of long copies, plus the job sets between consecutive
/// links. `sets[0]` holds jobs finishing after the first link; `sets[q]`
/// holds predecessors of link `q` finishing in its window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Chain {
    pub links: Vec<ChainLink>,
    pub sets: Vec<Vec<String>>,
}

fn better(a: &Slot, b: &Slot) -> bool {
    // later completion wins; ties go to the smaller job, then machine
    a.end > b.end + EPS
        || ((a.end - b.end).abs() <= EPS && (a.job, a.machine) < (b.job, b.machine))
}

pub fn build_chain(inst: &Instance, sched: &Schedule) -> Result<Chain> {
    let tl = Timeline::of_valid(inst, sched)?;
    let preds = PredMap::from_dag(&inst.dag()?);
    Ok(chain_of(inst, &tl, &preds))
}

pub(crate) fn chain_of(inst: &Instance, tl: &Timeline, preds: &PredMap) -> Chain {
    let long: Vec<&Slot> = tl
        .slots
        .iter()
        .filter(|s| is_long(s.end - s.start, inst.rho))
        .collect();
    let pick = |keep: &dyn Fn(&Slot) -> bool| -> Option<Slot> {
        let mut best: Option<&Slot> = None;
        for s in long.iter().copied().filter(|s| keep(s)) {
            if best.map_or(true, |b| better(s, b)) {
                best = Some(s);
            }
        }
        best.copied()
    };

    let mut links: Vec<Slot> = Vec::new();
    let mut cur = pick(&|_| true);
    while let Some(c) = cur {
        links.push(c);
        cur = pick(&|s| preds.precedes(s.job, c.job));
    }

    let n = inst.n();
    let completes_in = |u: usize, lo: f64, hi: f64| {
        tl.by_job[u].iter().any(|&k| {
            let e = tl.slots[k].end;
            e >= lo - EPS && e <= hi + EPS
        })
    };
    let ids = |vs: Vec<usize>| vs.into_iter().map(|v| inst.jobs[v].id.clone()).collect();
    let mut sets: Vec<Vec<String>> = Vec::with_capacity(links.len() + 1);
    match links.first() {
        None => sets.push(ids((0..n).collect())),
        Some(c1) => sets.push(ids(
            (0..n)
                .filter(|&u| completes_in(u, c1.end, f64::INFINITY))
                .collect(),
        )),
    }
    for q in 0..links.len() {
        let c = links[q];
        let members: Vec<usize> = match links.get(q + 1) {
            Some(next) => (0..n)
                .filter(|&u| {
                    (u == c.job || preds.precedes(u, c.job))
                        && completes_in(u, next.end, c.start)
                })
                .collect(),
            None => preds.of(c.job).to_vec(),
        };
        sets.push(ids(members));
    }
    let links = links
        .into_iter()
        .map(|s| ChainLink {
            job: inst.jobs[s.job].id.clone(),
            machine: inst.machines[s.machine].id.clone(),
            start: s.start,
            end: s.end,
            slot: s,
        })
        .collect();
    Chain { links, sets }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseClass {
    Chain,
    Load,
    Height,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseSummary {
    pub classes: Vec<PhaseClass>,
    pub chain: usize,
    pub load: usize,
    pub height: usize,
}

/// Classifies each phase up to the makespan. A machine is busy in a phase
/// when it executes for at least `rho / 2` of it. Chain phases carry at least
/// `rho / 2` of chain-link execution; load phases have a fully busy group;
/// everything else is a height phase.
pub fn classify_phases(inst: &Instance, sched: &Schedule, chain: &Chain) -> Result<PhaseSummary> {
    let tl = Timeline::of_valid(inst, sched)?;
    let groups = partition_machine_groups(inst);
    classify(inst, &tl, chain, &groups)
}

pub(crate) fn classify(
    inst: &Instance,
    tl: &Timeline,
    chain: &Chain,
    groups: &[MachineGroup],
) -> Result<PhaseSummary> {
    let rho = inst.rho;
    if rho <= 0.0 {
        return Err(Error::Parameter(
            "phases are undefined without a positive delay".into(),
        ));
    }
    let mk = tl.makespan();
    let phases = if mk <= EPS {
        0
    } else {
        ((mk - EPS) / rho).floor() as usize + 1
    };
    let mut busy = vec![vec![0.0f64; inst.m()]; phases];
    let mut chain_time = vec![0.0f64; phases];
    let spread = |s: &Slot, sink: &mut dyn FnMut(usize, f64)| {
        if s.end <= s.start {
            return;
        }
        let first = phase_of(s.start, rho).min(phases.saturating_sub(1));
        let mut tau = first;
        while tau < phases {
            let lo = tau as f64 * rho;
            let hi = lo + rho;
            let overlap = s.end.min(hi) - s.start.max(lo);
            if overlap > 0.0 {
                sink(tau, overlap);
            }
            if s.end <= hi {
                break;
            }
            tau += 1;
        }
    };
    for s in &tl.slots {
        spread(s, &mut |tau, d| busy[tau][s.machine] += d);
    }
    for link in &chain.links {
        spread(&link.slot, &mut |tau, d| chain_time[tau] += d);
    }

    let half = rho / 2.0 - EPS;
    let classes: Vec<PhaseClass> = (0..phases)
        .map(|tau| {
            if chain_time[tau] >= half {
                PhaseClass::Chain
            } else if groups
                .iter()
                .any(|g| g.machines.iter().all(|&i| busy[tau][i] >= half))
            {
                PhaseClass::Load
            } else {
                PhaseClass::Height
            }
        })
        .collect();
    let count = |c| classes.iter().filter(|&&x| x == c).count();
    Ok(PhaseSummary {
        chain: count(PhaseClass::Chain),
        load: count(PhaseClass::Load),
        height: count(PhaseClass::Height),
        classes,
    })
}
