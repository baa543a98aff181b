//! Schedules, their validation and post-hoc analysis.

mod analysis;
mod diagnostics;

pub use analysis::{
    build_chain, classify_phases, phase_of, Chain, ChainLink, PhaseClass, PhaseSummary,
};
pub use diagnostics::{lemma_diagnostics, AnalysisReport, Check, Diagnostics};

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::EPS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub job: String,
    pub machine: String,
    pub start: f64,
}

impl Placement {
    pub fn new(job: impl Into<String>, machine: impl Into<String>, start: f64) -> Self {
        Placement {
            job: job.into(),
            machine: machine.into(),
            start,
        }
    }
}

/// A set of placements. A job may appear on several machines (duplication)
/// but at most once per machine.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub placements: Vec<Placement>,
}

impl Schedule {
    pub fn is_duplication_free(&self) -> bool {
        let mut seen = HashSet::new();
        self.placements.iter().all(|p| seen.insert(p.job.as_str()))
    }

    /// Copies per job id.
    pub fn multiplicity(&self) -> HashMap<&str, usize> {
        let mut out = HashMap::new();
        for p in &self.placements {
            *out.entry(p.job.as_str()).or_insert(0) += 1;
        }
        out
    }

    /// Sorts placements by machine id, then start, then job id.
    pub fn canonicalize(&mut self) {
        self.placements.sort_by(|a, b| {
            a.machine
                .cmp(&b.machine)
                .then(a.start.total_cmp(&b.start))
                .then_with(|| a.job.cmp(&b.job))
        });
    }
}

/// One executed copy, in index space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slot {
    pub job: usize,
    pub machine: usize,
    pub start: f64,
    pub end: f64,
}

/// Index-space view of a schedule with per-job and per-machine lookups.
#[derive(Clone, Debug)]
pub struct Timeline {
    pub slots: Vec<Slot>,
    /// Slot indices of each job, ordered by machine index.
    pub by_job: Vec<Vec<usize>>,
    /// Slot indices on each machine, ordered by start time.
    pub by_machine: Vec<Vec<usize>>,
}

impl Timeline {
    pub fn from_slots(inst: &Instance, mut slots: Vec<Slot>) -> Timeline {
        slots.sort_by(|a, b| {
            a.machine
                .cmp(&b.machine)
                .then(a.start.total_cmp(&b.start))
                .then(a.job.cmp(&b.job))
        });
        let mut by_job = vec![Vec::new(); inst.n()];
        let mut by_machine = vec![Vec::new(); inst.m()];
        for (k, s) in slots.iter().enumerate() {
            by_job[s.job].push(k);
            by_machine[s.machine].push(k);
        }
        Timeline {
            slots,
            by_job,
            by_machine,
        }
    }

    /// Maps ids to indices; unknown ids and bad starts are reported instead.
    fn build(inst: &Instance, sched: &Schedule) -> (Timeline, Vec<ScheduleViolation>) {
        let jobs = inst.job_index();
        let machines = inst.machine_index();
        let mut bad = Vec::new();
        let mut slots = Vec::with_capacity(sched.placements.len());
        for p in &sched.placements {
            let j = jobs.get(p.job.as_str());
            let m = machines.get(p.machine.as_str());
            if j.is_none() {
                bad.push(ScheduleViolation::UnknownJob { job: p.job.clone() });
            }
            if m.is_none() {
                bad.push(ScheduleViolation::UnknownMachine {
                    machine: p.machine.clone(),
                });
            }
            if !(p.start.is_finite() && p.start >= 0.0) {
                bad.push(ScheduleViolation::BadStart {
                    job: p.job.clone(),
                    machine: p.machine.clone(),
                    start: p.start,
                });
                continue;
            }
            if let (Some(&job), Some(&machine)) = (j, m) {
                let dur = inst.jobs[job].size / inst.machines[machine].speed;
                slots.push(Slot {
                    job,
                    machine,
                    start: p.start,
                    end: p.start + dur,
                });
            }
        }
        (Timeline::from_slots(inst, slots), bad)
    }

    /// Index view of a schedule already known to be valid.
    pub fn of_valid(inst: &Instance, sched: &Schedule) -> Result<Timeline> {
        let report = validate_schedule(inst, sched);
        if !report.valid {
            return Err(Error::InvalidSchedule(report));
        }
        Ok(Timeline::build(inst, sched).0)
    }

    pub fn makespan(&self) -> f64 {
        self.slots.iter().map(|s| s.end).fold(0.0, f64::max)
    }

    /// Earliest completion over all copies of `job`.
    pub fn first_completion(&self, job: usize) -> f64 {
        self.by_job[job]
            .iter()
            .map(|&k| self.slots[k].end)
            .fold(f64::INFINITY, f64::min)
    }

    /// Earliest time `job`'s result is usable on `machine`.
    pub fn available_on(&self, job: usize, machine: usize, rho: f64) -> f64 {
        self.by_job[job]
            .iter()
            .map(|&k| {
                let s = &self.slots[k];
                if s.machine == machine {
                    s.end
                } else {
                    s.end + rho
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_schedule(&self, inst: &Instance) -> Schedule {
        Schedule {
            placements: self
                .slots
                .iter()
                .map(|s| {
                    Placement::new(
                        inst.jobs[s.job].id.clone(),
                        inst.machines[s.machine].id.clone(),
                        s.start,
                    )
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleViolation {
    UnknownJob {
        job: String,
    },
    UnknownMachine {
        machine: String,
    },
    BadStart {
        job: String,
        machine: String,
        start: f64,
    },
    DuplicatePair {
        job: String,
        machine: String,
    },
    Unplaced {
        job: String,
    },
    Overlap {
        machine: String,
        first: String,
        second: String,
    },
    Dependency {
        pred: String,
        job: String,
        machine: String,
        start: f64,
    },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ScheduleViolation::*;
        match self {
            UnknownJob { job } => write!(f, "unknown job {job}"),
            UnknownMachine { machine } => write!(f, "unknown machine {machine}"),
            BadStart {
                job,
                machine,
                start,
            } => write!(f, "{job} on {machine} has bad start {start}"),
            DuplicatePair { job, machine } => write!(f, "{job} placed twice on {machine}"),
            Unplaced { job } => write!(f, "{job} is never placed"),
            Overlap {
                machine,
                first,
                second,
            } => write!(f, "{first} and {second} overlap on {machine}"),
            Dependency {
                pred,
                job,
                machine,
                start,
            } => write!(
                f,
                "{job} starts on {machine} at {start} before {pred} is available"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub valid: bool,
    pub makespan: f64,
    pub violations: Vec<ScheduleViolation>,
}

impl fmt::Display for ScheduleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return write!(f, "valid, makespan {}", self.makespan);
        }
        let shown: Vec<String> = self
            .violations
            .iter()
            .take(5)
            .map(|v| v.to_string())
            .collect();
        write!(f, "{} violation(s): {}", self.violations.len(), shown.join("; "))?;
        if self.violations.len() > 5 {
            write!(f, "; ...")?;
        }
        Ok(())
    }
}

/// Checks placement coverage, machine exclusivity and the delay rule: each
/// copy of `v` on machine `i` at time `t` needs, for every direct
/// predecessor `u`, a copy of `u` finishing on `i` by `t` or elsewhere by
/// `t - rho`. Direct edges suffice since the rule composes along paths.
pub fn validate_schedule(inst: &Instance, sched: &Schedule) -> ScheduleReport {
    let dag = match inst.dag() {
        Ok(d) => d,
        Err(_) => {
            return ScheduleReport {
                valid: false,
                makespan: f64::NAN,
                violations: Vec::new(),
            }
        }
    };
    let (tl, mut out) = Timeline::build(inst, sched);
    let job_id = |v: usize| inst.jobs[v].id.clone();
    let mach_id = |i: usize| inst.machines[i].id.clone();

    for (v, ks) in tl.by_job.iter().enumerate() {
        if ks.is_empty() {
            out.push(ScheduleViolation::Unplaced { job: job_id(v) });
        }
        for w in ks.windows(2) {
            if tl.slots[w[0]].machine == tl.slots[w[1]].machine {
                out.push(ScheduleViolation::DuplicatePair {
                    job: job_id(v),
                    machine: mach_id(tl.slots[w[0]].machine),
                });
            }
        }
    }
    for (i, ks) in tl.by_machine.iter().enumerate() {
        for w in ks.windows(2) {
            let (a, b) = (&tl.slots[w[0]], &tl.slots[w[1]]);
            if a.job != b.job && b.start < a.end - EPS {
                out.push(ScheduleViolation::Overlap {
                    machine: mach_id(i),
                    first: job_id(a.job),
                    second: job_id(b.job),
                });
            }
        }
    }
    for s in &tl.slots {
        for &u in &dag.preds[s.job] {
            if tl.available_on(u, s.machine, inst.rho) > s.start + EPS {
                out.push(ScheduleViolation::Dependency {
                    pred: job_id(u),
                    job: job_id(s.job),
                    machine: mach_id(s.machine),
                    start: s.start,
                });
            }
        }
    }
    ScheduleReport {
        valid: out.is_empty(),
        makespan: tl.makespan(),
        violations: out,
    }
}

pub fn makespan(inst: &Instance, sched: &Schedule) -> f64 {
    Timeline::build(inst, sched).0.makespan()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GanttBar {
    pub job: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GanttRow {
    pub machine: String,
    pub speed: f64,
    pub bars: Vec<GanttBar>,
}

/// One row per machine in instance order, bars sorted by start.
pub fn gantt(inst: &Instance, sched: &Schedule) -> Vec<GanttRow> {
    let (tl, _) = Timeline::build(inst, sched);
    inst.machines
        .iter()
        .zip(&tl.by_machine)
        .map(|(m, ks)| GanttRow {
            machine: m.id.clone(),
            speed: m.speed,
            bars: ks
                .iter()
                .map(|&k| {
                    let s = &tl.slots[k];
                    GanttBar {
                        job: inst.jobs[s.job].id.clone(),
                        start: s.start,
                        end: s.end,
                    }
                })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{sched, unit};

    #[test]
    fn colocated_chain_is_valid() {
        let inst = unit(&["a", "b"], 2, 3.0, &[("a", "b")]);
        let r = validate_schedule(&inst, &sched(&[("a", "m0", 0.0), ("b", "m0", 1.0)]));
        assert!(r.valid, "{r}");
        assert_eq!(r.makespan, 2.0);
    }

    #[test]
    fn delay_and_precedence_violations() {
        let inst = unit(&["a", "b"], 2, 3.0, &[("a", "b")]);
        let r = validate_schedule(&inst, &sched(&[("a", "m0", 0.0), ("b", "m1", 3.5)]));
        assert!(matches!(r.violations[..], [ScheduleViolation::Dependency { .. }]));
        let r = validate_schedule(&inst, &sched(&[("a", "m0", 0.0), ("b", "m1", 4.0)]));
        assert!(r.valid);
        let r = validate_schedule(&inst, &sched(&[("b", "m1", 4.0)]));
        assert!(!r.valid);
        assert_eq!(r.violations.len(), 2);
    }

    #[test]
    fn overlap_and_duplicates() {
        let inst = unit(&["a", "b"], 1, 1.0, &[]);
        let r = validate_schedule(&inst, &sched(&[("a", "m0", 0.0), ("b", "m0", 0.5)]));
        assert!(matches!(r.violations[..], [ScheduleViolation::Overlap { .. }]));
        let r = validate_schedule(
            &inst,
            &sched(&[("a", "m0", 0.0), ("a", "m0", 1.0), ("b", "m0", 2.0)]),
        );
        assert!(matches!(r.violations[..], [ScheduleViolation::DuplicatePair { .. }]));
        let r = validate_schedule(&inst, &sched(&[("a", "mx", 0.0), ("b", "m0", -1.0)]));
        assert_eq!(r.violations.len(), 4);
    }

    #[test]
    fn duplication_hides_delay() {
        let inst = unit(&["a", "b", "c"], 2, 10.0, &[("a", "b"), ("a", "c")]);
        let s = sched(&[
            ("a", "m0", 0.0),
            ("b", "m0", 1.0),
            ("a", "m1", 0.0),
            ("c", "m1", 1.0),
        ]);
        assert!(validate_schedule(&inst, &s).valid);
        assert!(!s.is_duplication_free());
        let rows = gantt(&inst, &s);
        assert_eq!(rows[1].bars[1].job, "c");
    }
}
