//! Slow-machine elimination and the rehosting of schedules that used the
//! eliminated machines.
//!
//! A machine is slow when its speed is below `s_max / m`. Rehosting works in
//! two passes over a valid schedule:
//!
//! 1. Every delay-length phase becomes a step. Jobs started on slow machines
//!    in the phase run back to back on a virtual copy of the fastest machine
//!    at the start of the step, followed by `rho` idle time; other placements
//!    keep their offset within the step.
//! 2. The virtual machine is merged into the real fastest one by sweeping
//!    all placements in start order and pushing every later start forward
//!    whenever the two streams would overlap.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedmodel::{phase_of, Placement, Schedule, Timeline};
use crate::EPS;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MachineFilterResult {
    pub filtered: Instance,
    pub removed_ids: Vec<String>,
    /// New index of every original machine, `None` when removed.
    pub mapping: Vec<Option<usize>>,
}

impl MachineFilterResult {
    pub fn removed_any(&self) -> bool {
        !self.removed_ids.is_empty()
    }
}

/// Keeps machines with speed at least `s_max / m`, at tolerance `EPS`.
pub fn filter_slow_machines(inst: &Instance) -> MachineFilterResult {
    let threshold = inst.fastest_speed() / inst.m().max(1) as f64;
    let mut filtered = inst.clone();
    filtered.machines.clear();
    let mut removed_ids = Vec::new();
    let mut mapping = Vec::with_capacity(inst.m());
    for mach in &inst.machines {
        if mach.speed >= threshold - EPS {
            mapping.push(Some(filtered.machines.len()));
            filtered.machines.push(mach.clone());
        } else {
            mapping.push(None);
            removed_ids.push(mach.id.clone());
        }
    }
    MachineFilterResult {
        filtered,
        removed_ids,
        mapping,
    }
}

/// Moves every copy placed on a slow machine onto the fastest machine.
/// The output is valid on the filtered instance.
pub fn rehost_schedule(inst: &Instance, sched: &Schedule) -> Result<Schedule> {
    let tl = Timeline::of_valid(inst, sched)?;
    let filter = filter_slow_machines(inst);
    let slow = |i: usize| filter.mapping[i].is_none();
    if !tl.slots.iter().any(|s| slow(s.machine)) {
        return Ok(sched.clone());
    }
    let rho = inst.rho;
    if !(rho > 0.0) {
        return Err(Error::Parameter(
            "rehosting slow-machine work needs a positive delay".into(),
        ));
    }
    let fast = inst.m() - 1;
    let fast_speed = inst.machines[fast].speed;
    let order = crate::instance::Dag::rank_of(&inst.dag()?.topo);

    // Pass 1: phases become steps; slow work moves to the virtual machine.
    let phases = tl.slots.iter().map(|s| phase_of(s.start, rho)).max().unwrap_or(0) + 1;
    let mut moved: Vec<Vec<usize>> = vec![Vec::new(); phases];
    for s in tl.slots.iter().filter(|s| slow(s.machine)) {
        moved[phase_of(s.start, rho)].push(s.job);
    }
    let mut begin = vec![0.0; phases + 1];
    for (t, jobs) in moved.iter_mut().enumerate() {
        jobs.sort_by_key(|&v| order[v]);
        jobs.dedup();
        let work: f64 = jobs.iter().map(|&v| inst.jobs[v].size).sum::<f64>() / fast_speed;
        begin[t + 1] = begin[t] + work.max(rho) + rho;
    }
    // (job, machine, start), machine `None` is the virtual one.
    let mut items: Vec<(usize, Option<usize>, f64)> = Vec::new();
    for s in tl.slots.iter().filter(|s| !slow(s.machine)) {
        let t = phase_of(s.start, rho);
        let offset = (s.start - t as f64 * rho).max(0.0);
        items.push((s.job, Some(s.machine), begin[t] + offset));
    }
    for (t, jobs) in moved.iter().enumerate() {
        let mut clock = begin[t];
        for &v in jobs {
            items.push((v, None, clock));
            clock += inst.jobs[v].size / fast_speed;
        }
    }

    // Pass 2: merge the virtual machine into the fastest one.
    items.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.1.is_some().cmp(&b.1.is_some())));
    let mut shift = 0.0;
    let mut merged_end = 0.0f64;
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(items.len());
    for (v, mach, start) in items {
        let dur = inst.jobs[v].size / mach.map_or(fast_speed, |i| inst.machines[i].speed);
        let mut s = start + shift;
        let on_merged = mach.map_or(true, |i| i == fast);
        if on_merged {
            if s < merged_end - EPS {
                shift += merged_end - s;
                s = merged_end;
            }
            merged_end = merged_end.max(s + dur);
        }
        out.push((v, mach.unwrap_or(fast), s));
    }

    // A job may now have two copies on the fastest machine; keep the first.
    out.sort_by(|a, b| a.1.cmp(&b.1).then(a.2.total_cmp(&b.2)));
    let mut seen = std::collections::HashSet::new();
    out.retain(|&(v, i, _)| seen.insert((v, i)));
    let placements = out
        .into_iter()
        .map(|(v, i, s)| Placement::new(inst.jobs[v].id.clone(), inst.machines[i].id.clone(), s))
        .collect();
    Ok(Schedule { placements })
}
