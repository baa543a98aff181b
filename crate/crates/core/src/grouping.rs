//! Factor-2 machine groups and the rounding of fractional assignments onto
//! them.
//!
//! Groups are numbered from the slowest (`0`) to the fastest. A job's median
//! group is the first group by which half of its LP mass has been placed; its
//! assigned group is the highest-capacity group at or above the median, where
//! capacity is group size times slowest speed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Instance, PredMap};
use crate::lp::{LpSolution, Relaxation};
use crate::schedmodel::Check;
use crate::EPS;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MachineGroup {
    pub index: usize,
    /// Machine indices, slowest first.
    pub machines: Vec<usize>,
    pub machine_ids: Vec<String>,
    /// Speed of the slowest member.
    pub gamma: f64,
    pub capacity: f64,
}

impl MachineGroup {
    pub fn size(&self) -> usize {
        self.machines.len()
    }
}

/// Greedy partition: each group opens at the slowest unassigned machine and
/// absorbs every machine slower than twice that speed.
pub fn partition_machine_groups(inst: &Instance) -> Vec<MachineGroup> {
    let mut groups: Vec<MachineGroup> = Vec::new();
    for (i, mach) in inst.machines.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if mach.speed < 2.0 * g.gamma - EPS => {
                g.machines.push(i);
                g.machine_ids.push(mach.id.clone());
                g.capacity = g.machines.len() as f64 * g.gamma;
            }
            _ => groups.push(MachineGroup {
                index: groups.len(),
                machines: vec![i],
                machine_ids: vec![mach.id.clone()],
                gamma: mach.speed,
                capacity: mach.speed,
            }),
        }
    }
    groups
}

/// Group of every machine.
pub fn group_of_machine(groups: &[MachineGroup], m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for g in groups {
        for &i in &g.machines {
            out[i] = g.index;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupAssignment {
    pub groups: Vec<MachineGroup>,
    pub mu: Vec<usize>,
    pub kappa: Vec<usize>,
    /// Band of every job, counted from 1.
    pub band: Vec<usize>,
    pub r_max: usize,
    /// LP start times the bands were taken from.
    pub starts: Vec<f64>,
    pub lp_objective: f64,
}

impl GroupAssignment {
    pub fn jobs_in_group(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.kappa
            .iter()
            .enumerate()
            .filter(move |&(_, &g)| g == k)
            .map(|(v, _)| v)
    }
}

/// Band index `floor(4 S / rho) + 1` of every start time.
pub fn compute_bands(starts: &[f64], rho: f64) -> Result<Vec<usize>> {
    if !(rho > 0.0) {
        return Err(Error::Parameter("bands need a positive delay".into()));
    }
    Ok(starts
        .iter()
        .map(|&s| (4.0 * s.max(0.0) / rho).floor() as usize + 1)
        .collect())
}

/// Median group from the cumulative fractional mass of `x` over groups.
fn median_group(x: &[f64], groups: &[MachineGroup]) -> usize {
    let mut acc = 0.0;
    for g in groups {
        acc += g.machines.iter().map(|&i| x[i]).sum::<f64>();
        if acc >= 0.5 - EPS {
            return g.index;
        }
    }
    groups.len() - 1
}

/// Highest-capacity group at or above `mu`, ties toward the faster group.
fn assigned_group(mu: usize, groups: &[MachineGroup]) -> usize {
    let mut best = mu;
    for g in &groups[mu..] {
        if g.capacity >= groups[best].capacity - EPS {
            best = g.index;
        }
    }
    best
}

pub fn assign_job_groups(
    inst: &Instance,
    relax: &Relaxation,
    sol: &LpSolution,
    groups: Vec<MachineGroup>,
) -> Result<GroupAssignment> {
    if groups.is_empty() {
        return Err(Error::Parameter("no machine groups".into()));
    }
    let n = inst.n();
    let mu: Vec<usize> = (0..n)
        .map(|v| median_group(relax.x_row(&sol.values, v), &groups))
        .collect();
    let kappa: Vec<usize> = mu.iter().map(|&m| assigned_group(m, &groups)).collect();
    let starts = relax.starts(&sol.values);
    let band = if inst.rho > 0.0 {
        compute_bands(&starts, inst.rho)?
    } else {
        vec![1; n]
    };
    let r_max = band.iter().copied().max().unwrap_or(1);
    Ok(GroupAssignment {
        groups,
        mu,
        kappa,
        band,
        r_max,
        starts,
        lp_objective: sol.objective,
    })
}

/// Size of same-band predecessors of every job against `8 rho gamma`.
pub fn band_bound_check(inst: &Instance, preds: &PredMap, a: &GroupAssignment) -> Check {
    let name = "band_predecessor_size";
    if inst.rho <= 0.0 {
        return Check::skipped(name, "bands are undefined without delay");
    }
    let mut worst: Option<(f64, f64)> = None;
    for v in 0..inst.n() {
        let load: f64 = preds
            .of(v)
            .iter()
            .filter(|&&u| a.band[u] == a.band[v])
            .map(|&u| inst.jobs[u].size)
            .sum();
        let bound = 8.0 * inst.rho * a.groups[a.kappa[v]].gamma;
        if worst.map_or(true, |(l, b)| bound - load < b - l) {
            worst = Some((load, bound));
        }
    }
    let (value, bound) = worst.unwrap_or((0.0, 0.0));
    Check::asserted(name, value, bound)
}

/// `sum_k p(kappa = k) / capacity_k` against `4 K C_LP`.
pub fn load_bound_check(inst: &Instance, a: &GroupAssignment) -> Check {
    let value = weighted_group_load(inst, a);
    let bound = 4.0 * a.groups.len() as f64 * a.lp_objective;
    Check::asserted("group_load", value, bound)
}

pub(crate) fn weighted_group_load(inst: &Instance, a: &GroupAssignment) -> f64 {
    a.groups
        .iter()
        .map(|g| {
            let p: f64 = a.jobs_in_group(g.index).map(|v| inst.jobs[v].size).sum();
            p / g.capacity
        })
        .sum()
}

/// `r_max rho` against `4 (C_LP + rho)`.
pub fn max_band_check(inst: &Instance, a: &GroupAssignment) -> Check {
    if inst.rho <= 0.0 {
        return Check::skipped("max_band", "bands are undefined without delay");
    }
    Check::asserted(
        "max_band",
        a.r_max as f64 * inst.rho,
        4.0 * (a.lp_objective + inst.rho),
    )
}

/// Among groups that received jobs, capacity never increases with speed.
/// Reports the largest increase found.
pub fn capacity_order_check(a: &GroupAssignment) -> Check {
    let used: Vec<&MachineGroup> = a
        .groups
        .iter()
        .filter(|g| a.jobs_in_group(g.index).next().is_some())
        .collect();
    let rise = used
        .windows(2)
        .map(|w| w[1].capacity - w[0].capacity)
        .fold(0.0, f64::max);
    Check::asserted("capacity_order", rise, 0.0)
}
