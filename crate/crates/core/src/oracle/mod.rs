//! Exact optima for tiny instances and a combinatorial baseline.
//!
//! The exact search enumerates semi-active schedules: copies are appended one
//! at a time in nondecreasing start order, each starting as early as its
//! machine and the already-appended predecessor copies allow. Every schedule
//! whose starts cannot be moved earlier arises this way, and an optimal
//! schedule can always be taken semi-active, so the minimum over the
//! enumeration is the optimum.

mod baseline;

pub use baseline::combinatorial_baseline;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedmodel::{Placement, Schedule};
use crate::EPS;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleLimits {
    pub max_jobs_dup: usize,
    pub max_machines_dup: usize,
    pub max_jobs: usize,
    pub max_machines: usize,
    /// Search nodes allowed before giving up.
    pub node_budget: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_jobs_dup: 5,
            max_machines_dup: 2,
            max_jobs: 7,
            max_machines: 3,
            node_budget: 50_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub makespan: f64,
    pub witness: Schedule,
    pub nodes: u64,
}

struct Search<'a> {
    dur: Vec<Vec<f64>>,
    preds: &'a [Vec<usize>],
    rho: f64,
    dup: bool,
    n: usize,
    m: usize,
    /// End of each job's copy on each machine.
    end: Vec<Vec<Option<f64>>>,
    copies: Vec<usize>,
    free: Vec<f64>,
    stack: Vec<(usize, usize, f64)>,
    best: f64,
    witness: Vec<(usize, usize, f64)>,
    nodes: u64,
    budget: u64,
    size_on_fastest: Vec<f64>,
}

impl Search<'_> {
    fn earliest(&self, v: usize, i: usize) -> Option<f64> {
        let mut t = self.free[i];
        for &u in &self.preds[v] {
            let avail = (0..self.m)
                .filter_map(|j| self.end[u][j].map(|e| if j == i { e } else { e + self.rho }))
                .fold(f64::INFINITY, f64::min);
            if !avail.is_finite() {
                return None;
            }
            t = t.max(avail);
        }
        Some(t)
    }

    fn dfs(&mut self, unplaced: usize, makespan: f64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::LimitExceeded(format!(
                "oracle search exceeded {} nodes",
                self.budget
            )));
        }
        if unplaced == 0 {
            if makespan < self.best - EPS {
                self.best = makespan;
                self.witness = self.stack.clone();
            }
            return Ok(());
        }
        let last = self.stack.last().copied();
        let floor = last.map_or(0.0, |(_, _, s)| s);
        let lb = floor
            + (0..self.n)
                .filter(|&v| self.copies[v] == 0)
                .map(|v| self.size_on_fastest[v])
                .fold(0.0, f64::max);
        if lb >= self.best - EPS {
            return Ok(());
        }
        for v in 0..self.n {
            if self.copies[v] > 0 && !self.dup {
                continue;
            }
            for i in 0..self.m {
                if self.end[v][i].is_some() {
                    continue;
                }
                let Some(start) = self.earliest(v, i) else {
                    continue;
                };
                // Canonical order: starts nondecreasing, ties by (job, machine).
                if let Some((lv, li, ls)) = last {
                    if start < ls - EPS || (start <= ls + EPS && (v, i) <= (lv, li)) {
                        continue;
                    }
                }
                let end = start + self.dur[v][i];
                if end >= self.best - EPS {
                    continue;
                }
                let free = self.free[i];
                self.end[v][i] = Some(end);
                self.copies[v] += 1;
                self.free[i] = end;
                self.stack.push((v, i, start));
                let left = if self.copies[v] == 1 { unplaced - 1 } else { unplaced };
                let r = self.dfs(left, makespan.max(end));
                self.stack.pop();
                self.free[i] = free;
                self.copies[v] -= 1;
                self.end[v][i] = None;
                r?;
            }
        }
        Ok(())
    }
}

/// Minimum makespan over all schedules, with or without duplication.
pub fn exact_optimal_makespan(
    inst: &Instance,
    allow_duplication: bool,
    limits: &OracleLimits,
) -> Result<OracleResult> {
    let (max_n, max_m) = if allow_duplication {
        (limits.max_jobs_dup, limits.max_machines_dup)
    } else {
        (limits.max_jobs, limits.max_machines)
    };
    if inst.n() > max_n || inst.m() > max_m {
        return Err(Error::LimitExceeded(format!(
            "oracle handles at most {max_n} jobs on {max_m} machines, got {} on {}",
            inst.n(),
            inst.m()
        )));
    }
    let dag = inst.dag()?;
    let (n, m) = (inst.n(), inst.m());
    let fastest = m - 1;
    let dur: Vec<Vec<f64>> = inst
        .jobs
        .iter()
        .map(|j| inst.machines.iter().map(|mc| j.size / mc.speed).collect())
        .collect();
    // Serial run on the fastest machine seeds the bound.
    let mut serial = Vec::with_capacity(n);
    let mut t = 0.0;
    for &v in &dag.topo {
        serial.push((v, fastest, t));
        t += dur[v][fastest];
    }
    let mut s = Search {
        size_on_fastest: (0..n).map(|v| dur[v][fastest]).collect(),
        dur,
        preds: &dag.preds,
        rho: inst.rho,
        dup: allow_duplication,
        n,
        m,
        end: vec![vec![None; m]; n],
        copies: vec![0; n],
        free: vec![0.0; m],
        stack: Vec::new(),
        best: t,
        witness: serial,
        nodes: 0,
        budget: limits.node_budget,
    };
    s.dfs(n, 0.0)?;
    let witness = Schedule {
        placements: s
            .witness
            .iter()
            .map(|&(v, i, st)| Placement::new(inst.jobs[v].id.clone(), inst.machines[i].id.clone(), st))
            .collect(),
    };
    Ok(OracleResult {
        makespan: s.best,
        witness,
        nodes: s.nodes,
    })
}
