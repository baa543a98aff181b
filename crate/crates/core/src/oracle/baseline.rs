//! Round-based combinatorial heuristic with duplication, extended to job
//! sizes and machine speeds.
//!
//! The least-loaded machine takes an unscheduled job together with every
//! predecessor neither finished by the round start nor already on that
//! machine, provided those predecessors
//! fit in one delay on that machine and at least half of the bundle (by size)
//! is not already running in the current round. When no job qualifies, the
//! round closes and the next one starts `rho` after everything placed so far.

use crate::error::{Error, Result};
use crate::instance::{Dag, Instance, PredMap};
use crate::schedmodel::{Placement, Schedule};
use crate::EPS;

pub fn combinatorial_baseline(inst: &Instance) -> Result<Schedule> {
    let dag = inst.dag()?;
    let preds = PredMap::from_dag(&dag);
    let rank = Dag::rank_of(&dag.topo);
    let (n, m) = (inst.n(), inst.m());
    let size: Vec<f64> = inst.jobs.iter().map(|j| j.size).collect();
    let mut round_start = 0.0f64;
    let mut load = vec![0.0f64; m];
    let mut first_end = vec![f64::INFINITY; n];
    let mut on: Vec<Vec<bool>> = vec![vec![false; m]; n];
    let mut in_round = vec![false; n];
    let mut scheduled = vec![false; n];
    let mut left = n;
    let mut latest = 0.0f64;
    let mut placed_since_advance = true;
    let mut out = Vec::new();
    while left > 0 {
        let i = (0..m)
            .min_by(|&a, &b| load[a].total_cmp(&load[b]).then(a.cmp(&b)))
            .expect("instances have machines");
        let speed = inst.machines[i].speed;
        let mut chosen = None;
        for &v in &dag.topo {
            if scheduled[v] {
                continue;
            }
            let bundle: Vec<usize> = preds
                .of(v)
                .iter()
                .copied()
                .chain(std::iter::once(v))
                .filter(|&u| first_end[u] > round_start + EPS && !on[u][i])
                .collect();
            let before: f64 = bundle.iter().filter(|&&u| u != v).map(|&u| size[u]).sum();
            if before > 0.0 && before >= inst.rho * speed - EPS {
                continue;
            }
            let total: f64 = bundle.iter().map(|&u| size[u]).sum();
            let fresh: f64 = bundle.iter().filter(|&&u| !in_round[u]).map(|&u| size[u]).sum();
            if fresh >= total / 2.0 - EPS {
                chosen = Some(bundle);
                break;
            }
        }
        match chosen {
            Some(mut bundle) => {
                bundle.sort_by_key(|&u| rank[u]);
                for u in bundle {
                    let start = load[i];
                    let end = start + size[u] / speed;
                    load[i] = end;
                    first_end[u] = first_end[u].min(end);
                    latest = latest.max(end);
                    on[u][i] = true;
                    in_round[u] = true;
                    if !scheduled[u] {
                        scheduled[u] = true;
                        left -= 1;
                    }
                    out.push(Placement::new(inst.jobs[u].id.clone(), inst.machines[i].id.clone(), start));
                }
                placed_since_advance = true;
            }
            None => {
                if !placed_since_advance {
                    return Err(Error::Stalled {
                        clock: round_start,
                        remaining: left,
                    });
                }
                placed_since_advance = false;
                round_start = latest + inst.rho;
                for l in &mut load {
                    *l = l.max(round_start);
                }
                in_round.iter_mut().for_each(|x| *x = false);
            }
        }
    }
    Ok(Schedule { placements: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedmodel::validate_schedule;
    use crate::testutil::unit;

    #[test]
    fn independent_jobs_fill_machines() {
        let inst = unit(&["a", "b", "c", "d"], 2, 1.0, &[]);
        let s = combinatorial_baseline(&inst).unwrap();
        let r = validate_schedule(&inst, &s);
        assert!(r.valid);
        assert!((r.makespan - 2.0).abs() < 1e-9);
    }

    #[test]
    fn single_machine_is_serial() {
        let inst = unit(&["a", "b", "c"], 1, 2.0, &[]);
        let r = validate_schedule(&inst, &combinatorial_baseline(&inst).unwrap());
        assert!(r.valid);
        assert!((r.makespan - 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_delay_chain() {
        let inst = unit(&["a", "b", "c"], 2, 0.0, &[("a", "b"), ("b", "c")]);
        assert!(validate_schedule(&inst, &combinatorial_baseline(&inst).unwrap()).valid);
    }
}
