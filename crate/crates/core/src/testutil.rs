use crate::instance::{Instance, Job, Machine};
use crate::schedmodel::{Placement, Schedule};

/// Unit jobs on `m` unit machines named `m0`, `m1`, ...
pub(crate) fn unit(ids: &[&str], m: usize, rho: f64, edges: &[(&str, &str)]) -> Instance {
    Instance::new(
        rho,
        ids.iter().map(|i| Job::new(*i, 1.0)).collect(),
        (0..m).map(|i| Machine::new(format!("m{i}"), 1.0)).collect(),
        edges
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
    )
}

pub(crate) fn sched(items: &[(&str, &str, f64)]) -> Schedule {
    Schedule {
        placements: items
            .iter()
            .map(|(j, m, t)| Placement::new(*j, *m, *t))
            .collect(),
    }
}
