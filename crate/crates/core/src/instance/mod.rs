//! Instances: jobs with sizes, machines with speeds, a precedence DAG and the
//! communication delay `rho`.
//!
//! A job of size `p` takes `p / s` time on a machine of speed `s`. When job
//! `u` must precede `v` and they run on different machines, `v` may start only
//! `rho` time after `u` completes.

mod codec;
mod gen;

pub use codec::{instance_from_json, instance_to_json, schedule_from_json, schedule_to_json};
pub use gen::{
    gen_binary_tree, gen_layered_gap, gen_layered_gap_with_rho, gen_random_dag, layer_of,
    path_duplication_schedule, RandomDagParams,
};

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedmodel::Schedule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub size: f64,
}

impl Job {
    pub fn new(id: impl Into<String>, size: f64) -> Self {
        Job { id: id.into(), size }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub id: String,
    pub speed: f64,
}

impl Machine {
    pub fn new(id: impl Into<String>, speed: f64) -> Self {
        Machine {
            id: id.into(),
            speed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub rho: f64,
    pub jobs: Vec<Job>,
    pub machines: Vec<Machine>,
    pub edges: Vec<(String, String)>,
}

impl Instance {
    /// Builds an instance and sorts machines by speed, ties by id.
    pub fn new(
        rho: f64,
        jobs: Vec<Job>,
        machines: Vec<Machine>,
        edges: Vec<(String, String)>,
    ) -> Self {
        let mut inst = Instance {
            rho,
            jobs,
            machines,
            edges,
        };
        inst.sort_machines();
        inst
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn m(&self) -> usize {
        self.machines.len()
    }

    pub fn sort_machines(&mut self) {
        self.machines
            .sort_by(|a, b| a.speed.total_cmp(&b.speed).then_with(|| a.id.cmp(&b.id)));
    }

    pub fn total_size(&self) -> f64 {
        self.jobs.iter().map(|j| j.size).sum()
    }

    pub fn fastest_speed(&self) -> f64 {
        self.machines.iter().map(|m| m.speed).fold(0.0, f64::max)
    }

    pub fn job_index(&self) -> HashMap<&str, usize> {
        self.jobs
            .iter()
            .enumerate()
            .map(|(i, j)| (j.id.as_str(), i))
            .collect()
    }

    pub fn machine_index(&self) -> HashMap<&str, usize> {
        self.machines
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.as_str(), i))
            .collect()
    }

    /// Index-based view of the precedence graph. Fails on invalid instances.
    pub fn dag(&self) -> Result<Dag> {
        Dag::new(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoJobs,
    NoMachines,
    BadRho { rho: f64 },
    BadSize { job: String, size: f64 },
    BadSpeed { machine: String, speed: f64 },
    DuplicateJob { job: String },
    DuplicateMachine { machine: String },
    DanglingEdge { from: String, to: String },
    SelfLoop { job: String },
    Cycle { jobs: Vec<String> },
    MachinesUnsorted { before: String, after: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoJobs => write!(f, "instance has no jobs"),
            NoMachines => write!(f, "instance has no machines"),
            BadRho { rho } => write!(f, "rho must be finite and >= 0, got {rho}"),
            BadSize { job, size } => write!(f, "job {job} has non-positive size {size}"),
            BadSpeed { machine, speed } => {
                write!(f, "machine {machine} has non-positive speed {speed}")
            }
            DuplicateJob { job } => write!(f, "duplicate job id {job}"),
            DuplicateMachine { machine } => write!(f, "duplicate machine id {machine}"),
            DanglingEdge { from, to } => write!(f, "dangling edge ({from}, {to})"),
            SelfLoop { job } => write!(f, "self loop on {job}"),
            Cycle { jobs } => write!(f, "cycle through {}", jobs.join(", ")),
            MachinesUnsorted { before, after } => {
                write!(f, "machines not sorted by speed: {before} before {after}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut out = Vec::new();
    if inst.jobs.is_empty() {
        out.push(Violation::NoJobs);
    }
    if inst.machines.is_empty() {
        out.push(Violation::NoMachines);
    }
    if !(inst.rho.is_finite() && inst.rho >= 0.0) {
        out.push(Violation::BadRho { rho: inst.rho });
    }
    let mut seen = HashSet::new();
    for j in &inst.jobs {
        if !(j.size.is_finite() && j.size > 0.0) {
            out.push(Violation::BadSize {
                job: j.id.clone(),
                size: j.size,
            });
        }
        if !seen.insert(j.id.as_str()) {
            out.push(Violation::DuplicateJob { job: j.id.clone() });
        }
    }
    let mut seen_m = HashSet::new();
    for m in &inst.machines {
        if !(m.speed.is_finite() && m.speed > 0.0) {
            out.push(Violation::BadSpeed {
                machine: m.id.clone(),
                speed: m.speed,
            });
        }
        if !seen_m.insert(m.id.as_str()) {
            out.push(Violation::DuplicateMachine {
                machine: m.id.clone(),
            });
        }
    }
    for w in inst.machines.windows(2) {
        let ordered = match w[0].speed.total_cmp(&w[1].speed) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Equal => w[0].id <= w[1].id,
            std::cmp::Ordering::Greater => false,
        };
        if !ordered {
            out.push(Violation::MachinesUnsorted {
                before: w[0].id.clone(),
                after: w[1].id.clone(),
            });
        }
    }

    let index = inst.job_index();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); inst.n()];
    for (a, b) in &inst.edges {
        match (index.get(a.as_str()), index.get(b.as_str())) {
            (Some(&u), Some(&v)) => {
                if u == v {
                    out.push(Violation::SelfLoop { job: a.clone() });
                } else {
                    adj[u].push(v);
                }
            }
            _ => out.push(Violation::DanglingEdge {
                from: a.clone(),
                to: b.clone(),
            }),
        }
    }
    if let Some(cycle) = find_cycle(&adj) {
        out.push(Violation::Cycle {
            jobs: cycle.into_iter().map(|v| inst.jobs[v].id.clone()).collect(),
        });
    }
    ValidationReport { violations: out }
}

/// Iterative three-colour DFS; returns the vertices of one cycle if any.
fn find_cycle(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut colour = vec![0u8; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if colour[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        colour[root] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = adj[v].get(*next) {
                *next += 1;
                match colour[w] {
                    0 => {
                        colour[w] = 1;
                        parent[w] = v;
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut cyc = vec![w];
                        let mut x = v;
                        while x != w {
                            cyc.push(x);
                            x = parent[x];
                        }
                        cyc[1..].reverse();
                        return Some(cyc);
                    }
                    _ => {}
                }
            } else {
                colour[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Index-based adjacency of a validated instance.
#[derive(Clone, Debug)]
pub struct Dag {
    pub preds: Vec<Vec<usize>>,
    pub succs: Vec<Vec<usize>>,
    /// Rank of each job when ids are sorted lexicographically.
    pub id_rank: Vec<usize>,
    /// Topological order, ties broken by id.
    pub topo: Vec<usize>,
}

impl Dag {
    pub fn new(inst: &Instance) -> Result<Dag> {
        let report = validate_instance(inst);
        if !report.is_empty() {
            return Err(Error::InvalidInstance(report));
        }
        let n = inst.n();
        let index = inst.job_index();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for (a, b) in &inst.edges {
            let (u, v) = (index[a.as_str()], index[b.as_str()]);
            preds[v].push(u);
            succs[u].push(v);
        }
        for l in preds.iter_mut().chain(succs.iter_mut()) {
            l.sort_unstable();
            l.dedup();
        }
        let mut by_id: Vec<usize> = (0..n).collect();
        by_id.sort_by(|&a, &b| inst.jobs[a].id.cmp(&inst.jobs[b].id));
        let mut id_rank = vec![0; n];
        for (r, &v) in by_id.iter().enumerate() {
            id_rank[v] = r;
        }
        let mut dag = Dag {
            preds,
            succs,
            id_rank,
            topo: Vec::new(),
        };
        let key: Vec<usize> = dag.id_rank.clone();
        dag.topo = dag.topo_order_by(|v| key[v]);
        Ok(dag)
    }

    pub fn n(&self) -> usize {
        self.preds.len()
    }

    /// Kahn's algorithm, always releasing the available job with the
    /// smallest key.
    pub fn topo_order_by<K: Ord + Copy>(&self, key: impl Fn(usize) -> K) -> Vec<usize> {
        let n = self.n();
        let mut indeg: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut heap: BinaryHeap<Reverse<(K, usize)>> = (0..n)
            .filter(|&v| indeg[v] == 0)
            .map(|v| Reverse((key(v), v)))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse((_, v))) = heap.pop() {
            order.push(v);
            for &w in &self.succs[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    heap.push(Reverse((key(w), w)));
                }
            }
        }
        order
    }

    /// Position of every job in `order`.
    pub fn rank_of(order: &[usize]) -> Vec<usize> {
        let mut rank = vec![0; order.len()];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        rank
    }
}

/// Transitive predecessor sets, stored both as a bit matrix and as sorted lists.
#[derive(Clone, Debug, PartialEq)]
pub struct PredMap {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    lists: Vec<Vec<usize>>,
}

impl PredMap {
    pub fn from_dag(dag: &Dag) -> PredMap {
        let n = dag.n();
        let words = n.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        for &v in &dag.topo {
            for &u in &dag.preds[v] {
                let (src, dst) = (u * words, v * words);
                for w in 0..words {
                    let b = bits[src + w];
                    bits[dst + w] |= b;
                }
                bits[dst + u / 64] |= 1 << (u % 64);
            }
        }
        let lists = (0..n)
            .map(|v| {
                (0..n)
                    .filter(|&u| bits[v * words + u / 64] >> (u % 64) & 1 == 1)
                    .collect()
            })
            .collect();
        PredMap {
            n,
            words,
            bits,
            lists,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether `u` precedes `v` through some directed path.
    pub fn precedes(&self, u: usize, v: usize) -> bool {
        self.bits[v * self.words + u / 64] >> (u % 64) & 1 == 1
    }

    /// Transitive predecessors of `v`, ascending by index.
    pub fn of(&self, v: usize) -> &[usize] {
        &self.lists[v]
    }

    pub fn pair_count(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    /// All pairs `(u, v)` with `u` preceding `v`, grouped by `v`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.lists
            .iter()
            .enumerate()
            .flat_map(|(v, l)| l.iter().map(move |&u| (u, v)))
    }
}

pub fn transitive_predecessors(inst: &Instance) -> Result<PredMap> {
    Ok(PredMap::from_dag(&inst.dag()?))
}

/// Factors applied by [`normalize_instance`]: sizes are multiplied by `alpha`,
/// speeds by `beta`, so every duration is multiplied by `alpha / beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub alpha: f64,
    pub beta: f64,
}

impl ScaleRecord {
    pub const IDENTITY: ScaleRecord = ScaleRecord {
        alpha: 1.0,
        beta: 1.0,
    };

    pub fn time_factor(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn to_original_time(&self, t: f64) -> f64 {
        t * self.beta / self.alpha
    }

    pub fn denormalize_schedule(&self, sched: &Schedule) -> Schedule {
        let mut out = sched.clone();
        for p in &mut out.placements {
            p.start = self.to_original_time(p.start);
        }
        out
    }
}

/// Rescales so the smallest job has size 1 and the fastest machine speed 1.
/// The delay is rescaled with the same time factor, so a schedule of the
/// normalized instance maps back by dividing every start by that factor.
pub fn normalize_instance(inst: &Instance) -> Result<(Instance, ScaleRecord)> {
    let report = validate_instance(inst);
    if !report.is_empty() {
        return Err(Error::InvalidInstance(report));
    }
    let min_p = inst.jobs.iter().map(|j| j.size).fold(f64::INFINITY, f64::min);
    let alpha = 1.0 / min_p;
    let beta = 1.0 / inst.fastest_speed();
    let scale = ScaleRecord { alpha, beta };
    if alpha == 1.0 && beta == 1.0 {
        return Ok((inst.clone(), ScaleRecord::IDENTITY));
    }
    let mut out = inst.clone();
    for j in &mut out.jobs {
        j.size *= alpha;
    }
    for m in &mut out.machines {
        m.speed *= beta;
    }
    out.rho = inst.rho * scale.time_factor();
    Ok((out, scale))
}
