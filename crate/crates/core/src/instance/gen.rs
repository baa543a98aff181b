//! Seeded instance generators. All randomness comes from `ChaCha8Rng`
//! seeded through `SeedableRng::seed_from_u64`, so a seed reproduces the same
//! corpus on every platform.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Instance, Job, Machine};
use crate::error::{Error, Result};
use crate::schedmodel::{Placement, Schedule};

fn width(count: usize) -> usize {
    count.saturating_sub(1).to_string().len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomDagParams {
    pub n: usize,
    pub m: usize,
    pub edge_prob: f64,
    pub size_range: (f64, f64),
    pub speed_range: (f64, f64),
    pub rho: f64,
    pub seed: u64,
}

impl Default for RandomDagParams {
    fn default() -> Self {
        RandomDagParams {
            n: 10,
            m: 3,
            edge_prob: 0.2,
            size_range: (1.0, 1.0),
            speed_range: (1.0, 1.0),
            rho: 1.0,
            seed: 0,
        }
    }
}

/// Random DAG: jobs are shuffled into a hidden topological order and every
/// forward pair becomes an edge with probability `edge_prob`.
pub fn gen_random_dag(p: &RandomDagParams) -> Result<Instance> {
    let (slo, shi) = p.size_range;
    let (vlo, vhi) = p.speed_range;
    if p.n == 0 || p.m == 0 {
        return Err(Error::Parameter("n and m must be at least 1".into()));
    }
    if !(slo > 0.0 && slo <= shi && vlo > 0.0 && vlo <= vhi) {
        return Err(Error::Parameter(
            "size and speed ranges must be positive and ordered".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p.edge_prob) {
        return Err(Error::Parameter("edge_prob must lie in [0, 1]".into()));
    }
    if !(p.rho.is_finite() && p.rho >= 0.0) {
        return Err(Error::Parameter("rho must be finite and >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (wj, wm) = (width(p.n), width(p.m));
    let jobs: Vec<Job> = (0..p.n)
        .map(|i| Job::new(format!("j{i:0wj$}"), rng.gen_range(slo..=shi)))
        .collect();
    let machines: Vec<Machine> = (0..p.m)
        .map(|i| Machine::new(format!("m{i:0wm$}"), rng.gen_range(vlo..=vhi)))
        .collect();
    let mut order: Vec<usize> = (0..p.n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for a in 0..p.n {
        for b in a + 1..p.n {
            if rng.gen_bool(p.edge_prob) {
                edges.push((jobs[order[a]].id.clone(), jobs[order[b]].id.clone()));
            }
        }
    }
    Ok(Instance::new(p.rho, jobs, machines, edges))
}

/// Layered instance with `levels` layers where each job outside the top layer
/// depends on `degree` distinct jobs of the layer above. The delay is
/// `degree^levels`, with one unit machine per unit of delay.
pub fn gen_layered_gap(levels: usize, degree: usize, seed: u64) -> Result<Instance> {
    let rho = u32::try_from(levels)
        .ok()
        .and_then(|l| (degree as u64).checked_pow(l))
        .filter(|&r| r <= 1 << 20)
        .ok_or_else(|| Error::Parameter("degree^levels is too large".into()))?;
    gen_layered_gap_with_rho(levels, degree, rho as usize, seed)
}

/// Same family with the delay (and machine count) chosen explicitly.
///
/// Job ids are `L{layer}_{k}`; layer 1 holds the sinks and layer `levels`
/// the sources.
pub fn gen_layered_gap_with_rho(
    levels: usize,
    degree: usize,
    rho: usize,
    seed: u64,
) -> Result<Instance> {
    if levels < 2 || degree < 1 || rho < 1 {
        return Err(Error::Parameter(
            "need levels >= 2, degree >= 1, rho >= 1".into(),
        ));
    }
    let m = rho;
    let total = m * rho;
    if total % levels != 0 {
        return Err(Error::Parameter(format!(
            "m*rho/L = {total}/{levels} is not an integer"
        )));
    }
    let per_layer = total / levels;
    if degree > per_layer {
        return Err(Error::Parameter(format!(
            "degree {degree} exceeds layer size {per_layer}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = width(per_layer);
    let id = |layer: usize, k: usize| format!("L{layer}_{k:0w$}");
    let mut jobs = Vec::with_capacity(total);
    for layer in 1..=levels {
        for k in 0..per_layer {
            jobs.push(Job::new(id(layer, k), 1.0));
        }
    }
    let mut edges = Vec::with_capacity((levels - 1) * per_layer * degree);
    for layer in 1..levels {
        for k in 0..per_layer {
            let mut picks = index::sample(&mut rng, per_layer, degree).into_vec();
            picks.sort_unstable();
            for u in picks {
                edges.push((id(layer + 1, u), id(layer, k)));
            }
        }
    }
    let wm = width(m);
    let machines = (0..m)
        .map(|i| Machine::new(format!("m{i:0wm$}"), 1.0))
        .collect();
    Ok(Instance::new(rho as f64, jobs, machines, edges))
}

/// Layer of every job of a layered instance, parsed from its `L{layer}_` id.
pub fn layer_of(inst: &Instance) -> Result<Vec<usize>> {
    inst.jobs
        .iter()
        .map(|j| {
            j.id.strip_prefix('L')
                .and_then(|rest| rest.split_once('_'))
                .and_then(|(l, _)| l.parse::<usize>().ok())
                .filter(|&l| l >= 1)
                .ok_or_else(|| Error::NotLayered(format!("job id {} has no layer tag", j.id)))
        })
        .collect()
}

/// Complete binary out-tree with `rho_exp` levels, preceded by one extra job
/// `vp` feeding the root. All jobs are unit size and there is one unit
/// machine per leaf. Tree nodes use heap numbering `t1` (root) onwards.
pub fn gen_binary_tree(rho_exp: u32) -> Result<Instance> {
    if !(1..=20).contains(&rho_exp) {
        return Err(Error::Parameter("rho_exp must lie in 1..=20".into()));
    }
    let nodes = (1usize << rho_exp) - 1;
    let m = 1usize << (rho_exp - 1);
    let w = width(nodes + 1);
    let node = |k: usize| format!("t{k:0w$}");
    let mut jobs = vec![Job::new("vp", 1.0)];
    jobs.extend((1..=nodes).map(|k| Job::new(node(k), 1.0)));
    let mut edges = vec![("vp".to_string(), node(1))];
    for k in 2..=nodes {
        edges.push((node(k / 2), node(k)));
    }
    let wm = width(m);
    let machines = (0..m)
        .map(|i| Machine::new(format!("m{i:0wm$}"), 1.0))
        .collect();
    Ok(Instance::new(rho_exp as f64, jobs, machines, edges))
}

/// Every machine runs the whole root path of its own leaf, so no job ever
/// waits for communication. Makespan is `rho_exp + 1`.
pub fn path_duplication_schedule(rho_exp: u32) -> Result<Schedule> {
    let inst = gen_binary_tree(rho_exp)?;
    let nodes = (1usize << rho_exp) - 1;
    let first_leaf = 1usize << (rho_exp - 1);
    let w = width(nodes + 1);
    let mut placements = Vec::new();
    for (i, mach) in inst.machines.iter().enumerate() {
        let mut path = Vec::new();
        let mut k = first_leaf + i;
        while k >= 1 {
            path.push(format!("t{k:0w$}"));
            k /= 2;
        }
        path.push("vp".into());
        path.reverse();
        for (t, job) in path.into_iter().enumerate() {
            placements.push(Placement::new(job, mach.id.clone(), t as f64));
        }
    }
    Ok(Schedule { placements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_instance;

    #[test]
    fn random_dag_extremes() {
        let base = RandomDagParams {
            n: 3,
            m: 2,
            ..Default::default()
        };
        let none = gen_random_dag(&RandomDagParams {
            edge_prob: 0.0,
            ..base.clone()
        })
        .unwrap();
        assert!(none.edges.is_empty());
        let full = gen_random_dag(&RandomDagParams {
            edge_prob: 1.0,
            ..base.clone()
        })
        .unwrap();
        assert_eq!(full.edges.len(), 3);
        let dag = full.dag().unwrap();
        let order = &dag.topo;
        assert!(dag.preds[order[2]].len() == 2 && dag.preds[order[1]] == [order[0]]);
    }

    #[test]
    fn random_dag_is_seeded() {
        let p = RandomDagParams {
            n: 12,
            m: 4,
            edge_prob: 0.3,
            size_range: (1.0, 5.0),
            speed_range: (0.2, 1.0),
            rho: 2.0,
            seed: 99,
        };
        let a = gen_random_dag(&p).unwrap();
        assert_eq!(a, gen_random_dag(&p).unwrap());
        assert!(validate_instance(&a).is_empty());
        assert_ne!(a, gen_random_dag(&RandomDagParams { seed: 100, ..p }).unwrap());
    }

    #[test]
    fn layered_shape() {
        let g = gen_layered_gap(2, 4, 7).unwrap();
        assert_eq!((g.rho, g.m(), g.n(), g.edges.len()), (16.0, 16, 256, 512));
        assert_eq!(g, gen_layered_gap(2, 4, 7).unwrap());
        assert!(validate_instance(&g).is_empty());

        // degree 1 gives delay 1 and a fractional layer size.
        assert!(gen_layered_gap(2, 1, 0).is_err());
        let g = gen_layered_gap_with_rho(2, 1, 2, 0).unwrap();
        assert_eq!((g.rho, g.m(), g.n(), g.edges.len()), (2.0, 2, 4, 2));
    }

    #[test]
    fn layered_degrees_exact() {
        let g = gen_layered_gap(4, 2, 11).unwrap();
        let layers = layer_of(&g).unwrap();
        let dag = g.dag().unwrap();
        for (v, &l) in layers.iter().enumerate() {
            let want = if l < 4 { 2 } else { 0 };
            assert_eq!(dag.preds[v].len(), want);
            assert!(dag.preds[v].iter().all(|&u| layers[u] == l + 1));
        }
        for l in 1..=4 {
            assert_eq!(layers.iter().filter(|&&x| x == l).count(), 64);
        }
    }

    #[test]
    fn binary_tree_counts() {
        let t = gen_binary_tree(3).unwrap();
        assert_eq!((t.n(), t.m(), t.rho), (8, 4, 3.0));
        let t = gen_binary_tree(1).unwrap();
        assert_eq!((t.n(), t.m()), (2, 1));
        let t = gen_binary_tree(4).unwrap();
        assert_eq!((t.n(), t.m()), (16, 8));
        let dag = t.dag().unwrap();
        let vp = t.jobs.iter().position(|j| j.id == "vp").unwrap();
        assert_eq!(dag.succs[vp].len(), 1);
        assert!(dag.preds[vp].is_empty());
        for v in 0..t.n() {
            if v != vp {
                assert_eq!(dag.preds[v].len(), 1);
            }
        }
        let s = path_duplication_schedule(4).unwrap();
        assert_eq!(s.placements.len(), 8 * 5);
        let end = s.placements.iter().map(|p| p.start + 1.0).fold(0.0, f64::max);
        assert_eq!(end, 5.0);
    }
}
