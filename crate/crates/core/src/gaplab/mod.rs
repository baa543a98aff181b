//! Integrality-gap experiments: the fractional certificate for layered
//! instances, alternative relaxations, and integral-versus-fractional
//! measurements.

mod alternate;

pub use alternate::{build_alternate_relaxation, default_horizon, RelaxationKind};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{gen_layered_gap, layer_of, Instance, Job, Machine};
use crate::lp::{
    build_relaxation, check_lp_feasibility, solve_lp, LpSolution, SolveOptions, FEAS_TOL,
};
use crate::oracle::combinatorial_baseline;
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::schedmodel::validate_schedule;

/// Shape of a layered instance: `levels` layers where each job below the top
/// depends on at most `degree` jobs of the layer directly above.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LayerShape {
    pub levels: usize,
    pub degree: usize,
}

/// Checks that ids carry layer tags and every edge goes one layer down.
pub fn layer_shape(inst: &Instance) -> Result<(Vec<usize>, LayerShape)> {
    let layer = layer_of(inst)?;
    let dag = inst.dag()?;
    for (v, ps) in dag.preds.iter().enumerate() {
        if let Some(&u) = ps.iter().find(|&&u| layer[u] != layer[v] + 1) {
            return Err(Error::NotLayered(format!(
                "edge {} -> {} joins layers {} and {}",
                inst.jobs[u].id, inst.jobs[v].id, layer[u], layer[v]
            )));
        }
    }
    let levels = layer.iter().copied().max().unwrap_or(0);
    let degree = dag.preds.iter().map(Vec::len).max().unwrap_or(0);
    Ok((layer, LayerShape { levels, degree }))
}

/// Spreads every job evenly over all machines and starts layer `l` of `L`
/// at `(L - l) rho / L`, with makespan `rho`. The point is checked against
/// the relaxation and rejected with the violated rows if it does not fit.
pub fn gap_lp_certificate(inst: &Instance) -> Result<LpSolution> {
    let (layer, shape) = layer_shape(inst)?;
    let relax = build_relaxation(inst)?;
    let (n, m, rho) = (inst.n(), inst.m(), inst.rho);
    let big_l = shape.levels as f64;
    let mut values = vec![0.0; relax.model.vars.len()];
    for v in 0..n {
        for i in 0..m {
            values[relax.x(v, i)] = 1.0 / m as f64;
        }
        values[relax.s(v)] = (big_l - layer[v] as f64) * rho / big_l;
    }
    for (u, v) in relax.preds.pairs() {
        for i in 0..m {
            let z = relax.z(u, v, i).expect("pair has z variables");
            values[z] = (i + 1) as f64 / m as f64;
        }
    }
    values[relax.c()] = rho;
    let bad = check_lp_feasibility(&values, &relax.model, FEAS_TOL);
    if !bad.is_empty() {
        let rows: Vec<String> = bad.iter().take(5).map(|r| format!("{} ({:.3e})", r.row, r.residual)).collect();
        return Err(Error::NotLayered(format!(
            "spread point violates {} row(s): {}",
            bad.len(),
            rows.join(", ")
        )));
    }
    Ok(LpSolution::feasible_point(&relax.model, values))
}

/// `levels` layers of `width` unit jobs where every job of a layer precedes
/// every job of the layer below, on `width` unit machines with delay `rho`.
/// Ids follow the layered convention, with layer 1 at the bottom.
pub fn gen_complete_layers(levels: usize, width: usize, rho: f64) -> Result<Instance> {
    if levels < 1 || width < 1 || !(rho >= 0.0) {
        return Err(Error::Parameter("need levels >= 1, width >= 1, rho >= 0".into()));
    }
    let id = |l: usize, k: usize| format!("L{l}_{k}");
    let jobs = (1..=levels)
        .flat_map(|l| (0..width).map(move |k| Job::new(id(l, k), 1.0)))
        .collect();
    let mut edges = Vec::new();
    for l in 1..levels {
        for a in 0..width {
            for b in 0..width {
                edges.push((id(l + 1, a), id(l, b)));
            }
        }
    }
    let machines = (0..width).map(|i| Machine::new(format!("m{i}"), 1.0)).collect();
    Ok(Instance::new(rho, jobs, machines, edges))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<LayerShape>,
    pub rho: f64,
    pub m: usize,
    pub n: usize,
    /// Fractional value: the certificate on layered inputs, else the solved
    /// relaxation in input time units.
    pub lp_value: f64,
    pub from_certificate: bool,
    pub pipeline_makespan: f64,
    pub baseline_makespan: f64,
    /// Best integral makespan over the LP value.
    pub ratio: f64,
}

impl GapReport {
    pub fn best_makespan(&self) -> f64 {
        self.pipeline_makespan.min(self.baseline_makespan)
    }
}

pub fn measure_gap(inst: &Instance) -> Result<GapReport> {
    let pipe = run_pipeline(inst, &PipelineConfig::default())?;
    let base = combinatorial_baseline(inst).map_err(Error::at("baseline"))?;
    let base_report = validate_schedule(inst, &base);
    if !base_report.valid {
        return Err(Error::at("baseline")(Error::InvalidSchedule(base_report)));
    }
    let certificate = layer_shape(inst).ok().and_then(|(_, shape)| {
        gap_lp_certificate(inst).ok().map(|c| (shape, c.objective))
    });
    let (shape, lp_value, from_certificate) = match certificate {
        Some((shape, value)) => (Some(shape), value, true),
        None => {
            let scale = pipe.report.scale;
            (None, scale.to_original_time(pipe.report.lp_objective), false)
        }
    };
    let mut report = GapReport {
        shape,
        rho: inst.rho,
        m: inst.m(),
        n: inst.n(),
        lp_value,
        from_certificate,
        pipeline_makespan: pipe.report.makespan,
        baseline_makespan: base_report.makespan,
        ratio: f64::NAN,
    };
    report.ratio = report.best_makespan() / lp_value;
    Ok(report)
}

/// Measures the default layered instance for every `(levels, degree)` pair,
/// in parallel. Failed points keep their error.
pub fn gap_sweep(shapes: &[(usize, usize)], seed: u64) -> Vec<Result<GapReport>> {
    shapes
        .par_iter()
        .map(|&(l, d)| measure_gap(&gen_layered_gap(l, d, seed)?))
        .collect()
}

pub fn gap_csv(reports: &[GapReport]) -> String {
    let mut out = String::from("levels,degree,rho,m,n,lp_value,from_certificate,pipeline,baseline,ratio\n");
    for r in reports {
        let (l, d) = r.shape.map_or((String::new(), String::new()), |s| {
            (s.levels.to_string(), s.degree.to_string())
        });
        out += &format!(
            "{l},{d},{},{},{},{},{},{},{},{}\n",
            r.rho, r.m, r.n, r.lp_value, r.from_certificate, r.pipeline_makespan, r.baseline_makespan, r.ratio
        );
    }
    out
}

/// Solves one alternative relaxation with default options.
pub fn solve_alternate(inst: &Instance, kind: RelaxationKind) -> Result<LpSolution> {
    Ok(solve_lp(&build_alternate_relaxation(inst, kind)?, &SolveOptions::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_layered_gap_with_rho;
    use crate::testutil::unit;

    #[test]
    fn certificate_small_family() {
        let c = gap_lp_certificate(&gen_layered_gap_with_rho(2, 1, 2, 0).unwrap()).unwrap();
        assert_eq!(c.objective, 2.0);
        let c = gap_lp_certificate(&gen_layered_gap(2, 2, 3).unwrap()).unwrap();
        assert_eq!(c.objective, 4.0);
    }

    #[test]
    fn tampered_instance_rejected() {
        let mut inst = gen_layered_gap(2, 2, 3).unwrap();
        inst.edges.push(("L1_0".into(), "L1_1".into()));
        assert!(matches!(gap_lp_certificate(&inst), Err(Error::NotLayered(_))));
        assert!(gap_lp_certificate(&unit(&["a"], 1, 1.0, &[])).is_err());
    }

    #[test]
    fn complete_layers_shape() {
        let inst = gen_complete_layers(2, 2, 2.0).unwrap();
        let (_, shape) = layer_shape(&inst).unwrap();
        assert_eq!(shape, LayerShape { levels: 2, degree: 2 });
        assert_eq!(inst.edges.len(), 4);
    }

    #[test]
    fn single_job_ratio_one() {
        let r = measure_gap(&unit(&["a"], 1, 1.0, &[])).unwrap();
        assert!(!r.from_certificate);
        assert!((r.ratio - 1.0).abs() < 1e-9);
    }
}
