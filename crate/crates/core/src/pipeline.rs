//! End-to-end run: normalize, drop slow machines, solve the relaxation,
//! round to groups, schedule, validate and analyse.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grouping::{assign_job_groups, partition_machine_groups, GroupAssignment};
use crate::instance::{normalize_instance, Instance, ScaleRecord};
use crate::lp::{build_relaxation, solve_lp, Backend, LpSolution, LpStatus, SolveOptions};
use crate::preprocess::filter_slow_machines;
use crate::schedmodel::{
    gantt, lemma_diagnostics, validate_schedule, AnalysisReport, GanttRow, Schedule, ScheduleReport,
};
use crate::scheduler::{default_eta, run_group_scheduler_traced, SchedulerStats, TraceEvent};

/// Settings for one pipeline run. Every field is echoed into the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    /// Overlap parameter; `None` uses [`default_eta`] of the normalized delay.
    pub eta: Option<f64>,
    /// Recorded for reproducibility; the pipeline itself draws no randomness.
    pub seed: u64,
    /// Optimality tolerance handed to the LP solver.
    pub tol: f64,
    pub backend: Backend,
    /// Directory receiving every stage artifact, if set.
    pub output_dir: Option<PathBuf>,
    pub skip_preprocess: bool,
    pub emit_trace: bool,
    pub emit_gantt: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            eta: None,
            seed: 0,
            tol: SolveOptions::default().tol,
            backend: Backend::Auto,
            output_dir: None,
            skip_preprocess: false,
            emit_trace: false,
            emit_gantt: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub scale: ScaleRecord,
    pub removed_machines: Vec<String>,
    pub lp_status: LpStatus,
    /// Relaxation value in normalized time units.
    pub lp_objective: f64,
    pub lp_iterations: usize,
    pub eta: f64,
    /// Makespan in the input's time units.
    pub makespan: f64,
    /// Check of the output against the input instance.
    pub validation: ScheduleReport,
    pub scheduler: SchedulerStats,
    /// Diagnostics in normalized time units.
    pub analysis: AnalysisReport,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    /// Schedule on the input instance, in its time units.
    pub schedule: Schedule,
    pub report: PipelineReport,
    /// The instance actually scheduled: normalized, slow machines removed.
    pub working: Instance,
    pub lp: LpSolution,
    pub assignment: GroupAssignment,
    pub trace: Option<Vec<TraceEvent>>,
    pub gantt: Option<Vec<GanttRow>>,
}

pub fn run_pipeline(inst: &Instance, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let (norm, scale) = normalize_instance(inst).map_err(Error::at("normalize"))?;
    let (working, removed_machines) = if cfg.skip_preprocess {
        (norm, Vec::new())
    } else {
        let f = filter_slow_machines(&norm);
        (f.filtered, f.removed_ids)
    };

    let relax = build_relaxation(&working).map_err(Error::at("lp"))?;
    let opts = SolveOptions {
        tol: cfg.tol,
        backend: cfg.backend,
        ..SolveOptions::default()
    };
    let lp = solve_lp(&relax.model, &opts);
    if !lp.is_optimal() {
        return Err(Error::at("lp")(Error::Invariant(format!(
            "relaxation solve ended with status {:?}",
            lp.status
        ))));
    }

    let groups = partition_machine_groups(&working);
    let assignment =
        assign_job_groups(&working, &relax, &lp, groups).map_err(Error::at("grouping"))?;

    let eta = cfg.eta.unwrap_or_else(|| default_eta(working.rho));
    let run = run_group_scheduler_traced(&working, &assignment, eta, cfg.emit_trace)
        .map_err(Error::at("scheduler"))?;
    let inner = validate_schedule(&working, &run.schedule);
    if !inner.valid {
        return Err(Error::at("scheduler")(Error::InvalidSchedule(inner)));
    }
    let analysis = lemma_diagnostics(&working, &assignment, &run.schedule, eta)
        .map_err(Error::at("analysis"))?;

    let schedule = scale.denormalize_schedule(&run.schedule);
    let validation = validate_schedule(inst, &schedule);
    if !validation.valid {
        return Err(Error::at("denormalize")(Error::InvalidSchedule(validation)));
    }
    let report = PipelineReport {
        config: cfg.clone(),
        scale,
        removed_machines,
        lp_status: lp.status,
        lp_objective: lp.objective,
        lp_iterations: lp.iterations,
        eta,
        makespan: validation.makespan,
        validation,
        scheduler: run.stats,
        analysis,
    };
    let out = PipelineOutput {
        gantt: cfg.emit_gantt.then(|| gantt(inst, &schedule)),
        trace: cfg.emit_trace.then_some(run.trace),
        schedule,
        report,
        working,
        lp,
        assignment,
    };
    if let Some(dir) = &cfg.output_dir {
        write_artifacts(dir, &out).map_err(Error::at("output"))?;
    }
    Ok(out)
}

/// Diagnostics for an arbitrary valid schedule, measured against the
/// relaxation and group assignment of the normalized instance.
pub fn analyze_schedule(
    inst: &Instance,
    sched: &Schedule,
    eta: Option<f64>,
    opts: &SolveOptions,
) -> Result<AnalysisReport> {
    let report = validate_schedule(inst, sched);
    if !report.valid {
        return Err(Error::InvalidSchedule(report));
    }
    let (norm, scale) = normalize_instance(inst).map_err(Error::at("normalize"))?;
    let mut scaled = sched.clone();
    for p in &mut scaled.placements {
        p.start *= scale.time_factor();
    }
    let relax = build_relaxation(&norm).map_err(Error::at("lp"))?;
    let lp = solve_lp(&relax.model, opts);
    if !lp.is_optimal() {
        return Err(Error::at("lp")(Error::Invariant(format!(
            "relaxation solve ended with status {:?}",
            lp.status
        ))));
    }
    let groups = partition_machine_groups(&norm);
    let assignment = assign_job_groups(&norm, &relax, &lp, groups).map_err(Error::at("grouping"))?;
    let eta = eta.unwrap_or_else(|| default_eta(norm.rho));
    lemma_diagnostics(&norm, &assignment, &scaled, eta).map_err(Error::at("analysis"))
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invariant(format!("cannot serialize {name}: {e}")))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn write_artifacts(dir: &Path, out: &PipelineOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(dir, "working_instance.json", &out.working)?;
    write_json(dir, "lp_solution.json", &out.lp)?;
    write_json(dir, "assignment.json", &out.assignment)?;
    write_json(dir, "schedule.json", &out.schedule)?;
    write_json(dir, "report.json", &out.report)?;
    if let Some(t) = &out.trace {
        write_json(dir, "trace.json", t)?;
    }
    if let Some(g) = &out.gantt {
        write_json(dir, "gantt.json", g)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_binary_tree, gen_random_dag, RandomDagParams};
    use crate::testutil::unit;

    #[test]
    fn single_job() {
        let out = run_pipeline(&unit(&["a"], 1, 1.0, &[]), &PipelineConfig::default()).unwrap();
        assert_eq!(out.report.makespan, 1.0);
        assert!(out.report.analysis.diagnostics.all_ok());
    }

    #[test]
    fn binary_tree_end_to_end() {
        let inst = gen_binary_tree(2).unwrap();
        let out = run_pipeline(&inst, &PipelineConfig::default()).unwrap();
        assert!(out.report.validation.valid);
        assert!(out.report.analysis.phases.is_some());
    }

    #[test]
    fn reports_are_reproducible() {
        let p = RandomDagParams {
            n: 30,
            m: 6,
            seed: 11,
            ..RandomDagParams::default()
        };
        let inst = gen_random_dag(&p).unwrap();
        let cfg = PipelineConfig::default();
        let a = serde_json::to_string(&run_pipeline(&inst, &cfg).unwrap().report).unwrap();
        let b = serde_json::to_string(&run_pipeline(&inst, &cfg).unwrap().report).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rescaled_input_maps_back() {
        let mut inst = unit(&["a", "b", "c"], 2, 3.0, &[("a", "b"), ("a", "c")]);
        for j in &mut inst.jobs {
            j.size *= 4.0;
        }
        for mc in &mut inst.machines {
            mc.speed *= 2.0;
        }
        let out = run_pipeline(&inst, &PipelineConfig::default()).unwrap();
        assert!(out.report.validation.valid);
        assert!(out.report.makespan >= 4.0 - 1e-9);
    }
}
