//! Command-line front end. Exit codes: 0 success, 2 validation failure,
//! 1 usage or input error.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use delaysched::dedup::deduplicate_with_stats;
use delaysched::gaplab::{
    gap_csv, gap_sweep, measure_gap, solve_alternate, GapReport, RelaxationKind,
};
use delaysched::instance::{
    gen_binary_tree, gen_layered_gap, gen_layered_gap_with_rho, gen_random_dag, instance_from_json,
    instance_to_json, path_duplication_schedule, schedule_from_json, schedule_to_json,
    validate_instance, RandomDagParams,
};
use delaysched::lp::{build_relaxation, solve_lp, to_lp_format, SolveOptions};
use delaysched::oracle::{combinatorial_baseline, exact_optimal_makespan, OracleLimits};
use delaysched::pipeline::{analyze_schedule, run_pipeline, PipelineConfig};
use delaysched::preprocess::{filter_slow_machines, rehost_schedule};
use delaysched::schedmodel::{gantt, validate_schedule};
use delaysched::{Error, Instance, Schedule};

#[derive(Parser)]
#[command(name = "delaysched", version, about = "Scheduling with communication delay on related machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Input JSON file; stdin when omitted.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, env = "DELAYSCHED_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance or a reference schedule.
    Gen {
        #[command(subcommand)]
        family: Family,
        #[arg(long, short, global = true)]
        output: Option<PathBuf>,
    },
    /// Drop slow machines, or rehost a schedule that used them.
    Preprocess {
        #[command(flatten)]
        io: Io,
        /// Schedule to rehost onto the kept machines.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Solve the relaxation only.
    Solve {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = Relax::Main)]
        relaxation: Relax,
        /// Step horizon of the time-indexed relaxation.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Also write the model in LP text format.
        #[arg(long)]
        lp_file: Option<PathBuf>,
    },
    /// Run the full pipeline and write the schedule.
    Schedule {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        seed: SeedArg,
        /// Overlap parameter; defaults to the delay-derived value.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Write the pipeline report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write every stage artifact into this directory.
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[arg(long)]
        skip_preprocess: bool,
        /// Write the scheduler event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write per-machine Gantt rows here.
        #[arg(long)]
        gantt: Option<PathBuf>,
    },
    /// Check a schedule against an instance.
    Validate {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        gantt: Option<PathBuf>,
    },
    /// Chain, phase and bound diagnostics for a schedule.
    Analyze {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Turn a schedule with duplicates into one running each job once.
    Dedup {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        schedule: PathBuf,
        /// Write round plan and statistics here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Exact optimum of a tiny instance.
    Oracle {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        allow_dup: bool,
        #[arg(long, default_value_t = OracleLimits::default().node_budget)]
        max_nodes: u64,
    },
    /// Integral versus fractional values on gap instances.
    Gap {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        seed: SeedArg,
        /// Layers of the generated instance when no input is given.
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// Comma-separated `levels:degree` pairs, written as CSV.
        #[arg(long)]
        sweep: Option<String>,
        /// Also solve this alternative relaxation.
        #[arg(long, value_enum)]
        relaxation: Option<Relax>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Pipeline and baseline over a batch of random instances.
    Bench {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 4.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.1)]
        edge_prob: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Family {
    /// Random DAG over a hidden topological order.
    Random {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 0.2)]
        edge_prob: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, num_args = 2, default_values_t = [1.0, 1.0])]
        sizes: Vec<f64>,
        #[arg(long, num_args = 2, default_values_t = [1.0, 1.0])]
        speeds: Vec<f64>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Layered gap instance with delay `degree^levels` unless overridden.
    Layered {
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long)]
        rho: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Binary out-tree with a feeding job.
    Tree {
        #[arg(long, default_value_t = 2)]
        rho_exp: u32,
    },
    /// Per-path duplication schedule for the binary out-tree.
    TreeSchedule {
        #[arg(long, default_value_t = 2)]
        rho_exp: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Relax {
    Main,
    SameMachine,
    TimeIndexed,
    SamePhase,
}

impl Relax {
    fn kind(self, horizon: Option<usize>) -> Option<RelaxationKind> {
        match self {
            Relax::Main => None,
            Relax::SameMachine => Some(RelaxationKind::SameMachine),
            Relax::TimeIndexed => Some(RelaxationKind::TimeIndexed { horizon }),
            Relax::SamePhase => Some(RelaxationKind::SamePhase),
        }
    }
}

/// Failure split by exit code.
enum Fail {
    Usage(String),
    Invalid(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match root(&e) {
            Error::InvalidInstance(_) | Error::InvalidSchedule(_) => Fail::Invalid(e.to_string()),
            _ => Fail::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail::Usage(e.to_string())
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::Stage { source, .. } => root(source),
        other => other,
    }
}

type Run = Result<(), Fail>;

fn read_text(path: Option<&Path>) -> Result<String, Fail> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Fail::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn read_instance(path: Option<&Path>) -> Result<Instance, Fail> {
    Ok(instance_from_json(&read_text(path)?)?)
}

fn read_schedule(path: &Path) -> Result<Schedule, Fail> {
    Ok(schedule_from_json(&read_text(Some(path))?)?)
}

fn emit(path: Option<&Path>, text: &str) -> Run {
    let text = if text.ends_with('\n') { text.to_string() } else { format!("{text}\n") };
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Fail::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

/// Valid instance or a validation failure.
fn checked(inst: Instance) -> Result<Instance, Fail> {
    let r = validate_instance(&inst);
    if r.is_empty() {
        Ok(inst)
    } else {
        Err(Fail::Invalid(format!("invalid instance: {r}")))
    }
}

fn gen(family: Family, output: Option<&Path>) -> Run {
    let text = match family {
        Family::Random {
            n,
            m,
            edge_prob,
            rho,
            sizes,
            speeds,
            seed,
        } => {
            let p = RandomDagParams {
                n,
                m,
                edge_prob,
                size_range: (sizes[0], sizes[1]),
                speed_range: (speeds[0], speeds[1]),
                rho,
                seed: seed.seed,
            };
            instance_to_json(&gen_random_dag(&p)?)
        }
        Family::Layered {
            levels,
            degree,
            rho,
            seed,
        } => {
            let inst = match rho {
                Some(r) => gen_layered_gap_with_rho(levels, degree, r, seed.seed)?,
                None => gen_layered_gap(levels, degree, seed.seed)?,
            };
            instance_to_json(&inst)
        }
        Family::Tree { rho_exp } => instance_to_json(&gen_binary_tree(rho_exp)?),
        Family::TreeSchedule { rho_exp } => schedule_to_json(&path_duplication_schedule(rho_exp)?),
    };
    emit(output, &text)
}

fn preprocess(io: &Io, schedule: Option<&Path>) -> Run {
    let inst = checked(read_instance(io.input.as_deref())?)?;
    let filter = filter_slow_machines(&inst);
    let Some(path) = schedule else {
        #[derive(Serialize)]
        struct Out<'a> {
            removed: &'a [String],
            instance: &'a Instance,
        }
        let out = Out {
            removed: &filter.removed_ids,
            instance: &filter.filtered,
        };
        return emit(io.output.as_deref(), &json(&out));
    };
    let sched = read_schedule(path)?;
    let out = rehost_schedule(&inst, &sched)?;
    let r = validate_schedule(&filter.filtered, &out);
    if !r.valid {
        return Err(Fail::Invalid(format!("rehosted schedule: {r}")));
    }
    eprintln!(
        "rehosted: makespan {} -> {} on {} machine(s)",
        validate_schedule(&inst, &sched).makespan,
        r.makespan,
        filter.filtered.m()
    );
    emit(io.output.as_deref(), &schedule_to_json(&out))
}

fn solve(io: &Io, relaxation: Relax, horizon: Option<usize>, tol: f64, lp_file: Option<&Path>) -> Run {
    let inst = checked(read_instance(io.input.as_deref())?)?;
    let opts = SolveOptions {
        tol,
        ..SolveOptions::default()
    };
    let (model, sol) = match relaxation.kind(horizon) {
        None => {
            let relax = build_relaxation(&inst)?;
            let sol = solve_lp(&relax.model, &opts);
            (relax.model, sol)
        }
        Some(kind) => {
            let model = delaysched::gaplab::build_alternate_relaxation(&inst, kind)?;
            let sol = solve_lp(&model, &opts);
            (model, sol)
        }
    };
    if let Some(p) = lp_file {
        fs::write(p, to_lp_format(&model, "relaxation"))?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        status: delaysched::lp::LpStatus,
        objective: f64,
        iterations: usize,
        variables: Vec<(&'a str, f64)>,
    }
    let out = Out {
        status: sol.status,
        objective: sol.objective,
        iterations: sol.iterations,
        variables: model
            .vars
            .iter()
            .zip(&sol.values)
            .filter(|(_, &x)| x.abs() > 1e-12)
            .map(|(v, &x)| (v.name.as_str(), x))
            .collect(),
    };
    emit(io.output.as_deref(), &json(&out))
}

#[allow(clippy::too_many_arguments)]
fn schedule(
    io: &Io,
    seed: u64,
    eta: Option<f64>,
    tol: f64,
    report: Option<&Path>,
    artifacts: Option<PathBuf>,
    skip_preprocess: bool,
    trace: Option<&Path>,
    gantt_path: Option<&Path>,
) -> Run {
    let inst = checked(read_instance(io.input.as_deref())?)?;
    let cfg = PipelineConfig {
        eta,
        seed,
        tol,
        output_dir: artifacts,
        skip_preprocess,
        emit_trace: trace.is_some(),
        emit_gantt: gantt_path.is_some(),
        ..PipelineConfig::default()
    };
    let out = run_pipeline(&inst, &cfg)?;
    let r = &out.report;
    eprintln!(
        "makespan {:.6}, relaxation {:.6}, eta {:.3}, {} placement(s), checks {}",
        r.makespan,
        r.scale.to_original_time(r.lp_objective),
        r.eta,
        out.schedule.placements.len(),
        if r.analysis.diagnostics.all_ok() { "ok" } else { "FAILED" }
    );
    if let Some(p) = report {
        emit(Some(p), &json(r))?;
    }
    if let (Some(p), Some(t)) = (trace, &out.trace) {
        emit(Some(p), &json(t))?;
    }
    if let (Some(p), Some(g)) = (gantt_path, &out.gantt) {
        emit(Some(p), &json(g))?;
    }
    emit(io.output.as_deref(), &schedule_to_json(&out.schedule))
}

fn validate(io: &Io, schedule: &Path, gantt_path: Option<&Path>) -> Run {
    let inst = checked(read_instance(io.input.as_deref())?)?;
    let sched = read_schedule(schedule)?;
    let r = validate_schedule(&inst, &sched);
    emit(io.output.as_deref(), &json(&r))?;
    if let Some(p) = gantt_path {
        emit(Some(p), &json(&gantt(&inst, &sched)))?;
    }
    if r.valid {
        Ok(())
    } else {
        Err(Fail::Invalid(r.to_string()))
    }
}

fn analyze(io: &Io, schedule: &Path, eta: Option<f64>, tol: f64) -> Run {
    let inst = checked(read_instance(io.input.as_deref())?)?;
    let sched = read_schedule(schedule)?;
    let opts = SolveOptions {
        tol,
        ..SolveOptions::default()
    };
    let report = analyze_schedule(&inst, &sched, eta, &opts)?;
    emit(io.output.as_deref(), &json(&report))
}

fn dedup(io: &Io, schedule: &Path, report: Option<&Path>) -> Run {
    let inst = checked(read_instance(io.input.as_deref())?)?;
    let sched = read_schedule(schedule)?;
    let out = deduplicate_with_stats(&inst, &sched)?;
    let s = &out.stats;
    eprintln!(
        "makespan {} -> {} (ratio {:.3}) over {} round(s)",
        s.input_makespan, s.output_makespan, s.ratio, s.rounds
    );
    if let Some(p) = report {
        #[derive(Serialize)]
        struct Out<'a> {
            stats: &'a delaysched::dedup::DedupStats,
            plan: &'a delaysched::dedup::DedupPlan,
        }
        emit(
            Some(p),
            &json(&Out {
                stats: &out.stats,
                plan: &out.plan,
            }),
        )?;
    }
    emit(io.output.as_deref(), &schedule_to_json(&out.schedule))
}

fn oracle(io: &Io, allow_dup: bool, max_nodes: u64) -> Run {
    let inst = checked(read_instance(io.input.as_deref())?)?;
    let limits = OracleLimits {
        node_budget: max_nodes,
        ..OracleLimits::default()
    };
    let r = exact_optimal_makespan(&inst, allow_dup, &limits)?;
    emit(io.output.as_deref(), &json(&r))
}

fn parse_sweep(spec: &str) -> Result<Vec<(usize, usize)>, Fail> {
    spec.split(',')
        .map(|pair| {
            let (l, d) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| Fail::Usage(format!("sweep entry {pair:?} is not levels:degree")))?;
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Fail::Usage(format!("sweep entry {pair:?}: {e}")))
            };
            Ok((num(l)?, num(d)?))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn gap(
    io: &Io,
    seed: u64,
    levels: usize,
    degree: usize,
    sweep: Option<&str>,
    relaxation: Option<Relax>,
    horizon: Option<usize>,
) -> Run {
    if let Some(spec) = sweep {
        let shapes = parse_sweep(spec)?;
        let mut ok: Vec<GapReport> = Vec::new();
        for (shape, r) in shapes.iter().zip(gap_sweep(&shapes, seed)) {
            match r {
                Ok(r) => ok.push(r),
                Err(e) => eprintln!("levels {} degree {}: {e}", shape.0, shape.1),
            }
        }
        return emit(io.output.as_deref(), &gap_csv(&ok));
    }
    let inst = match &io.input {
        Some(p) => checked(read_instance(Some(p))?)?,
        None => gen_layered_gap(levels, degree, seed)?,
    };
    let report = measure_gap(&inst)?;
    let alternate = match relaxation.and_then(|r| r.kind(horizon)) {
        Some(kind) => {
            let sol = solve_alternate(&inst, kind)?;
            Some((kind.name(), sol.status, sol.objective))
        }
        None => None,
    };
    #[derive(Serialize)]
    struct Out {
        #[serde(flatten)]
        report: GapReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        alternate: Option<(&'static str, delaysched::lp::LpStatus, f64)>,
    }
    emit(io.output.as_deref(), &json(&Out { report, alternate }))
}

fn bench(seed: u64, count: usize, n: usize, m: usize, rho: f64, edge_prob: f64, output: Option<&Path>) -> Run {
    #[derive(Serialize)]
    struct Row {
        seed: u64,
        lp: f64,
        pipeline: f64,
        baseline: f64,
        checks_ok: bool,
        millis: u128,
    }
    let rows: Vec<Result<Row, Error>> = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let p = RandomDagParams {
                n,
                m,
                edge_prob,
                size_range: (1.0, 4.0),
                speed_range: (0.5, 2.0),
                rho,
                seed: seed.wrapping_add(k),
            };
            let inst = gen_random_dag(&p)?;
            let t = Instant::now();
            let out = run_pipeline(&inst, &PipelineConfig::default())?;
            let millis = t.elapsed().as_millis();
            let base = combinatorial_baseline(&inst)?;
            Ok(Row {
                seed: p.seed,
                lp: out.report.scale.to_original_time(out.report.lp_objective),
                pipeline: out.report.makespan,
                baseline: validate_schedule(&inst, &base).makespan,
                checks_ok: out.report.analysis.diagnostics.all_ok(),
                millis,
            })
        })
        .collect();
    let mut text = String::from("seed,lp,pipeline,baseline,checks_ok,millis\n");
    for r in rows {
        let r = r?;
        text += &format!(
            "{},{},{},{},{},{}\n",
            r.seed, r.lp, r.pipeline, r.baseline, r.checks_ok, r.millis
        );
    }
    emit(output, &text)
}

fn dispatch(cli: Cli) -> Run {
    match cli.command {
        Command::Gen { family, output } => gen(family, output.as_deref()),
        Command::Preprocess { io, schedule } => preprocess(&io, schedule.as_deref()),
        Command::Solve {
            io,
            relaxation,
            horizon,
            tol,
            lp_file,
        } => solve(&io, relaxation, horizon, tol, lp_file.as_deref()),
        Command::Schedule {
            io,
            seed,
            eta,
            tol,
            report,
            artifacts,
            skip_preprocess,
            trace,
            gantt,
        } => schedule(
            &io,
            seed.seed,
            eta,
            tol,
            report.as_deref(),
            artifacts,
            skip_preprocess,
            trace.as_deref(),
            gantt.as_deref(),
        ),
        Command::Validate { io, schedule, gantt } => validate(&io, &schedule, gantt.as_deref()),
        Command::Analyze {
            io,
            schedule,
            eta,
            tol,
        } => analyze(&io, &schedule, eta, tol),
        Command::Dedup { io, schedule, report } => dedup(&io, &schedule, report.as_deref()),
        Command::Oracle {
            io,
            allow_dup,
            max_nodes,
        } => oracle(&io, allow_dup, max_nodes),
        Command::Gap {
            io,
            seed,
            levels,
            degree,
            sweep,
            relaxation,
            horizon,
        } => gap(&io, seed.seed, levels, degree, sweep.as_deref(), relaxation, horizon),
        Command::Bench {
            seed,
            count,
            n,
            m,
            rho,
            edge_prob,
            output,
        } => bench(seed.seed, count, n, m, rho, edge_prob, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Fail::Invalid(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(2)
        }
    }
}
