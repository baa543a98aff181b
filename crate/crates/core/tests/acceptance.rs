//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;

use delaysched::dedup::{deduplicate_schedule, deduplicate_with_stats};
use delaysched::gaplab::{gap_lp_certificate, measure_gap};
use delaysched::instance::{
    gen_binary_tree, gen_layered_gap, gen_random_dag, normalize_instance, path_duplication_schedule,
    RandomDagParams,
};
use delaysched::lp::{build_relaxation, check_lp_feasibility, embed_schedule_as_lp, solve_lp, SolveOptions};
use delaysched::oracle::{combinatorial_baseline, exact_optimal_makespan, OracleLimits};
use delaysched::pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
use delaysched::preprocess::{filter_slow_machines, rehost_schedule};
use delaysched::schedmodel::validate_schedule;
use delaysched::{Instance, Schedule};

/// Absolute slack on every asserted inequality.
const TOL: f64 = 1e-6;
const TINY_COUNT: u64 = 240;
const MEDIUM_COUNT: u64 = 120;
const REHOST_COUNT: usize = 24;
const DEDUP_COUNT: usize = 60;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], detail: String) -> Outcome {
    let mut detail = detail;
    if let Some(first) = failures.first() {
        detail = format!("{detail}; {} failures, first: {first}", failures.len());
    }
    Outcome {
        pass: failures.is_empty(),
        detail,
    }
}

fn tiny_instance(seed: u64) -> Instance {
    let raw = gen_random_dag(&RandomDagParams {
        n: 1 + (seed % 5) as usize,
        m: 1 + (seed / 5 % 2) as usize,
        edge_prob: [0.25, 0.5, 0.75][(seed / 10 % 3) as usize],
        size_range: (0.5, 3.0),
        speed_range: (0.5, 2.0),
        rho: [0.5, 1.0, 2.0, 4.0][(seed / 30 % 4) as usize],
        seed,
    })
    .expect("generator parameters are valid");
    normalize_instance(&raw).expect("generated instances normalize").0
}

fn medium_instance(seed: u64) -> Instance {
    gen_random_dag(&RandomDagParams {
        n: 5 + (seed * 7 % 36) as usize,
        m: 1 + (seed % 8) as usize,
        edge_prob: [0.05, 0.15, 0.3][(seed / 3 % 3) as usize],
        // every other instance has jobs long enough to form a chain
        size_range: [(0.5, 4.0), (1.0, 64.0)][(seed / 2 % 2) as usize],
        speed_range: (0.25, 2.0),
        rho: [1.0, 4.0, 16.0][(seed % 3) as usize],
        seed: 10_000 + seed,
    })
    .expect("generator parameters are valid")
}

struct TinyCase {
    inst: Instance,
    lp: f64,
    dup: f64,
    no_dup: f64,
    witness: Schedule,
    pipeline: f64,
}

fn tiny_cases() -> Result<Vec<TinyCase>, String> {
    (0..TINY_COUNT)
        .into_par_iter()
        .map(|seed| {
            let inst = tiny_instance(seed);
            let relax = build_relaxation(&inst).map_err(|e| format!("seed {seed}: {e}"))?;
            let lp = solve_lp(&relax.model, &SolveOptions::default());
            if !lp.is_optimal() {
                return Err(format!("seed {seed}: lp status {:?}", lp.status));
            }
            let limits = OracleLimits::default();
            let dup = exact_optimal_makespan(&inst, true, &limits).map_err(|e| format!("seed {seed}: {e}"))?;
            let no_dup = exact_optimal_makespan(&inst, false, &limits).map_err(|e| format!("seed {seed}: {e}"))?;
            let pipe = run_pipeline(&inst, &PipelineConfig::default()).map_err(|e| format!("seed {seed}: {e}"))?;
            Ok(TinyCase {
                inst,
                lp: lp.objective,
                dup: dup.makespan,
                no_dup: no_dup.makespan,
                witness: dup.witness,
                pipeline: pipe.report.makespan,
            })
        })
        .collect()
}

fn relaxation_validity(cases: &[TinyCase]) -> Outcome {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    let mut sum = 0.0;
    for (k, c) in cases.iter().enumerate() {
        worst = worst.max(c.lp / c.dup);
        sum += c.lp / c.dup;
        if c.lp > 2.0 * c.dup + TOL {
            fails.push(format!("case {k}: lp {} > 2 * {}", c.lp, c.dup));
        }
    }
    outcome(&fails, format!(
            "{} instances, lp/opt mean {:.4} max {worst:.4}",
            cases.len(),
            sum / cases.len() as f64
        ),)
}

fn embedding_feasibility(cases: &[TinyCase]) -> Outcome {
    let mut fails = Vec::new();
    for (k, c) in cases.iter().enumerate() {
        let relax = build_relaxation(&c.inst).expect("built before");
        match embed_schedule_as_lp(&c.inst, &relax, &c.witness) {
            Ok(sol) => {
                let bad = check_lp_feasibility(&sol.values, &relax.model, TOL);
                if !bad.is_empty() {
                    fails.push(format!("case {k}: row {} residual {}", bad[0].row, bad[0].residual));
                } else if (sol.objective - 2.0 * c.dup).abs() > TOL {
                    fails.push(format!("case {k}: objective {} vs {}", sol.objective, 2.0 * c.dup));
                }
            }
            Err(e) => fails.push(format!("case {k}: {e}")),
        }
    }
    outcome(&fails, format!("{} witnesses embedded", cases.len()))
}

fn oracle_consistency(cases: &[TinyCase]) -> Outcome {
    let mut fails = Vec::new();
    for (k, c) in cases.iter().enumerate() {
        if c.no_dup < c.dup - TOL {
            fails.push(format!("case {k}: no-dup {} < dup {}", c.no_dup, c.dup));
        }
        if c.pipeline < c.dup - TOL {
            fails.push(format!("case {k}: pipeline {} < opt {}", c.pipeline, c.dup));
        }
    }
    let gains = cases.iter().filter(|c| c.no_dup > c.dup + TOL).count();
    outcome(
        &fails,
        format!("{} instances, duplication strictly helps on {gains}", cases.len()),
    )
}

fn check_value(out: &PipelineOutput, name: &str) -> Result<(), String> {
    match out.report.analysis.diagnostics.get(name) {
        Some(c) if c.holds => Ok(()),
        Some(c) => Err(format!("{name}: {} > {}", c.value, c.bound)),
        None => Err(format!("{name}: missing")),
    }
}

fn medium_runs() -> Vec<(u64, Result<PipelineOutput, String>)> {
    (0..MEDIUM_COUNT)
        .into_par_iter()
        .map(|seed| {
            let inst = medium_instance(seed);
            (seed, run_pipeline(&inst, &PipelineConfig::default()).map_err(|e| e.to_string()))
        })
        .collect()
}

fn scheduler_soundness(runs: &[(u64, Result<PipelineOutput, String>)]) -> Outcome {
    let mut fails = Vec::new();
    let mut max_iter_ratio: f64 = 0.0;
    for (seed, r) in runs {
        let out = match r {
            Ok(o) => o,
            Err(e) => {
                fails.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        if !out.report.validation.valid {
            fails.push(format!("seed {seed}: invalid schedule"));
        }
        if let Err(e) = check_value(out, "eta_load") {
            fails.push(format!("seed {seed}: {e}"));
        }
        let (n, m) = (out.working.n(), out.working.m());
        let cap = 2 * m * n.saturating_sub(1) + 2;
        let it = out.report.scheduler.iterations;
        max_iter_ratio = max_iter_ratio.max(it as f64 / cap as f64);
        if it > cap {
            fails.push(format!("seed {seed}: {it} outer iterations > {cap}"));
        }
    }
    outcome(
        &fails,
        format!("{} runs, max iterations/bound {max_iter_ratio:.3}", runs.len()),
    )
}

fn rounding_diagnostics(runs: &[(u64, Result<PipelineOutput, String>)]) -> Outcome {
    let mut fails = Vec::new();
    for (seed, out) in runs.iter().filter_map(|(s, r)| r.as_ref().ok().map(|o| (s, o))) {
        for name in ["band_predecessor_size", "group_load", "max_band"] {
            if let Err(e) = check_value(out, name) {
                fails.push(format!("seed {seed}: {e}"));
            }
        }
    }
    outcome(&fails, "band, group load and max band bounds".into())
}

fn phase_accounting(runs: &[(u64, Result<PipelineOutput, String>)]) -> Outcome {
    let mut fails = Vec::new();
    let mut height_const: f64 = 0.0;
    let mut with_chain = 0;
    for (seed, out) in runs.iter().filter_map(|(s, r)| r.as_ref().ok().map(|o| (s, o))) {
        with_chain += !out.report.analysis.chain.links.is_empty() as usize;
        for name in ["chain_time", "load_phases"] {
            if let Err(e) = check_value(out, name) {
                fails.push(format!("seed {seed}: {e}"));
            }
        }
        if let Some(h) = out.report.analysis.diagnostics.get("height_phases") {
            if h.bound > 0.0 {
                height_const = height_const.max(h.value / h.bound);
            }
        }
    }
    outcome(
        &fails,
        format!(
            "{with_chain} runs with a nonempty chain; height phases over K r_max log_eta(rho): max constant {height_const:.4}"
        ),
    )
}

fn gap_certificate() -> Outcome {
    let mut fails = Vec::new();
    let inst = gen_layered_gap(2, 4, 7).expect("valid shape");
    let relax = build_relaxation(&inst).expect("relaxation builds");
    let detail = match gap_lp_certificate(&inst) {
        Ok(sol) => {
            let bad = check_lp_feasibility(&sol.values, &relax.model, TOL);
            if !bad.is_empty() {
                fails.push(format!("row {} residual {}", bad[0].row, bad[0].residual));
            }
            if sol.objective != 16.0 {
                fails.push(format!("objective {} != 16", sol.objective));
            }
            match measure_gap(&inst) {
                Ok(g) => format!(
                    "n {} m {} rho {}, certificate {}, best integral {} (pipeline {}, baseline {}), ratio {:.4}",
                    g.n, g.m, g.rho, sol.objective, g.best_makespan(), g.pipeline_makespan, g.baseline_makespan, g.ratio
                ),
                Err(e) => {
                    fails.push(format!("measure: {e}"));
                    String::new()
                }
            }
        }
        Err(e) => {
            fails.push(e.to_string());
            String::new()
        }
    };
    outcome(&fails, detail)
}

fn duplication_advantage() -> Outcome {
    let mut fails = Vec::new();
    let inst = gen_binary_tree(4).expect("valid tree");
    let sched = path_duplication_schedule(4).expect("valid tree");
    let r = validate_schedule(&inst, &sched);
    if !r.valid {
        fails.push(format!("path schedule invalid: {:?}", r.violations.first()));
    }
    if r.makespan != 5.0 {
        fails.push(format!("path schedule makespan {} != 5", r.makespan));
    }
    let mut detail = format!("rho {}, n {}, m {}, duplicated makespan {}", inst.rho, inst.n(), inst.m(), r.makespan);
    match deduplicate_schedule(&inst, &sched) {
        Ok(d) => {
            let v = validate_schedule(&inst, &d);
            if !v.valid {
                fails.push(format!("dedup invalid: {:?}", v.violations.first()));
            }
            if !d.is_duplication_free() {
                fails.push("dedup output still duplicates".into());
            }
            detail = format!("{detail}, deduplicated {} (ratio {:.3})", v.makespan, v.makespan / 5.0);
        }
        Err(e) => fails.push(format!("dedup: {e}")),
    }
    outcome(&fails, detail)
}

/// Normalized instance with at least one machine below the speed threshold.
fn slow_machine_instance(seed: u64) -> Option<Instance> {
    let raw = gen_random_dag(&RandomDagParams {
        n: 4 + (seed % 12) as usize,
        m: 3 + (seed % 4) as usize,
        edge_prob: 0.3,
        size_range: (0.5, 2.0),
        speed_range: (0.02, 1.0),
        rho: [1.0, 2.0, 4.0][(seed % 3) as usize],
        seed: 20_000 + seed,
    })
    .ok()?;
    let inst = normalize_instance(&raw).ok()?.0;
    filter_slow_machines(&inst).removed_any().then_some(inst)
}

fn rehosting() -> Outcome {
    let mut fails = Vec::new();
    let mut checked = 0;
    let mut using_slow = 0;
    let mut worst: f64 = 0.0;
    let skip = PipelineConfig {
        skip_preprocess: true,
        ..PipelineConfig::default()
    };
    for seed in 0..400 {
        if using_slow >= REHOST_COUNT {
            break;
        }
        let Some(inst) = slow_machine_instance(seed) else {
            continue;
        };
        let filter = filter_slow_machines(&inst);
        let mut scheds = Vec::new();
        match combinatorial_baseline(&inst) {
            Ok(s) => scheds.push(s),
            Err(e) => fails.push(format!("seed {seed}: baseline {e}")),
        }
        match run_pipeline(&inst, &skip) {
            Ok(o) => scheds.push(o.schedule),
            Err(e) => fails.push(format!("seed {seed}: pipeline {e}")),
        }
        for s in scheds {
            checked += 1;
            if s.placements.iter().any(|p| filter.removed_ids.contains(&p.machine)) {
                using_slow += 1;
            }
            let before = validate_schedule(&inst, &s).makespan;
            match rehost_schedule(&inst, &s) {
                Ok(r) => {
                    let v = validate_schedule(&filter.filtered, &r);
                    if !v.valid {
                        fails.push(format!("seed {seed}: rehosted invalid {:?}", v.violations.first()));
                    } else {
                        worst = worst.max(v.makespan / before);
                        if v.makespan > 6.0 * before + TOL {
                            fails.push(format!("seed {seed}: {} > 6 * {before}", v.makespan));
                        }
                    }
                }
                Err(e) => fails.push(format!("seed {seed}: {e}")),
            }
        }
    }
    if using_slow < REHOST_COUNT {
        fails.push(format!("only {using_slow} schedules use slow machines"));
    }
    outcome(
        &fails,
        format!("{checked} schedules ({using_slow} on slow machines), max ratio {worst:.3}"),
    )
}

fn duplicated_corpus() -> Vec<(Instance, Schedule)> {
    let mut out = Vec::new();
    for e in 1..=4 {
        out.push((gen_binary_tree(e).unwrap(), path_duplication_schedule(e).unwrap()));
    }
    let found: Vec<(Instance, Schedule)> = (0..600u64)
        .into_par_iter()
        .filter_map(|seed| {
            let inst = gen_random_dag(&RandomDagParams {
                n: 6 + (seed % 20) as usize,
                m: 2 + (seed % 5) as usize,
                edge_prob: [0.2, 0.35, 0.5][(seed % 3) as usize],
                size_range: (0.5, 2.0),
                speed_range: (0.5, 2.0),
                rho: [4.0, 16.0][(seed % 2) as usize],
                seed: 30_000 + seed,
            })
            .ok()?;
            let o = run_pipeline(&inst, &PipelineConfig::default()).ok()?;
            (!o.schedule.is_duplication_free()).then_some((inst, o.schedule))
        })
        .collect();
    out.extend(found.into_iter().take(DEDUP_COUNT));
    out
}

fn dedup_structure() -> Outcome {
    let corpus = duplicated_corpus();
    let mut fails = Vec::new();
    let mut graphs = 0;
    let mut worst_cover: f64 = f64::INFINITY;
    for (k, (inst, sched)) in corpus.iter().enumerate() {
        let d = match deduplicate_with_stats(inst, sched) {
            Ok(d) => d,
            Err(e) => {
                fails.push(format!("schedule {k}: {e}"));
                continue;
            }
        };
        let v = validate_schedule(inst, &d.schedule);
        if !v.valid {
            fails.push(format!("schedule {k}: invalid {:?}", v.violations.first()));
        }
        let mult = d.schedule.multiplicity();
        if inst.jobs.iter().any(|j| mult.get(j.id.as_str()) != Some(&1)) {
            fails.push(format!("schedule {k}: multiplicity is not exactly one"));
        }
        for dec in &d.decompositions {
            let h = dec.graph.len();
            if h == 0 {
                continue;
            }
            graphs += 1;
            let mut ball_of = vec![None; h];
            let mut covered = 0;
            for (b, ball) in dec.balls.iter().enumerate() {
                for &x in &ball.members {
                    if ball_of[x].is_some() {
                        fails.push(format!("schedule {k}: vertex {x} in two balls"));
                    }
                    ball_of[x] = Some(b);
                    covered += 1;
                }
                let cap = (h as f64).log2().ceil() as usize;
                if ball.radius > cap {
                    fails.push(format!("schedule {k}: radius {} > {cap}", ball.radius));
                }
            }
            worst_cover = worst_cover.min(covered as f64 / h as f64);
            if 2 * covered < h {
                fails.push(format!("schedule {k}: covered {covered} of {h}"));
            }
            for (a, nb) in dec.graph.adj.iter().enumerate() {
                for &b in nb {
                    if let (Some(x), Some(y)) = (ball_of[a], ball_of[b]) {
                        if x != y {
                            fails.push(format!("schedule {k}: edge {a}-{b} joins balls {x} and {y}"));
                        }
                    }
                }
            }
        }
    }
    if corpus.len() < 50 {
        fails.push(format!("only {} duplicated schedules", corpus.len()));
    }
    outcome(
        &fails,
        format!(
            "{} schedules, {graphs} conflict graphs, min coverage {worst_cover:.3}",
            corpus.len()
        ),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| Outcome {
        pass: false,
        detail: format!(
            "panicked: {}",
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        ),
    });
    println!(
        "{} {name} ({:.1}s): {}",
        if o.pass { "PASS" } else { "FAIL" },
        t.elapsed().as_secs_f64(),
        o.detail
    );
    o.pass
}

fn main() -> ExitCode {
    let t = Instant::now();
    let tiny = tiny_cases();
    println!("tiny corpus built in {:.1}s", t.elapsed().as_secs_f64());
    let t = Instant::now();
    let medium = medium_runs();
    println!("medium corpus built in {:.1}s", t.elapsed().as_secs_f64());

    let mut ok = true;
    match &tiny {
        Ok(cases) => {
            ok &= run("1 relaxation_validity", || relaxation_validity(cases));
            ok &= run("2 embedding_feasibility", || embedding_feasibility(cases));
        }
        Err(e) => {
            for name in ["1 relaxation_validity", "2 embedding_feasibility"] {
                ok &= run(name, || outcome(&[e.clone()], "corpus failed".into()));
            }
        }
    }
    ok &= run("3 scheduler_soundness", || scheduler_soundness(&medium));
    ok &= run("4 rounding_diagnostics", || rounding_diagnostics(&medium));
    ok &= run("5 phase_accounting", || phase_accounting(&medium));
    ok &= run("6 gap_certificate", gap_certificate);
    ok &= run("7 duplication_advantage", duplication_advantage);
    ok &= run("8 rehosting", rehosting);
    ok &= run("9 dedup_structure", dedup_structure);
    ok &= match &tiny {
        Ok(cases) => run("10 oracle_consistency", || oracle_consistency(cases)),
        Err(e) => run("10 oracle_consistency", || outcome(&[e.clone()], "corpus failed".into())),
    };
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
