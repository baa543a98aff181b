//! Full pipeline on a random instance, with every check it asserts.

use delaysched::instance::{gen_random_dag, RandomDagParams};
use delaysched::pipeline::{run_pipeline, PipelineConfig};

fn main() -> delaysched::Result<()> {
    let inst = gen_random_dag(&RandomDagParams {
        n: 30,
        m: 6,
        edge_prob: 0.1,
        size_range: (0.5, 4.0),
        speed_range: (0.25, 2.0),
        rho: 4.0,
        seed: 11,
    })?;
    let out = run_pipeline(&inst, &PipelineConfig::default())?;
    let r = &out.report;
    println!(
        "makespan {:.3}, lp {:.3} (normalized), eta {:.3}, removed {:?}",
        r.makespan, r.lp_objective, r.eta, r.removed_machines
    );
    println!(
        "{} scheduler iterations, {} bundles, {} copies for {} jobs",
        r.scheduler.iterations,
        r.scheduler.bundles,
        out.schedule.placements.len(),
        inst.n()
    );
    for c in &r.analysis.diagnostics.checks {
        let kind = if c.asserted { "asserted" } else { "reported" };
        println!("  {:<22} {kind:<8} {:>10.4} <= {:>10.4} {}", c.name, c.value, c.bound, if c.holds { "ok" } else { "VIOLATED" });
    }
    Ok(())
}
