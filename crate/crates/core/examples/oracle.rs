//! Exact optima with and without duplication next to the pipeline and the
//! combinatorial baseline.

use delaysched::instance::{gen_random_dag, RandomDagParams};
use delaysched::oracle::{combinatorial_baseline, exact_optimal_makespan, OracleLimits};
use delaysched::pipeline::{run_pipeline, PipelineConfig};
use delaysched::schedmodel::makespan;

fn main() -> delaysched::Result<()> {
    let limits = OracleLimits::default();
    println!("seed   dup  nodup  pipeline  baseline");
    for seed in 0..8 {
        let inst = gen_random_dag(&RandomDagParams {
            n: 5,
            m: 2,
            edge_prob: 0.5,
            rho: 3.0,
            seed,
            ..Default::default()
        })?;
        let dup = exact_optimal_makespan(&inst, true, &limits)?;
        let nodup = exact_optimal_makespan(&inst, false, &limits)?;
        let pipe = run_pipeline(&inst, &PipelineConfig::default())?;
        let base = makespan(&inst, &combinatorial_baseline(&inst)?);
        println!(
            "{seed:>4} {:>5.1} {:>6.1} {:>9.1} {:>9.1}",
            dup.makespan, nodup.makespan, pipe.report.makespan, base
        );
    }
    Ok(())
}
