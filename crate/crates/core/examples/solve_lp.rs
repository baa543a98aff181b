//! Builds the relaxation of a small instance, solves it with both backends
//! and prints it in LP text format.

use delaysched::instance::{gen_random_dag, normalize_instance, RandomDagParams};
use delaysched::lp::{build_relaxation, check_lp_feasibility, solve_lp, to_lp_format, Backend, SolveOptions, FEAS_TOL};

fn main() -> delaysched::Result<()> {
    let raw = gen_random_dag(&RandomDagParams {
        n: 5,
        m: 2,
        edge_prob: 0.4,
        rho: 2.0,
        seed: 3,
        ..Default::default()
    })?;
    let (inst, _) = normalize_instance(&raw)?;
    let relax = build_relaxation(&inst)?;
    println!("rows per family: {:?}", relax.family_counts());
    for backend in [Backend::Dense, Backend::Sparse] {
        let sol = solve_lp(&relax.model, &SolveOptions { backend, ..SolveOptions::default() });
        let bad = check_lp_feasibility(&sol.values, &relax.model, FEAS_TOL);
        println!("{backend:?}: {:?} objective {:.6}, {} violated rows", sol.status, sol.objective, bad.len());
        println!("  starts {:?}", relax.starts(&sol.values));
    }
    print!("{}", to_lp_format(&relax.model, "relaxation of a 5-job instance"));
    Ok(())
}
