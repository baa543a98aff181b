//! Dense tableau against the sparse solver, plus structural properties of the
//! relaxation value.

use proptest::prelude::*;

use delaysched::instance::{gen_random_dag, normalize_instance, RandomDagParams};
use delaysched::lp::{
    build_relaxation, check_lp_feasibility, solve_lp, Backend, LpModel, LpStatus, Sense, SolveOptions,
    FEAS_TOL,
};
use delaysched::{Instance, Job};

fn random(n: usize, m: usize, p: f64, rho: f64, seed: u64) -> Instance {
    gen_random_dag(&RandomDagParams {
        n,
        m,
        edge_prob: p,
        size_range: (0.5, 3.0),
        speed_range: (0.25, 2.0),
        rho,
        seed,
    })
    .unwrap()
}

fn value(model: &LpModel, backend: Backend) -> f64 {
    let sol = solve_lp(
        model,
        &SolveOptions {
            backend,
            ..SolveOptions::default()
        },
    );
    assert_eq!(sol.status, LpStatus::Optimal, "{backend:?}");
    let bad = check_lp_feasibility(&sol.values, model, FEAS_TOL);
    assert!(bad.is_empty(), "{backend:?}: {bad:?}");
    sol.objective
}

fn relaxation_value(inst: &Instance) -> f64 {
    value(&build_relaxation(inst).unwrap().model, Backend::Dense)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn textbook_programs() {
    // min -x - y  s.t.  x + 2y <= 4, 3x + y <= 6  ->  x = 1.6, y = 1.2
    let mut lp = LpModel::default();
    let x = lp.add_var("x", 0.0, f64::INFINITY);
    let y = lp.add_var("y", 0.0, f64::INFINITY);
    lp.objective = vec![(x, -1.0), (y, -1.0)];
    lp.add_row("a", vec![(x, 1.0), (y, 2.0)], Sense::Le, 4.0);
    lp.add_row("b", vec![(x, 3.0), (y, 1.0)], Sense::Le, 6.0);
    for b in [Backend::Dense, Backend::Sparse] {
        assert!(close(value(&lp, b), -2.8));
    }
    // equality and lower-bound rows: min x + y  s.t.  x - y = 1, x + y >= 3
    let mut lp = LpModel::default();
    let x = lp.add_var("x", 0.0, f64::INFINITY);
    let y = lp.add_var("y", 0.0, f64::INFINITY);
    lp.objective = vec![(x, 1.0), (y, 1.0)];
    lp.add_row("e", vec![(x, 1.0), (y, -1.0)], Sense::Eq, 1.0);
    lp.add_row("g", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 3.0);
    for b in [Backend::Dense, Backend::Sparse] {
        assert!(close(value(&lp, b), 3.0));
    }
}

#[test]
fn infeasible_and_unbounded() {
    let mut lp = LpModel::default();
    let x = lp.add_var("x", 0.0, 1.0);
    lp.add_row("high", vec![(x, 1.0)], Sense::Ge, 2.0);
    for b in [Backend::Dense, Backend::Sparse] {
        let s = solve_lp(&lp, &SolveOptions { backend: b, ..SolveOptions::default() });
        assert_eq!(s.status, LpStatus::Infeasible, "{b:?}");
    }
    let mut lp = LpModel::default();
    let x = lp.add_var("x", 0.0, f64::INFINITY);
    lp.objective = vec![(x, -1.0)];
    for b in [Backend::Dense, Backend::Sparse] {
        let s = solve_lp(&lp, &SolveOptions { backend: b, ..SolveOptions::default() });
        assert_eq!(s.status, LpStatus::Unbounded, "{b:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn backends_agree(
        n in 1usize..=10, m in 1usize..=4, p in 0.0f64..0.6,
        rho in prop::sample::select(vec![0.5, 1.0, 4.0, 16.0]), seed in any::<u64>()
    ) {
        let (inst, _) = normalize_instance(&random(n, m, p, rho, seed)).unwrap();
        let model = build_relaxation(&inst).unwrap().model;
        let dense = value(&model, Backend::Dense);
        let sparse = value(&model, Backend::Sparse);
        prop_assert!(close(dense, sparse), "dense {} sparse {}", dense, sparse);
    }

    #[test]
    fn extra_edge_never_lowers_value(
        n in 2usize..=8, m in 1usize..=3, p in 0.0f64..0.5, seed in any::<u64>(), pick in any::<prop::sample::Index>()
    ) {
        let inst = random(n, m, p, 2.0, seed);
        let dag = inst.dag().unwrap();
        // any pair in topological order can be joined without a cycle
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| (dag.topo[a], dag.topo[b]))
            .collect();
        let (u, v) = pairs[pick.index(pairs.len())];
        let mut more = inst.clone();
        more.edges.push((inst.jobs[u].id.clone(), inst.jobs[v].id.clone()));
        prop_assert!(relaxation_value(&more) >= relaxation_value(&inst) - 1e-6);
    }

    #[test]
    fn value_scales_with_sizes_and_delay(
        n in 1usize..=8, m in 1usize..=3, p in 0.0f64..0.5, seed in any::<u64>(), k in 0.25f64..8.0
    ) {
        let inst = random(n, m, p, 2.0, seed);
        let mut scaled = inst.clone();
        scaled.rho *= k;
        for j in &mut scaled.jobs {
            j.size *= k;
        }
        let (a, b) = (relaxation_value(&inst), relaxation_value(&scaled));
        prop_assert!(close(b, k * a), "{} vs {}", b, k * a);
    }

    #[test]
    fn value_at_least_largest_job_on_fastest(
        n in 1usize..=8, m in 1usize..=3, p in 0.0f64..0.5, seed in any::<u64>()
    ) {
        let inst = random(n, m, p, 1.0, seed);
        let fastest = inst.fastest_speed();
        let biggest = inst.jobs.iter().map(|j: &Job| j.size).fold(0.0, f64::max);
        prop_assert!(relaxation_value(&inst) >= biggest / fastest - 1e-6);
    }

    #[test]
    fn normalization_scales_value_by_time_factor(
        n in 1usize..=8, m in 1usize..=3, p in 0.0f64..0.5, rho in 0.5f64..8.0, seed in any::<u64>()
    ) {
        let raw = random(n, m, p, rho, seed);
        let (norm, scale) = normalize_instance(&raw).unwrap();
        let (a, b) = (relaxation_value(&raw), relaxation_value(&norm));
        prop_assert!(close(b, scale.time_factor() * a), "{} vs {}", b, scale.time_factor() * a);
    }

    #[test]
    fn dense_solve_is_bitwise_repeatable(
        n in 1usize..=8, m in 1usize..=3, p in 0.0f64..0.5, seed in any::<u64>()
    ) {
        let model = build_relaxation(&random(n, m, p, 2.0, seed)).unwrap().model;
        let opts = SolveOptions { backend: Backend::Dense, ..SolveOptions::default() };
        let (a, b) = (solve_lp(&model, &opts), solve_lp(&model, &opts));
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.values), bits(&b.values));
    }
}
