//! Random, layered and tree instances written as JSON.

use delaysched::instance::{gen_binary_tree, gen_layered_gap, gen_random_dag, instance_to_json, RandomDagParams};

fn main() -> delaysched::Result<()> {
    let random = gen_random_dag(&RandomDagParams {
        n: 8,
        m: 3,
        edge_prob: 0.3,
        size_range: (1.0, 4.0),
        speed_range: (0.5, 2.0),
        rho: 2.0,
        seed: 42,
    })?;
    println!("{}", instance_to_json(&random));

    let layered = gen_layered_gap(2, 2, 1)?;
    println!("layered: n {} m {} rho {}", layered.n(), layered.m(), layered.rho);
    let tree = gen_binary_tree(3)?;
    println!("tree: n {} m {} rho {}", tree.n(), tree.m(), tree.rho);
    Ok(())
}
