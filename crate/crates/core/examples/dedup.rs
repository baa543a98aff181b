//! Removes duplication from the per-path schedule of the binary out-tree.

use delaysched::dedup::deduplicate_with_stats;
use delaysched::instance::{gen_binary_tree, path_duplication_schedule};
use delaysched::schedmodel::validate_schedule;

fn main() -> delaysched::Result<()> {
    for rho in 2..=5 {
        let inst = gen_binary_tree(rho)?;
        let dup = path_duplication_schedule(rho)?;
        let out = deduplicate_with_stats(&inst, &dup)?;
        let check = validate_schedule(&inst, &out.schedule);
        let h: Vec<usize> = out.decompositions.iter().map(|d| d.graph.len()).collect();
        println!(
            "rho {rho}: {} copies -> {} copies, makespan {} -> {:.1} ({}), {} rounds, conflict graphs {:?}",
            dup.placements.len(),
            out.schedule.placements.len(),
            validate_schedule(&inst, &dup).makespan,
            check.makespan,
            if check.valid { "valid" } else { "INVALID" },
            out.stats.rounds,
            h
        );
    }
    Ok(())
}
