//! Values of the alternative relaxations on a small layered instance, next
//! to the main relaxation.

use delaysched::gaplab::{gen_complete_layers, solve_alternate, RelaxationKind};
use delaysched::lp::{build_relaxation, solve_lp, SolveOptions};

fn main() -> delaysched::Result<()> {
    let inst = gen_complete_layers(2, 2, 2.0)?;
    let main = solve_lp(&build_relaxation(&inst)?.model, &SolveOptions::default());
    println!("{:<14} {:?} {:.4}", "main", main.status, main.objective);
    for kind in [
        RelaxationKind::SameMachine,
        RelaxationKind::TimeIndexed { horizon: None },
        RelaxationKind::SamePhase,
    ] {
        match solve_alternate(&inst, kind) {
            Ok(sol) => println!("{:<14} {:?} {:.4}", kind.name(), sol.status, sol.objective),
            Err(e) => println!("{:<14} {e}", kind.name()),
        }
    }
    Ok(())
}
