//! A schedule that uses slow machines, moved onto the machines that survive
//! the speed filter.

use delaysched::instance::normalize_instance;
use delaysched::oracle::combinatorial_baseline;
use delaysched::preprocess::{filter_slow_machines, rehost_schedule};
use delaysched::schedmodel::validate_schedule;
use delaysched::{Instance, Job, Machine};

fn main() -> delaysched::Result<()> {
    let jobs = (0..8).map(|k| Job::new(format!("j{k}"), 1.0 + (k % 3) as f64)).collect();
    let machines = vec![
        Machine::new("fast", 1.0),
        Machine::new("mid", 0.6),
        Machine::new("crawl", 0.05),
        Machine::new("snail", 0.1),
    ];
    let edges = vec![("j0".into(), "j3".into()), ("j1".into(), "j4".into()), ("j3".into(), "j6".into())];
    let (inst, _) = normalize_instance(&Instance::new(2.0, jobs, machines, edges))?;
    let filter = filter_slow_machines(&inst);
    println!("removed {:?}", filter.removed_ids);

    let before = combinatorial_baseline(&inst)?;
    let after = rehost_schedule(&inst, &before)?;
    let b = validate_schedule(&inst, &before);
    let a = validate_schedule(&filter.filtered, &after);
    println!("before: {b}");
    println!("after on kept machines: {a}");
    println!("ratio {:.3} (at most 6)", a.makespan / b.makespan);
    Ok(())
}
