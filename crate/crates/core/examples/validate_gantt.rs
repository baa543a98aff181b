//! Validates a hand-written schedule, shows a rejected one and prints a
//! text Gantt chart.

use delaysched::schedmodel::{gantt, validate_schedule};
use delaysched::{Instance, Job, Machine, Placement, Schedule};

fn main() {
    let inst = Instance::new(
        2.0,
        vec![Job::new("a", 1.0), Job::new("b", 2.0), Job::new("c", 1.0)],
        vec![Machine::new("slow", 1.0), Machine::new("fast", 2.0)],
        vec![("a".into(), "b".into()), ("a".into(), "c".into())],
    );
    let good = Schedule {
        placements: vec![
            Placement::new("a", "fast", 0.0),
            Placement::new("b", "fast", 0.5),
            Placement::new("a", "slow", 0.0),
            Placement::new("c", "slow", 1.0),
        ],
    };
    println!("good: {}", validate_schedule(&inst, &good));
    let bad = Schedule {
        placements: vec![
            Placement::new("a", "fast", 0.0),
            Placement::new("b", "fast", 0.5),
            Placement::new("c", "slow", 1.0),
        ],
    };
    println!("bad: {}", validate_schedule(&inst, &bad));

    let scale = 8.0;
    for row in gantt(&inst, &good) {
        let mut line = vec![' '; 40];
        for bar in &row.bars {
            let (s, e) = ((bar.start * scale) as usize, (bar.end * scale) as usize);
            for (k, cell) in line.iter_mut().enumerate().take(e).skip(s) {
                *cell = if k == s { bar.job.chars().next().unwrap_or('#') } else { '=' };
            }
        }
        println!("{:>5} |{}|", row.machine, line.iter().collect::<String>());
    }
}
