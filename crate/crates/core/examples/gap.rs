//! Certificate value against the best integral schedule on layered
//! instances of growing size.

use delaysched::gaplab::{gap_csv, gap_sweep};

fn main() {
    let shapes = [(2, 2), (4, 2), (2, 4)];
    let reports: Vec<_> = gap_sweep(&shapes, 0)
        .into_iter()
        .filter_map(|r| r.map_err(|e| eprintln!("skipped: {e}")).ok())
        .collect();
    print!("{}", gap_csv(&reports));
}
