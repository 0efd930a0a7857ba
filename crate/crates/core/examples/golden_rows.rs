//! Checks the published rows of the order-36 solution numerically and exactly.

use multiunit::golden::{fixture_rows, row_reports, verify_golden, Mode};

fn main() -> multiunit::Result<()> {
    let m = fixture_rows();
    println!("rows present: {:?}", m.rows_present());
    for r in row_reports(&m) {
        println!("row {:>2}: norm {:.15}, Bell deviation {:.1e}", r.row, r.norm, r.bell_deviation);
    }
    let exact = verify_golden(&m, Mode::Exact, 0.0, false)?;
    println!("exact check passed: {}", exact.passed());
    Ok(())
}
