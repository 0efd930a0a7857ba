//! The map started at the permutation gate P36 settles on a dual-unitary
//! fixed point that is not 2-unitary.

use multiunit::dynmap::{iterate, SeedSpec, EP_FIXED_POINT_A};
use multiunit::metrics::{dual_defects, quick_metrics};

fn main() -> multiunit::Result<()> {
    let tr = iterate(&SeedSpec::permutation("P36")?, 1e-12, 5000)?;
    let a = &tr.final_matrix;
    let [du, dr, dg] = dual_defects(a);
    println!("outcome: {:?} after {} steps", tr.outcome, tr.points.len() - 1);
    println!("e_p = {:.15} (419/420 = {:.15})", quick_metrics(a).e_p, EP_FIXED_POINT_A);
    println!("defects: U {du:.1e}, U^R {dr:.3}, U^Γ {dg:.1e}");
    for p in tr.points.iter().step_by(10) {
        println!("  n = {:>3}  Δ = {:.6e}", p.n, p.delta);
    }
    Ok(())
}
