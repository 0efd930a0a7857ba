//! Orthogonal Latin squares, their defects, and the permutation gates they lift to.

use multiunit::designs::{
    builtin_design, check_ols, coarse_grain_check, ols_modular, permutation_from_design, tensor_from_design,
};
use multiunit::metrics::{dual_defects, entangling_power};

fn main() -> multiunit::Result<()> {
    let t = ols_modular(5)?;
    println!("modular design of order 5:\n{t}");
    let u = permutation_from_design(&t);
    println!("defects of U, U^R, U^Γ: {:?}\n", dual_defects(&u));

    for name in ["P9", "P36", "Ps"] {
        let t = builtin_design(name)?;
        let report = check_ols(&t);
        let u = permutation_from_design(&t);
        println!(
            "{name}: {} repeated pairs, {} row and {} column conflicts, e_p = {:.6}",
            report.repeated_count(),
            report.row_conflicts.len(),
            report.column_conflicts.len(),
            entangling_power(&u)
        );
        if t.d() == 6 {
            let coarse = coarse_grain_check(&tensor_from_design(&t), 1e-12)?;
            println!("  coarse-grained into 3 x 3: passed = {}", coarse.passed);
        }
    }
    Ok(())
}
