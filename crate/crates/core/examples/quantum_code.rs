//! The ((3, 6, 2))_6 code obtained from a 2-unitary of order 36.

use multiunit::ame::state_from_unitary;
use multiunit::qecc::{kl_check, pure_code_check, shortened_code, weyl_basis};
use multiunit::BipartiteOperator;

fn main() -> multiunit::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/ame46_search.csv");
    let u = BipartiteOperator::load_dense_csv(path)?;
    let code = shortened_code(&u)?;
    println!("{} codewords on 3 sites, Gram defect {:.1e}", code.dim(), code.orthonormality_defect());

    let errors = weyl_basis(6, 3, 1, &[0, 1, 2]);
    let kl = kl_check(&code, &errors, 1e-9);
    println!(
        "Knill-Laflamme over {} weight-1 errors: {} (off-diagonal {:.1e}, spread {:.1e})",
        kl.errors_checked, kl.passed, kl.max_off_diagonal, kl.max_diagonal_spread
    );

    let pure = pure_code_check(&state_from_unitary(&u)?, 2, 1e-9)?;
    println!(
        "pure code: {} ({} weight-1 and {} weight-2 operators, max |<E>| {:.1e})",
        pure.passed, pure.weight1_checked, pure.weight2_checked, pure.max_expectation
    );
    Ok(())
}
