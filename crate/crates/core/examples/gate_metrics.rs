//! Entanglement metrics of permutation gates and of Haar-random gates.

use multiunit::designs::builtin_permutation;
use multiunit::linalg::haar_unitary;
use multiunit::metrics::gate_metrics;
use multiunit::BipartiteOperator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> multiunit::Result<()> {
    let mut gates: Vec<(String, BipartiteOperator)> = ["P9", "P36", "Ps"]
        .iter()
        .map(|n| Ok((n.to_string(), builtin_permutation(n)?)))
        .collect::<multiunit::Result<_>>()?;
    gates.push(("SWAP(6)".into(), BipartiteOperator::swap(6)));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    gates.push(("Haar(6)".into(), BipartiteOperator::new(6, haar_unitary(36, &mut rng))?));

    println!("{:<8} {:>10} {:>10} {:>10} {:>10} {:>10}", "gate", "E(U)", "E(US)", "e_p", "g_t", "Δ");
    for (name, u) in &gates {
        let m = gate_metrics(u);
        println!(
            "{name:<8} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.2e}",
            m.e_u, m.e_us, m.e_p, m.g_t, m.delta
        );
    }
    Ok(())
}
