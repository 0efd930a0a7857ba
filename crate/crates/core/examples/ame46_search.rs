//! Searches for a 2-unitary of order 36 from noisy copies of the gate Ps,
//! brings the first hit to block form and saves it.
//!
//! `cargo run --release --example ame46_search -- [trials] [out.csv]`

use multiunit::ame::{verify_numeric, Check};
use multiunit::canon::{canonicalize, polish, CanonConfig};
use multiunit::dynmap::{batch_run, IterateConfig, Outcome, SeedSpec};

fn main() -> multiunit::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: u64 = args.next().map_or(40, |s| s.parse().expect("trials"));
    let out = args.next().unwrap_or_else(|| "ame46.csv".into());

    let specs: Vec<SeedSpec> = (0..trials).map(|s| SeedSpec::perturbed("Ps", 0.05, s)).collect::<Result<_, _>>()?;
    let (summary, results) = batch_run(&specs, &IterateConfig::default(), None);
    println!("outcomes: {:?}", summary.counts);

    for tr in results.into_iter().flatten().filter(|t| t.outcome == Outcome::TwoUnitary) {
        let slope = tr.late_decay_slope(100, 1e-12).unwrap_or(f64::NAN);
        println!("seed {}: Δ = {:.1e}, late slope {slope:.4}", tr.seed.rng_seed, tr.final_delta);
        let can = canonicalize(&tr.final_matrix, &CanonConfig { restarts: 12, ..CanonConfig::default() })?;
        let u = polish(&can.matrix, 1e-4, 300);
        let report = verify_numeric(&u, &Check::ALL, 1e-9);
        for c in &report.checks {
            println!("  {:<10} {} ({:.1e})", c.check.name(), if c.passed { "pass" } else { "fail" }, c.deviation);
        }
        if report.passed {
            u.save_dense_csv(&out)?;
            println!("block-form solution written to {out}");
            return Ok(());
        }
    }
    println!("no hit reached block form; try more trials");
    Ok(())
}
