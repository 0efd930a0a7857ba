//! Iterating the map from Haar-random two-qutrit gates.

use multiunit::dynmap::{batch_run, IterateConfig, SeedSpec};

fn main() {
    let specs: Vec<SeedSpec> = (0..50).map(|s| SeedSpec::haar(3, s)).collect();
    let cfg = IterateConfig { tol: 1e-10, max_iter: 2000, ..IterateConfig::default() };
    let (summary, results) = batch_run(&specs, &cfg, None);
    println!("outcomes: {:?}", summary.counts);
    println!("convergence rate: {:.0}%", 100.0 * summary.convergence_rate);
    if let Some(Ok(tr)) = results.first() {
        println!("seed 0: {:?} after {} steps, Δ = {:.2e}", tr.outcome, tr.points.len() - 1, tr.final_delta);
    }
}
