//! The map `M[U] = polar((U^R)^Γ)` on the unitary group, seed generation,
//! iteration with outcome classification, and batch runs.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::builtin_permutation;
use crate::error::{Error, Result};
use crate::linalg::{c, expi_hermitian, haar_unitary, polar_factor, polar_unitary, CMat, SINGULAR_EPS};
use crate::metrics::{quick_metrics, QuickMetrics};
use crate::tensor::BipartiteOperator;

/// Entangling power of the fixed point reached from the `P36` seed.
pub const EP_FIXED_POINT_A: f64 = 419.0 / 420.0;

/// One application of the map, failing if the polar factor is not unique.
pub fn map_step(u: &BipartiteOperator) -> Result<BipartiteOperator> {
    let a = u.reshuffle().partial_transpose();
    let w = polar_unitary(a.matrix())?;
    Ok(BipartiteOperator::from_parts_unchecked(u.d(), w))
}

/// One application of the map that always returns, together with the smallest
/// singular value of `(U^R)^Γ`. At a singular point the unitary factor is the
/// one selected by the SVD.
pub fn map_step_branch(u: &BipartiteOperator) -> (BipartiteOperator, f64) {
    let a = u.reshuffle().partial_transpose();
    let (w, sigma_min) = polar_factor(a.matrix());
    (BipartiteOperator::from_parts_unchecked(u.d(), w), sigma_min)
}

/// How a seed is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedKind {
    /// Haar-random unitary of order `d^2`.
    Haar,
    /// A named built-in permutation, unperturbed.
    Permutation { name: String },
    /// `P exp(iεH)` with `H = (M + M^T)/2`, `M` real standard normal.
    PerturbedPermutation { name: String, epsilon: f64 },
    /// `P D` with `D` diagonal of uniformly random phases.
    EnphasedPermutation { name: String },
}

/// A fully reproducible seed description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub kind: SeedKind,
    pub rng_seed: u64,
    pub d: usize,
}

impl SeedSpec {
    pub fn haar(d: usize, rng_seed: u64) -> Self {
        Self { kind: SeedKind::Haar, rng_seed, d }
    }

    pub fn permutation(name: &str) -> Result<Self> {
        let d = builtin_permutation(name)?.d();
        Ok(Self { kind: SeedKind::Permutation { name: name.to_string() }, rng_seed: 0, d })
    }

    pub fn perturbed(name: &str, epsilon: f64, rng_seed: u64) -> Result<Self> {
        let d = builtin_permutation(name)?.d();
        Ok(Self {
            kind: SeedKind::PerturbedPermutation { name: name.to_string(), epsilon },
            rng_seed,
            d,
        })
    }

    pub fn enphased(name: &str, rng_seed: u64) -> Result<Self> {
        let d = builtin_permutation(name)?.d();
        Ok(Self { kind: SeedKind::EnphasedPermutation { name: name.to_string() }, rng_seed, d })
    }
}

fn named_permutation(name: &str, d: usize) -> Result<BipartiteOperator> {
    let p = builtin_permutation(name)?;
    if p.d() != d {
        return Err(Error::WrongDimension { expected: p.d(), found: d });
    }
    Ok(p)
}

/// Builds the seed matrix. Bit-identical for equal specs.
pub fn make_seed(spec: &SeedSpec) -> Result<BipartiteOperator> {
    if spec.d == 0 {
        return Err(Error::Config("d must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let n = spec.d * spec.d;
    let m = match &spec.kind {
        SeedKind::Haar => haar_unitary(n, &mut rng),
        SeedKind::Permutation { name } => named_permutation(name, spec.d)?.into_matrix(),
        SeedKind::PerturbedPermutation { name, epsilon } => {
            if !(epsilon.is_finite() && *epsilon >= 0.0) {
                return Err(Error::Config(format!("epsilon must be finite and nonnegative, got {epsilon}")));
            }
            let p = named_permutation(name, spec.d)?;
            let g: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
            let h = CMat::from_fn(n, n, |i, j| c(0.5 * (g[i * n + j] + g[j * n + i]), 0.0));
            p.matrix() * expi_hermitian(&h, *epsilon)
        }
        SeedKind::EnphasedPermutation { name } => {
            let p = named_permutation(name, spec.d)?;
            let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            let mut m = p.into_matrix();
            for (j, phi) in phases.iter().enumerate() {
                let z = num_complex::Complex64::from_polar(1.0, *phi);
                for i in 0..n {
                    m[(i, j)] *= z;
                }
            }
            m
        }
    };
    BipartiteOperator::new(spec.d, m)
}

/// What to do when `(U^R)^Γ` is singular during iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SingularPolicy {
    /// Continue with the unitary factor selected by the SVD and count the event.
    #[default]
    SvdBranch,
    /// End the trajectory with [`Outcome::Singular`].
    Stop,
}

/// Iteration controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateConfig {
    /// Convergence threshold on `Δ`.
    pub tol: f64,
    pub max_iter: usize,
    /// Lag used by the plateau test `|Δ_n - Δ_{n-w}| < plateau_eps`.
    pub plateau_window: usize,
    pub plateau_eps: f64,
    pub singular_policy: SingularPolicy,
    /// After convergence keep iterating while `Δ` keeps shrinking, at most
    /// this many extra steps. The refined matrix is returned as `final_matrix`.
    pub refine_steps: usize,
}

impl Default for IterateConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 20_000,
            plateau_window: 6,
            plateau_eps: 1e-14,
            singular_policy: SingularPolicy::SvdBranch,
            refine_steps: 1000,
        }
    }
}

/// How an iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    TwoUnitary,
    /// Plateau at `e_p = 419/420` with `U^Γ` unitary and `U^R` not.
    FixedPointA,
    /// Plateau at `e_p = 419/420` with the roles of `U^R` and `U^Γ` exchanged.
    FixedPointAS,
    Plateau,
    MaxIter,
    Singular,
}

impl Outcome {
    pub const ALL: [Outcome; 6] = [
        Outcome::TwoUnitary,
        Outcome::FixedPointA,
        Outcome::FixedPointAS,
        Outcome::Plateau,
        Outcome::MaxIter,
        Outcome::Singular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::TwoUnitary => "TwoUnitary",
            Outcome::FixedPointA => "FixedPointA",
            Outcome::FixedPointAS => "FixedPointAS",
            Outcome::Plateau => "Plateau",
            Outcome::MaxIter => "MaxIter",
            Outcome::Singular => "Singular",
        }
    }
}

/// Metrics recorded after step `n` (`n = 0` is the seed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub n: usize,
    pub e_p: f64,
    pub g_t: f64,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seed: SeedSpec,
    pub points: Vec<TrajectoryPoint>,
    pub outcome: Outcome,
    /// Last iterate; for `TwoUnitary` the refined iterate, for fixed points the
    /// orbit element that matches the classification.
    pub final_matrix: BipartiteOperator,
    /// Number of steps at which the polar factor was not unique.
    pub singular_steps: usize,
    /// Extra steps taken after convergence.
    pub refine_steps: usize,
    /// `Δ` of `final_matrix`.
    pub final_delta: f64,
}

impl Trajectory {
    /// Writes `n,e_p,g_t,delta`, one row per recorded step.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["n", "e_p", "g_t", "delta"])?;
        for p in &self.points {
            wtr.write_record([
                p.n.to_string(),
                format!("{:.16e}", p.e_p),
                format!("{:.16e}", p.g_t),
                format!("{:.16e}", p.delta),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Least-squares slope of `ln Δ_n` against `n` over the last `window`
    /// points preceding convergence. `None` if there are fewer than 3 such points.
    pub fn late_decay_slope(&self, window: usize, tol: f64) -> Option<f64> {
        let pre: Vec<&TrajectoryPoint> = self
            .points
            .iter()
            .take_while(|p| p.delta >= tol)
            .filter(|p| p.delta > 0.0)
            .collect();
        let tail = &pre[pre.len().saturating_sub(window)..];
        if tail.len() < 3 {
            return None;
        }
        let xs: Vec<f64> = tail.iter().map(|p| p.n as f64).collect();
        let ys: Vec<f64> = tail.iter().map(|p| p.delta.ln()).collect();
        Some(least_squares_slope(&xs, &ys))
    }
}

/// Slope of the ordinary least-squares line through `(x, y)`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn point(n: usize, q: &QuickMetrics) -> TrajectoryPoint {
    TrajectoryPoint { n, e_p: q.e_p, g_t: q.g_t, delta: q.delta }
}

/// Iterates the map from the given seed with default controls.
pub fn iterate(seed: &SeedSpec, tol: f64, max_iter: usize) -> Result<Trajectory> {
    let cfg = IterateConfig { tol, max_iter, ..IterateConfig::default() };
    iterate_with(seed, &cfg)
}

/// Iterates the map from the given seed.
pub fn iterate_with(seed: &SeedSpec, cfg: &IterateConfig) -> Result<Trajectory> {
    let u0 = make_seed(seed)?;
    Ok(iterate_from(seed.clone(), u0, cfg))
}

/// Iterates the map from an explicit starting matrix.
pub fn iterate_from(seed: SeedSpec, u0: BipartiteOperator, cfg: &IterateConfig) -> Trajectory {
    let window = cfg.plateau_window.max(1);
    let mut u = u0;
    let q0 = quick_metrics(&u);
    let mut points = vec![point(0, &q0)];
    let mut singular_steps = 0;
    let mut outcome = Outcome::MaxIter;
    let mut delta = q0.delta;
    if delta < cfg.tol {
        outcome = Outcome::TwoUnitary;
    }
    let mut n = 0;
    while outcome == Outcome::MaxIter && n < cfg.max_iter {
        n += 1;
        let (next, sigma_min) = map_step_branch(&u);
        if sigma_min <= SINGULAR_EPS {
            singular_steps += 1;
            if cfg.singular_policy == SingularPolicy::Stop {
                outcome = Outcome::Singular;
                break;
            }
        }
        u = next;
        let q = quick_metrics(&u);
        delta = q.delta;
        points.push(point(n, &q));
        if delta < cfg.tol {
            outcome = Outcome::TwoUnitary;
        } else if points.len() > window && (delta - points[points.len() - 1 - window].delta).abs() < cfg.plateau_eps {
            outcome = Outcome::Plateau;
        }
    }
    let mut refined = 0;
    if outcome == Outcome::TwoUnitary {
        let (v, steps) = refine(u, cfg.refine_steps);
        u = v;
        refined = steps;
    } else if outcome == Outcome::Plateau && (points[points.len() - 1].e_p - EP_FIXED_POINT_A).abs() < 1e-6 {
        let (kind, v, steps) = settle_fixed_point(u, n, cfg.refine_steps, &mut points);
        outcome = kind;
        u = v;
        refined = steps;
    }
    let final_delta = quick_metrics(&u).delta;
    Trajectory {
        seed,
        points,
        outcome,
        final_matrix: u,
        singular_steps,
        refine_steps: refined,
        final_delta,
    }
}

/// Tolerance on the unitarity defect used to recognise which flattening is
/// unitary at the `419/420` fixed point.
const FIXED_POINT_DEFECT_TOL: f64 = 1e-8;

/// Continues a trajectory that has reached the `419/420` plateau until the
/// orbit elements stop approaching unitarity of `U^Γ` or `U^R`, then picks
/// the orbit element with unitary `U^Γ` (outcome `FixedPointA`) or, failing
/// that, with unitary `U^R` (`FixedPointAS`).
fn settle_fixed_point(
    u: BipartiteOperator,
    mut n: usize,
    max_steps: usize,
    points: &mut Vec<TrajectoryPoint>,
) -> (Outcome, BipartiteOperator, usize) {
    let defects = |v: &BipartiteOperator| (v.partial_transpose().unitarity_defect(), v.reshuffle().unitarity_defect());
    let (mut best_g, mut best_r) = (u.clone(), u.clone());
    let (mut dg, mut dr) = defects(&u);
    let mut cur = u;
    let mut since_improvement = 0;
    let mut steps = 0;
    while steps < max_steps && since_improvement < 9 {
        let (next, _) = map_step_branch(&cur);
        cur = next;
        steps += 1;
        n += 1;
        points.push(point(n, &quick_metrics(&cur)));
        let (g, r) = defects(&cur);
        let mut improved = false;
        if g < 0.5 * dg {
            dg = g;
            best_g = cur.clone();
            improved = true;
        }
        if r < 0.5 * dr {
            dr = r;
            best_r = cur.clone();
            improved = true;
        }
        since_improvement = if improved { 0 } else { since_improvement + 1 };
    }
    if dg <= FIXED_POINT_DEFECT_TOL {
        (Outcome::FixedPointA, best_g, steps)
    } else if dr <= FIXED_POINT_DEFECT_TOL {
        (Outcome::FixedPointAS, best_r, steps)
    } else {
        (Outcome::Plateau, cur, steps)
    }
}

/// Sum of the unitarity defects of `U`, `U^R` and `U^Γ`.
pub fn dual_defect_sum(u: &BipartiteOperator) -> f64 {
    crate::metrics::dual_defects(u).iter().sum()
}

/// Keeps applying the map after convergence while the unitarity defects of
/// `U`, `U^R`, `U^Γ` keep shrinking, returning the best iterate and the number
/// of extra steps. `Δ` is quadratic in these defects, so this reaches a much
/// tighter 2-unitary than the `Δ` threshold alone.
pub fn refine(u: BipartiteOperator, max_steps: usize) -> (BipartiteOperator, usize) {
    let mut best = u.clone();
    let mut best_defect = dual_defect_sum(&u);
    let mut cur = u;
    let mut since_improvement = 0;
    let mut steps = 0;
    while steps < max_steps && since_improvement < 30 {
        let (next, _) = map_step_branch(&cur);
        cur = next;
        steps += 1;
        let defect = dual_defect_sum(&cur);
        if defect < 0.9 * best_defect {
            best = cur.clone();
            best_defect = defect;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
    }
    (best, steps)
}

/// Per-trial line of a batch summary.
#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub index: usize,
    pub seed: SeedSpec,
    pub outcome: Outcome,
    pub steps: usize,
    pub final_delta: f64,
    pub final_e_p: f64,
    pub singular_steps: usize,
}

/// Aggregate of a batch of trials. Independent of execution order.
#[derive(Debug, Clone, Serialize)]
pub struct BatchSummary {
    pub trials: usize,
    pub counts: std::collections::BTreeMap<String, usize>,
    /// Fraction of trials ending in [`Outcome::TwoUnitary`].
    pub convergence_rate: f64,
    pub best_delta: Option<f64>,
    pub per_trial: Vec<TrialSummary>,
}

/// Runs [`iterate_with`] on every spec, on `jobs` worker threads (all cores
/// when `None`). Trajectories come back in the order of `specs`.
pub fn batch_run(specs: &[SeedSpec], cfg: &IterateConfig, jobs: Option<usize>) -> (BatchSummary, Vec<Result<Trajectory>>) {
    let run = || -> Vec<Result<Trajectory>> { specs.par_iter().map(|s| iterate_with(s, cfg)).collect() };
    let results = match jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(_) => specs.iter().map(|s| iterate_with(s, cfg)).collect(),
        },
        None => run(),
    };
    (summarize(specs, &results), results)
}

/// Builds the summary of a finished batch.
pub fn summarize(specs: &[SeedSpec], results: &[Result<Trajectory>]) -> BatchSummary {
    let mut counts: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();
    let mut per_trial = Vec::new();
    let mut best: Option<f64> = None;
    for (index, (spec, r)) in specs.iter().zip(results).enumerate() {
        match r {
            Ok(t) => {
                *counts.entry(t.outcome.name().to_string()).or_default() += 1;
                best = Some(best.map_or(t.final_delta, |b| b.min(t.final_delta)));
                per_trial.push(TrialSummary {
                    index,
                    seed: spec.clone(),
                    outcome: t.outcome,
                    steps: t.points.last().map_or(0, |p| p.n),
                    final_delta: t.final_delta,
                    final_e_p: 1.0 - t.final_delta,
                    singular_steps: t.singular_steps,
                });
            }
            Err(_) => *counts.entry("Error".to_string()).or_default() += 1,
        }
    }
    let hits = counts.get("TwoUnitary").copied().unwrap_or(0);
    BatchSummary {
        trials: specs.len(),
        convergence_rate: if specs.is_empty() { 0.0 } else { hits as f64 / specs.len() as f64 },
        counts,
        best_delta: best,
        per_trial,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::two_unitarity_defect;

    #[test]
    fn map_keeps_p9_two_unitary() {
        let mut u = builtin_permutation("P9").unwrap();
        for _ in 0..3 {
            u = map_step(&u).unwrap();
            assert!(two_unitarity_defect(&u) <= 1e-12);
            let m = u.matrix();
            assert!(m.iter().all(|z| (z.re.abs() < 1e-12 || (z.re - 1.0).abs() < 1e-12) && z.im.abs() < 1e-12));
        }
        // the rearrangement U -> (U^R)^Γ has order three on the legs
        assert!((u.matrix() - builtin_permutation("P9").unwrap().matrix()).norm() < 1e-12);
    }

    #[test]
    fn map_of_swap_is_singular() {
        assert!(matches!(map_step(&BipartiteOperator::swap(2)), Err(Error::SingularInput { .. })));
    }

    #[test]
    fn seeds_are_deterministic() {
        let spec = SeedSpec::perturbed("Ps", 0.05, 17).unwrap();
        assert_eq!(make_seed(&spec).unwrap(), make_seed(&spec).unwrap());
        let h = SeedSpec::haar(4, 3);
        let a = make_seed(&h).unwrap();
        assert_eq!(a, make_seed(&h).unwrap());
        assert!(a.unitarity_defect() <= 1e-12);
        assert_ne!(a, make_seed(&SeedSpec::haar(4, 4)).unwrap());
    }

    #[test]
    fn zero_perturbation_is_the_permutation() {
        let spec = SeedSpec::perturbed("Ps", 0.0, 99).unwrap();
        assert_eq!(make_seed(&spec).unwrap(), builtin_permutation("Ps").unwrap());
    }

    #[test]
    fn enphased_seed_has_permutation_support() {
        let u = make_seed(&SeedSpec::enphased("P36", 2).unwrap()).unwrap();
        let p = builtin_permutation("P36").unwrap();
        for (a, b) in u.matrix().iter().zip(p.matrix().iter()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn seed_errors() {
        assert!(matches!(SeedSpec::perturbed("Q", 0.1, 0), Err(Error::UnknownName(_))));
        let bad = SeedSpec { kind: SeedKind::Permutation { name: "P9".into() }, rng_seed: 0, d: 6 };
        assert!(matches!(make_seed(&bad), Err(Error::WrongDimension { expected: 3, found: 6 })));
    }

    #[test]
    fn d3_haar_trajectory_smoke() {
        let t = iterate(&SeedSpec::haar(3, 1), 1e-12, 2000).unwrap();
        assert!(t.points.iter().all(|p| p.delta.is_finite() && p.e_p >= -1e-12 && p.e_p <= 1.0 + 1e-12));
        assert!(t.points.windows(2).all(|w| w[1].n == w[0].n + 1));
        for p in &t.points {
            assert_eq!(p.e_p, 1.0 - p.delta);
        }
    }

    #[test]
    fn converged_orbit_stays_converged() {
        let tol = 1e-12;
        let t = (0..20)
            .map(|s| iterate(&SeedSpec::haar(3, s), tol, 2000).unwrap())
            .find(|t| t.outcome == Outcome::TwoUnitary)
            .expect("some d=3 seed converges");
        let mut u = t.final_matrix.clone();
        for _ in 0..3 {
            u = map_step(&u).unwrap();
            assert!(two_unitarity_defect(&u) < 10.0 * tol);
        }
    }

    #[test]
    fn singular_policy_stop() {
        let seed = SeedSpec { kind: SeedKind::Haar, rng_seed: 0, d: 2 };
        let cfg = IterateConfig { singular_policy: SingularPolicy::Stop, ..IterateConfig::default() };
        let t = iterate_from(seed, BipartiteOperator::swap(2), &cfg);
        assert_eq!(t.outcome, Outcome::Singular);
        assert_eq!(t.points.len(), 1);
    }

    #[test]
    fn empty_batch() {
        let (s, r) = batch_run(&[], &IterateConfig::default(), Some(1));
        assert_eq!(s.trials, 0);
        assert!(s.counts.is_empty());
        assert!(r.is_empty());
        assert_eq!(s.best_delta, None);
    }

    #[test]
    fn slope_of_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, -1.0, -3.0, -5.0];
        assert!((least_squares_slope(&xs, &ys) + 2.0).abs() < 1e-15);
    }
}
