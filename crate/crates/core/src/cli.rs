//! Command-line front end: argument definitions and subcommand runners.
//!
//! Exit codes: `0` success, `1` a check failed, `2` configuration or usage
//! error, `3` I/O or input-format error. The environment variable
//! `MULTIUNIT_TOL` overrides the default of every `--tol` flag.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::ame::{state_from_unitary, verify_numeric, Check};
use crate::canon::{canonicalize, polish, CanonConfig};
use crate::cyclotomic::{build_constants, verify_block_v, verify_constellations, CycNumber};
use crate::designs::{
    builtin_design, check_ols, ols_modular, permutation_from_design, strong_sudoku_check, tensor_from_design,
    DesignTable,
};
use crate::dynmap::{batch_run, IterateConfig, Outcome, SeedSpec, SingularPolicy};
use crate::error::{Error, Result};
use crate::golden::{verify_golden, Mode, SymbolicMatrix36};
use crate::metrics::gate_metrics;
use crate::qecc::{kl_check, pure_code_check, shortened_code, weyl_basis, CodeSpace, ErrorOperator};
use crate::tensor::{BipartiteOperator, Cut};

/// Name of the environment variable overriding default tolerances.
pub const TOL_ENV: &str = "MULTIUNIT_TOL";

#[derive(Debug, Parser, Serialize)]
#[command(name = "multiunit", version, about = "Search and verification of 2-unitary matrices and AME(4,d) states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Iterate the map from many seeds and record outcomes.
    Search(SearchArgs),
    /// Run numeric (or, for symbolic input, exact) checks on a matrix.
    Verify(VerifyArgs),
    /// Exact certification of the golden constants and relations.
    Certify(CertifyArgs),
    /// Entangling power, gate typicality and related metrics.
    Metrics(MetricsArgs),
    /// Emit, lift and check Latin-square designs.
    Designs(DesignsArgs),
    /// Encode a state into the shortened three-qudit code.
    Encode(EncodeArgs),
    /// Knill-Laflamme check of a code against Weyl errors.
    KlCheck(KlCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKindArg {
    Haar,
    Permutation,
    Perturbed,
    Enphased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    Svd,
    Stop,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    /// Local dimension; inferred from --perm when omitted.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_enum, default_value = "haar")]
    pub seed_kind: SeedKindArg,
    /// Built-in permutation for the permutation-based seed kinds (P9, P36, Ps).
    #[arg(long)]
    pub perm: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Trial `i` uses RNG seed `rng_seed + i`.
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Convergence threshold on the 2-unitarity defect.
    #[arg(long, env = TOL_ENV, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "svd")]
    pub singular_policy: PolicyArg,
    /// Worker threads (all cores when omitted).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "search_out")]
    pub out: PathBuf,
    /// Exit with status 1 unless at least one trial converges.
    #[arg(long)]
    pub require_hit: bool,
    /// Skip per-trial trajectory CSVs.
    #[arg(long)]
    pub no_trajectories: bool,
    /// Bring converged order-36 matrices to block form and verify them.
    #[arg(long)]
    pub canonicalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Numeric,
    Exact,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Dense matrix CSV or symbolic-csv file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Comma-separated subset of unitary,dual,2unitary,ame,bell-rows,blocks,coarse.
    #[arg(long, default_value = "unitary,dual,2unitary,ame,bell-rows,blocks,coarse")]
    pub checks: String,
    #[arg(long, env = TOL_ENV, default_value_t = 1e-9)]
    pub tol: f64,
    /// Verification mode for symbolic input.
    #[arg(long, value_enum, default_value = "numeric")]
    pub mode: ModeArg,
    /// Fail on symbolic input with fewer than 36 rows.
    #[arg(long)]
    pub require_full: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    /// Symbolic-csv matrix to certify exactly in addition to the relations.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Print a JSON report instead of one line per relation.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long = "in", conflicts_with = "perm", required_unless_present = "perm")]
    pub input: Option<PathBuf>,
    /// Built-in permutation instead of a file.
    #[arg(long)]
    pub perm: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct DesignsArgs {
    /// Built-in design name (P9, P36, Ps).
    #[arg(long, group = "source")]
    pub emit: Option<String>,
    /// Modular OLS of odd order d.
    #[arg(long, group = "source")]
    pub modular: Option<usize>,
    /// Design text file.
    #[arg(long = "in", group = "source")]
    pub input: Option<PathBuf>,
    /// Output the block-lift permutation matrix as dense CSV.
    #[arg(long, conflicts_with = "tensor")]
    pub lift: bool,
    /// Output the flattened tensor lift as dense CSV.
    #[arg(long)]
    pub tensor: bool,
    /// Report OLS defects as JSON; exit 1 unless the table is an OLS.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EncodeArgs {
    /// Dense matrix CSV of a 2-unitary.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// 1-based basis state to encode.
    #[arg(long, group = "what")]
    pub basis_state: Option<usize>,
    /// CSV of `re,im` lines giving the coefficients of a superposition.
    #[arg(long, group = "what")]
    pub vector: Option<PathBuf>,
    /// Output vector CSV (`index,re,im`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write all codewords as a code file.
    #[arg(long)]
    pub code_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KlCheckArgs {
    /// Code file, or a dense matrix CSV from which the shortened code is built.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Check all errors up to this weight.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub weight: u8,
    #[arg(long, env = TOL_ENV, default_value_t = 1e-9)]
    pub tol: f64,
    /// For matrix input, also check the four-party state as a pure code.
    #[arg(long)]
    pub pure: bool,
}

/// Full configuration echoed into reports and manifests.
#[derive(Debug, Serialize)]
pub struct RunConfig<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a Command,
}

impl<'a> RunConfig<'a> {
    pub fn new(command: &'a Command) -> Self {
        Self { tool: "multiunit", version: env!("CARGO_PKG_VERSION"), command }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::Parse { .. }
        | Error::InvariantViolation { .. }
        | Error::BadOrder { .. }
        | Error::NonFinite { .. } => 3,
        _ => 2,
    }
}

/// Runs a parsed command, writing reports to `out`, and returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> i32 {
    let cfg = RunConfig::new(&cli.command);
    let result = match &cli.command {
        Command::Search(a) => cmd_search(a, &cfg, out),
        Command::Verify(a) => cmd_verify(a, &cfg, out),
        Command::Certify(a) => cmd_certify(a, &cfg, out),
        Command::Metrics(a) => cmd_metrics(a, &cfg, out),
        Command::Designs(a) => cmd_designs(a, &cfg, out),
        Command::Encode(a) => cmd_encode(a, &cfg, out),
        Command::KlCheck(a) => cmd_kl_check(a, &cfg, out),
    };
    match result {
        Ok(passed) => i32::from(!passed),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("tolerance must be positive and finite, got {tol}")))
    }
}

fn is_symbolic(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.replace(' ', "") == "row,col,amp,exp")
}

/// Loads a dense matrix CSV, or realises a symbolic-csv file.
pub fn load_operator(path: &Path) -> Result<BipartiteOperator> {
    let text = std::fs::read_to_string(path)?;
    if is_symbolic(&text) {
        Ok(crate::golden::realize(&SymbolicMatrix36::read_csv(text.as_bytes())?))
    } else {
        BipartiteOperator::read_dense_csv(text.as_bytes())
    }
}

fn seed_specs(a: &SearchArgs) -> Result<Vec<SeedSpec>> {
    if a.trials == 0 {
        return Err(Error::Config("--trials must be at least 1".into()));
    }
    let perm = || a.perm.as_deref().ok_or_else(|| Error::Config("--perm is required for this seed kind".into()));
    let mut specs = Vec::with_capacity(a.trials);
    for i in 0..a.trials {
        let seed = a.rng_seed.wrapping_add(i as u64);
        let spec = match a.seed_kind {
            SeedKindArg::Haar => {
                let d = a.d.ok_or_else(|| Error::Config("--d is required for haar seeds".into()))?;
                if d < 2 {
                    return Err(Error::Config(format!("--d must be at least 2, got {d}")));
                }
                SeedSpec::haar(d, seed)
            }
            SeedKindArg::Permutation => SeedSpec::permutation(perm()?)?,
            SeedKindArg::Perturbed => SeedSpec::perturbed(perm()?, a.epsilon, seed)?,
            SeedKindArg::Enphased => SeedSpec::enphased(perm()?, seed)?,
        };
        if let Some(d) = a.d {
            if d != spec.d {
                return Err(Error::WrongDimension { expected: spec.d, found: d });
            }
        }
        specs.push(spec);
    }
    Ok(specs)
}

#[derive(Debug, Serialize)]
struct CanonicalEntry {
    index: usize,
    objective: f64,
    file: String,
    verified: bool,
}

fn cmd_search(a: &SearchArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    check_tol(a.tol)?;
    if !(a.epsilon.is_finite() && a.epsilon >= 0.0) {
        return Err(Error::Config(format!("--epsilon must be finite and nonnegative, got {}", a.epsilon)));
    }
    if a.jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let specs = seed_specs(a)?;
    let icfg = IterateConfig {
        tol: a.tol,
        max_iter: a.max_iter,
        singular_policy: match a.singular_policy {
            PolicyArg::Svd => SingularPolicy::SvdBranch,
            PolicyArg::Stop => SingularPolicy::Stop,
        },
        ..IterateConfig::default()
    };
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |t| t.as_secs());
    let clock = Instant::now();
    let (summary, results) = batch_run(&specs, &icfg, a.jobs);

    std::fs::create_dir_all(&a.out)?;
    let mut files: Vec<String> = vec!["manifest.json".into(), "summary.json".into(), "run_info.json".into()];
    if !a.no_trajectories {
        std::fs::create_dir_all(a.out.join("trajectories"))?;
    }
    let mut canonical = Vec::new();
    let keep = [Outcome::TwoUnitary, Outcome::FixedPointA, Outcome::FixedPointAS];
    for (i, r) in results.iter().enumerate() {
        let Ok(t) = r else { continue };
        if !a.no_trajectories {
            let name = format!("trajectories/trial_{i:04}.csv");
            t.save_csv(a.out.join(&name))?;
            files.push(name);
        }
        if keep.contains(&t.outcome) {
            std::fs::create_dir_all(a.out.join("matrices"))?;
            let name = format!("matrices/trial_{i:04}.csv");
            t.final_matrix.save_dense_csv(a.out.join(&name))?;
            files.push(name);
            if a.canonicalize && t.outcome == Outcome::TwoUnitary && t.final_matrix.d() % 2 == 0 {
                let can = canonicalize(&t.final_matrix, &CanonConfig { restarts: 12, ..CanonConfig::default() })?;
                let u = polish(&can.matrix, 1e-4, 300);
                let verified = verify_numeric(&u, &Check::ALL, 1e-9).passed;
                let name = format!("matrices/trial_{i:04}_canonical.csv");
                u.save_dense_csv(a.out.join(&name))?;
                files.push(name.clone());
                canonical.push(CanonicalEntry { index: i, objective: can.objective, file: name, verified });
            }
        }
    }
    let report = json!({ "config": cfg, "summary": summary, "canonical": canonical });
    std::fs::write(a.out.join("summary.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let manifest = json!({ "config": cfg, "files": files });
    std::fs::write(a.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    let info = json!({ "started_unix": started, "elapsed_seconds": clock.elapsed().as_secs_f64() });
    std::fs::write(a.out.join("run_info.json"), serde_json::to_string_pretty(&info)? + "\n")?;
    write_json(
        out,
        &json!({
            "trials": summary.trials,
            "counts": summary.counts,
            "convergence_rate": summary.convergence_rate,
            "best_delta": summary.best_delta,
            "canonical": canonical,
            "out": a.out,
        }),
    )?;
    let hit = summary.counts.get(Outcome::TwoUnitary.name()).copied().unwrap_or(0) > 0;
    Ok(hit || !a.require_hit)
}

fn cmd_verify(a: &VerifyArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    check_tol(a.tol)?;
    let checks = Check::parse_list(&a.checks)?;
    let text = std::fs::read_to_string(&a.input)?;
    if is_symbolic(&text) {
        let m = SymbolicMatrix36::read_csv(text.as_bytes())?;
        let mode = match a.mode {
            ModeArg::Numeric => Mode::Numeric,
            ModeArg::Exact => Mode::Exact,
        };
        let report = verify_golden(&m, mode, a.tol, a.require_full)?;
        let passed = report.passed();
        write_json(out, &json!({ "config": cfg, "input": "symbolic", "report": report, "passed": passed }))?;
        Ok(passed)
    } else {
        if a.mode == ModeArg::Exact {
            return Err(Error::Config("exact mode needs symbolic-csv input".into()));
        }
        let u = BipartiteOperator::read_dense_csv(text.as_bytes())?;
        let report = verify_numeric(&u, &checks, a.tol);
        let passed = report.passed;
        write_json(out, &json!({ "config": cfg, "input": "dense", "report": report, "passed": passed }))?;
        Ok(passed)
    }
}

fn cmd_certify(a: &CertifyArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let k = build_constants();
    let relations = verify_constellations(&k);
    let v_ok = verify_block_v(&k);
    let phi_ok = (&k.b - &(&k.a * &k.phi)).is_zero();
    let norm_ok = (&k.a * &k.a + &k.b * &k.b) == &k.c * &k.c && (&k.c * &k.c + &k.c * &k.c) == CycNumber::one();
    let matrix = match &a.input {
        Some(p) => Some(verify_golden(&crate::golden::load_golden(p)?, Mode::Exact, 0.0, false)?),
        None => None,
    };
    let passed = relations.iter().all(|r| r.is_zero)
        && v_ok
        && phi_ok
        && norm_ok
        && matrix.as_ref().is_none_or(|m| m.passed());
    if a.json {
        write_json(
            out,
            &json!({
                "config": cfg,
                "relations": relations,
                "block_v_unitary": v_ok,
                "b_equals_a_phi": phi_ok,
                "normalisation": norm_ok,
                "matrix": matrix,
                "passed": passed,
            }),
        )?;
    } else {
        for r in &relations {
            writeln!(out, "{}", r.line())?;
        }
        let word = |ok: bool| if ok { "EXACT IDENTITY" } else { "FAILED" };
        writeln!(out, "V: {}  (V V^dagger = I)", word(v_ok))?;
        writeln!(out, "PHI: {}  (b = a phi)", word(phi_ok))?;
        writeln!(out, "NORM: {}  (a^2 + b^2 = c^2 = 1/2)", word(norm_ok))?;
        if let Some(m) = &matrix {
            writeln!(out, "MATRIX: {}  {}", word(m.passed()), serde_json::to_string(m)?)?;
        }
    }
    Ok(passed)
}

fn cmd_metrics(a: &MetricsArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let u = match (&a.input, &a.perm) {
        (Some(p), _) => load_operator(p)?,
        (None, Some(name)) => crate::designs::builtin_permutation(name)?,
        (None, None) => return Err(Error::Config("give --in or --perm".into())),
    };
    let m = gate_metrics(&u);
    write_json(out, &json!({ "config": cfg, "d": u.d(), "metrics": m }))?;
    Ok(true)
}

fn write_text_or_stdout(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_designs(a: &DesignsArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let table: DesignTable = match (&a.emit, a.modular, &a.input) {
        (Some(name), _, _) => builtin_design(name)?,
        (_, Some(d), _) => ols_modular(d)?,
        (_, _, Some(p)) => DesignTable::load(p)?,
        _ => return Err(Error::Config("give one of --emit, --modular, --in".into())),
    };
    let payload = if a.lift || a.tensor {
        let u = if a.lift {
            permutation_from_design(&table)
        } else {
            tensor_from_design(&table).flatten(Cut::AbCd)
        };
        let mut buf = Vec::new();
        u.write_dense_csv(&mut buf)?;
        String::from_utf8(buf).expect("csv output is utf-8")
    } else {
        table.to_string()
    };
    if a.check {
        if let Some(p) = &a.out {
            std::fs::write(p, &payload)?;
        }
        let defects = check_ols(&table);
        let lift = permutation_from_design(&table);
        let report = json!({
            "config": cfg,
            "d": table.d(),
            "is_ols": defects.is_empty(),
            "repeated_count": defects.repeated_count(),
            "defects": defects,
            "lift_strong_sudoku": strong_sudoku_check(&lift, 1e-12),
            "lift_entangling_power": gate_metrics(&lift).e_p,
        });
        write_json(out, &report)?;
        Ok(defects.is_empty())
    } else {
        write_text_or_stdout(a.out.as_deref(), &payload, out)?;
        Ok(true)
    }
}

fn read_coefficients(path: &Path) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path)?;
    let mut v = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.replace(' ', "") == "re,im" {
            continue;
        }
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse { line: no + 1, msg: format!("bad number `{s}`") })
        };
        match f.as_slice() {
            [re] => v.push(Complex64::new(num(re)?, 0.0)),
            [re, im] => v.push(Complex64::new(num(re)?, num(im)?)),
            _ => return Err(Error::Parse { line: no + 1, msg: "expected `re,im`".into() }),
        }
    }
    Ok(v)
}

fn cmd_encode(a: &EncodeArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let u = load_operator(&a.input)?;
    let code = shortened_code(&u)?;
    let (coeffs, label) = match (a.basis_state, &a.vector) {
        (Some(i), _) => {
            if i == 0 || i > u.d() {
                return Err(Error::Config(format!("--basis-state must be in 1..={}", u.d())));
            }
            let mut c = vec![Complex64::new(0.0, 0.0); u.d()];
            c[i - 1] = Complex64::new(1.0, 0.0);
            (c, format!("basis state {i}"))
        }
        (None, Some(p)) => (read_coefficients(p)?, format!("vector {}", p.display())),
        (None, None) => return Err(Error::Config("give --basis-state or --vector".into())),
    };
    let v = code.encode_vector(&coeffs)?;
    let mut buf = Vec::new();
    writeln!(buf, "index,re,im")?;
    for (x, z) in v.iter().enumerate() {
        writeln!(buf, "{},{:.16e},{:.16e}", x + 1, z.re, z.im)?;
    }
    if let Some(p) = &a.code_out {
        code.save_csv(p)?;
    }
    match &a.out {
        Some(p) => {
            std::fs::write(p, &buf)?;
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            write_json(
                out,
                &json!({
                    "config": cfg,
                    "encoded": label,
                    "length": v.len(),
                    "norm": norm,
                    "codeword_orthonormality_defect": code.orthonormality_defect(),
                }),
            )?;
        }
        None => out.write_all(&buf)?,
    }
    Ok(true)
}

fn cmd_kl_check(a: &KlCheckArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    check_tol(a.tol)?;
    let text = std::fs::read_to_string(&a.input)?;
    let (code, state) = if text.trim_start().starts_with("d,") && text.lines().next().is_some_and(|l| l.contains("sites")) {
        (CodeSpace::read_csv(text.as_bytes())?, None)
    } else {
        let u = if is_symbolic(&text) {
            crate::golden::realize(&SymbolicMatrix36::read_csv(text.as_bytes())?)
        } else {
            BipartiteOperator::read_dense_csv(text.as_bytes())?
        };
        (shortened_code(&u)?, Some(state_from_unitary(&u)?))
    };
    let sites: Vec<usize> = (0..code.n_sites).collect();
    let mut errors: Vec<ErrorOperator> = Vec::new();
    for w in 1..=a.weight as usize {
        errors.extend(weyl_basis(code.d, code.n_sites, w, &sites));
    }
    let kl = kl_check(&code, &errors, a.tol);
    let orth = code.orthonormality_defect();
    let pure = match (&state, a.pure) {
        (Some(psi), true) => Some(pure_code_check(psi, 2, a.tol)?),
        (None, true) => return Err(Error::Config("--pure needs a matrix input".into())),
        _ => None,
    };
    let passed = kl.passed && orth <= a.tol && pure.as_ref().is_none_or(|p| p.passed);
    // failures can be numerous; report the first few
    let shown: Vec<_> = kl.failures.iter().take(10).collect();
    write_json(
        out,
        &json!({
            "config": cfg,
            "d": code.d,
            "codewords": code.dim(),
            "orthonormality_defect": orth,
            "errors_checked": kl.errors_checked,
            "max_off_diagonal": kl.max_off_diagonal,
            "max_diagonal_spread": kl.max_diagonal_spread,
            "failure_count": kl.failures.len(),
            "failures": shown,
            "pure_code": pure,
            "passed": passed,
        }),
    )?;
    Ok(passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let cli = Cli::try_parse_from(std::iter::once("multiunit").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let code = run(&cli, &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn certify_prints_eleven_exact_zeros() {
        let (code, text) = run_args(&["certify"]);
        assert_eq!(code, 0);
        assert_eq!(text.matches("EXACT ZERO").count(), 11);
    }

    #[test]
    fn metrics_of_builtin_permutation() {
        let (code, text) = run_args(&["metrics", "--perm", "P36"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let ep = v["metrics"]["e_p"].as_f64().unwrap();
        assert!((ep - 314.0 / 315.0).abs() < 1e-12);
    }

    #[test]
    fn designs_lift_matches_builtin() {
        let (code, text) = run_args(&["designs", "--emit", "P9", "--lift"]);
        assert_eq!(code, 0);
        let u = BipartiteOperator::read_dense_csv(text.as_bytes()).unwrap();
        let p9 = crate::designs::builtin_permutation("P9").unwrap();
        assert_eq!(u.matrix(), p9.matrix());
        let (code, _) = run_args(&["designs", "--emit", "P36", "--check"]);
        assert_eq!(code, 1);
        let (code, _) = run_args(&["designs", "--modular", "5", "--check"]);
        assert_eq!(code, 0);
        let (code, _) = run_args(&["designs", "--modular", "4"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn verify_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p36.csv");
        crate::designs::builtin_permutation("P36").unwrap().save_dense_csv(&p).unwrap();
        let ps = p.to_str().unwrap();
        let (code, _) = run_args(&["verify", "--in", ps, "--checks", "unitary"]);
        assert_eq!(code, 0);
        let (code, _) = run_args(&["verify", "--in", ps, "--checks", "unitary,2unitary"]);
        assert_eq!(code, 1);
        let (code, _) = run_args(&["verify", "--in", ps, "--checks", "nonsense"]);
        assert_eq!(code, 2);
        let missing = dir.path().join("missing.csv");
        let (code, _) = run_args(&["verify", "--in", missing.to_str().unwrap()]);
        assert_eq!(code, 3);
    }

    #[test]
    fn search_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let mut outputs = Vec::new();
        for jobs in ["1", "2"] {
            let o = dir.path().join(format!("run{jobs}"));
            let os = o.to_str().unwrap().to_string();
            let (code, _) = run_args(&[
                "search", "--d", "3", "--seed-kind", "haar", "--trials", "4", "--rng-seed", "7", "--jobs", jobs,
                "--out", &os, "--require-hit",
            ]);
            assert_eq!(code, 0);
            let s = std::fs::read_to_string(o.join("summary.json")).unwrap();
            let v: serde_json::Value = serde_json::from_str(&s).unwrap();
            outputs.push(serde_json::to_string(&v["summary"]).unwrap());
            assert!(o.join("manifest.json").exists());
            assert!(o.join("trajectories/trial_0000.csv").exists());
        }
        assert_eq!(outputs[0], outputs[1]);
    }

    #[test]
    fn bad_search_config() {
        let (code, _) = run_args(&["search", "--seed-kind", "perturbed", "--trials", "1", "--out", "/nonexistent/x"]);
        assert_eq!(code, 2);
        let (code, _) = run_args(&["search", "--seed-kind", "perturbed", "--perm", "Ps", "--d", "3", "--out", "/nonexistent/x"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn encode_and_kl_check_on_p9() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p9.csv");
        crate::designs::builtin_permutation("P9").unwrap().save_dense_csv(&p).unwrap();
        let ps = p.to_str().unwrap();
        let code_file = dir.path().join("code.csv");
        let (code, text) =
            run_args(&["encode", "--in", ps, "--basis-state", "1", "--code-out", code_file.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(text.lines().count(), 28);
        let (code, text) = run_args(&["kl-check", "--in", code_file.to_str().unwrap()]);
        assert_eq!(code, 0, "{text}");
        let (code, _) = run_args(&["kl-check", "--in", ps, "--pure"]);
        assert_eq!(code, 0);
        let (code, _) = run_args(&["kl-check", "--in", ps, "--weight", "2"]);
        assert_eq!(code, 1);
        let p36 = dir.path().join("p36.csv");
        crate::designs::builtin_permutation("P36").unwrap().save_dense_csv(&p36).unwrap();
        let (code, _) = run_args(&["encode", "--in", p36.to_str().unwrap(), "--basis-state", "1"]);
        assert_eq!(code, 2);
    }
}
