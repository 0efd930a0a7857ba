//! The golden AME(4,6) matrix as a sparse symbolic object.
//!
//! Every nonzero entry is `x ω^e` with `x ∈ {a, b, c}` and `ω = e^{iπ/10}`;
//! a sign is carried as a shift of the exponent by 10. Rows have either two
//! entries equal to `c` up to phase, or four entries `a, a, b, b` up to phase.
//!
//! The symbolic-csv format has header `row,col,amp,exp` with 1-based `row`
//! and `col` in `1..=36`, `amp` one of `a`, `b`, `c` and `exp` in `0..=19`.
//! Lines starting with `#` are comments; a line `# provenance: <text>` sets
//! the provenance note.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ame::{bell_rank_deviation, row_states, verify_numeric, Check, VerifyReport};
use crate::cyclotomic::{build_constants, CycNumber, GoldenConstants};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::tensor::BipartiteOperator;

/// Local dimension of the golden construction.
pub const D: usize = 6;
/// Order of the golden matrix.
pub const N: usize = D * D;

/// Amplitude symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Amp {
    A,
    B,
    C,
}

impl Amp {
    pub fn symbol(self) -> char {
        match self {
            Amp::A => 'a',
            Amp::B => 'b',
            Amp::C => 'c',
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "a" => Some(Amp::A),
            "b" => Some(Amp::B),
            "c" => Some(Amp::C),
            _ => None,
        }
    }

    /// Numeric value of the amplitude.
    pub fn value(self) -> f64 {
        let pi = std::f64::consts::PI;
        match self {
            Amp::A => 1.0 / (2f64.sqrt() * 2.0 * (pi / 10.0).cos()),
            Amp::B => 1.0 / (2f64.sqrt() * 2.0 * (3.0 * pi / 10.0).cos()),
            Amp::C => std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    fn exact(self, k: &GoldenConstants) -> &CycNumber {
        match self {
            Amp::A => &k.a,
            Amp::B => &k.b,
            Amp::C => &k.c,
        }
    }
}

/// One nonzero entry `amp · ω^exp` at 1-based position `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolicEntry {
    pub row: usize,
    pub col: usize,
    pub amp: Amp,
    pub exp: u8,
}

impl SymbolicEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.amp.value(), std::f64::consts::PI * self.exp as f64 / 10.0)
    }

    pub fn exact(&self, k: &GoldenConstants) -> CycNumber {
        self.amp.exact(k) * &CycNumber::omega_pow(self.exp as i64)
    }
}

/// A validated, possibly partial, symbolic matrix of order 36.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicMatrix36 {
    /// Sorted by `(row, col)`.
    entries: Vec<SymbolicEntry>,
    provenance: String,
}

fn check_row(row: usize, entries: &[&SymbolicEntry]) -> Result<()> {
    let mut amps: Vec<Amp> = entries.iter().map(|e| e.amp).collect();
    amps.sort();
    let ok = match amps.len() {
        2 => amps == [Amp::C, Amp::C],
        4 => amps == [Amp::A, Amp::A, Amp::B, Amp::B],
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        let syms: String = amps.iter().map(|a| a.symbol()).collect();
        Err(Error::InvariantViolation {
            row,
            msg: format!("support must be {{c,c}} or {{a,a,b,b}}, found {} entries `{syms}`", amps.len()),
        })
    }
}

impl SymbolicMatrix36 {
    /// Validates ranges, uniqueness of positions and the per-row support rules.
    pub fn new(mut entries: Vec<SymbolicEntry>, provenance: impl Into<String>) -> Result<Self> {
        entries.sort();
        let mut seen = BTreeSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !(1..=N).contains(&e.row) || !(1..=N).contains(&e.col) || e.exp > 19 {
                return Err(Error::Parse { line: i + 1, msg: format!("entry out of range: {e:?}") });
            }
            if !seen.insert((e.row, e.col)) {
                return Err(Error::Parse { line: i + 1, msg: format!("duplicate position ({}, {})", e.row, e.col) });
            }
        }
        let m = Self { entries, provenance: provenance.into() };
        for (row, es) in m.rows() {
            check_row(row, &es)?;
        }
        Ok(m)
    }

    pub fn entries(&self) -> &[SymbolicEntry] {
        &self.entries
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Entries grouped by row, rows ascending.
    pub fn rows(&self) -> BTreeMap<usize, Vec<&SymbolicEntry>> {
        let mut map: BTreeMap<usize, Vec<&SymbolicEntry>> = BTreeMap::new();
        for e in &self.entries {
            map.entry(e.row).or_default().push(e);
        }
        map
    }

    pub fn rows_present(&self) -> usize {
        self.rows().len()
    }

    pub fn is_complete(&self) -> bool {
        self.rows_present() == N
    }

    /// Number of rows with two and with four entries.
    pub fn support_counts(&self) -> (usize, usize) {
        let rows = self.rows();
        let two = rows.values().filter(|r| r.len() == 2).count();
        (two, rows.len() - two)
    }

    /// Parses symbolic-csv text.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut provenance = String::new();
        let mut body = String::new();
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if let Some(rest) = t.strip_prefix('#') {
                if let Some(p) = rest.trim_start().strip_prefix("provenance:") {
                    provenance = p.trim().to_string();
                }
                body.push('\n');
                continue;
            }
            body.push_str(&line);
            body.push('\n');
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(body.as_bytes());
        let mut header_seen = false;
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if !header_seen {
                let h: Vec<&str> = rec.iter().collect();
                if h != ["row", "col", "amp", "exp"] {
                    return Err(Error::Parse { line, msg: format!("expected header row,col,amp,exp, got {h:?}") });
                }
                header_seen = true;
                continue;
            }
            if rec.len() != 4 {
                return Err(Error::Parse { line, msg: format!("expected 4 fields, got {}", rec.len()) });
            }
            let num = |i: usize| -> Result<usize> {
                rec[i].parse().map_err(|_| Error::Parse { line, msg: format!("bad integer `{}`", &rec[i]) })
            };
            let (row, col, exp) = (num(0)?, num(1)?, num(3)?);
            let amp = Amp::parse(&rec[2]).ok_or_else(|| Error::Parse { line, msg: format!("bad amplitude `{}`", &rec[2]) })?;
            if !(1..=N).contains(&row) || !(1..=N).contains(&col) {
                return Err(Error::Parse { line, msg: format!("position ({row}, {col}) outside 1..=36") });
            }
            if exp > 19 {
                return Err(Error::Parse { line, msg: format!("exponent {exp} outside 0..=19") });
            }
            if !seen.insert((row, col)) {
                return Err(Error::Parse { line, msg: format!("duplicate position ({row}, {col})") });
            }
            entries.push(SymbolicEntry { row, col, amp, exp: exp as u8 });
        }
        if !header_seen {
            return Err(Error::Parse { line: 1, msg: "missing header".into() });
        }
        Self::new(entries, provenance)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if !self.provenance.is_empty() {
            writeln!(w, "# provenance: {}", self.provenance.replace('\n', " "))?;
        }
        writeln!(w, "row,col,amp,exp")?;
        for e in &self.entries {
            writeln!(w, "{},{},{},{}", e.row, e.col, e.amp.symbol(), e.exp)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json<R: Read>(r: R) -> Result<Self> {
        let m: Self = serde_json::from_reader(r)?;
        Self::new(m.entries, m.provenance)
    }
}

/// Loads a symbolic-csv file.
pub fn load_golden(path: impl AsRef<Path>) -> Result<SymbolicMatrix36> {
    let f = std::fs::File::open(path)?;
    SymbolicMatrix36::read_csv(std::io::BufReader::new(f))
}

/// Output formats of [`export`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    SymbolicCsv,
    DenseCsv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symbolic-csv" => Ok(Self::SymbolicCsv),
            "dense-csv" => Ok(Self::DenseCsv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Config(format!("unknown format `{s}` (symbolic-csv, dense-csv, json)"))),
        }
    }
}

/// Writes `m` in the requested format.
pub fn export(m: &SymbolicMatrix36, format: ExportFormat, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        ExportFormat::SymbolicCsv => m.write_csv(&mut f)?,
        ExportFormat::DenseCsv => realize(m).write_dense_csv(&mut f)?,
        ExportFormat::Json => writeln!(f, "{}", m.to_json()?)?,
    }
    f.flush()?;
    Ok(())
}

/// Numeric matrix with `amp · ω^exp` at each listed position.
pub fn realize(m: &SymbolicMatrix36) -> BipartiteOperator {
    let mut u = CMat::zeros(N, N);
    for e in &m.entries {
        u[(e.row - 1, e.col - 1)] = e.value();
    }
    BipartiteOperator::new(D, u).expect("order 36 is a square")
}

/// Sparse exact rows of a flattening, keyed by 0-based row then column.
type ExactRows = BTreeMap<usize, BTreeMap<usize, CycNumber>>;

fn exact_flattenings(m: &SymbolicMatrix36, k: &GoldenConstants) -> [ExactRows; 3] {
    let mut out: [ExactRows; 3] = Default::default();
    for e in &m.entries {
        let v = e.exact(k);
        let (p, s) = (e.row - 1, e.col - 1);
        let (i, j, kk, l) = (p / D, p % D, s / D, s % D);
        // U_{ij,kl}; U^R_{ik,jl} = U_{ij,kl}; U^Γ_{il,kj} = U_{ij,kl}
        out[0].entry(p).or_default().insert(s, v.clone());
        out[1].entry(i * D + kk).or_default().insert(j * D + l, v.clone());
        out[2].entry(i * D + l).or_default().insert(kk * D + j, v);
    }
    out
}

fn exact_inner(x: &BTreeMap<usize, CycNumber>, y: &BTreeMap<usize, CycNumber>) -> CycNumber {
    x.iter().filter_map(|(col, a)| y.get(col).map(|b| a * &b.conj())).sum()
}

/// Exact failures of `M M^† = I` for one flattening, as `(row, row, value)`.
fn exact_gram_failures(rows: &ExactRows) -> Vec<(usize, usize, CycNumber)> {
    let mut fails = Vec::new();
    for p in 0..N {
        for q in p..N {
            let (Some(x), Some(y)) = (rows.get(&p), rows.get(&q)) else {
                if p == q {
                    fails.push((p, q, CycNumber::zero()));
                }
                continue;
            };
            let v = exact_inner(x, y);
            let ok = if p == q { v == CycNumber::one() } else { v.is_zero() };
            if !ok {
                fails.push((p, q, v));
            }
        }
    }
    fails
}

/// Row-local exact check of one row: unit norm and `C C^† = I/2`.
fn exact_row_bell(es: &[&SymbolicEntry], k: &GoldenConstants) -> bool {
    let half = &k.c * &k.c;
    let mut c = vec![vec![CycNumber::zero(); D]; D];
    for e in es {
        let s = e.col - 1;
        c[s / D][s % D] = e.exact(k);
    }
    (0..D).all(|x| {
        (0..D).all(|y| {
            let v: CycNumber = (0..D).map(|z| &c[x][z] * &c[y][z].conj()).sum();
            let want_half = x == y && c[x].iter().any(|t| !t.is_zero());
            if want_half { v == half } else { v.is_zero() }
        })
    })
}

/// Verification mode of [`verify_golden`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Numeric,
    Exact,
}

/// One failed exact inner product.
#[derive(Debug, Clone, Serialize)]
pub struct ExactFailure {
    pub flattening: &'static str,
    /// 1-based rows of the flattening.
    pub rows: (usize, usize),
    pub value: String,
}

/// Report of an exact verification.
#[derive(Debug, Clone, Serialize)]
pub struct ExactReport {
    pub rows_checked: usize,
    /// Every present row has unit norm and is a two-qubit maximally entangled state.
    pub rows_bell: bool,
    /// `None` for partial matrices.
    pub unitary: Option<bool>,
    pub unitary_r: Option<bool>,
    pub unitary_gamma: Option<bool>,
    pub failures: Vec<ExactFailure>,
    pub passed: bool,
}

/// Row-local numeric report used for partial matrices.
#[derive(Debug, Clone, Serialize)]
pub struct RowReport {
    /// 1-based row.
    pub row: usize,
    pub norm: f64,
    pub bell_deviation: f64,
}

/// Outcome of [`verify_golden`].
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum GoldenReport {
    Numeric { rows: Vec<RowReport>, full: Option<VerifyReport>, passed: bool },
    Exact(ExactReport),
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        match self {
            GoldenReport::Numeric { passed, .. } => *passed,
            GoldenReport::Exact(r) => r.passed,
        }
    }
}

/// Numeric checks of the present rows (norm and Bell rank).
pub fn row_reports(m: &SymbolicMatrix36) -> Vec<RowReport> {
    let u = realize(m);
    let cs = row_states(&u);
    m.rows()
        .keys()
        .map(|&row| {
            let c = &cs[row - 1];
            RowReport { row, norm: c.norm(), bell_deviation: bell_rank_deviation(c) }
        })
        .collect()
}

/// Verifies `m`. Row-local checks always run; global checks need all 36
/// rows unless `require_full` is false, in which case they are skipped for
/// partial input.
pub fn verify_golden(m: &SymbolicMatrix36, mode: Mode, tol: f64, require_full: bool) -> Result<GoldenReport> {
    let complete = m.is_complete();
    if require_full && !complete {
        return Err(Error::IncompleteMatrix { present: m.rows_present() });
    }
    match mode {
        Mode::Numeric => {
            let rows = row_reports(m);
            let rows_ok = rows.iter().all(|r| (r.norm - 1.0).abs() <= tol && r.bell_deviation <= tol);
            let full = complete.then(|| verify_numeric(&realize(m), &Check::ALL, tol));
            let passed = rows_ok && full.as_ref().is_none_or(|f| f.passed);
            Ok(GoldenReport::Numeric { rows, full, passed })
        }
        Mode::Exact => {
            let k = build_constants();
            let rows = m.rows();
            let rows_bell = rows.values().all(|es| exact_row_bell(es, &k));
            let (mut unitary, mut unitary_r, mut unitary_gamma) = (None, None, None);
            let mut failures = Vec::new();
            if complete {
                let flats = exact_flattenings(m, &k);
                let names = ["U", "U^R", "U^Gamma"];
                let mut ok = [true; 3];
                for (f, rows) in flats.iter().enumerate() {
                    for (p, q, v) in exact_gram_failures(rows) {
                        ok[f] = false;
                        failures.push(ExactFailure { flattening: names[f], rows: (p + 1, q + 1), value: v.to_string() });
                    }
                }
                (unitary, unitary_r, unitary_gamma) = (Some(ok[0]), Some(ok[1]), Some(ok[2]));
            }
            let passed = rows_bell && failures.is_empty();
            Ok(GoldenReport::Exact(ExactReport {
                rows_checked: rows.len(),
                rows_bell,
                unitary,
                unitary_r,
                unitary_gamma,
                failures,
                passed,
            }))
        }
    }
}

/// Fixture rows `ψ11`, `ψ12`, `ψ63`, `ψ66` in symbolic-csv form.
pub const FIXTURE_CSV: &str = include_str!("../data/golden_rows.csv");

/// The fixture rows as a partial symbolic matrix.
pub fn fixture_rows() -> SymbolicMatrix36 {
    SymbolicMatrix36::read_csv(FIXTURE_CSV.as_bytes()).expect("bundled fixture parses")
}
