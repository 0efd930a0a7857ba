//! Latin squares, orthogonal Latin squares (OLS) and near-OLS tables, their
//! lifts to permutation matrices of order `d^2`, and support-pattern checks.
//!
//! Symbols are 1-based throughout.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::tensor::{BipartiteOperator, Tensor4};

/// A `d x d` grid in which every symbol `1..=d` occurs once per row and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatinSquare {
    d: usize,
    grid: Vec<Vec<usize>>,
}

impl LatinSquare {
    pub fn new(grid: Vec<Vec<usize>>) -> Result<Self> {
        let d = grid.len();
        check_square(&grid, d)?;
        for (r, row) in grid.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v == 0 || v > d {
                    return Err(Error::BadSymbolRange { row: r + 1, col: c + 1, value: v, d });
                }
            }
        }
        let sq = Self { d, grid };
        if !line_conflicts(sq.d, |r, c| sq.grid[r][c], 0).is_empty() {
            return Err(Error::InvariantViolation {
                row: 0,
                msg: "grid is not a Latin square".into(),
            });
        }
        Ok(sq)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.grid[row][col]
    }
}

fn check_square<T>(grid: &[Vec<T>], d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::ShapeMismatch("empty grid".into()));
    }
    if let Some(row) = grid.iter().find(|r| r.len() != d) {
        return Err(Error::ShapeMismatch(format!(
            "row of length {} in a grid with {} rows",
            row.len(),
            d
        )));
    }
    Ok(())
}

/// A `d x d` table of ordered symbol pairs `(k, l)`, not necessarily an OLS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignTable {
    d: usize,
    cells: Vec<Vec<(usize, usize)>>,
}

/// One symbol occurring more than once in a row or column of a component square.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineConflict {
    /// 1 for the first component, 2 for the second.
    pub component: usize,
    /// 1-based row or column index.
    pub line: usize,
    pub symbol: usize,
    pub count: usize,
}

/// A pair that occurs in more than one cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepeatedPair {
    pub pair: (usize, usize),
    /// 1-based `(row, col)` cells holding the pair.
    pub cells: Vec<(usize, usize)>,
}

/// Everything that keeps a table from being an OLS.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OlsDefectReport {
    pub repeated_pairs: Vec<RepeatedPair>,
    pub missing_pairs: Vec<(usize, usize)>,
    pub row_conflicts: Vec<LineConflict>,
    pub column_conflicts: Vec<LineConflict>,
}

impl OlsDefectReport {
    /// Number of surplus occurrences, which always equals the number of missing pairs.
    pub fn repeated_count(&self) -> usize {
        self.repeated_pairs.iter().map(|r| r.cells.len() - 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.repeated_pairs.is_empty()
            && self.missing_pairs.is_empty()
            && self.row_conflicts.is_empty()
            && self.column_conflicts.is_empty()
    }
}

impl DesignTable {
    /// Builds a table from 1-based pairs, rejecting symbols outside `1..=d`.
    pub fn new(cells: Vec<Vec<(usize, usize)>>) -> Result<Self> {
        let d = cells.len();
        check_square(&cells, d)?;
        for (r, row) in cells.iter().enumerate() {
            for (c, &(k, l)) in row.iter().enumerate() {
                for v in [k, l] {
                    if v == 0 || v > d {
                        return Err(Error::BadSymbolRange { row: r + 1, col: c + 1, value: v, d });
                    }
                }
            }
        }
        Ok(Self { d, cells })
    }

    /// Parses rows of two-digit tokens such as `"11 22 33"`.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let cells = rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.split_whitespace().map(|tok| parse_pair(tok, i + 1)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        Self::new(cells)
    }

    /// Pairs two Latin squares cellwise.
    pub fn from_squares(first: &LatinSquare, second: &LatinSquare) -> Result<Self> {
        if first.d != second.d {
            return Err(Error::DimensionMismatch { expected: first.d, found: second.d });
        }
        let d = first.d;
        Self::new(
            (0..d)
                .map(|r| (0..d).map(|c| (first.get(r, c), second.get(r, c))).collect())
                .collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Pair in 0-based cell `(row, col)`, with 1-based symbols.
    pub fn get(&self, row: usize, col: usize) -> (usize, usize) {
        self.cells[row][col]
    }

    pub fn rows(&self) -> &[Vec<(usize, usize)>] {
        &self.cells
    }

    /// Reads the plain-text design format: `d` on the first line, then `d`
    /// lines of `d` whitespace-separated pairs. Pairs are two digits (`kl`) or,
    /// for `d > 9`, `k,l`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (n0, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty design file".into() })?;
        let d: usize = first.parse().map_err(|_| Error::Parse {
            line: n0,
            msg: format!("expected the order d, found `{first}`"),
        })?;
        let mut cells = Vec::with_capacity(d);
        for (n, line) in lines {
            let row = line
                .split_whitespace()
                .map(|tok| parse_pair(tok, n))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != d {
                return Err(Error::Parse { line: n, msg: format!("expected {d} pairs, found {}", row.len()) });
            }
            cells.push(row);
        }
        if cells.len() != d {
            return Err(Error::Parse {
                line: n0,
                msg: format!("expected {d} rows, found {}", cells.len()),
            });
        }
        Self::new(cells)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

fn parse_pair(tok: &str, line: usize) -> Result<(usize, usize)> {
    let bad = || Error::Parse { line, msg: format!("bad pair `{tok}`") };
    if let Some((k, l)) = tok.split_once(',') {
        return Ok((k.parse().map_err(|_| bad())?, l.parse().map_err(|_| bad())?));
    }
    let digits: Vec<u32> = tok.chars().map(|ch| ch.to_digit(10)).collect::<Option<_>>().ok_or_else(bad)?;
    match digits.as_slice() {
        [k, l] => Ok((*k as usize, *l as usize)),
        _ => Err(bad()),
    }
}

impl fmt::Display for DesignTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.d)?;
        for row in &self.cells {
            let toks: Vec<String> = row
                .iter()
                .map(|&(k, l)| if self.d <= 9 { format!("{k}{l}") } else { format!("{k},{l}") })
                .collect();
            writeln!(f, "{}", toks.join(" "))?;
        }
        Ok(())
    }
}

/// Repeated symbols along rows (`axis = 0`) or columns (`axis = 1`) of a grid.
fn line_conflicts(d: usize, get: impl Fn(usize, usize) -> usize, axis: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for line in 0..d {
        let mut counts = vec![0usize; d + 1];
        for pos in 0..d {
            let v = if axis == 0 { get(line, pos) } else { get(pos, line) };
            counts[v] += 1;
        }
        for (sym, &n) in counts.iter().enumerate().skip(1) {
            if n > 1 {
                out.push((line + 1, sym, n));
            }
        }
    }
    out
}

/// Exhaustive list of the defects of a table; empty iff the table is an OLS.
pub fn check_ols(t: &DesignTable) -> OlsDefectReport {
    let d = t.d;
    let mut seen: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for r in 0..d {
        for c in 0..d {
            seen.entry(t.get(r, c)).or_default().push((r + 1, c + 1));
        }
    }
    let repeated_pairs = seen
        .iter()
        .filter(|(_, cells)| cells.len() > 1)
        .map(|(&pair, cells)| RepeatedPair { pair, cells: cells.clone() })
        .collect();
    let missing_pairs = (1..=d)
        .flat_map(|k| (1..=d).map(move |l| (k, l)))
        .filter(|p| !seen.contains_key(p))
        .collect();
    let mut row_conflicts = Vec::new();
    let mut column_conflicts = Vec::new();
    for component in [1usize, 2] {
        let get = |r: usize, c: usize| {
            let (k, l) = t.get(r, c);
            if component == 1 {
                k
            } else {
                l
            }
        };
        for (axis, sink) in [(0, &mut row_conflicts), (1, &mut column_conflicts)] {
            sink.extend(
                line_conflicts(d, get, axis)
                    .into_iter()
                    .map(|(line, symbol, count)| LineConflict { component, line, symbol, count }),
            );
        }
    }
    OlsDefectReport { repeated_pairs, missing_pairs, row_conflicts, column_conflicts }
}

/// The modular OLS for odd `d`: cell `(i, j)` holds `(i ⊕ j, i ⊕ 2j)`, where
/// `⊕` is addition modulo `d` with representatives `1..=d`.
pub fn ols_modular(d: usize) -> Result<DesignTable> {
    if d.is_multiple_of(2) {
        return Err(Error::EvenDimension(d));
    }
    let wrap = |x: usize| (x - 1) % d + 1;
    DesignTable::new(
        (1..=d)
            .map(|i| (1..=d).map(|j| (wrap(i + j), wrap(i + 2 * j))).collect())
            .collect(),
    )
}

/// Modular table for any `d`, without the odd-order restriction. For even `d`
/// the second component is not a Latin square; used to exhibit defects.
pub fn modular_table(d: usize) -> DesignTable {
    let wrap = |x: usize| (x - 1) % d + 1;
    DesignTable {
        d,
        cells: (1..=d)
            .map(|i| (1..=d).map(|j| (wrap(i + j), wrap(i + 2 * j))).collect())
            .collect(),
    }
}

/// 0-based permutation `row -> column` of the block lift: block `(i, j)` of
/// the `d^2 x d^2` matrix has its single unit entry at in-block position
/// `(k, l)`, where `(k, l)` is the pair in cell `(i, j)`.
///
/// Returns `None` if two cells send the same row to different columns or
/// leave a row empty, i.e. if the lift is not a permutation.
pub fn block_lift_permutation(t: &DesignTable) -> Option<Vec<usize>> {
    let d = t.d;
    let n = d * d;
    let mut perm = vec![usize::MAX; n];
    let mut col_used = vec![false; n];
    for i in 0..d {
        for j in 0..d {
            let (k, l) = t.get(i, j);
            let row = i * d + (k - 1);
            let col = j * d + (l - 1);
            if perm[row] != usize::MAX || col_used[col] {
                return None;
            }
            perm[row] = col;
            col_used[col] = true;
        }
    }
    Some(perm)
}

/// Block lift of a design to a 0/1 matrix of order `d^2` (see
/// [`block_lift_permutation`]). Every row of the table that is a Latin square
/// in the first component and every column Latin in the second gives a
/// permutation; the tables of [`builtin_design`] all do.
pub fn permutation_from_design(t: &DesignTable) -> BipartiteOperator {
    let d = t.d;
    let n = d * d;
    let mut m = CMat::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            let (k, l) = t.get(i, j);
            m[(i * d + (k - 1), j * d + (l - 1))] = Complex64::new(1.0, 0.0);
        }
    }
    BipartiteOperator::new(d, m).expect("order d^2 by construction")
}

/// The classical tensor `T_{ijkl} = 1` iff cell `(i, j)` holds `(k, l)`.
///
/// As a matrix (rows `(i,j)`, columns `(k,l)`) this is the reshuffle of
/// [`permutation_from_design`].
pub fn tensor_from_design(t: &DesignTable) -> Tensor4 {
    Tensor4::from_fn(t.d, |i, j, k, l| {
        if t.get(i, j) == (k + 1, l + 1) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

const P36_ROWS: [&str; 6] = [
    "11 22 33 44 55 66",
    "23 14 45 36 61 52",
    "32 41 64 53 16 25",
    "46 35 51 62 24 13",
    "54 63 26 15 42 31",
    "65 56 12 21 33 44",
];

const PS_ROWS: [&str; 6] = [
    "11 22 33 44 55 66",
    "23 14 45 36 61 52",
    "32 41 64 53 16 25",
    "46 35 51 62 24 13",
    "64 56 26 15 43 31",
    "55 63 12 21 42 34",
];

/// OLS of order 3 whose block lift is the 9x9 permutation of the modular
/// tensor. It is the reshuffled partner of [`ols_modular`]`(3)`.
const P9_ROWS: [&str; 3] = ["31 13 22", "23 32 11", "12 21 33"];

/// Names accepted by [`builtin_design`].
pub const BUILTIN_NAMES: [&str; 3] = ["P9", "P36", "Ps"];

/// Built-in tables: `P9` (an OLS of order 3), `P36` (the closest order-6 table
/// to an OLS, with two repeated pairs) and `Ps` (a variant of `P36` differing
/// in the last two rows).
pub fn builtin_design(name: &str) -> Result<DesignTable> {
    match name {
        "P9" | "p9" => DesignTable::from_rows(&P9_ROWS),
        "P36" | "p36" => DesignTable::from_rows(&P36_ROWS),
        "Ps" | "PS" | "ps" => DesignTable::from_rows(&PS_ROWS),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

/// Block lift of a built-in table.
pub fn builtin_permutation(name: &str) -> Result<BipartiteOperator> {
    builtin_design(name).map(|t| permutation_from_design(&t))
}

/// True iff the support of `u` (entries above `tol`) has one entry in every
/// row, every column and every `d x d` block, and no two blocks use the same
/// in-block position.
pub fn strong_sudoku_check(u: &BipartiteOperator, tol: f64) -> bool {
    let d = u.d();
    let n = d * d;
    let m = u.matrix();
    let mut row_count = vec![0usize; n];
    let mut col_count = vec![0usize; n];
    let mut block_count = vec![0usize; n];
    let mut location_used = vec![0usize; n];
    for p in 0..n {
        for s in 0..n {
            if m[(p, s)].norm() > tol {
                row_count[p] += 1;
                col_count[s] += 1;
                block_count[(p / d) * d + s / d] += 1;
                location_used[(p % d) * d + s % d] += 1;
            }
        }
    }
    [row_count, col_count, block_count, location_used]
        .iter()
        .all(|v| v.iter().all(|&c| c == 1))
}

/// Outcome of [`coarse_grain_check`].
#[derive(Debug, Clone, Serialize)]
pub struct CoarseGrainReport {
    pub passed: bool,
    /// Coarse pair `(K, L)` per cell (1-based groups), `None` where the cell's
    /// support spans more than one coarse pair or is empty.
    pub table: Vec<Vec<Option<(usize, usize)>>>,
    /// Occurrences of each coarse pair, `counts[K-1][L-1]`.
    pub counts: Vec<Vec<usize>>,
    pub cells_single_pair: bool,
    pub pairs_repeat_four_times: bool,
    pub symbols_twice_per_line: bool,
}

/// Coarse-grains the symbols of a `d = 6` tensor into groups `{1,2}, {3,4},
/// {5,6}` and checks that (a) every coarse pair fills exactly four cells and
/// (b) every coarse symbol occurs exactly twice in each row and each column,
/// separately for both positions.
pub fn coarse_grain_check(t: &Tensor4, tol: f64) -> Result<CoarseGrainReport> {
    let d = t.d();
    if d != 6 {
        return Err(Error::WrongDimension { expected: 6, found: d });
    }
    let groups = 3;
    let mut table = vec![vec![None; d]; d];
    let mut cells_single_pair = true;
    for (i, table_row) in table.iter_mut().enumerate() {
        for (j, cell) in table_row.iter_mut().enumerate() {
            let mut pairs = Vec::new();
            for k in 0..d {
                for l in 0..d {
                    if t.get(i, j, k, l).norm() > tol {
                        let pair = (k / 2 + 1, l / 2 + 1);
                        if !pairs.contains(&pair) {
                            pairs.push(pair);
                        }
                    }
                }
            }
            if pairs.len() == 1 {
                *cell = Some(pairs[0]);
            } else {
                cells_single_pair = false;
            }
        }
    }
    let mut counts = vec![vec![0usize; groups]; groups];
    for &(kk, ll) in table.iter().flatten().flatten() {
        counts[kk - 1][ll - 1] += 1;
    }
    let pairs_repeat_four_times = counts.iter().flatten().all(|&c| c == 4);
    let mut symbols_twice_per_line = cells_single_pair;
    if cells_single_pair {
        for pos in 0..2 {
            for line in 0..d {
                let mut row_counts = [0usize; 3];
                let mut col_counts = [0usize; 3];
                for x in 0..d {
                    let pick = |p: (usize, usize)| if pos == 0 { p.0 } else { p.1 };
                    row_counts[pick(table[line][x].unwrap()) - 1] += 1;
                    col_counts[pick(table[x][line].unwrap()) - 1] += 1;
                }
                if row_counts.iter().chain(col_counts.iter()).any(|&c| c != 2) {
                    symbols_twice_per_line = false;
                }
            }
        }
    }
    Ok(CoarseGrainReport {
        passed: cells_single_pair && pairs_repeat_four_times && symbols_twice_per_line,
        table,
        counts,
        cells_single_pair,
        pairs_repeat_four_times,
        symbols_twice_per_line,
    })
}

/// Which orthogonality condition of an OQLS failed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OqlsCondition {
    /// `Tr C^{i,j} (C^{k,l})^† = δ_ik δ_jl`
    Orthonormal,
    /// `Σ_i C^{i,j} (C^{i,l})^† = δ_jl I`
    ColumnSums,
    /// `Σ_j C^{i,j} (C^{k,j})^† = δ_ik I`
    RowSums,
}

/// Outcome of [`oqls_check`]: the largest deviation for each condition.
#[derive(Debug, Clone, Serialize)]
pub struct OqlsReport {
    pub passed: bool,
    pub failed: Option<OqlsCondition>,
    pub orthonormal_deviation: f64,
    pub column_sum_deviation: f64,
    pub row_sum_deviation: f64,
}

/// Checks that `d^2` coefficient matrices `C^{i,j}` (indexed `i*d + j`)
/// form an orthogonal quantum Latin square.
pub fn oqls_check(states: &[CMat], tol: f64) -> Result<OqlsReport> {
    let n = states.len();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || d == 0 {
        return Err(Error::ShapeMismatch(format!("{n} states is not a square number")));
    }
    if let Some(bad) = states.iter().find(|c| c.nrows() != d || c.ncols() != d) {
        return Err(Error::ShapeMismatch(format!(
            "coefficient matrix is {}x{}, expected {d}x{d}",
            bad.nrows(),
            bad.ncols()
        )));
    }
    let at = |i: usize, j: usize| &states[i * d + j];
    let mut orth: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let ip: Complex64 = states[a].iter().zip(states[b].iter()).map(|(x, y)| x * y.conj()).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            orth = orth.max((ip - target).norm());
        }
    }
    let identity_deviation = |mut acc: CMat, diagonal: bool| {
        if diagonal {
            for q in 0..d {
                acc[(q, q)] -= Complex64::new(1.0, 0.0);
            }
        }
        acc.norm()
    };
    let mut col: f64 = 0.0;
    let mut row: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            // (b): sum over the first index with the second ones fixed
            let mut acc_b = CMat::zeros(d, d);
            // (c): sum over the second index with the first ones fixed
            let mut acc_c = CMat::zeros(d, d);
            for s in 0..d {
                acc_b += at(s, x) * at(s, y).adjoint();
                acc_c += at(x, s) * at(y, s).adjoint();
            }
            col = col.max(identity_deviation(acc_b, x == y));
            row = row.max(identity_deviation(acc_c, x == y));
        }
    }
    let failed = if orth > tol {
        Some(OqlsCondition::Orthonormal)
    } else if col > tol {
        Some(OqlsCondition::ColumnSums)
    } else if row > tol {
        Some(OqlsCondition::RowSums)
    } else {
        None
    };
    Ok(OqlsReport {
        passed: failed.is_none(),
        failed,
        orthonormal_deviation: orth,
        column_sum_deviation: col,
        row_sum_deviation: row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Printed 9x9 permutation: 1-based column of the unit entry in each row.
    const P9_PRINTED: [usize; 9] = [6, 8, 1, 7, 3, 5, 2, 4, 9];
    const P9R_PRINTED: [usize; 9] = [7, 3, 5, 6, 8, 1, 2, 4, 9];
    const P9G_PRINTED: [usize; 9] = [3, 8, 4, 7, 6, 2, 5, 1, 9];

    fn perm_cols(u: &BipartiteOperator) -> Vec<usize> {
        let m = u.matrix();
        (0..m.nrows())
            .map(|p| {
                let hits: Vec<usize> = (0..m.ncols()).filter(|&s| m[(p, s)].norm() > 0.5).collect();
                assert_eq!(hits.len(), 1, "row {p} is not a permutation row");
                hits[0] + 1
            })
            .collect()
    }

    fn is_permutation(u: &BipartiteOperator) -> bool {
        let m = u.matrix();
        let n = m.nrows();
        let ones = |it: &mut dyn Iterator<Item = Complex64>| {
            let v: Vec<Complex64> = it.collect();
            v.iter().filter(|z| **z == Complex64::new(1.0, 0.0)).count() == 1
                && v.iter().filter(|z| **z != Complex64::new(0.0, 0.0)).count() == 1
        };
        (0..n).all(|p| ones(&mut (0..n).map(|s| m[(p, s)]))) && (0..n).all(|s| ones(&mut (0..n).map(|p| m[(p, s)])))
    }

    fn fig2_table() -> DesignTable {
        DesignTable::new(vec![
            vec![(2, 3), (3, 1), (1, 2)],
            vec![(3, 2), (1, 3), (2, 1)],
            vec![(1, 1), (2, 2), (3, 3)],
        ])
        .unwrap()
    }

    #[test]
    fn order_three_table_is_ols() {
        assert!(check_ols(&fig2_table()).is_empty());
    }

    #[test]
    fn p36_defects_are_two_doubled_pairs() {
        let r = check_ols(&builtin_design("P36").unwrap());
        let pairs: Vec<_> = r.repeated_pairs.iter().map(|p| (p.pair, p.cells.len())).collect();
        assert_eq!(pairs, vec![((3, 3), 2), ((4, 4), 2)]);
        assert_eq!(r.missing_pairs.len(), 2);
        assert_eq!(r.repeated_count(), r.missing_pairs.len());
    }

    #[test]
    fn order_two_has_no_ols() {
        let r = check_ols(&modular_table(2));
        assert!(!r.is_empty());
        assert!(matches!(ols_modular(2), Err(Error::EvenDimension(2))));
        // brute force over all tables built from two Latin squares of order 2
        let squares = [vec![vec![1, 2], vec![2, 1]], vec![vec![2, 1], vec![1, 2]]];
        for a in &squares {
            for b in &squares {
                let t = DesignTable::from_squares(
                    &LatinSquare::new(a.clone()).unwrap(),
                    &LatinSquare::new(b.clone()).unwrap(),
                )
                .unwrap();
                assert!(!check_ols(&t).is_empty());
            }
        }
    }

    #[test]
    fn modular_ols_is_defect_free_by_brute_force() {
        for d in [3usize, 5, 7, 9, 11] {
            let t = ols_modular(d).unwrap();
            let mut seen = vec![false; d * d];
            for i in 0..d {
                for j in 0..d {
                    let (k, l) = t.get(i, j);
                    assert!(!seen[(k - 1) * d + (l - 1)]);
                    seen[(k - 1) * d + (l - 1)] = true;
                }
            }
            assert!(check_ols(&t).is_empty(), "d = {d}");
        }
    }

    #[test]
    fn modular_tensor_matches_printed_matrix() {
        let t = ols_modular(3).unwrap();
        let u = tensor_from_design(&t).flatten(crate::tensor::Cut::AbCd);
        assert_eq!(perm_cols(&u), P9_PRINTED);
        assert_eq!(perm_cols(&u.reshuffle()), P9R_PRINTED);
        assert_eq!(perm_cols(&u.partial_transpose()), P9G_PRINTED);
        // block lift of the same table is the reshuffled matrix
        assert_eq!(permutation_from_design(&t), u.reshuffle());
    }

    #[test]
    fn builtin_p9_lifts_to_printed_matrix() {
        let t = builtin_design("P9").unwrap();
        assert!(check_ols(&t).is_empty());
        let u = permutation_from_design(&t);
        assert_eq!(perm_cols(&u), P9_PRINTED);
        assert_eq!(perm_cols(&u.reshuffle()), P9R_PRINTED);
        assert_eq!(perm_cols(&u.partial_transpose()), P9G_PRINTED);
    }

    #[test]
    fn builtin_tables_verbatim() {
        let p36 = builtin_design("P36").unwrap();
        let ps = builtin_design("Ps").unwrap();
        let row = |t: &DesignTable, r: usize| -> Vec<usize> { t.rows()[r].iter().map(|&(k, l)| 10 * k + l).collect() };
        assert_eq!(row(&p36, 0), vec![11, 22, 33, 44, 55, 66]);
        assert_eq!(row(&ps, 0), vec![11, 22, 33, 44, 55, 66]);
        assert_eq!(row(&ps, 4), vec![64, 56, 26, 15, 43, 31]);
        for r in 0..4 {
            assert_eq!(p36.rows()[r], ps.rows()[r]);
        }
        assert_ne!(p36.rows()[4], ps.rows()[4]);
        assert_ne!(p36.rows()[5], ps.rows()[5]);
        assert!(matches!(builtin_design("P10"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn lifts_are_permutations() {
        for name in BUILTIN_NAMES {
            let t = builtin_design(name).unwrap();
            assert!(block_lift_permutation(&t).is_some(), "{name}");
            assert!(is_permutation(&permutation_from_design(&t)), "{name}");
        }
        for d in [3, 5, 7] {
            let u = permutation_from_design(&ols_modular(d).unwrap());
            assert!(is_permutation(&u));
            assert!(is_permutation(&u.reshuffle()));
            assert!(is_permutation(&u.partial_transpose()));
            assert!(strong_sudoku_check(&u, 0.5));
        }
    }

    #[test]
    fn near_ols_lift_is_not_strong_sudoku() {
        let u = builtin_permutation("P36").unwrap();
        assert!(!strong_sudoku_check(&u, 0.5));
        assert!(!is_permutation(&u.partial_transpose()) || !is_permutation(&u.reshuffle()));
    }

    #[test]
    fn design_text_roundtrip() {
        for name in BUILTIN_NAMES {
            let t = builtin_design(name).unwrap();
            assert_eq!(DesignTable::parse(&t.to_string()).unwrap(), t);
        }
        let big = ols_modular(11).unwrap();
        assert_eq!(DesignTable::parse(&big.to_string()).unwrap(), big);
        assert!(matches!(DesignTable::parse("2\n11 22\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            DesignTable::parse("2\n11 23\n22 11\n"),
            Err(Error::BadSymbolRange { value: 3, .. })
        ));
    }

    #[test]
    fn coarse_grain_of_p36_and_full_support() {
        // The near-OLS table already has the coarse pattern: brute-force
        // counting gives every coarse pair four times and every coarse symbol
        // twice per line, both for the table tensor and for its block lift.
        let t = builtin_design("P36").unwrap();
        assert!(coarse_grain_check(&tensor_from_design(&t), 1e-9).unwrap().passed);
        assert!(coarse_grain_check(&permutation_from_design(&t).to_tensor(), 1e-9).unwrap().passed);
        // a single moved symbol breaks it
        let mut cells = t.rows().to_vec();
        cells[0][0] = (3, 1);
        let broken = DesignTable::new(cells).unwrap();
        assert!(!coarse_grain_check(&tensor_from_design(&broken), 1e-9).unwrap().passed);
        let ones = Tensor4::from_fn(6, |_, _, _, _| Complex64::new(1.0, 0.0));
        let r = coarse_grain_check(&ones, 1e-9).unwrap();
        assert!(!r.passed);
        assert!(!r.pairs_repeat_four_times);
        assert!(matches!(
            coarse_grain_check(&tensor_from_design(&ols_modular(3).unwrap()), 1e-9),
            Err(Error::WrongDimension { expected: 6, found: 3 })
        ));
    }

    #[test]
    fn coarse_grain_accepts_the_coarse_pattern() {
        // Coarse table with K in {A,B,C} for the first symbol and {a,b,c} for the second.
        let coarse = [
            "Aa Ab Cc Ca Bb Bc",
            "Ca Cb Bc Ba Ab Ac",
            "Bc Ba Ab Ac Ca Cb",
            "Ac Aa Cb Cc Ba Bb",
            "Cb Cc Ba Bb Ac Aa",
            "Bb Bc Aa Ab Cc Ca",
        ];
        let cells: Vec<Vec<(usize, usize)>> = coarse
            .iter()
            .map(|r| {
                r.split_whitespace()
                    .map(|t| {
                        let b = t.as_bytes();
                        ((b[0] - b'A') as usize, (b[1] - b'a') as usize)
                    })
                    .collect()
            })
            .collect();
        let t = Tensor4::from_fn(6, |i, j, k, l| {
            let (kk, ll) = cells[i][j];
            if k / 2 == kk && l / 2 == ll {
                Complex64::new(0.5, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let r = coarse_grain_check(&t, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
    }

    fn rows_as_states(u: &BipartiteOperator) -> Vec<CMat> {
        let d = u.d();
        (0..d * d)
            .map(|p| CMat::from_fn(d, d, |k, l| u.matrix()[(p, k * d + l)]))
            .collect()
    }

    #[test]
    fn oqls_examples() {
        let p9 = builtin_permutation("P9").unwrap();
        assert!(oqls_check(&rows_as_states(&p9), 1e-12).unwrap().passed);

        // product states |i⊕j>|i⊕2j>
        let t = ols_modular(3).unwrap();
        let products: Vec<CMat> = (0..9)
            .map(|p| {
                let (k, l) = t.get(p / 3, p % 3);
                CMat::from_fn(3, 3, |a, b| {
                    if (a + 1, b + 1) == (k, l) {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        assert!(oqls_check(&products, 1e-12).unwrap().passed);

        let bell = CMat::identity(3, 3) / Complex64::new(3f64.sqrt(), 0.0);
        let copies = vec![bell; 9];
        let r = oqls_check(&copies, 1e-9).unwrap();
        assert_eq!(r.failed, Some(OqlsCondition::Orthonormal));

        let p36 = builtin_permutation("P36").unwrap();
        assert!(!oqls_check(&rows_as_states(&p36), 1e-9).unwrap().passed);
        assert!(matches!(oqls_check(&products[..5], 1e-9), Err(Error::ShapeMismatch(_))));
    }
}
