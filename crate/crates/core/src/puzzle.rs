//! The number-filling puzzle: validity of a precoding index matrix `G`, the
//! interference submatrices `G^(p)`, the counts `g^(p)` and the exact score
//!
//! ```text
//!          ‖G‖₀
//! S = ─────────────────────────────
//!     max_p ( ‖G[p,:]‖₀ + g^(p) )
//! ```

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;
use crate::topology::ChannelSpec;

/// A `K×K` matrix of nonnegative precoder labels; `0` means "message not sent".
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u32>>", into = "Vec<Vec<u32>>")]
pub struct IndexMatrix {
    k: usize,
    cells: Vec<u32>,
}

impl TryFrom<Vec<Vec<u32>>> for IndexMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<u32>>) -> Result<Self> {
        IndexMatrix::from_rows(&rows)
    }
}

impl From<IndexMatrix> for Vec<Vec<u32>> {
    fn from(g: IndexMatrix) -> Self {
        g.rows()
    }
}

impl IndexMatrix {
    pub fn zeros(k: usize) -> Self {
        IndexMatrix {
            k,
            cells: vec![0; k * k],
        }
    }

    pub fn from_fn(k: usize, f: impl Fn(usize, usize) -> u32) -> Self {
        let cells = (0..k).flat_map(|p| (0..k).map(move |q| (p, q))).map(|(p, q)| f(p, q)).collect();
        IndexMatrix { k, cells }
    }

    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::invalid("index matrix must have at least one row"));
        }
        let mut cells = Vec::with_capacity(k * k);
        for (p, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != k {
                return Err(Error::invalid(format!(
                    "index matrix row {} has {} entries, expected {k}",
                    p + 1,
                    row.len()
                )));
            }
            cells.extend_from_slice(row);
        }
        Ok(IndexMatrix { k, cells })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize) -> u32 {
        self.cells[p * self.k + q]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, value: u32) {
        self.cells[p * self.k + q] = value;
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.cells.chunks(self.k.max(1)).map(<[u32]>::to_vec).collect()
    }

    /// `‖G‖₀`.
    pub fn support(&self) -> usize {
        self.cells.iter().filter(|&&v| v > 0).count()
    }

    /// `‖G[p,:]‖₀`.
    pub fn row_support(&self, p: usize) -> usize {
        self.cells[p * self.k..(p + 1) * self.k].iter().filter(|&&v| v > 0).count()
    }

    pub fn max_label(&self) -> u32 {
        self.cells.iter().copied().max().unwrap_or(0)
    }

    /// Distinct positive labels, ascending.
    pub fn labels(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.cells.iter().copied().filter(|&v| v > 0).collect();
        set.into_iter().collect()
    }

    /// Plain format: a line with `K`, then `K` rows. A header-less square
    /// block of rows is accepted on input as well.
    pub fn from_plain(source: &str) -> Result<Self> {
        let lines = text::tokenize(source)?;
        let first = lines.first().ok_or_else(|| Error::parse(1, 1, "empty input"))?;
        let with_header = first.tokens.len() == 1
            && first.tokens[0].value >= 1
            && lines.len() - 1 == first.tokens[0].value as usize;
        let (k, body) = if with_header {
            (first.tokens[0].value as usize, &lines[1..])
        } else {
            (lines.len(), &lines[..])
        };
        let rows = text::square_rows(body, k, "G")?;
        if let Some(extra) = body.get(k) {
            return Err(Error::parse(extra.number, 1, "unexpected trailing content"));
        }
        let mut out = Vec::with_capacity(k);
        for row in rows {
            let mut r = Vec::with_capacity(k);
            for t in row {
                if t.value < 0 || t.value > u32::MAX as i64 {
                    return Err(Error::Domain(format!(
                        "G entry {} at line {}, column {} is not a nonnegative label",
                        t.value, t.line, t.column
                    )));
                }
                r.push(t.value as u32);
            }
            out.push(r);
        }
        Self::from_rows(&out)
    }

    /// Accepts the plain format, a bare JSON array of rows, or `{"G": rows}`.
    pub fn parse(source: &str) -> Result<Self> {
        let trimmed = source.trim_start();
        if trimmed.starts_with('[') {
            serde_json::from_str(trimmed).map_err(text::json_error)
        } else if trimmed.starts_with('{') {
            #[derive(Deserialize)]
            struct Doc {
                #[serde(rename = "G")]
                g: IndexMatrix,
            }
            serde_json::from_str::<Doc>(trimmed).map(|d| d.g).map_err(text::json_error)
        } else {
            Self::from_plain(source)
        }
    }

    pub fn to_plain(&self) -> String {
        let mut out = format!("{}\n", self.k);
        text::write_rows(&mut out, self.k, |p, q| self.get(p, q));
        out
    }
}

impl fmt::Display for IndexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.max_label().to_string().len();
        for p in 0..self.k {
            let row: Vec<String> = (0..self.k).map(|q| format!("{:>width$}", self.get(p, q))).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// A broken puzzle rule. Cells are 0-based `(row, column)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `G[p,q] > 0` where `M[p,q] = 0`.
    NoMessage { cell: (usize, usize), value: u32 },
    /// The same positive label twice in one column.
    ColumnRepeat {
        value: u32,
        first: (usize, usize),
        second: (usize, usize),
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoMessage { cell: (p, q), value } => {
                write!(f, "G[{},{}] = {value} but M[{},{}] = 0", p + 1, q + 1, p + 1, q + 1)
            }
            Violation::ColumnRepeat { value, first, second } => write!(
                f,
                "label {value} repeats in column {} at rows {} and {}",
                first.1 + 1,
                first.0 + 1,
                second.0 + 1
            ),
        }
    }
}

fn check_dims(g: &IndexMatrix, spec: &ChannelSpec) -> Result<()> {
    if g.k() != spec.k() {
        return Err(Error::invalid(format!(
            "index matrix is {}x{} but the channel has K = {}",
            g.k(),
            g.k(),
            spec.k()
        )));
    }
    Ok(())
}

/// Checks both puzzle rules and returns every violation; an empty list means
/// `G` is valid for `spec`.
pub fn validate(g: &IndexMatrix, spec: &ChannelSpec) -> Result<Vec<Violation>> {
    check_dims(g, spec)?;
    let k = g.k();
    let mut out = Vec::new();
    for p in 0..k {
        for q in 0..k {
            let v = g.get(p, q);
            if v > 0 && !spec.m(p, q) {
                out.push(Violation::NoMessage { cell: (p, q), value: v });
            }
        }
    }
    for q in 0..k {
        for p in 0..k {
            let v = g.get(p, q);
            if v == 0 {
                continue;
            }
            for p2 in p + 1..k {
                if g.get(p2, q) == v {
                    out.push(Violation::ColumnRepeat {
                        value: v,
                        first: (p, q),
                        second: (p2, q),
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn is_valid(g: &IndexMatrix, spec: &ChannelSpec) -> bool {
    matches!(validate(g, spec), Ok(v) if v.is_empty())
}

/// `G^(p)`: `G` without row `p` and without every column `q` with `N[p,q] = 0`.
pub fn submatrix(g: &IndexMatrix, spec: &ChannelSpec, p: usize) -> Result<Vec<Vec<u32>>> {
    check_dims(g, spec)?;
    let k = g.k();
    if p >= k {
        return Err(Error::invalid(format!("row index {p} out of range for K = {k}")));
    }
    let cols: Vec<usize> = (0..k).filter(|&q| spec.n(p, q)).collect();
    Ok((0..k)
        .filter(|&r| r != p)
        .map(|r| cols.iter().map(|&q| g.get(r, q)).collect())
        .collect())
}

/// Distinct positive labels in `G^(p)`, ascending.
pub fn interfering_labels(g: &IndexMatrix, spec: &ChannelSpec, p: usize) -> Result<Vec<u32>> {
    let sub = submatrix(g, spec, p)?;
    let set: BTreeSet<u32> = sub.into_iter().flatten().filter(|&v| v > 0).collect();
    Ok(set.into_iter().collect())
}

/// `g^(p)`, the number of distinct positive labels in `G^(p)`.
pub fn interference_count(g: &IndexMatrix, spec: &ChannelSpec, p: usize) -> Result<usize> {
    interfering_labels(g, spec, p).map(|l| l.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowScore {
    pub row_support: usize,
    pub interference_count: usize,
}

impl RowScore {
    /// `‖G[p,:]‖₀ + g^(p)`.
    pub fn load(&self) -> usize {
        self.row_support + self.interference_count
    }
}

/// Exact puzzle score with its per-row breakdown. Numerator and denominator
/// are stored as defined (unreduced); comparisons and display use the reduced
/// ratio. The all-zero matrix scores `0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ScoreDoc", try_from = "ScoreDoc")]
pub struct ScoreValue {
    pub numerator: u64,
    pub denominator: u64,
    pub per_row: Vec<RowScore>,
}

#[derive(Serialize, Deserialize)]
struct ScoreDoc {
    score: String,
    numerator: u64,
    denominator: u64,
    per_row: Vec<RowScore>,
}

impl From<ScoreValue> for ScoreDoc {
    fn from(s: ScoreValue) -> Self {
        ScoreDoc {
            score: s.to_string(),
            numerator: s.numerator,
            denominator: s.denominator,
            per_row: s.per_row,
        }
    }
}

impl TryFrom<ScoreDoc> for ScoreValue {
    type Error = Error;

    fn try_from(d: ScoreDoc) -> Result<Self> {
        if d.denominator == 0 && d.numerator != 0 {
            return Err(Error::invalid("positive numerator over zero denominator"));
        }
        Ok(ScoreValue {
            numerator: d.numerator,
            denominator: d.denominator,
            per_row: d.per_row,
        })
    }
}

impl ScoreValue {
    pub fn from_rows(per_row: Vec<RowScore>) -> Self {
        let numerator = per_row.iter().map(|r| r.row_support as u64).sum();
        let denominator = per_row.iter().map(|r| r.load() as u64).max().unwrap_or(0);
        ScoreValue {
            numerator,
            denominator,
            per_row,
        }
    }

    /// Score without a per-row breakdown, e.g. from a closed-form formula.
    pub fn from_fraction(numerator: u64, denominator: u64) -> Self {
        ScoreValue {
            numerator,
            denominator,
            per_row: Vec::new(),
        }
    }

    /// Reduced exact value; `0/0` maps to `0`.
    pub fn ratio(&self) -> Ratio<u64> {
        if self.denominator == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(self.numerator, self.denominator)
        }
    }

    pub fn to_f64(&self) -> f64 {
        let r = self.ratio();
        *r.numer() as f64 / *r.denom() as f64
    }

    /// Index of the first row attaining the denominator.
    pub fn argmax_row(&self) -> Option<usize> {
        let best = self.per_row.iter().map(RowScore::load).max()?;
        self.per_row.iter().position(|r| r.load() == best)
    }
}

impl PartialOrd for ScoreValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.ratio().cmp(&other.ratio()))
    }
}

impl fmt::Display for ScoreValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.ratio();
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Per-row breakdown without the validity precondition. Callers that need
/// the guarantee should use [`score`].
pub fn score_unchecked(g: &IndexMatrix, spec: &ChannelSpec) -> Result<ScoreValue> {
    check_dims(g, spec)?;
    let per_row = (0..g.k())
        .map(|p| {
            Ok(RowScore {
                row_support: g.row_support(p),
                interference_count: interference_count(g, spec, p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreValue::from_rows(per_row))
}

pub fn score(g: &IndexMatrix, spec: &ChannelSpec) -> Result<ScoreValue> {
    let violations = validate(g, spec)?;
    if !violations.is_empty() {
        return Err(Error::InvalidIndexMatrix(violations));
    }
    score_unchecked(g, spec)
}

/// Renames positive labels so they first appear, in row-major order, as
/// `1, 2, 3, …`. Zeros are untouched.
pub fn canonical_relabel(g: &IndexMatrix) -> IndexMatrix {
    let mut map: HashMap<u32, u32> = HashMap::new();
    let mut out = g.clone();
    for v in out.cells.iter_mut() {
        if *v > 0 {
            let next = map.len() as u32 + 1;
            *v = *map.entry(*v).or_insert(next);
        }
    }
    out
}

pub fn is_canonical(g: &IndexMatrix) -> bool {
    canonical_relabel(g) == *g
}
