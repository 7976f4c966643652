//! Interference-alignment scheme for a given index matrix, and the rank
//! checks that certify it.
//!
//! For every label `g` the scheme collects the channels that carry `U_g` as
//! interference somewhere (`H_g`), pads all these sets to a common size `Γ`,
//! and builds
//!
//! - `U_g`: the `T × η^Γ` matrix of power products `∏ H^α · Ξ_g`, `α ∈ [η]^Γ`,
//! - `W_g`: the same with `α ∈ [η+1]^Γ`, which contains `H · U_g` for every `H ∈ H_g`,
//! - `Λ_p = [D_p, I_p]` at each receiver, with `D_p` the desired blocks
//!   `H_{p,q} U_{G[p,q]}` and `I_p` one `W_g` per label interfering at `p`.
//!
//! Exponent tuples are enumerated lexicographically with every coordinate in
//! `1..=η` (or `1..=η+1`), the last coordinate varying fastest.
//!
//! Channel coefficients are exact dyadic rationals `c · 2^-10` with
//! `c ∈ {±1, …, ±2^20}`. Every entry of a power-product column has the same
//! total degree, so a column is stored as integer mantissas over one shared
//! power of two, and integer rank equals rational rank.

pub mod rank;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::puzzle::{self, IndexMatrix, RowScore, ScoreValue, Violation};
use crate::solver::with_pool;
use crate::topology::ChannelSpec;

/// Coefficient mantissas are drawn from `±[1, 2^COEFF_BITS]`.
pub const COEFF_BITS: u32 = 20;
/// Each coefficient is its mantissa times `2^-COEFF_SCALE_BITS`.
pub const COEFF_SCALE_BITS: u32 = 10;
pub const DEFAULT_COLUMN_CAP: usize = 4096;

/// A diagonal channel-like matrix appearing in some `H_g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagonal {
    /// The physical link `H_{rx,tx}`.
    Link { rx: usize, tx: usize },
    /// A random filler added to bring `H_label` up to size `Γ`.
    Synthetic { label: u32, index: usize },
}

/// Variables of the symbolic monomial describing one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Diagonal(Diagonal),
    Seed(u32),
}

/// Sorted `(variable, exponent)` pairs with positive exponents.
pub type Monomial = Vec<(Variable, u32)>;

pub type InterferenceSets = BTreeMap<u32, BTreeSet<(usize, usize)>>;

/// `H_g = {(p,q) : N[p,q] = 1 and G[p',q] = g for some p' ≠ p}` for every
/// label present in `G`. Requires a valid `G`.
pub fn interference_sets(spec: &ChannelSpec, g: &IndexMatrix) -> Result<InterferenceSets> {
    let violations = puzzle::validate(g, spec)?;
    if !violations.is_empty() {
        return Err(Error::InvalidIndexMatrix(violations));
    }
    Ok(interference_sets_unchecked(spec, g))
}

fn interference_sets_unchecked(spec: &ChannelSpec, g: &IndexMatrix) -> InterferenceSets {
    let k = spec.k();
    let mut sets: InterferenceSets = g.labels().into_iter().map(|l| (l, BTreeSet::new())).collect();
    for q in 0..k {
        for sender in 0..k {
            let label = g.get(sender, q);
            if label == 0 {
                continue;
            }
            let set = sets.get_mut(&label).expect("label collected above");
            for p in (0..k).filter(|&p| p != sender && spec.n(p, q)) {
                set.insert((p, q));
            }
        }
    }
    sets
}

/// `Γ = max_g |H_g|`, `0` when there is no label at all.
pub fn common_size(sets: &InterferenceSets) -> usize {
    sets.values().map(BTreeSet::len).max().unwrap_or(0)
}

/// Coordinate order of every padded set: its links ascending, then synthetic
/// fillers.
fn padded_names(sets: &InterferenceSets, gamma: usize) -> BTreeMap<u32, Vec<Diagonal>> {
    sets.iter()
        .map(|(&label, links)| {
            let mut names: Vec<Diagonal> = links.iter().map(|&(rx, tx)| Diagonal::Link { rx, tx }).collect();
            let missing = gamma - names.len();
            names.extend((0..missing).map(|index| Diagonal::Synthetic { label, index }));
            (label, names)
        })
        .collect()
}

pub fn draw_coefficient<R: Rng + ?Sized>(rng: &mut R) -> i64 {
    let magnitude = rng.gen_range(1..=(1i64 << COEFF_BITS));
    if rng.gen::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

fn draw_diagonal<R: Rng + ?Sized>(t: usize, rng: &mut R) -> Vec<i64> {
    (0..t).map(|_| draw_coefficient(rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedSets {
    /// Exponent coordinates of each `H_g`, all of length `gamma`.
    pub sets: BTreeMap<u32, Vec<Diagonal>>,
    /// Mantissas of the synthetic fillers, per label, in coordinate order.
    pub padding: BTreeMap<u32, Vec<Vec<i64>>>,
    pub gamma: usize,
}

/// Extends every `H_g` with fresh random diagonals of length `t` until all
/// have size `Γ`. Fillers never coincide with a physical link.
pub fn pad_sets<R: Rng + ?Sized>(sets: &InterferenceSets, t: usize, rng: &mut R) -> PaddedSets {
    let gamma = common_size(sets);
    let names = padded_names(sets, gamma);
    let padding = sets
        .iter()
        .map(|(&label, links)| {
            let fillers = (links.len()..gamma).map(|_| draw_diagonal(t, rng)).collect();
            (label, fillers)
        })
        .collect();
    PaddedSets {
        sets: names,
        padding,
        gamma,
    }
}

/// Every exponent tuple in `[max]^len`, lexicographic.
pub fn exponent_tuples(len: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (1..=max).map(move |e| {
                    let mut t = prefix.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

/// Position of `tuple` in the lexicographic enumeration of `[max]^len`.
pub fn tuple_index(tuple: &[u32], max: u32) -> usize {
    tuple
        .iter()
        .fold(0usize, |acc, &e| acc * max as usize + (e as usize - 1))
}

/// Everything about an instance that does not depend on random draws.
#[derive(Debug, Clone)]
pub struct InstanceShape {
    pub spec: ChannelSpec,
    pub g: IndexMatrix,
    pub eta: u32,
    pub raw_sets: InterferenceSets,
    pub sets: BTreeMap<u32, Vec<Diagonal>>,
    pub gamma: usize,
    pub t: usize,
    pub p_max: usize,
    pub rows: Vec<RowScore>,
    /// Labels interfering at each receiver, ascending (the blocks of `I_p`).
    pub interfering: Vec<Vec<u32>>,
    /// `η^Γ`.
    pub precoder_width: usize,
    /// `(η+1)^Γ`.
    pub expanded_width: usize,
}

fn checked_power(base: u32, exp: usize) -> Result<usize> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| (base as usize).checked_pow(e))
        .ok_or_else(|| Error::Refused(format!("{base}^{exp} columns overflow")))
}

impl InstanceShape {
    /// Builds the symbolic layout. `G` is not required to be valid, so that
    /// broken inputs can be diagnosed structurally.
    pub fn new(spec: &ChannelSpec, g: &IndexMatrix, eta: u32) -> Result<Self> {
        if eta == 0 {
            return Err(Error::invalid("eta must be at least 1"));
        }
        let score = puzzle::score_unchecked(g, spec)?;
        let raw_sets = interference_sets_unchecked(spec, g);
        let gamma = common_size(&raw_sets);
        let sets = padded_names(&raw_sets, gamma);
        let precoder_width = checked_power(eta, gamma)?;
        let expanded_width = checked_power(eta + 1, gamma)?;
        let p_max = score.argmax_row().unwrap_or(0);
        let row = score.per_row[p_max];
        let t = precoder_width
            .checked_mul(row.row_support)
            .and_then(|a| expanded_width.checked_mul(row.interference_count).and_then(|b| a.checked_add(b)))
            .ok_or_else(|| Error::Refused("block length overflows".into()))?;
        let interfering = (0..spec.k())
            .map(|p| puzzle::interfering_labels(g, spec, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(InstanceShape {
            spec: spec.clone(),
            g: g.clone(),
            eta,
            raw_sets,
            sets,
            gamma,
            t,
            p_max,
            rows: score.per_row,
            interfering,
            precoder_width,
            expanded_width,
        })
    }

    pub fn score(&self) -> ScoreValue {
        ScoreValue::from_rows(self.rows.clone())
    }

    pub fn desired_cols(&self, p: usize) -> usize {
        self.rows[p].row_support * self.precoder_width
    }

    pub fn interference_cols(&self, p: usize) -> usize {
        self.interfering[p].len() * self.expanded_width
    }

    pub fn total_cols(&self, p: usize) -> usize {
        self.desired_cols(p) + self.interference_cols(p)
    }

    /// Blocks of `Λ_p` in column order.
    pub fn blocks(&self, p: usize) -> Vec<Block> {
        let k = self.spec.k();
        let mut out: Vec<Block> = (0..k)
            .filter(|&q| self.g.get(p, q) > 0)
            .map(|q| Block::Desired {
                tx: q,
                label: self.g.get(p, q),
            })
            .collect();
        out.extend(self.interfering[p].iter().map(|&label| Block::Interference { label }));
        out
    }

    fn block_tuples(&self, block: &Block) -> Vec<Vec<u32>> {
        match block {
            Block::Desired { .. } => exponent_tuples(self.gamma, self.eta),
            Block::Interference { .. } => exponent_tuples(self.gamma, self.eta + 1),
        }
    }

    /// Symbolic monomials of every column of `Λ_p`.
    pub fn column_monomials(&self, p: usize) -> Vec<Monomial> {
        let mut out = Vec::with_capacity(self.total_cols(p));
        for block in self.blocks(p) {
            let label = block.label();
            let names = &self.sets[&label];
            for alpha in self.block_tuples(&block) {
                let mut mono: BTreeMap<Variable, u32> = BTreeMap::new();
                mono.insert(Variable::Seed(label), 1);
                for (name, &e) in names.iter().zip(&alpha) {
                    *mono.entry(Variable::Diagonal(*name)).or_default() += e;
                }
                if let Block::Desired { tx, .. } = block {
                    *mono.entry(Variable::Diagonal(Diagonal::Link { rx: p, tx })).or_default() += 1;
                }
                out.push(mono.into_iter().collect());
            }
        }
        out
    }

    /// Desired cells `(p,q)` whose own link sits in `H_{G[p,q]}`.
    pub fn property_one_violations(&self) -> Vec<(usize, usize)> {
        let k = self.spec.k();
        let mut out = Vec::new();
        for p in 0..k {
            for q in 0..k {
                let label = self.g.get(p, q);
                if label > 0 && self.raw_sets[&label].contains(&(p, q)) {
                    out.push((p, q));
                }
            }
        }
        out
    }

    /// Walks every pair of blocks of `Λ_p` and checks the reason their
    /// columns carry distinct exponents: distinct tuples inside one block,
    /// distinct seeds across labels, and for a shared label the desired link
    /// missing from `H_g`.
    pub fn distinctness_cases(&self, p: usize) -> Vec<CaseCheck> {
        let blocks = self.blocks(p);
        let mut out = Vec::new();
        for (i, a) in blocks.iter().enumerate() {
            for b in &blocks[i..] {
                let (case, holds, cell) = if a == b {
                    let tuples = self.block_tuples(a);
                    let distinct: HashSet<&Vec<u32>> = tuples.iter().collect();
                    (DistinctnessCase::SameBlock, distinct.len() == tuples.len(), None)
                } else if a.label() != b.label() {
                    (DistinctnessCase::DistinctSeeds, true, None)
                } else {
                    let label = a.label();
                    let offending = [a, b].into_iter().find_map(|blk| match blk {
                        Block::Desired { tx, .. } if self.raw_sets[&label].contains(&(p, *tx)) => Some((p, *tx)),
                        _ => None,
                    });
                    (DistinctnessCase::SharedLabel, offending.is_none(), offending)
                };
                out.push(CaseCheck {
                    rx: p,
                    first: *a,
                    second: *b,
                    case,
                    holds,
                    cell,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Block {
    /// `H_{p,tx} · U_label`.
    Desired { tx: usize, label: u32 },
    /// `W_label`.
    Interference { label: u32 },
}

impl Block {
    pub fn label(&self) -> u32 {
        match *self {
            Block::Desired { label, .. } | Block::Interference { label } => label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistinctnessCase {
    SameBlock,
    DistinctSeeds,
    SharedLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseCheck {
    pub rx: usize,
    pub first: Block,
    pub second: Block,
    pub case: DistinctnessCase,
    pub holds: bool,
    /// Desired cell whose link breaks the shared-label case.
    pub cell: Option<(usize, usize)>,
}

/// Column whose entries are `values[t] · 2^-shift`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicColumn {
    pub values: Vec<BigInt>,
    pub shift: u32,
}

impl DyadicColumn {
    /// Entrywise product with a diagonal given by mantissas.
    pub fn scale_by(&self, diag: &[i64]) -> DyadicColumn {
        DyadicColumn {
            values: self.values.iter().zip(diag).map(|(v, &d)| v * d).collect(),
            shift: self.shift + COEFF_SCALE_BITS,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let scale = 2f64.powi(-(self.shift as i32));
        self.values
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::INFINITY) * scale)
            .collect()
    }
}

/// One random realisation of the scheme.
#[derive(Debug, Clone)]
pub struct AlignmentInstance {
    pub shape: InstanceShape,
    /// Length-`T` mantissas of `H_{p,q}` for every link with `N[p,q] = 1`.
    pub channels: BTreeMap<(usize, usize), Vec<i64>>,
    /// `Ξ_g` per label.
    pub seeds: BTreeMap<u32, Vec<i64>>,
    pub padding: BTreeMap<u32, Vec<Vec<i64>>>,
}

impl AlignmentInstance {
    /// Draws channels (row-major over links), then seeds (by label), then
    /// padding (by label).
    pub fn sample<R: Rng + ?Sized>(shape: InstanceShape, rng: &mut R) -> Self {
        let k = shape.spec.k();
        let t = shape.t;
        let mut channels = BTreeMap::new();
        for p in 0..k {
            for q in 0..k {
                if shape.spec.n(p, q) {
                    channels.insert((p, q), draw_diagonal(t, rng));
                }
            }
        }
        let seeds = shape.sets.keys().map(|&l| (l, draw_diagonal(t, rng))).collect();
        let padded = pad_sets(&shape.raw_sets, t, rng);
        debug_assert_eq!(padded.sets, shape.sets);
        AlignmentInstance {
            shape,
            channels,
            seeds,
            padding: padded.padding,
        }
    }

    pub fn diagonal(&self, d: &Diagonal) -> &[i64] {
        match *d {
            Diagonal::Link { rx, tx } => &self.channels[&(rx, tx)],
            Diagonal::Synthetic { label, index } => &self.padding[&label][index],
        }
    }

    /// `∏_j H_j^{α_j} · Ξ_label`.
    pub fn power_column(&self, label: u32, alpha: &[u32]) -> DyadicColumn {
        let names = &self.shape.sets[&label];
        let seed = &self.seeds[&label];
        let diags: Vec<&[i64]> = names.iter().map(|n| self.diagonal(n)).collect();
        let degree: u32 = 1 + alpha.iter().sum::<u32>();
        let values = (0..self.shape.t)
            .map(|t| {
                let mut acc = BigInt::from(seed[t]);
                for (d, &e) in diags.iter().zip(alpha) {
                    acc *= BigInt::from(d[t]).pow(e);
                }
                acc
            })
            .collect();
        DyadicColumn {
            values,
            shift: degree * COEFF_SCALE_BITS,
        }
    }

    fn power_block(&self, label: u32, max: u32) -> Vec<DyadicColumn> {
        exponent_tuples(self.shape.gamma, max)
            .iter()
            .map(|alpha| self.power_column(label, alpha))
            .collect()
    }

    /// `U_g` for every label.
    pub fn build_precoders(&self) -> BTreeMap<u32, Vec<DyadicColumn>> {
        self.shape
            .sets
            .keys()
            .map(|&l| (l, self.power_block(l, self.shape.eta)))
            .collect()
    }

    /// `W_g` for every label.
    pub fn build_expanded(&self) -> BTreeMap<u32, Vec<DyadicColumn>> {
        self.shape
            .sets
            .keys()
            .map(|&l| (l, self.power_block(l, self.shape.eta + 1)))
            .collect()
    }

    /// `Λ_p` given prebuilt `U` and `W` blocks.
    pub fn receiver_space_from(
        &self,
        p: usize,
        precoders: &BTreeMap<u32, Vec<DyadicColumn>>,
        expanded: &BTreeMap<u32, Vec<DyadicColumn>>,
    ) -> Vec<DyadicColumn> {
        let mut cols = Vec::with_capacity(self.shape.total_cols(p));
        for block in self.shape.blocks(p) {
            match block {
                Block::Desired { tx, label } => {
                    let h = &self.channels[&(p, tx)];
                    cols.extend(precoders[&label].iter().map(|c| c.scale_by(h)));
                }
                Block::Interference { label } => cols.extend(expanded[&label].iter().cloned()),
            }
        }
        cols
    }

    pub fn build_receiver_space(&self, p: usize) -> Vec<DyadicColumn> {
        self.receiver_space_from(p, &self.build_precoders(), &self.build_expanded())
    }

    /// Checks `H · U_g ⊆ W_g` column by column: the column of `U_g` with
    /// tuple `α`, multiplied by the `j`-th member of `H_g`, must equal the
    /// column of `W_g` with tuple `α + e_j` exactly.
    pub fn span_containment(
        &self,
        precoders: &BTreeMap<u32, Vec<DyadicColumn>>,
        expanded: &BTreeMap<u32, Vec<DyadicColumn>>,
    ) -> Vec<ContainmentFailure> {
        let eta = self.shape.eta;
        let tuples = exponent_tuples(self.shape.gamma, eta);
        let mut failures = Vec::new();
        for (&label, names) in &self.shape.sets {
            let u = &precoders[&label];
            let w = &expanded[&label];
            for (j, name) in names.iter().enumerate() {
                let diag = self.diagonal(name);
                for (col, alpha) in u.iter().zip(&tuples) {
                    let mut shifted = alpha.clone();
                    shifted[j] += 1;
                    let target = &w[tuple_index(&shifted, eta + 1)];
                    if col.scale_by(diag) != *target {
                        failures.push(ContainmentFailure {
                            label,
                            diagonal: *name,
                            alpha: alpha.clone(),
                        });
                    }
                }
            }
        }
        failures
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContainmentFailure {
    pub label: u32,
    pub diagonal: Diagonal,
    pub alpha: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Exact,
    Float,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub eta: u32,
    pub trials: usize,
    pub backend: Backend,
    pub seed: u64,
    pub column_cap: usize,
    pub parallelism: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            eta: 1,
            trials: 3,
            backend: Backend::Exact,
            seed: 0,
            column_cap: DEFAULT_COLUMN_CAP,
            parallelism: 1,
        }
    }
}

fn ratio_string<S: Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

fn ratio(num: u64, den: u64) -> Ratio<u64> {
    if den == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(num, den)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReceiverReport {
    pub rx: usize,
    pub desired_cols: usize,
    pub interference_cols: usize,
    pub total_cols: usize,
    pub rows: usize,
    /// Column rank per trial; `None` when the receiver was structurally
    /// infeasible and no rank was computed.
    pub ranks: Vec<Option<usize>>,
    pub full_rank: bool,
    pub exponent_injective: bool,
    #[serde(serialize_with = "ratio_string")]
    pub dof_ratio: Ratio<u64>,
    /// `‖G[p,:]‖₀ / (‖G[p_max,:]‖₀ + g^(p_max))`, the `η → ∞` value.
    #[serde(serialize_with = "ratio_string")]
    pub dof_limit: Ratio<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankFailure {
    pub trial: usize,
    pub trial_seed: u64,
    pub rx: usize,
    pub rank: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub eta: u32,
    pub trials: usize,
    pub backend: Backend,
    pub seed: u64,
    pub gamma: usize,
    pub t: usize,
    pub p_max: usize,
    pub set_sizes: BTreeMap<u32, usize>,
    pub per_receiver: Vec<ReceiverReport>,
    pub containment_ok: bool,
    pub containment_failures: Vec<ContainmentFailure>,
    /// Definition violations of `G` itself (empty for valid input).
    pub violations: Vec<Violation>,
    pub property_one_violations: Vec<(usize, usize)>,
    pub case_failures: Vec<CaseCheck>,
    /// Receivers whose `Λ_p` has more columns than `T`.
    pub structural_failures: Vec<usize>,
    pub rank_failures: Vec<RankFailure>,
    #[serde(serialize_with = "ratio_string")]
    pub dof_sum: Ratio<u64>,
    #[serde(serialize_with = "ratio_string")]
    pub dof_limit_sum: Ratio<u64>,
    pub overall: Outcome,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn passed(&self) -> bool {
        self.overall == Outcome::Pass
    }
}

struct TrialResult {
    ranks: Vec<Option<usize>>,
    containment: Vec<ContainmentFailure>,
}

fn run_trial(shape: &InstanceShape, trial_seed: u64, backend: Backend) -> TrialResult {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let inst = AlignmentInstance::sample(shape.clone(), &mut rng);
    let precoders = inst.build_precoders();
    let expanded = inst.build_expanded();
    let containment = inst.span_containment(&precoders, &expanded);
    let ranks = (0..shape.spec.k())
        .map(|p| {
            if shape.total_cols(p) > shape.t {
                return None;
            }
            let cols = inst.receiver_space_from(p, &precoders, &expanded);
            Some(match backend {
                Backend::Exact => {
                    let ints: Vec<Vec<BigInt>> = cols.into_iter().map(|c| c.values).collect();
                    rank::exact_rank(&ints)
                }
                Backend::Float => {
                    let fl: Vec<Vec<f64>> = cols.iter().map(DyadicColumn::to_f64).collect();
                    rank::float_rank(&fl)
                }
            })
        })
        .collect();
    TrialResult { ranks, containment }
}

/// Builds the scheme `trials` times with independent draws and checks every
/// receiver matrix for full column rank, together with the structural
/// conditions (exponent distinctness, the desired-link property and span
/// containment).
pub fn verify(spec: &ChannelSpec, g: &IndexMatrix, opts: &VerifyOptions) -> Result<VerificationReport> {
    let violations = puzzle::validate(g, spec)?;
    if opts.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let shape = InstanceShape::new(spec, g, opts.eta)?;
    let pmax_interf = shape.rows[shape.p_max].interference_count;
    if shape.expanded_width.saturating_mul(pmax_interf) > opts.column_cap {
        return Err(Error::Refused(format!(
            "(eta+1)^Gamma * g^(p_max) = {}^{} * {} exceeds the column cap {}",
            opts.eta + 1,
            shape.gamma,
            pmax_interf,
            opts.column_cap
        )));
    }
    let k = spec.k();

    let property_one_violations = shape.property_one_violations();
    let case_failures: Vec<CaseCheck> = (0..k)
        .flat_map(|p| shape.distinctness_cases(p))
        .filter(|c| !c.holds)
        .collect();
    let injective: Vec<bool> = (0..k)
        .map(|p| {
            let monos = shape.column_monomials(p);
            let set: HashSet<&Monomial> = monos.iter().collect();
            set.len() == monos.len()
        })
        .collect();
    let structural_failures: Vec<usize> = (0..k).filter(|&p| shape.total_cols(p) > shape.t).collect();

    let mut root = ChaCha8Rng::seed_from_u64(opts.seed);
    let trial_seeds: Vec<u64> = (0..opts.trials).map(|_| root.next_u64()).collect();
    let results: Vec<TrialResult> = with_pool(opts.parallelism, || {
        if opts.parallelism > 1 {
            trial_seeds
                .par_iter()
                .map(|&s| run_trial(&shape, s, opts.backend))
                .collect()
        } else {
            trial_seeds.iter().map(|&s| run_trial(&shape, s, opts.backend)).collect()
        }
    });

    let load_max = shape.rows[shape.p_max].load() as u64;
    let mut rank_failures = Vec::new();
    let mut per_receiver = Vec::with_capacity(k);
    for (p, &exponent_injective) in injective.iter().enumerate() {
        let total = shape.total_cols(p);
        let ranks: Vec<Option<usize>> = results.iter().map(|r| r.ranks[p]).collect();
        for (trial, r) in ranks.iter().enumerate() {
            if let Some(rank) = *r {
                if rank < total {
                    rank_failures.push(RankFailure {
                        trial,
                        trial_seed: trial_seeds[trial],
                        rx: p,
                        rank,
                        cols: total,
                    });
                }
            }
        }
        let full_rank = ranks.iter().all(|r| *r == Some(total));
        per_receiver.push(ReceiverReport {
            rx: p,
            desired_cols: shape.desired_cols(p),
            interference_cols: shape.interference_cols(p),
            total_cols: total,
            rows: shape.t,
            ranks,
            full_rank,
            exponent_injective,
            dof_ratio: ratio(shape.desired_cols(p) as u64, shape.t as u64),
            dof_limit: ratio(shape.rows[p].row_support as u64, load_max),
        });
    }
    let containment_failures: Vec<ContainmentFailure> = results.into_iter().flat_map(|r| r.containment).collect();
    let containment_ok = containment_failures.is_empty();
    let dof_sum = per_receiver.iter().fold(Ratio::from_integer(0), |a, r| a + r.dof_ratio);
    let dof_limit_sum = per_receiver.iter().fold(Ratio::from_integer(0), |a, r| a + r.dof_limit);
    let structural_ok = violations.is_empty()
        && property_one_violations.is_empty()
        && case_failures.is_empty()
        && injective.iter().all(|&b| b);
    let overall = if structural_ok && containment_ok && per_receiver.iter().all(|r| r.full_rank) {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    let set_sizes = shape.raw_sets.iter().map(|(&l, s)| (l, s.len())).collect();
    Ok(VerificationReport {
        eta: opts.eta,
        trials: opts.trials,
        backend: opts.backend,
        seed: opts.seed,
        gamma: shape.gamma,
        t: shape.t,
        p_max: shape.p_max,
        set_sizes,
        per_receiver,
        containment_ok,
        containment_failures,
        violations,
        property_one_violations,
        case_failures,
        structural_failures,
        rank_failures,
        dof_sum,
        dof_limit_sum,
        overall,
    })
}

/// `‖G[p_max,:]‖₀ η^Γ / T` for the given `η`; increases toward the limit
/// `‖G[p_max,:]‖₀ / (‖G[p_max,:]‖₀ + g^(p_max))`.
pub fn pmax_dof_ratio(spec: &ChannelSpec, g: &IndexMatrix, eta: u32) -> Result<Ratio<u64>> {
    let shape = InstanceShape::new(spec, g, eta)?;
    Ok(ratio(shape.desired_cols(shape.p_max) as u64, shape.t as u64))
}

#[cfg(test)]
mod tests;
