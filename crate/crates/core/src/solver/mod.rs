//! Optimisers for the puzzle score.
//!
//! All three searches work on canonical labellings only: positive labels are
//! named by first occurrence, so no more than `‖M‖₀` distinct labels are ever
//! needed. Among equal-score optima the row-major lexicographically smallest
//! canonical matrix is reported, which makes results independent of search
//! order and worker count.

mod brute;
mod exact;
mod local;
mod state;

use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::puzzle::{self, canonical_relabel, IndexMatrix, ScoreValue};
use crate::topology::ChannelSpec;

pub use brute::brute_force;
pub use exact::branch_and_bound;
pub use local::{local_search, random_valid_filling};

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    Exact,
    Heuristic,
    BruteForce,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub mode: SolveMode,
    /// Largest label the search may introduce; `None` means `‖M‖₀`.
    pub max_label: Option<u32>,
    pub time_budget: Option<Duration>,
    pub seed: u64,
    pub parallelism: usize,
    /// Local-search restarts beyond the two deterministic starts.
    pub restarts: usize,
    pub brute_force_cap: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            mode: SolveMode::Exact,
            max_label: None,
            time_budget: None,
            seed: 0,
            parallelism: 1,
            restarts: 64,
            brute_force_cap: DEFAULT_BRUTE_FORCE_CAP,
        }
    }
}

impl SolveConfig {
    pub fn with_mode(mode: SolveMode) -> Self {
        SolveConfig {
            mode,
            ..Self::default()
        }
    }

    fn label_bound(&self, spec: &ChannelSpec) -> Result<usize> {
        match self.max_label {
            Some(0) => Err(Error::invalid("max_label must be at least 1")),
            Some(l) => Ok(l as usize),
            None => Ok(spec.message_count().max(1)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub mode: SolveMode,
    pub best_g: IndexMatrix,
    pub best_score: ScoreValue,
    /// True only when an exhaustive search ran to completion.
    pub optimal: bool,
    pub nodes_explored: u64,
    /// Wall-clock time. Left out of the serialized document so that reports
    /// are reproducible byte for byte.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Best candidate so far: higher score wins, ties go to the lexicographically
/// smaller canonical matrix.
#[derive(Debug, Clone)]
pub(crate) struct Incumbent {
    pub numerator: u64,
    pub denominator: u64,
    pub g: IndexMatrix,
}

impl Incumbent {
    pub fn zero(k: usize) -> Self {
        Incumbent {
            numerator: 0,
            denominator: 0,
            g: IndexMatrix::zeros(k),
        }
    }

    /// Offers a candidate (already canonical). Returns true if it replaced the incumbent.
    pub fn offer(&mut self, numerator: u64, denominator: u64, g: &IndexMatrix) -> bool {
        use std::cmp::Ordering::*;
        let replace = match state::cmp_fraction(numerator, denominator, self.numerator, self.denominator) {
            Greater => true,
            Equal => g < &self.g,
            Less => false,
        };
        if replace {
            self.numerator = numerator;
            self.denominator = denominator;
            self.g = g.clone();
        }
        replace
    }

    pub fn merge(&mut self, other: &Incumbent) {
        self.offer(other.numerator, other.denominator, &other.g);
    }
}

/// Builds a report, recomputing the score through the puzzle module so the
/// reported value can never drift from the matrix.
pub(crate) fn finish(
    spec: &ChannelSpec,
    mode: SolveMode,
    best: IndexMatrix,
    optimal: bool,
    nodes_explored: u64,
    elapsed: Duration,
) -> Result<SolveReport> {
    let best_g = canonical_relabel(&best);
    let best_score = puzzle::score(&best_g, spec)?;
    Ok(SolveReport {
        mode,
        best_g,
        best_score,
        optimal,
        nodes_explored,
        elapsed,
    })
}

/// Row labels on the message support, `G[p,q] = p`; valid for every spec.
pub fn classic_labelling(spec: &ChannelSpec) -> IndexMatrix {
    IndexMatrix::from_fn(spec.k(), |p, q| if spec.m(p, q) { p as u32 + 1 } else { 0 })
}

pub fn solve(spec: &ChannelSpec, config: &SolveConfig) -> Result<SolveReport> {
    if config.parallelism == 0 {
        return Err(Error::invalid("parallelism must be at least 1"));
    }
    match config.mode {
        SolveMode::BruteForce => brute_force(spec, config.brute_force_cap),
        SolveMode::Exact => branch_and_bound(spec, config),
        SolveMode::Heuristic => {
            let start = canonical_relabel(&classic_labelling(spec));
            local_search(spec, &start, config)
        }
    }
}

/// Runs `f` on a dedicated pool with `jobs` workers.
pub(crate) fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs <= 1 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
