//! Exhaustive enumeration oracle. Deliberately simple: no bounding, and the
//! score of every leaf is recomputed from scratch.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::puzzle::IndexMatrix;
use crate::topology::ChannelSpec;

use super::{finish, SolveMode, SolveReport};

/// Enumerates every canonical labelling of the message support (row-major
/// first occurrence, `0` allowed everywhere), keeps the valid ones and returns
/// the exact maximum.
pub fn brute_force(spec: &ChannelSpec, max_cells: usize) -> Result<SolveReport> {
    let start = Instant::now();
    let cells = spec.message_count();
    if cells > max_cells {
        return Err(Error::Refused(format!(
            "brute force limited to {max_cells} message cells, spec has {cells}"
        )));
    }
    if cells > 64 {
        return Err(Error::Refused("brute force supports at most 64 message cells".into()));
    }
    let k = spec.k();
    let support: Vec<(usize, usize)> = (0..k)
        .flat_map(|p| (0..k).map(move |q| (p, q)))
        .filter(|&(p, q)| spec.m(p, q))
        .collect();
    let mut walk = Walk {
        spec,
        k,
        support: &support,
        g: vec![0; k * k],
        column_mask: vec![0; k],
        best: None,
        nodes: 0,
    };
    walk.descend(0, 0);
    let (_, _, best) = walk.best.expect("the all-zero leaf is always visited");
    finish(
        spec,
        SolveMode::BruteForce,
        IndexMatrix::from_rows(&best.chunks(k).collect::<Vec<_>>())?,
        true,
        walk.nodes,
        start.elapsed(),
    )
}

struct Walk<'a> {
    spec: &'a ChannelSpec,
    k: usize,
    support: &'a [(usize, usize)],
    g: Vec<u32>,
    /// Bit `l - 1` set when label `l` is already in the column.
    column_mask: Vec<u64>,
    best: Option<(u64, u64, Vec<u32>)>,
    nodes: u64,
}

impl Walk<'_> {
    fn descend(&mut self, depth: usize, used: u32) {
        self.nodes += 1;
        if depth == self.support.len() {
            self.leaf();
            return;
        }
        let (p, q) = self.support[depth];
        self.descend(depth + 1, used);
        for label in 1..=used + 1 {
            let bit = 1u64 << (label - 1);
            if self.column_mask[q] & bit != 0 {
                continue;
            }
            self.g[p * self.k + q] = label;
            self.column_mask[q] |= bit;
            self.descend(depth + 1, used.max(label));
            self.column_mask[q] &= !bit;
            self.g[p * self.k + q] = 0;
        }
    }

    fn leaf(&mut self) {
        let k = self.k;
        let mut numerator = 0u64;
        let mut denominator = 0u64;
        for p in 0..k {
            let row = (0..k).filter(|&q| self.g[p * k + q] > 0).count() as u64;
            let mut labels = 0u64;
            for r in (0..k).filter(|&r| r != p) {
                for q in (0..k).filter(|&q| self.spec.n(p, q)) {
                    let v = self.g[r * k + q];
                    if v > 0 {
                        labels |= 1 << (v - 1);
                    }
                }
            }
            numerator += row;
            denominator = denominator.max(row + labels.count_ones() as u64);
        }
        // Leaves arrive in lexicographic order, so only strict improvements count.
        let better = match &self.best {
            None => true,
            Some((n, d, _)) => super::state::cmp_fraction(numerator, denominator, *n, *d).is_gt(),
        };
        if better {
            self.best = Some((numerator, denominator, self.g.clone()));
        }
    }
}
