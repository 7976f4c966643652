use std::cmp::Ordering;

use crate::puzzle::IndexMatrix;
use crate::topology::ChannelSpec;

/// Compares `a_num/a_den` with `b_num/b_den`, treating a zero denominator as
/// the value zero.
pub(crate) fn cmp_fraction(a_num: u64, a_den: u64, b_num: u64, b_den: u64) -> Ordering {
    let (a_num, a_den) = if a_den == 0 { (0, 1) } else { (a_num, a_den) };
    let (b_num, b_den) = if b_den == 0 { (0, 1) } else { (b_num, b_den) };
    (a_num as u128 * b_den as u128).cmp(&(b_num as u128 * a_den as u128))
}

/// Incrementally maintained puzzle state: row supports, per-receiver label
/// multiplicities in `G^(p)` and per-column label usage.
#[derive(Clone)]
pub(crate) struct PuzzleState {
    k: usize,
    labels: usize,
    /// `hearers[q]`: receivers `p` with `N[p,q] = 1`.
    hearers: Vec<Vec<usize>>,
    g: Vec<u32>,
    row_support: Vec<u32>,
    interference: Vec<u32>,
    /// `seen[p * (labels + 1) + l]`: copies of label `l` inside `G^(p)`.
    seen: Vec<u32>,
    /// `in_column[q * (labels + 1) + l]`.
    in_column: Vec<bool>,
    support: u64,
}

impl PuzzleState {
    pub fn new(spec: &ChannelSpec, labels: usize) -> Self {
        let k = spec.k();
        let hearers = (0..k).map(|q| (0..k).filter(|&p| spec.n(p, q)).collect()).collect();
        PuzzleState {
            k,
            labels,
            hearers,
            g: vec![0; k * k],
            row_support: vec![0; k],
            interference: vec![0; k],
            seen: vec![0; k * (labels + 1)],
            in_column: vec![false; k * (labels + 1)],
            support: 0,
        }
    }

    pub fn from_matrix(spec: &ChannelSpec, g: &IndexMatrix, labels: usize) -> Self {
        let mut s = Self::new(spec, labels.max(g.max_label() as usize));
        for p in 0..s.k {
            for q in 0..s.k {
                let v = g.get(p, q);
                if v > 0 {
                    s.assign(p, q, v);
                }
            }
        }
        s
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize) -> u32 {
        self.g[p * self.k + q]
    }

    #[inline]
    pub fn column_has(&self, q: usize, label: u32) -> bool {
        self.in_column[q * (self.labels + 1) + label as usize]
    }

    /// Writes `label > 0` into an empty cell. Column legality is the caller's
    /// responsibility.
    pub fn assign(&mut self, p: usize, q: usize, label: u32) {
        debug_assert!(label > 0 && self.g[p * self.k + q] == 0);
        let stride = self.labels + 1;
        let l = label as usize;
        self.g[p * self.k + q] = label;
        self.row_support[p] += 1;
        self.support += 1;
        self.in_column[q * stride + l] = true;
        for &r in &self.hearers[q] {
            if r != p {
                let slot = &mut self.seen[r * stride + l];
                *slot += 1;
                if *slot == 1 {
                    self.interference[r] += 1;
                }
            }
        }
    }

    /// Clears a positive cell.
    pub fn clear(&mut self, p: usize, q: usize) {
        let label = self.g[p * self.k + q];
        debug_assert!(label > 0);
        let stride = self.labels + 1;
        let l = label as usize;
        self.g[p * self.k + q] = 0;
        self.row_support[p] -= 1;
        self.support -= 1;
        self.in_column[q * stride + l] = false;
        for &r in &self.hearers[q] {
            if r != p {
                let slot = &mut self.seen[r * stride + l];
                *slot -= 1;
                if *slot == 0 {
                    self.interference[r] -= 1;
                }
            }
        }
    }

    /// Sets a cell to any value, including `0`.
    pub fn set(&mut self, p: usize, q: usize, label: u32) {
        if self.get(p, q) > 0 {
            self.clear(p, q);
        }
        if label > 0 {
            self.assign(p, q, label);
        }
    }

    #[inline]
    pub fn load(&self, p: usize) -> u32 {
        self.row_support[p] + self.interference[p]
    }

    pub fn support(&self) -> u64 {
        self.support
    }

    /// `max_p (‖G[p,:]‖₀ + g^(p))`.
    pub fn denominator(&self) -> u64 {
        (0..self.k).map(|p| self.load(p)).max().unwrap_or(0) as u64
    }

    /// Rows attaining the denominator.
    pub fn rows_at_max(&self) -> usize {
        let d = self.denominator() as u32;
        (0..self.k).filter(|&p| self.load(p) == d).count()
    }

    pub fn to_matrix(&self) -> IndexMatrix {
        IndexMatrix::from_fn(self.k, |p, q| self.get(p, q))
    }
}
