//! Branch and bound over canonical labellings.
//!
//! Cells are branched column by column (the column distinctness rule bites
//! earliest there), rows inside a column by decreasing connectivity. A node is
//! pruned only when its bound is strictly below the incumbent, so every
//! optimal leaf is visited and the tie-break is exact.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::Result;
use crate::puzzle::canonical_relabel;
use crate::topology::ChannelSpec;

use super::state::{cmp_fraction, PuzzleState};
use super::{classic_labelling, finish, with_pool, Incumbent, SolveConfig, SolveMode, SolveReport};

pub(crate) fn branching_order(spec: &ChannelSpec) -> Vec<(usize, usize)> {
    let k = spec.k();
    let mut rows: Vec<usize> = (0..k).collect();
    rows.sort_by_key(|&p| (std::cmp::Reverse(spec.connected_count(p)), p));
    let mut order = Vec::with_capacity(spec.message_count());
    for q in 0..k {
        for &p in &rows {
            if spec.m(p, q) {
                order.push((p, q));
            }
        }
    }
    order
}

/// Upper bound on the score of any completion.
///
/// Every completion with final denominator `d` has `load_p + a_p <= d` for the
/// `a_p` cells it adds to row `p` (loads never decrease), so at most
/// `min(rem_p, d - load_p)` new cells per row. The bound is the best ratio over
/// all feasible `d`, as a fraction.
fn completion_bound(state: &PuzzleState, remaining: &[u32], k: usize) -> (u64, u64) {
    let current_den = state.denominator();
    let support = state.support();
    let d_min = current_den.max(1);
    let d_max = (0..k)
        .map(|p| (state.load(p) + remaining[p]) as u64)
        .max()
        .unwrap_or(0)
        .max(d_min);
    let mut best = (support, current_den);
    for d in d_min..=d_max {
        let extra: u64 = (0..k)
            .map(|p| {
                let room = d.saturating_sub(state.load(p) as u64);
                room.min(remaining[p] as u64)
            })
            .sum();
        let cand = (support + extra, d);
        if cmp_fraction(cand.0, cand.1, best.0, best.1).is_gt() {
            best = cand;
        }
    }
    best
}

struct Shared {
    best: Mutex<Incumbent>,
    /// Packed `(numerator << 32) | denominator` snapshot for cheap reads.
    snapshot: AtomicU64,
    stop: AtomicBool,
    nodes: AtomicU64,
}

impl Shared {
    fn read(&self) -> (u64, u64) {
        let v = self.snapshot.load(Ordering::Acquire);
        (v >> 32, v & 0xffff_ffff)
    }

    fn offer(&self, num: u64, den: u64, state: &PuzzleState) {
        let g = canonical_relabel(&state.to_matrix());
        let mut best = self.best.lock().expect("incumbent lock");
        if best.offer(num, den, &g) {
            self.snapshot.store((best.numerator << 32) | best.denominator, Ordering::Release);
        }
    }
}

struct Worker<'a> {
    order: &'a [(usize, usize)],
    k: usize,
    labels: u32,
    state: PuzzleState,
    remaining: Vec<u32>,
    shared: &'a Shared,
    deadline: Option<Instant>,
    local_nodes: u64,
}

impl Worker<'_> {
    fn descend(&mut self, depth: usize, used: u32) {
        self.local_nodes += 1;
        if self.local_nodes.is_multiple_of(4096) {
            self.shared.nodes.fetch_add(4096, Ordering::Relaxed);
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    self.shared.stop.store(true, Ordering::Relaxed);
                }
            }
        }
        if self.shared.stop.load(Ordering::Relaxed) {
            return;
        }
        let (inc_num, inc_den) = self.shared.read();
        let (b_num, b_den) = completion_bound(&self.state, &self.remaining, self.k);
        if cmp_fraction(b_num, b_den, inc_num, inc_den).is_lt() {
            return;
        }
        if depth == self.order.len() {
            self.shared.offer(self.state.support(), self.state.denominator(), &self.state);
            return;
        }
        let (p, q) = self.order[depth];
        self.remaining[p] -= 1;
        self.descend(depth + 1, used);
        let top = (used + 1).min(self.labels);
        for label in 1..=top {
            if self.state.column_has(q, label) {
                continue;
            }
            self.state.assign(p, q, label);
            self.descend(depth + 1, used.max(label));
            self.state.clear(p, q);
        }
        self.remaining[p] += 1;
    }
}

/// A partial assignment of the first `depth` cells in branching order.
#[derive(Clone)]
struct Prefix {
    values: Vec<u32>,
    used: u32,
}

fn split_prefixes(order: &[(usize, usize)], labels: u32, target: usize) -> Vec<Prefix> {
    let mut frontier = vec![Prefix {
        values: Vec::new(),
        used: 0,
    }];
    let mut depth = 0;
    while frontier.len() < target && depth < order.len() {
        let (_, q) = order[depth];
        let mut next = Vec::new();
        for pre in &frontier {
            // Column conflicts inside the prefix.
            let taken: Vec<u32> = order[..depth]
                .iter()
                .zip(&pre.values)
                .filter(|((_, c), v)| *c == q && **v > 0)
                .map(|(_, v)| *v)
                .collect();
            let mut zero = pre.clone();
            zero.values.push(0);
            next.push(zero);
            for label in 1..=(pre.used + 1).min(labels) {
                if taken.contains(&label) {
                    continue;
                }
                let mut child = pre.clone();
                child.values.push(label);
                child.used = pre.used.max(label);
                next.push(child);
            }
        }
        frontier = next;
        depth += 1;
    }
    frontier
}

pub fn branch_and_bound(spec: &ChannelSpec, config: &SolveConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let labels = config.label_bound(spec)? as u32;
    let k = spec.k();
    let order = branching_order(spec);

    let mut seed = Incumbent::zero(k);
    let classic = canonical_relabel(&classic_labelling(spec));
    if classic.max_label() <= labels {
        let s = crate::puzzle::score(&classic, spec)?;
        seed.offer(s.numerator, s.denominator, &classic);
    }
    let shared = Shared {
        snapshot: AtomicU64::new((seed.numerator << 32) | seed.denominator),
        best: Mutex::new(seed),
        stop: AtomicBool::new(false),
        nodes: AtomicU64::new(0),
    };
    let deadline = config.time_budget.map(|b| start + b);
    let jobs = config.parallelism.max(1);
    let prefixes = if jobs > 1 {
        split_prefixes(&order, labels, jobs * 16)
    } else {
        vec![Prefix {
            values: Vec::new(),
            used: 0,
        }]
    };

    let mut base_remaining = vec![0u32; k];
    for &(p, _) in &order {
        base_remaining[p] += 1;
    }

    let run = |prefix: &Prefix| {
        let mut state = PuzzleState::new(spec, labels as usize);
        let mut remaining = base_remaining.clone();
        for (&(p, q), &v) in order.iter().zip(&prefix.values) {
            remaining[p] -= 1;
            if v > 0 {
                state.assign(p, q, v);
            }
        }
        let mut worker = Worker {
            order: &order,
            k,
            labels,
            state,
            remaining,
            shared: &shared,
            deadline,
            local_nodes: 0,
        };
        worker.descend(prefix.values.len(), prefix.used);
        shared.nodes.fetch_add(worker.local_nodes % 4096, Ordering::Relaxed);
    };

    with_pool(jobs, || {
        if jobs > 1 {
            prefixes.par_iter().for_each(run);
        } else {
            prefixes.iter().for_each(run);
        }
    });

    let optimal = !shared.stop.load(Ordering::Relaxed);
    let nodes = shared.nodes.load(Ordering::Relaxed);
    let best = shared.best.into_inner().expect("incumbent lock").g;
    finish(spec, SolveMode::Exact, best, optimal, nodes, start.elapsed())
}
