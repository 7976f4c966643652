//! Hill climbing over single-cell moves with random restarts.

use std::cmp::Ordering;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::puzzle::{self, canonical_relabel, IndexMatrix};
use crate::topology::ChannelSpec;

use super::state::{cmp_fraction, PuzzleState};
use super::{classic_labelling, finish, with_pool, Incumbent, SolveConfig, SolveMode, SolveReport};

/// Objective compared lexicographically: exact score first, then fewer rows
/// sitting at the maximum load (a strict secondary gain lets the climb leave
/// states where all rows tie at the denominator).
#[derive(Clone, Copy, PartialEq, Eq)]
struct Key {
    num: u64,
    den: u64,
    rows_at_max: usize,
}

impl Key {
    fn of(state: &PuzzleState) -> Self {
        Key {
            num: state.support(),
            den: state.denominator(),
            rows_at_max: state.rows_at_max(),
        }
    }

    fn cmp(&self, other: &Key) -> Ordering {
        cmp_fraction(self.num, self.den, other.num, other.den).then_with(|| other.rows_at_max.cmp(&self.rows_at_max))
    }
}

fn support_cells(spec: &ChannelSpec) -> Vec<(usize, usize)> {
    let k = spec.k();
    (0..k)
        .flat_map(|p| (0..k).map(move |q| (p, q)))
        .filter(|&(p, q)| spec.m(p, q))
        .collect()
}

/// Labels present anywhere in the matrix, as a membership table.
fn labels_in_use(state: &PuzzleState, k: usize) -> Vec<bool> {
    let mut used = vec![false; state.labels() + 1];
    for q in 0..k {
        for (l, slot) in used.iter_mut().enumerate().skip(1) {
            if state.column_has(q, l as u32) {
                *slot = true;
            }
        }
    }
    used
}

/// Climbs until no single-cell move strictly improves the objective.
/// Returns the number of candidate moves evaluated.
fn climb(state: &mut PuzzleState, cells: &[(usize, usize)], k: usize, deadline: Option<Instant>) -> u64 {
    let mut evaluated = 0;
    loop {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return evaluated;
        }
        let here = Key::of(state);
        let used = labels_in_use(state, k);
        let fresh = (1..used.len()).find(|&l| !used[l]).map(|l| l as u32);
        let mut best: Option<(Key, usize, usize, u32)> = None;
        for &(p, q) in cells {
            let current = state.get(p, q);
            let mut candidates: Vec<u32> = Vec::new();
            if current > 0 {
                candidates.push(0);
            }
            candidates.extend(
                (1..used.len() as u32).filter(|&l| used[l as usize] && l != current && !state.column_has(q, l)),
            );
            if let Some(f) = fresh {
                candidates.push(f);
            }
            for c in candidates {
                state.set(p, q, c);
                let key = Key::of(state);
                evaluated += 1;
                state.set(p, q, current);
                let improves = key.cmp(&here).is_gt();
                let beats = best.as_ref().is_none_or(|(b, ..)| key.cmp(b).is_gt());
                if improves && beats {
                    best = Some((key, p, q, c));
                }
            }
        }
        match best {
            Some((_, p, q, c)) => state.set(p, q, c),
            None => return evaluated,
        }
    }
}

/// A random valid labelling of the message support.
pub fn random_valid_filling<R: Rng>(spec: &ChannelSpec, max_label: u32, rng: &mut R) -> IndexMatrix {
    let k = spec.k();
    let mut cells = support_cells(spec);
    cells.shuffle(rng);
    let palette = rng.gen_range(1..=max_label.max(1));
    let mut g = IndexMatrix::zeros(k);
    for (p, q) in cells {
        if rng.gen_range(0..=palette) == 0 {
            continue;
        }
        let free: Vec<u32> = (1..=palette).filter(|&l| (0..k).all(|r| g.get(r, q) != l)).collect();
        if let Some(&l) = free.choose(rng) {
            g.set(p, q, l);
        }
    }
    canonical_relabel(&g)
}

pub fn local_search(spec: &ChannelSpec, start: &IndexMatrix, config: &SolveConfig) -> Result<SolveReport> {
    let clock = Instant::now();
    let violations = puzzle::validate(start, spec)?;
    if !violations.is_empty() {
        return Err(Error::InvalidIndexMatrix(violations));
    }
    let labels = (config.label_bound(spec)? as u32).max(start.max_label());
    let deadline = config.time_budget.map(|b| clock + b);
    let k = spec.k();
    let cells = support_cells(spec);

    let mut starts = vec![start.clone(), canonical_relabel(&classic_labelling(spec))];
    for i in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64 + 1);
        starts.push(random_valid_filling(spec, labels, &mut rng));
    }

    let run = |g: &IndexMatrix| {
        let mut state = PuzzleState::from_matrix(spec, g, labels as usize);
        let evaluated = climb(&mut state, &cells, k, deadline);
        let mut inc = Incumbent::zero(k);
        inc.offer(state.support(), state.denominator(), &canonical_relabel(&state.to_matrix()));
        (inc, evaluated)
    };
    let results: Vec<(Incumbent, u64)> = with_pool(config.parallelism, || {
        if config.parallelism > 1 {
            starts.par_iter().map(run).collect()
        } else {
            starts.iter().map(run).collect()
        }
    });

    let mut best = Incumbent::zero(k);
    let s = puzzle::score(start, spec)?;
    best.offer(s.numerator, s.denominator, &canonical_relabel(start));
    let mut nodes = 0;
    for (inc, evaluated) in &results {
        best.merge(inc);
        nodes += evaluated;
    }
    finish(spec, SolveMode::Heuristic, best.g, false, nodes, clock.elapsed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{classic_g, SymmetricFamily};
    use num_rational::Ratio;

    #[test]
    fn improves_classic_on_band() {
        let fam = SymmetricFamily::new(5, 2).unwrap();
        let spec = fam.spec();
        let start = classic_g(&fam);
        let r = local_search(&spec, &start, &SolveConfig::with_mode(SolveMode::Heuristic)).unwrap();
        assert!(r.best_score.ratio() >= Ratio::new(5, 2));
        assert_eq!(r.best_score.ratio(), Ratio::new(10, 3));
        assert!(!r.optimal);
    }

    #[test]
    fn from_zero_is_positive() {
        let spec = ChannelSpec::from_fn(3, |p, q| p == q, |_, _| true).unwrap();
        let cfg = SolveConfig {
            restarts: 0,
            ..SolveConfig::with_mode(SolveMode::Heuristic)
        };
        let r = local_search(&spec, &IndexMatrix::zeros(3), &cfg).unwrap();
        assert!(r.best_score.ratio() > Ratio::from_integer(0));
    }

    #[test]
    fn stays_at_optimum() {
        let spec = ChannelSpec::from_fn(3, |p, q| p == q, |_, _| true).unwrap();
        let opt = IndexMatrix::from_fn(3, |p, q| (p == q) as u32);
        let cfg = SolveConfig {
            restarts: 0,
            ..SolveConfig::with_mode(SolveMode::Heuristic)
        };
        let r = local_search(&spec, &opt, &cfg).unwrap();
        assert_eq!(r.best_score.ratio(), Ratio::new(3, 2));
        assert_eq!(r.best_g, opt);
    }

    #[test]
    fn rejects_invalid_start() {
        let spec = ChannelSpec::from_fn(2, |p, q| p == q, |_, _| true).unwrap();
        let bad = IndexMatrix::from_fn(2, |_, _| 1);
        assert!(matches!(
            local_search(&spec, &bad, &SolveConfig::default()),
            Err(Error::InvalidIndexMatrix(_))
        ));
    }

    #[test]
    fn random_fillings_are_valid() {
        let spec = ChannelSpec::symmetric(6, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let g = random_valid_filling(&spec, 24, &mut rng);
            assert!(puzzle::is_valid(&g, &spec));
        }
    }
}
