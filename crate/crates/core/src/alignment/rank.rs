//! Column rank of integer matrices, exact and floating.
//!
//! Matrices are stored column-major as `Vec<column>`; every column has the
//! same length (the row count).

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

/// Primes below 2^62 used for modular certification.
const PRIMES: [u64; 3] = [4_611_686_018_427_387_847, 4_611_686_018_427_387_817, 4_611_686_018_427_387_787];

fn mod_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = (acc as u128 * base as u128 % p as u128) as u64;
        }
        base = (base as u128 * base as u128 % p as u128) as u64;
        exp >>= 1;
    }
    acc
}

fn reduce(v: &BigInt, p: u64) -> u64 {
    v.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits in u64")
}

/// Rank of the matrix reduced modulo the prime `p`.
pub fn rank_mod_p(columns: &[Vec<BigInt>], p: u64) -> usize {
    let ncols = columns.len();
    if ncols == 0 {
        return 0;
    }
    let nrows = columns[0].len();
    // row-major working copy
    let mut a: Vec<Vec<u64>> = (0..nrows)
        .map(|r| columns.iter().map(|c| reduce(&c[r], p)).collect())
        .collect();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..nrows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, pivot);
        let inv = mod_pow(a[rank][col], p - 2, p);
        for r in rank + 1..nrows {
            if a[r][col] == 0 {
                continue;
            }
            let factor = (a[r][col] as u128 * inv as u128 % p as u128) as u64;
            let (top, bottom) = a.split_at_mut(r);
            for (x, &y) in bottom[0][col..ncols].iter_mut().zip(&top[rank][col..ncols]) {
                let sub = (factor as u128 * y as u128 % p as u128) as u64;
                *x = (*x + p - sub) % p;
            }
        }
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    rank
}

/// Exact rank by fraction-free (Bareiss) elimination over the integers.
pub fn bareiss_rank(columns: &[Vec<BigInt>]) -> usize {
    let ncols = columns.len();
    if ncols == 0 {
        return 0;
    }
    let nrows = columns[0].len();
    let mut a: Vec<Vec<BigInt>> = (0..nrows)
        .map(|r| columns.iter().map(|c| c[r].clone()).collect())
        .collect();
    let mut rank = 0;
    let mut prev = BigInt::from(1);
    for col in 0..ncols {
        let Some(pivot) = (rank..nrows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pivot);
        let (head, tail) = a.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        for row in tail.iter_mut() {
            let lead = row[col].clone();
            for j in col + 1..ncols {
                let v = &pivot_row[col] * &row[j] - &lead * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    rank
}

/// Exact column rank. Full rank modulo a prime implies full rank over the
/// rationals, so the modular pass certifies the common case; anything short
/// of full rank is settled by Bareiss elimination.
pub fn exact_rank(columns: &[Vec<BigInt>]) -> usize {
    let ncols = columns.len();
    if ncols == 0 {
        return 0;
    }
    if PRIMES.iter().any(|&p| rank_mod_p(columns, p) == ncols) {
        return ncols;
    }
    bareiss_rank(columns)
}

/// Numerical rank from singular values. Columns are scaled to unit norm
/// first (rank-preserving); singular values at or below
/// `max(rows, cols) · ε · σ_max` count as zero.
pub fn float_rank(columns: &[Vec<f64>]) -> usize {
    let ncols = columns.len();
    if ncols == 0 {
        return 0;
    }
    let nrows = columns[0].len();
    if nrows == 0 {
        return 0;
    }
    let mut m = DMatrix::<f64>::zeros(nrows, ncols);
    for (j, c) in columns.iter().enumerate() {
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm > 0.0 && norm.is_finite() { 1.0 / norm } else { 1.0 };
        for (i, &x) in c.iter().enumerate() {
            m[(i, j)] = x * scale;
        }
    }
    let sv = m.singular_values();
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let tol = nrows.max(ncols) as f64 * f64::EPSILON * sigma_max;
    sv.iter().filter(|&&s| s > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cols(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        let ncols = rows[0].len();
        (0..ncols)
            .map(|j| rows.iter().map(|r| BigInt::from(r[j])).collect())
            .collect()
    }

    #[test]
    fn known_ranks() {
        let full = cols(&[&[2, 1], &[1, 3]]);
        assert_eq!(bareiss_rank(&full), 2);
        assert_eq!(exact_rank(&full), 2);
        let deficient = cols(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(bareiss_rank(&deficient), 2);
        assert_eq!(exact_rank(&deficient), 2);
        let tall = cols(&[&[1], &[0], &[5]]);
        assert_eq!(exact_rank(&tall), 1);
        let wide = cols(&[&[1, 2, 3]]);
        assert_eq!(exact_rank(&wide), 1);
        let zero = cols(&[&[0, 0], &[0, 0]]);
        assert_eq!(exact_rank(&zero), 0);
        assert_eq!(exact_rank(&[]), 0);
    }

    #[test]
    fn modular_rank_can_undercount() {
        let p = PRIMES[0] as i64;
        let m = cols(&[&[p, 0], &[0, 1]]);
        assert_eq!(rank_mod_p(&m, PRIMES[0]), 1);
        assert_eq!(bareiss_rank(&m), 2);
        assert_eq!(exact_rank(&m), 2);
    }

    #[test]
    fn vandermonde_is_full_rank() {
        let xs = [2i64, 3, 5, 7, 11, 13];
        let columns: Vec<Vec<BigInt>> = (0..xs.len() as u32)
            .map(|e| xs.iter().map(|&x| BigInt::from(x).pow(e)).collect())
            .collect();
        assert_eq!(bareiss_rank(&columns), 6);
        assert_eq!(exact_rank(&columns), 6);
        let fl: Vec<Vec<f64>> = columns
            .iter()
            .map(|c| c.iter().map(|v| v.to_f64().unwrap()).collect())
            .collect();
        assert_eq!(float_rank(&fl), 6);
    }

    proptest! {
        #[test]
        fn bareiss_agrees_with_modular_rank(
            entries in proptest::collection::vec(-4i64..=4, 20),
            dup in any::<bool>(),
        ) {
            let mut columns: Vec<Vec<BigInt>> = entries.chunks(4).map(|c| c.iter().map(|&v| BigInt::from(v)).collect()).collect();
            if dup {
                let c = columns[0].iter().map(|v| v * 3).collect();
                columns.push(c);
            }
            let exact = bareiss_rank(&columns);
            prop_assert_eq!(exact, rank_mod_p(&columns, PRIMES[1]));
            prop_assert_eq!(exact, exact_rank(&columns));
            let fl: Vec<Vec<f64>> = columns.iter().map(|c| c.iter().map(|v| v.to_f64().unwrap()).collect()).collect();
            prop_assert_eq!(exact, float_rank(&fl));
        }
    }
}
