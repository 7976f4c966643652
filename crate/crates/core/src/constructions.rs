//! Closed-form index matrices for the symmetric band family
//! `M = N = [(p - q) mod K < m]`: the improved construction, the classic
//! one-precoder-per-receiver baseline, and their score formulas.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::puzzle::{IndexMatrix, RowScore, ScoreValue};
use crate::topology::{mod1, ChannelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SymmetricFamily {
    k: usize,
    m: usize,
}

impl SymmetricFamily {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if k == 0 || m == 0 || m > k {
            return Err(Error::invalid(format!("need 1 <= m <= K, got K={k}, m={m}")));
        }
        Ok(SymmetricFamily { k, m })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spec(&self) -> ChannelSpec {
        ChannelSpec::symmetric(self.k, self.m).expect("family bounds already checked")
    }

    /// Number of rows filled by the periodic step, `⌊K/m⌋·m`.
    fn periodic_rows(&self) -> usize {
        self.k / self.m * self.m
    }
}

/// Column (0-based) of the `i`-th cell (0-based) in the band of row `p`,
/// walking left to right from `p - m + 1` to `p` with wraparound.
fn band_column(fam: &SymmetricFamily, p: usize, i: usize) -> usize {
    (p + fam.k + 1 + i - fam.m) % fam.k
}

/// Rows in the periodic block carry `p mod₁ m` on their whole band. The
/// remaining `K mod m` rows carry `1, …, m-1` along the band with the
/// diagonal cell left at zero.
pub fn corollary_g(fam: &SymmetricFamily) -> IndexMatrix {
    let mut g = IndexMatrix::zeros(fam.k);
    let periodic = fam.periodic_rows();
    for p in 0..fam.k {
        if p < periodic {
            let label = mod1(p as i64 + 1, fam.m as i64).expect("m >= 1") as u32;
            for i in 0..fam.m {
                g.set(p, band_column(fam, p, i), label);
            }
        } else {
            let mut next = 1;
            for i in 0..fam.m {
                let q = band_column(fam, p, i);
                if q != p {
                    g.set(p, q, next);
                    next += 1;
                }
            }
        }
    }
    g
}

/// `G[p,q] = p` on the message support (labels 1-based).
pub fn classic_g(fam: &SymmetricFamily) -> IndexMatrix {
    let spec = fam.spec();
    IndexMatrix::from_fn(fam.k, |p, q| if spec.m(p, q) { p as u32 + 1 } else { 0 })
}

/// `(K·m − (K mod m)) / (2m − 1)`, with the per-row loads the construction
/// is designed to realise.
pub fn corollary_score(fam: &SymmetricFamily) -> ScoreValue {
    let (k, m) = (fam.k, fam.m);
    let periodic = fam.periodic_rows();
    let per_row = (0..k)
        .map(|p| {
            if p < periodic {
                RowScore {
                    row_support: m,
                    interference_count: m - 1,
                }
            } else {
                RowScore {
                    row_support: m - 1,
                    interference_count: m,
                }
            }
        })
        .collect();
    ScoreValue {
        numerator: (k * m - k % m) as u64,
        denominator: (2 * m - 1) as u64,
        per_row,
    }
}

/// Interference count of the classic labelling at every receiver.
pub fn classic_interference(fam: &SymmetricFamily) -> usize {
    (fam.k - 1).min(2 * fam.m - 2)
}

/// `K·m / (m + min{K−1, 2m−2})`.
pub fn classic_score(fam: &SymmetricFamily) -> ScoreValue {
    let g = classic_interference(fam);
    let per_row = vec![
        RowScore {
            row_support: fam.m,
            interference_count: g,
        };
        fam.k
    ];
    ScoreValue {
        numerator: (fam.k * fam.m) as u64,
        denominator: (fam.m + g) as u64,
        per_row,
    }
}

/// Which `m` values to sweep for each `K`.
#[derive(Debug, Clone)]
pub enum MRule {
    /// Every `m ∈ [1, K]`.
    All,
    /// The listed values, skipping any above `K`.
    Only(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DominanceRow {
    pub k: usize,
    pub m: usize,
    #[serde(skip)]
    pub corollary: Ratio<u64>,
    #[serde(skip)]
    pub classic: Ratio<u64>,
}

impl DominanceRow {
    /// `corollary − classic`, exact.
    pub fn delta(&self) -> Ratio<i128> {
        let c = Ratio::new(*self.corollary.numer() as i128, *self.corollary.denom() as i128);
        let b = Ratio::new(*self.classic.numer() as i128, *self.classic.denom() as i128);
        c - b
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.k,
            self.m,
            self.corollary.numer(),
            self.corollary.denom(),
            self.classic.numer(),
            self.classic.denom()
        )
    }
}

pub const DOMINANCE_CSV_HEADER: &str = "K,m,corollary_num,corollary_den,classic_num,classic_den";

/// Compares both closed forms over a grid of `(K, m)`. Fails on the first
/// point where the improved construction scores strictly below the classic one.
pub fn dominance_check(ks: impl IntoIterator<Item = usize>, m_rule: &MRule) -> Result<Vec<DominanceRow>> {
    let mut rows = Vec::new();
    for k in ks {
        let ms: Vec<usize> = match m_rule {
            MRule::All => (1..=k).collect(),
            MRule::Only(list) => list.iter().copied().filter(|&m| m >= 1 && m <= k).collect(),
        };
        for m in ms {
            let fam = SymmetricFamily::new(k, m)?;
            let row = DominanceRow {
                k,
                m,
                corollary: corollary_score(&fam).ratio(),
                classic: classic_score(&fam).ratio(),
            };
            if row.corollary < row.classic {
                return Err(Error::Domain(format!(
                    "classic labelling beats the construction at K={k}, m={m}: {} < {}",
                    row.corollary, row.classic
                )));
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn dominance_csv(rows: &[DominanceRow]) -> String {
    let mut out = String::from(DOMINANCE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Gnuplot-style data: one two-column block per curve, separated by two
/// blank lines so `index 0` / `index 1` select them.
pub fn dominance_dat(rows: &[DominanceRow]) -> String {
    let dec = |r: &Ratio<u64>| *r.numer() as f64 / *r.denom() as f64;
    let mut out = String::from("# m corollary\n");
    for r in rows {
        out.push_str(&format!("{} {:.6}\n", r.m, dec(&r.corollary)));
    }
    out.push_str("\n\n# m classic\n");
    for r in rows {
        out.push_str(&format!("{} {:.6}\n", r.m, dec(&r.classic)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puzzle::{interference_count, is_canonical, score, validate};

    fn rows(g: &IndexMatrix) -> Vec<Vec<u32>> {
        g.rows()
    }

    #[test]
    fn corollary_k6_m4_matches_display() {
        let fam = SymmetricFamily::new(6, 4).unwrap();
        let g = corollary_g(&fam);
        assert_eq!(
            rows(&g),
            vec![
                vec![1, 0, 0, 1, 1, 1],
                vec![2, 2, 0, 0, 2, 2],
                vec![3, 3, 3, 0, 0, 3],
                vec![4, 4, 4, 4, 0, 0],
                vec![0, 1, 2, 3, 0, 0],
                vec![0, 0, 1, 2, 3, 0],
            ]
        );
        assert!(is_canonical(&g));
        let spec = fam.spec();
        let counts: Vec<usize> = (0..6).map(|p| interference_count(&g, &spec, p).unwrap()).collect();
        assert_eq!(counts, vec![3, 3, 3, 3, 4, 4]);
        assert_eq!(score(&g, &spec).unwrap().ratio(), Ratio::new(22, 7));
        assert_eq!(corollary_score(&fam).ratio(), Ratio::new(22, 7));
    }

    #[test]
    fn corollary_k5_m2_matches_display() {
        let fam = SymmetricFamily::new(5, 2).unwrap();
        assert_eq!(
            rows(&corollary_g(&fam)),
            vec![
                vec![1, 0, 0, 0, 1],
                vec![2, 2, 0, 0, 0],
                vec![0, 1, 1, 0, 0],
                vec![0, 0, 2, 2, 0],
                vec![0, 0, 0, 1, 0],
            ]
        );
        let s = corollary_score(&fam);
        assert_eq!((s.numerator, s.denominator), (9, 3));
    }

    #[test]
    fn corollary_full_band_is_row_labels() {
        for k in 1..=6 {
            let fam = SymmetricFamily::new(k, k).unwrap();
            let g = corollary_g(&fam);
            assert_eq!(g, IndexMatrix::from_fn(k, |p, _| p as u32 + 1));
            assert_eq!(corollary_score(&fam).ratio(), Ratio::new((k * k) as u64, (2 * k - 1) as u64));
        }
    }

    #[test]
    fn classic_examples() {
        let fam = SymmetricFamily::new(5, 2).unwrap();
        assert_eq!(
            rows(&classic_g(&fam)),
            vec![
                vec![1, 0, 0, 0, 1],
                vec![2, 2, 0, 0, 0],
                vec![0, 3, 3, 0, 0],
                vec![0, 0, 4, 4, 0],
                vec![0, 0, 0, 5, 5],
            ]
        );
        assert_eq!(classic_score(&fam).ratio(), Ratio::new(5, 2));
        let spec = fam.spec();
        // the displayed G^(1) carries labels {2, 5}
        assert_eq!(crate::puzzle::interfering_labels(&classic_g(&fam), &spec, 0).unwrap(), vec![2, 5]);

        let ident = SymmetricFamily::new(3, 1).unwrap();
        assert_eq!(classic_g(&ident), IndexMatrix::from_fn(3, |p, q| if p == q { p as u32 + 1 } else { 0 }));
        assert_eq!(classic_score(&ident).ratio(), Ratio::from_integer(3));

        let x = SymmetricFamily::new(4, 4).unwrap();
        assert_eq!(classic_g(&x), IndexMatrix::from_fn(4, |p, _| p as u32 + 1));
        assert_eq!(classic_score(&x).ratio(), corollary_score(&x).ratio());
    }

    #[test]
    fn constructions_validate() {
        for k in 1..=9 {
            for m in 1..=k {
                let fam = SymmetricFamily::new(k, m).unwrap();
                let spec = fam.spec();
                assert!(validate(&corollary_g(&fam), &spec).unwrap().is_empty(), "K={k} m={m}");
                assert!(validate(&classic_g(&fam), &spec).unwrap().is_empty(), "K={k} m={m}");
            }
        }
    }

    #[test]
    fn dominance_examples() {
        let rows = dominance_check([5], &MRule::Only(vec![2])).unwrap();
        assert_eq!(rows[0].delta(), Ratio::new(1, 2));
        let rows = dominance_check(1..=8, &MRule::Only(vec![1])).unwrap();
        assert!(rows.iter().all(|r| r.delta() == Ratio::from_integer(0)));
        let rows = dominance_check([20], &MRule::All).unwrap();
        assert_eq!(rows.len(), 20);
        let csv = dominance_csv(&rows);
        assert!(csv.starts_with("K,m,corollary_num,corollary_den,classic_num,classic_den\n20,1,20,1,20,1\n"));
        assert_eq!(csv.lines().count(), 21);
    }

    #[test]
    fn family_rejects_bad_bounds() {
        assert!(SymmetricFamily::new(3, 0).is_err());
        assert!(SymmetricFamily::new(3, 4).is_err());
        assert!(SymmetricFamily::new(0, 0).is_err());
    }
}
