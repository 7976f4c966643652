//! Channel data model: user count `K`, the message-flow matrix `M` and the
//! connectivity matrix `N`.
//!
//! Indices are 0-based throughout the library. Row `p` is a receiver, column
//! `q` a transmitter: `M[p][q] = 1` means Tx `q` has a message for Rx `p`,
//! `N[p][q] = 1` means Tx `q`'s signal reaches Rx `p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

/// Modulo with an offset of one: the result lies in `1..=n`, and a zero
/// remainder maps to `n` instead of `0`.
pub fn mod1(a: i64, n: i64) -> Result<i64> {
    if n <= 0 {
        return Err(Error::invalid(format!("mod1 divisor must be positive, got {n}")));
    }
    let r = a.rem_euclid(n);
    Ok(if r == 0 { n } else { r })
}

/// An (M, N)-channel description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ChannelSpec {
    k: usize,
    message: Vec<bool>,
    connect: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(rename = "K")]
    k: i64,
    #[serde(rename = "M")]
    m: Vec<Vec<i64>>,
    #[serde(rename = "N")]
    n: Vec<Vec<i64>>,
}

impl TryFrom<RawSpec> for ChannelSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        if raw.k < 1 {
            return Err(Error::invalid(format!("K must be at least 1, got {}", raw.k)));
        }
        ChannelSpec::from_rows(raw.k as usize, &raw.m, &raw.n)
    }
}

impl From<ChannelSpec> for RawSpec {
    fn from(spec: ChannelSpec) -> Self {
        let rows = |cells: &[bool]| {
            cells
                .chunks(spec.k)
                .map(|r| r.iter().map(|&b| b as i64).collect())
                .collect()
        };
        RawSpec {
            k: spec.k as i64,
            m: rows(&spec.message),
            n: rows(&spec.connect),
        }
    }
}

impl ChannelSpec {
    /// Builds a spec from integer rows, rejecting anything outside `{0, 1}`.
    pub fn from_rows(k: usize, m: &[Vec<i64>], n: &[Vec<i64>]) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        let flatten = |name: &str, rows: &[Vec<i64>]| -> Result<Vec<bool>> {
            if rows.len() != k {
                return Err(Error::invalid(format!("{name} has {} rows, expected {k}", rows.len())));
            }
            let mut out = Vec::with_capacity(k * k);
            for (p, row) in rows.iter().enumerate() {
                if row.len() != k {
                    return Err(Error::invalid(format!(
                        "{name} row {} has {} entries, expected {k}",
                        p + 1,
                        row.len()
                    )));
                }
                for (q, &v) in row.iter().enumerate() {
                    match v {
                        0 => out.push(false),
                        1 => out.push(true),
                        other => {
                            return Err(Error::Domain(format!(
                                "{name}[{},{}] = {other} is not binary",
                                p + 1,
                                q + 1
                            )))
                        }
                    }
                }
            }
            Ok(out)
        };
        Ok(ChannelSpec {
            k,
            message: flatten("M", m)?,
            connect: flatten("N", n)?,
        })
    }

    /// Builds a spec directly from boolean predicates.
    pub fn from_fn(k: usize, m: impl Fn(usize, usize) -> bool, n: impl Fn(usize, usize) -> bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        let mut message = Vec::with_capacity(k * k);
        let mut connect = Vec::with_capacity(k * k);
        for p in 0..k {
            for q in 0..k {
                message.push(m(p, q));
                connect.push(n(p, q));
            }
        }
        Ok(ChannelSpec { k, message, connect })
    }

    /// The family where Rx `p` hears Tx `q` iff `(p - q) mod K < m`, with a
    /// message on every link.
    pub fn symmetric(k: usize, m: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if m < 1 || m > k {
            return Err(Error::invalid(format!("m must satisfy 1 <= m <= K, got m={m}, K={k}")));
        }
        let band = move |p: usize, q: usize| (p + k - q) % k < m;
        Self::from_fn(k, band, band)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn m(&self, p: usize, q: usize) -> bool {
        self.message[p * self.k + q]
    }

    #[inline]
    pub fn n(&self, p: usize, q: usize) -> bool {
        self.connect[p * self.k + q]
    }

    /// `‖M‖₀`, the number of message cells.
    pub fn message_count(&self) -> usize {
        self.message.iter().filter(|&&b| b).count()
    }

    /// Number of transmitters heard at receiver `p`.
    pub fn connected_count(&self, p: usize) -> usize {
        (0..self.k).filter(|&q| self.n(p, q)).count()
    }

    /// Cells carrying a message over a link that does not exist
    /// (`M = 1`, `N = 0`). Legal, but such messages can never be decoded
    /// usefully, so callers may want to warn.
    pub fn dead_link_messages(&self) -> Vec<(usize, usize)> {
        let k = self.k;
        (0..k)
            .flat_map(|p| (0..k).map(move |q| (p, q)))
            .filter(|&(p, q)| self.m(p, q) && !self.n(p, q))
            .collect()
    }

    /// Parses either the structured JSON document or the plain text format.
    pub fn parse(source: &str) -> Result<Self> {
        if source.trim_start().starts_with('{') {
            Self::from_json(source)
        } else {
            Self::from_plain(source)
        }
    }

    pub fn from_json(source: &str) -> Result<Self> {
        serde_json::from_str(source).map_err(|e| {
            // try_from failures surface as serde custom errors; keep the domain
            // classification for non-binary entries.
            let msg = e.to_string();
            if msg.starts_with("domain error:") {
                Error::Domain(msg.trim_start_matches("domain error: ").to_owned())
            } else {
                text::json_error(e)
            }
        })
    }

    /// Plain format: `K` on the first line, `K` rows of `M`, a blank line,
    /// then `K` rows of `N`.
    pub fn from_plain(source: &str) -> Result<Self> {
        let lines = text::tokenize(source)?;
        let header = lines.first().ok_or_else(|| Error::parse(1, 1, "empty input"))?;
        if header.tokens.len() != 1 {
            return Err(Error::parse(
                header.number,
                header.tokens.get(1).map(|t| t.column).unwrap_or(1),
                "first line must hold the single integer K",
            ));
        }
        let k_tok = header.tokens[0];
        if k_tok.value < 1 {
            return Err(Error::parse(k_tok.line, k_tok.column, "K must be at least 1"));
        }
        let k = k_tok.value as usize;
        let body = &lines[1..];
        let m_rows = text::square_rows(body, k, "M")?;
        let n_lines = &body[k..];
        if let Some(first_n) = n_lines.first() {
            if !first_n.blank_before {
                return Err(Error::parse(first_n.number, 1, "expected a blank line between M and N"));
            }
        }
        let n_rows = text::square_rows(n_lines, k, "N")?;
        if let Some(extra) = n_lines.get(k) {
            return Err(Error::parse(extra.number, 1, "unexpected trailing content"));
        }
        let check = |name: &str, rows: &[Vec<text::Token>]| -> Result<Vec<Vec<i64>>> {
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|t| match t.value {
                            0 | 1 => Ok(t.value),
                            v => Err(Error::Domain(format!(
                                "{name} entry {v} at line {}, column {} is not binary",
                                t.line, t.column
                            ))),
                        })
                        .collect()
                })
                .collect()
        };
        let m = check("M", &m_rows)?;
        let n = check("N", &n_rows)?;
        Self::from_rows(k, &m, &n)
    }

    pub fn to_plain(&self) -> String {
        let mut out = format!("{}\n", self.k);
        text::write_rows(&mut out, self.k, |p, q| self.m(p, q) as u8);
        out.push('\n');
        text::write_rows(&mut out, self.k, |p, q| self.n(p, q) as u8);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod1_examples() {
        assert_eq!(mod1(5, 5).unwrap(), 5);
        assert_eq!(mod1(7, 5).unwrap(), 2);
        assert_eq!(mod1(0, 4).unwrap(), 4);
        assert_eq!(mod1(-1, 4).unwrap(), 3);
        assert!(matches!(mod1(3, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(mod1(3, -2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn parse_three_user_ic() {
        let src = "3\n1 0 0\n0 1 0\n0 0 1\n\n1 1 1\n1 1 1\n1 1 1\n";
        let spec = ChannelSpec::parse(src).unwrap();
        assert_eq!(spec.k(), 3);
        for p in 0..3 {
            for q in 0..3 {
                assert_eq!(spec.m(p, q), p == q);
                assert!(spec.n(p, q));
            }
        }
        assert!(spec.dead_link_messages().is_empty());
    }

    #[test]
    fn parse_single_link() {
        let spec = ChannelSpec::parse("1\n1\n\n1\n").unwrap();
        assert_eq!(spec.k(), 1);
        assert!(spec.m(0, 0) && spec.n(0, 0));
        let json = ChannelSpec::parse(r#"{"K": 1, "M": [[1]], "N": [[1]]}"#).unwrap();
        assert_eq!(json, spec);
    }

    #[test]
    fn parse_zero_diagonal_four_user() {
        let src = r#"{"K":4,"M":[[0,1,1,1],[1,0,1,1],[1,1,0,1],[1,1,1,0]],
                      "N":[[0,1,1,1],[1,0,1,1],[1,1,0,1],[1,1,1,0]]}"#;
        let spec = ChannelSpec::parse(src).unwrap();
        for p in 0..4 {
            assert!(!spec.m(p, p) && !spec.n(p, p));
        }
        assert_eq!(spec.message_count(), 12);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ChannelSpec::parse("2\n1 0\n0 x\n\n1 1\n1 1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                column: 3,
                message: "expected an integer, found `x`".into()
            }
        );
        let err = ChannelSpec::parse("2\n1 0 1\n0 1\n\n1 1\n1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 5, .. }), "{err:?}");
        let err = ChannelSpec::parse("2\n1 0\n0 1\n1 1\n1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
        let err = ChannelSpec::parse("{\"K\": 2, \"M\": [[1,0],[0,1]]").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
    }

    #[test]
    fn non_binary_is_domain_error() {
        let err = ChannelSpec::parse("2\n1 0\n0 2\n\n1 1\n1 1\n").unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err:?}");
        let err = ChannelSpec::parse(r#"{"K":1,"M":[[3]],"N":[[1]]}"#).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err:?}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = ChannelSpec::parse(r#"{"K":2,"M":[[1]],"N":[[1,1],[1,1]]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { .. } | Error::InvalidArgument(_)), "{err:?}");
    }

    #[test]
    fn dead_link_is_flagged_not_rejected() {
        let spec = ChannelSpec::parse("2\n1 1\n0 1\n\n1 0\n0 1\n").unwrap();
        assert_eq!(spec.dead_link_messages(), vec![(0, 1)]);
    }

    #[test]
    fn symmetric_matches_displayed_examples() {
        let k5m2 = [
            [1, 0, 0, 0, 1],
            [1, 1, 0, 0, 0],
            [0, 1, 1, 0, 0],
            [0, 0, 1, 1, 0],
            [0, 0, 0, 1, 1],
        ];
        let spec = ChannelSpec::symmetric(5, 2).unwrap();
        for (p, row) in k5m2.iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                assert_eq!(spec.m(p, q) as i32, v);
                assert_eq!(spec.n(p, q) as i32, v);
            }
        }
        let k6m4 = [
            [1, 0, 0, 1, 1, 1],
            [1, 1, 0, 0, 1, 1],
            [1, 1, 1, 0, 0, 1],
            [1, 1, 1, 1, 0, 0],
            [0, 1, 1, 1, 1, 0],
            [0, 0, 1, 1, 1, 1],
        ];
        let spec = ChannelSpec::symmetric(6, 4).unwrap();
        for (p, row) in k6m4.iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                assert_eq!(spec.m(p, q) as i32, v);
            }
        }
    }

    #[test]
    fn symmetric_extremes() {
        for k in 1..=7 {
            let full = ChannelSpec::symmetric(k, k).unwrap();
            let ident = ChannelSpec::symmetric(k, 1).unwrap();
            for p in 0..k {
                for q in 0..k {
                    assert!(full.m(p, q) && full.n(p, q));
                    assert_eq!(ident.m(p, q), p == q);
                }
            }
        }
        assert!(ChannelSpec::symmetric(3, 0).is_err());
        assert!(ChannelSpec::symmetric(3, 4).is_err());
    }
}
