//! Whitespace-separated integer matrix reader shared by the plain file formats.

use crate::error::{Error, Result};

/// One integer token together with its 1-based source position.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Token {
    pub value: i64,
    pub line: usize,
    pub column: usize,
}

/// A non-empty line of integer tokens. `blank_before` is true when at least
/// one empty line separated it from the previous non-empty line.
#[derive(Debug, Clone)]
pub(crate) struct Line {
    pub number: usize,
    pub tokens: Vec<Token>,
    pub blank_before: bool,
}

pub(crate) fn tokenize(source: &str) -> Result<Vec<Line>> {
    let mut lines = Vec::new();
    let mut saw_blank = false;
    for (idx, raw) in source.lines().enumerate() {
        let number = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            saw_blank = !lines.is_empty();
            continue;
        }
        let mut tokens = Vec::new();
        let mut offset = 0;
        for word in content.split_whitespace() {
            let start = content[offset..].find(word).map(|i| i + offset).unwrap_or(offset);
            offset = start + word.len();
            let column = content[..start].chars().count() + 1;
            let value = word
                .parse::<i64>()
                .map_err(|_| Error::parse(number, column, format!("expected an integer, found `{word}`")))?;
            tokens.push(Token {
                value,
                line: number,
                column,
            });
        }
        lines.push(Line {
            number,
            tokens,
            blank_before: saw_blank,
        });
        saw_blank = false;
    }
    Ok(lines)
}

/// Reads `k` rows of exactly `k` tokens each starting at `lines[0]`.
pub(crate) fn square_rows(lines: &[Line], k: usize, what: &str) -> Result<Vec<Vec<Token>>> {
    if lines.len() < k {
        let (line, column) = lines.last().map(|l| (l.number + 1, 1)).unwrap_or((1, 1));
        return Err(Error::parse(
            line,
            column,
            format!("{what}: expected {k} rows, found {}", lines.len()),
        ));
    }
    lines[..k]
        .iter()
        .map(|l| {
            if l.tokens.len() != k {
                let column = l
                    .tokens
                    .get(k)
                    .map(|t| t.column)
                    .unwrap_or_else(|| l.tokens.last().map(|t| t.column).unwrap_or(1));
                Err(Error::parse(
                    l.number,
                    column,
                    format!("{what}: expected {k} entries, found {}", l.tokens.len()),
                ))
            } else {
                Ok(l.tokens.clone())
            }
        })
        .collect()
}

/// Maps a serde_json error onto the crate's parse error.
pub(crate) fn json_error(err: serde_json::Error) -> Error {
    Error::parse(err.line(), err.column(), err.to_string())
}

pub(crate) fn write_rows<T: std::fmt::Display>(out: &mut String, k: usize, cell: impl Fn(usize, usize) -> T) {
    for p in 0..k {
        let row: Vec<String> = (0..k).map(|q| cell(p, q).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}
