//! MacKay's alist text layout:
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based row indices of each column, zero padded>
//! <m lines: 1-based column indices of each row, zero padded>
//! ```

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{MatrixError, ParityCheckMatrix};

#[derive(Debug, Error)]
pub enum AlistError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as numbers, with its 1-based line number.
    fn numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>), AlistError> {
        for (i, line) in self.inner.by_ref() {
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| AlistError::Parse {
                    line: i + 1,
                    message: format!("{what}: {e}"),
                })?;
            return Ok((i + 1, nums));
        }
        Err(AlistError::Parse {
            line: 0,
            message: format!("unexpected end of file while reading {what}"),
        })
    }

    fn exactly(&mut self, what: &str, count: usize) -> Result<(usize, Vec<usize>), AlistError> {
        let (line, nums) = self.numbers(what)?;
        if nums.len() != count {
            return Err(AlistError::Parse {
                line,
                message: format!("{what}: expected {count} values, found {}", nums.len()),
            });
        }
        Ok((line, nums))
    }
}

pub fn parse_alist(text: &str) -> Result<ParityCheckMatrix, AlistError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let err = |line: usize, message: String| AlistError::Parse { line, message };
    let (_, dims) = lines.exactly("dimensions", 2)?;
    let (n, m) = (dims[0], dims[1]);
    if n == 0 || m == 0 {
        return Err(err(1, "empty matrix".into()));
    }
    let (_, maxes) = lines.exactly("maximum degrees", 2)?;
    let (ln, col_deg) = lines.exactly("column degrees", n)?;
    let (lm, row_deg) = lines.exactly("row degrees", m)?;
    if col_deg.iter().max() != Some(&maxes[0]) {
        return Err(err(ln, "column degrees disagree with the maximum".into()));
    }
    if row_deg.iter().max() != Some(&maxes[1]) {
        return Err(err(lm, "row degrees disagree with the maximum".into()));
    }

    let read_lists = |lines: &mut Lines, count: usize, degrees: &[usize], width: usize, bound: usize, what: &str| {
        let mut lists = Vec::with_capacity(count);
        for (idx, &deg) in degrees.iter().enumerate() {
            let (line, nums) = lines.numbers(what)?;
            if nums.len() != width && nums.len() != deg {
                return Err(err(line, format!("{what} {}: expected {width} entries, found {}", idx + 1, nums.len())));
            }
            let (body, pad) = nums.split_at(deg.min(nums.len()));
            if body.len() != deg || body.iter().any(|&x| x == 0 || x > bound) || pad.iter().any(|&x| x != 0) {
                return Err(err(line, format!("{what} {}: entries do not match degree {deg}", idx + 1)));
            }
            lists.push(body.iter().map(|&x| x - 1).collect::<Vec<usize>>());
        }
        Ok(lists)
    };
    let col_lists = read_lists(&mut lines, n, &col_deg, maxes[0], m, "column")?;
    let row_lists = read_lists(&mut lines, m, &row_deg, maxes[1], n, "row")?;

    let h = ParityCheckMatrix::from_rows(n, row_lists)?;
    for (c, list) in col_lists.into_iter().enumerate() {
        let mut list = list;
        list.sort_unstable();
        if list != h.col(c) {
            return Err(err(0, format!("column {} list disagrees with the row lists", c + 1)));
        }
    }
    Ok(h)
}

pub fn read_alist(path: impl AsRef<Path>) -> Result<ParityCheckMatrix, AlistError> {
    parse_alist(&fs::read_to_string(path)?)
}

pub fn write_alist(h: &ParityCheckMatrix) -> String {
    let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let max_col = h.cols().iter().map(Vec::len).max().unwrap_or(0);
    let max_row = h.rows().iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    out.push_str(&format!("{} {}\n{} {}\n", h.n(), h.m(), max_col, max_row));
    out.push_str(&join(&mut h.cols().iter().map(Vec::len)));
    out.push('\n');
    out.push_str(&join(&mut h.rows().iter().map(Vec::len)));
    out.push('\n');
    for (lists, width) in [(h.cols(), max_col), (h.rows(), max_row)] {
        for list in lists {
            let padded = list.iter().map(|&x| x + 1).chain(std::iter::repeat(0)).take(width);
            out.push_str(&join(&mut padded.into_iter()));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ParityCheckMatrix {
        ParityCheckMatrix::from_rows(6, vec![vec![0, 1, 3], vec![1, 2, 4], vec![0, 4, 5]]).unwrap()
    }

    #[test]
    fn toy_round_trip() {
        let h = toy();
        let text = write_alist(&h);
        assert!(text.starts_with("6 3\n2 3\n"));
        assert_eq!(parse_alist(&text).unwrap(), h);
    }

    #[test]
    fn truncated_file_names_line() {
        let text = write_alist(&toy());
        let cut: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
        let e = parse_alist(&cut).unwrap_err();
        assert!(e.to_string().contains("end of file"), "{e}");
        let bad = text.replacen("2 3\n", "2 x\n", 1);
        let e = parse_alist(&bad).unwrap_err();
        assert!(e.to_string().starts_with("line 2"), "{e}");
    }

    #[test]
    fn inconsistent_lists_are_rejected() {
        let text = write_alist(&toy());
        // Column 1 claims rows 1 and 2 instead of 1 and 3.
        let bad = text.replacen("\n1 3\n", "\n1 2\n", 1);
        assert!(parse_alist(&bad).is_err());
        let out_of_range = text.replacen("\n1 3\n", "\n1 9\n", 1);
        assert!(parse_alist(&out_of_range).is_err());
    }
}
