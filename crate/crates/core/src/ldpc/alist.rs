//! Reader and writer for the alist sparse-matrix text format.
//!
//! Layout (whitespace separated, one logical record per line):
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! col_degree[0] .. col_degree[n-1]
//! row_degree[0] .. row_degree[m-1]
//! n lines: 1-based row indices of each column (zero padded to max_col_degree)
//! m lines: 1-based column indices of each row (zero padded to max_row_degree)
//! ```
//!
//! Padding zeros are optional on input and always written on output.

use std::fmt::Write as _;

use super::LdpcError;

/// Sparse binary matrix as parsed from an alist file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlistMatrix {
    pub n_cols: usize,
    pub n_rows: usize,
    /// 0-based row indices of each column.
    pub cols: Vec<Vec<usize>>,
    /// 0-based column indices of each row.
    pub rows: Vec<Vec<usize>>,
}

impl AlistMatrix {
    /// Builds the matrix from row adjacency lists, deriving the column lists.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut cols = vec![Vec::new(); n_cols];
        for (r, row) in rows.iter().enumerate() {
            for &c in row {
                cols[c].push(r);
            }
        }
        Self {
            n_cols,
            n_rows: rows.len(),
            cols,
            rows,
        }
    }
}

fn malformed(msg: impl Into<String>) -> LdpcError {
    LdpcError::Alist(msg.into())
}

struct Lines<'a> {
    inner: std::iter::Filter<std::str::Lines<'a>, fn(&&str) -> bool>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        fn keep(l: &&str) -> bool {
            !l.trim().is_empty()
        }
        Self {
            inner: text.lines().filter(keep as fn(&&str) -> bool),
        }
    }

    fn numbers(&mut self) -> Result<Vec<usize>, LdpcError> {
        let line = self
            .inner
            .next()
            .ok_or_else(|| malformed("unexpected end of alist"))?;
        line.split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| malformed(format!("invalid integer {tok:?} in alist")))
            })
            .collect()
    }

    fn exact(&mut self, count: usize, what: &str) -> Result<Vec<usize>, LdpcError> {
        let v = self.numbers()?;
        if v.len() != count {
            return Err(malformed(format!(
                "expected {count} values for {what}, found {}",
                v.len()
            )));
        }
        Ok(v)
    }
}

fn index_list(
    values: Vec<usize>,
    degree: usize,
    limit: usize,
    what: &str,
) -> Result<Vec<usize>, LdpcError> {
    let list: Vec<usize> = values.into_iter().filter(|&v| v != 0).map(|v| v - 1).collect();
    if list.len() != degree {
        return Err(malformed(format!(
            "{what}: declared degree {degree}, found {} indices",
            list.len()
        )));
    }
    if let Some(&bad) = list.iter().find(|&&v| v >= limit) {
        return Err(malformed(format!("{what}: index {} out of range", bad + 1)));
    }
    let mut sorted = list.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(malformed(format!("{what}: duplicate index")));
    }
    Ok(list)
}

pub fn parse(text: &str) -> Result<AlistMatrix, LdpcError> {
    let mut lines = Lines::new(text);
    let dims = lines.exact(2, "dimensions")?;
    let (n_cols, n_rows) = (dims[0], dims[1]);
    if n_cols == 0 || n_rows == 0 {
        return Err(malformed("matrix dimensions must be positive"));
    }
    let max_deg = lines.exact(2, "maximum degrees")?;
    let col_deg = lines.exact(n_cols, "column degrees")?;
    let row_deg = lines.exact(n_rows, "row degrees")?;
    if col_deg.iter().any(|&d| d > max_deg[0]) || row_deg.iter().any(|&d| d > max_deg[1]) {
        return Err(malformed("degree exceeds declared maximum"));
    }

    let mut cols = Vec::with_capacity(n_cols);
    for (c, &d) in col_deg.iter().enumerate() {
        cols.push(index_list(lines.numbers()?, d, n_rows, &format!("column {}", c + 1))?);
    }
    let mut rows = Vec::with_capacity(n_rows);
    for (r, &d) in row_deg.iter().enumerate() {
        rows.push(index_list(lines.numbers()?, d, n_cols, &format!("row {}", r + 1))?);
    }

    // Both adjacency views must describe the same matrix.
    let derived = AlistMatrix::from_rows(n_cols, rows.clone());
    for (c, list) in cols.iter().enumerate() {
        let mut a = list.clone();
        let mut b = derived.cols[c].clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(malformed(format!(
                "column {} disagrees with row lists",
                c + 1
            )));
        }
    }

    Ok(AlistMatrix {
        n_cols,
        n_rows,
        cols,
        rows,
    })
}

pub fn write(matrix: &AlistMatrix) -> String {
    let max_col = matrix.cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = matrix.rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    let join = |v: &mut dyn Iterator<Item = usize>| {
        v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(out, "{} {}", matrix.n_cols, matrix.n_rows);
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut matrix.cols.iter().map(Vec::len)));
    let _ = writeln!(out, "{}", join(&mut matrix.rows.iter().map(Vec::len)));
    for (lists, width) in [(&matrix.cols, max_col), (&matrix.rows, max_row)] {
        for list in lists {
            let mut padded: Vec<usize> = list.iter().map(|v| v + 1).collect();
            padded.resize(width, 0);
            let _ = writeln!(out, "{}", join(&mut padded.into_iter()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "6 3\n3 5\n2 2 2 3 2 2\n4 5 4\n1 2 0\n2 3 0\n1 3 0\n1 2 3\n1 2 0\n2 3 0\n1 3 4 5 0\n1 2 4 5 6\n2 3 4 6 0\n";

    #[test]
    fn parses_toy_code() {
        let m = parse(TOY).unwrap();
        assert_eq!((m.n_cols, m.n_rows), (6, 3));
        assert_eq!(m.rows[0], vec![0, 2, 3, 4]);
        assert_eq!(m.cols[3], vec![0, 1, 2]);
    }

    #[test]
    fn write_then_parse() {
        let m = parse(TOY).unwrap();
        assert_eq!(parse(&write(&m)).unwrap(), m);
    }

    #[test]
    fn truncated_input() {
        let cut: String = TOY.lines().take(7).collect::<Vec<_>>().join("\n");
        let err = parse(&cut).unwrap_err();
        assert!(err.to_string().contains("unexpected end of alist"), "{err}");
        assert!(parse("").unwrap_err().to_string().contains("unexpected end of alist"));
    }

    #[test]
    fn inconsistent_views_rejected() {
        let bad = TOY.replacen("1 2 0\n2 3 0", "1 2 0\n1 3 0", 1);
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn garbage_token_rejected() {
        let bad = TOY.replacen("6 3", "6 x", 1);
        assert!(parse(&bad).unwrap_err().to_string().contains("invalid integer"));
    }
}
