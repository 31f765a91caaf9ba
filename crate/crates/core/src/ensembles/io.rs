//! Plain-text matrix files.
//!
//! Layout: the first line holds `M,N`; each of the following `M` lines holds
//! the `N` values of one coordinate. Values may be separated by commas,
//! semicolons, tabs or spaces. Blank lines and lines starting with `#` are
//! skipped.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|s| !s.is_empty())
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::MatrixFormat("empty file".into()))?;
    let dims: Vec<usize> = fields(header)
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::MatrixFormat(format!("header {header:?}: {e}")))?;
    let [m, n] = dims[..] else {
        return Err(Error::MatrixFormat(format!(
            "header must be `M,N`, got {header:?}"
        )));
    };
    if m == 0 || n == 0 {
        return Err(Error::MatrixFormat("dimensions must be positive".into()));
    }
    let mut values = Vec::with_capacity(m * n);
    let mut rows = 0;
    for (lineno, line) in lines {
        let before = values.len();
        for f in fields(line) {
            let v: f64 = f
                .parse()
                .map_err(|e| Error::MatrixFormat(format!("line {}: {f:?}: {e}", lineno + 1)))?;
            values.push(v);
        }
        if values.len() - before != n {
            return Err(Error::MatrixFormat(format!(
                "line {}: expected {n} values, found {}",
                lineno + 1,
                values.len() - before
            )));
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::MatrixFormat(format!(
            "expected {m} rows, found {rows}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::MatrixFormat("non-finite value".into()));
    }
    Ok(DMatrix::from_row_slice(m, n, &values))
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}

pub fn format_matrix(a: &DMatrix<f64>) -> String {
    let mut out = format!("{},{}\n", a.nrows(), a.ncols());
    for row in a.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn write_matrix_file(path: impl AsRef<Path>, a: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_matrix(a)).map_err(|e| Error::io(path, e))
}
