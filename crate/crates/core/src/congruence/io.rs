//! Plain-text square matrices: a first line holding `n`, then `n` rows of
//! `n` whitespace-separated numbers. Lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result};

pub fn read_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| Error::Parse(format!("expected matrix size, got {header:?}")))?;
    let mut values = Vec::with_capacity(n * n);
    for row in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {n} rows, found {row}")))?;
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number {tok:?}", row + 1)))?;
            values.push(v);
        }
        let got = values.len() - before;
        if got != n {
            return Err(Error::Parse(format!(
                "row {} has {got} entries, expected {n}",
                row + 1
            )));
        }
    }
    if let Some(extra) = lines.next() {
        return Err(Error::Parse(format!("trailing content {extra:?}")));
    }
    Ok(DMatrix::from_row_slice(n, n, &values))
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    read_matrix(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Formats `m` with 17 significant digits so the text round-trips exactly.
pub fn write_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{}\n", m.nrows());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

pub fn write_matrix_file(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, write_matrix(m))?;
    Ok(())
}
