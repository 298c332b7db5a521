//! Matrix Market `coordinate` files with `symmetric` symmetry.
//!
//! Accepted fields are `real`, `integer` and `pattern` (pattern entries read
//! as 1). Indices are 1-based and only the lower triangle may be stored.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::SparseSymmetricMatrix;
use crate::error::{Error, Result};

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseSymmetricMatrix> {
    let file =
        std::fs::File::open(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_matrix_market(BufReader::new(file))
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<SparseSymmetricMatrix> {
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, format!("not a Matrix Market matrix header: '{header}'")));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(
            1,
            format!("unsupported format '{}', expected coordinate", tokens[2]),
        ));
    }
    let field = match tokens[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    if tokens[4] != "symmetric" {
        return Err(parse_err(
            1,
            format!("symmetry '{}' rejected, expected symmetric", tokens[4]),
        ));
    }

    let mut size: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(parse_err(lineno, "size line needs rows, cols, entries".into()));
                }
                let nums: Vec<usize> = parts
                    .iter()
                    .map(|p| p.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(lineno, format!("bad size line: {e}")))?;
                if nums[0] != nums[1] {
                    return Err(parse_err(
                        lineno,
                        format!("matrix is {}x{}, not square", nums[0], nums[1]),
                    ));
                }
                size = Some((nums[0], nums[2]));
                entries.reserve(nums[2]);
            }
            Some((n, _)) => {
                let want = if field == Field::Pattern { 2 } else { 3 };
                if parts.len() != want {
                    return Err(parse_err(
                        lineno,
                        format!("expected {want} fields, found {}", parts.len()),
                    ));
                }
                let idx = |s: &str| -> Result<usize> {
                    let v: usize = s.parse().map_err(|_| parse_err(lineno, format!("bad index '{s}'")))?;
                    if v == 0 || v > n {
                        return Err(parse_err(lineno, format!("index {v} outside 1..={n}")));
                    }
                    Ok(v - 1)
                };
                let i = idx(parts[0])?;
                let j = idx(parts[1])?;
                if i < j {
                    return Err(parse_err(
                        lineno,
                        format!("entry ({}, {}) above the diagonal in a symmetric file", i + 1, j + 1),
                    ));
                }
                let v = if field == Field::Pattern {
                    1.0
                } else {
                    let v: f64 = parts[2]
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad value '{}'", parts[2])))?;
                    if !v.is_finite() {
                        return Err(parse_err(lineno, "non-finite value".into()));
                    }
                    v
                };
                entries.push((i, j, v));
            }
        }
    }
    let (n, declared) = size.ok_or_else(|| parse_err(1, "missing size line".into()))?;
    if entries.len() != declared {
        return Err(parse_err(
            0,
            format!("header declares {declared} entries, found {}", entries.len()),
        ));
    }
    SparseSymmetricMatrix::from_triplets(n, entries)
}

/// Writes the lower triangle in `coordinate real symmetric` format.
pub fn write_matrix_market(matrix: &SparseSymmetricMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(out, "{} {} {}", matrix.dim(), matrix.dim(), matrix.stored_entries());
    for &(i, j, v) in matrix.lower_entries() {
        let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
    }
    std::fs::write(path, out)?;
    Ok(())
}
