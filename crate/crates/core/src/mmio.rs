//! MatrixMarket exchange format, dense in memory.
//!
//! Reads `coordinate` and `array` files with `real`, `integer` or `pattern`
//! fields and `general`, `symmetric` or `skew-symmetric` storage; symmetric
//! storage is mirrored to the full matrix. Writes `real` files in either
//! layout.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

pub fn read_matrix_market(path: &Path) -> Result<Matrix> {
    let file = std::fs::File::open(path)?;
    parse_matrix_market(file, path)
}

/// Parses from any reader; `origin` only labels error messages.
pub fn parse_matrix_market<R: Read>(input: R, origin: &Path) -> Result<Matrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = BufReader::new(input).lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(err(1, "header must start with %%MatrixMarket".into()));
    }
    if tokens.len() != 5 || tokens[1] != "matrix" {
        return Err(err(1, format!("expected `%%MatrixMarket matrix <layout> <field> <symmetry>`, got `{header}`")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(err(1, format!("unknown layout `{other}`"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" | "integer" => Field::Real,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        "complex" => return Err(err(1, "complex matrices are not supported".into())),
        other => return Err(err(1, format!("unsupported field `{other}`"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        // Real Hermitian storage is symmetric storage.
        "symmetric" | "hermitian" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(err(1, format!("unknown symmetry `{other}`"))),
    };

    // Data lines: skip comments and blanks.
    let mut data = lines.filter_map(|(no, line)| match line {
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((no, t.to_string())))
            }
        }
        Err(e) => Some(Err(e)),
    });

    let (size_no, size_line) = data.next().transpose()?.ok_or_else(|| err(2, "missing size line".into()))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(size_no, format!("bad size line `{size_line}`")))?;
    let expected_sizes = if layout == Layout::Coordinate { 3 } else { 2 };
    if sizes.len() != expected_sizes {
        return Err(err(size_no, format!("expected {expected_sizes} integers on the size line")));
    }
    let (rows, cols) = (sizes[0], sizes[1]);
    if rows == 0 || cols == 0 {
        return Err(err(size_no, "dimensions must be positive".into()));
    }
    if symmetry != Symmetry::General && rows != cols {
        return Err(err(size_no, "symmetric storage requires a square matrix".into()));
    }
    let mut m = Matrix::zeros(rows, cols);

    let parse_value = |no: usize, t: &str| -> Result<f64> {
        t.parse::<f64>().map_err(|_| err(no, format!("bad value `{t}`")))
    };
    let place = |m: &mut Matrix, i: usize, j: usize, v: f64| {
        m[(i, j)] = v;
        match symmetry {
            Symmetry::General => {}
            Symmetry::Symmetric => m[(j, i)] = v,
            Symmetry::Skew => m[(j, i)] = -v,
        }
    };

    match layout {
        Layout::Coordinate => {
            let nnz = sizes[2];
            let mut seen = 0;
            for item in data.by_ref() {
                let (no, line) = item?;
                if seen == nnz {
                    return Err(err(no, format!("more than the declared {nnz} entries")));
                }
                let t: Vec<&str> = line.split_whitespace().collect();
                let want = if field == Field::Pattern { 2 } else { 3 };
                if t.len() != want {
                    return Err(err(no, format!("expected {want} fields, got {}", t.len())));
                }
                let idx = |s: &str, bound: usize| -> Result<usize> {
                    match s.parse::<usize>() {
                        Ok(v) if v >= 1 && v <= bound => Ok(v - 1),
                        _ => Err(err(no, format!("index `{s}` out of range 1..={bound}"))),
                    }
                };
                let (i, j) = (idx(t[0], rows)?, idx(t[1], cols)?);
                if symmetry != Symmetry::General && i < j {
                    return Err(err(no, "symmetric storage must list the lower triangle".into()));
                }
                if symmetry == Symmetry::Skew && i == j {
                    return Err(err(no, "skew-symmetric storage has no diagonal".into()));
                }
                let v = if field == Field::Pattern { 1.0 } else { parse_value(no, t[2])? };
                place(&mut m, i, j, v);
                seen += 1;
            }
            if seen != nnz {
                return Err(err(size_no, format!("declared {nnz} entries, found {seen}")));
            }
        }
        Layout::Array => {
            // Column-major; symmetric storage keeps i >= j, skew keeps i > j.
            let mut slots = Vec::new();
            for j in 0..cols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                slots.extend((start..rows).map(|i| (i, j)));
            }
            let mut next = slots.iter();
            let mut last_no = size_no;
            for item in data.by_ref() {
                let (no, line) = item?;
                last_no = no;
                for tok in line.split_whitespace() {
                    let &(i, j) = next
                        .next()
                        .ok_or_else(|| err(no, format!("more than the expected {} values", slots.len())))?;
                    place(&mut m, i, j, parse_value(no, tok)?);
                }
            }
            if next.next().is_some() {
                return Err(err(last_no, format!("expected {} values, file ended early", slots.len())));
            }
        }
    }
    Ok(m)
}

/// Writes `m` in the given layout with `general` symmetry.
pub fn write_matrix_market<W: Write>(mut out: W, m: &Matrix, layout: Layout) -> Result<()> {
    let (rows, cols) = m.shape();
    match layout {
        Layout::Array => {
            writeln!(out, "%%MatrixMarket matrix array real general")?;
            writeln!(out, "{rows} {cols}")?;
            for j in 0..cols {
                for i in 0..rows {
                    writeln!(out, "{:.17e}", m[(i, j)])?;
                }
            }
        }
        Layout::Coordinate => {
            let nnz = m.as_slice().iter().filter(|v| **v != 0.0).count();
            writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(out, "{rows} {cols} {nnz}")?;
            for i in 0..rows {
                for j in 0..cols {
                    let v = m[(i, j)];
                    if v != 0.0 {
                        writeln!(out, "{} {} {v:.17e}", i + 1, j + 1)?;
                    }
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes the lower triangle of a symmetric matrix with `symmetric` storage.
pub fn write_matrix_market_symmetric<W: Write>(mut out: W, m: &Matrix, layout: Layout) -> Result<()> {
    if !m.is_symmetric(0.0) {
        return Err(Error::InvalidArgument("matrix is not exactly symmetric".into()));
    }
    let n = m.rows();
    match layout {
        Layout::Array => {
            writeln!(out, "%%MatrixMarket matrix array real symmetric")?;
            writeln!(out, "{n} {n}")?;
            for j in 0..n {
                for i in j..n {
                    writeln!(out, "{:.17e}", m[(i, j)])?;
                }
            }
        }
        Layout::Coordinate => {
            let entries: Vec<(usize, usize, f64)> = (0..n)
                .flat_map(|i| (0..=i).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, m[(i, j)]))
                .filter(|e| e.2 != 0.0)
                .collect();
            writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
            writeln!(out, "{n} {n} {}", entries.len())?;
            for (i, j, v) in entries {
                writeln!(out, "{} {} {v:.17e}", i + 1, j + 1)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_matrix_market(path: &Path, m: &Matrix, layout: Layout) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_matrix_market(std::io::BufWriter::new(file), m, layout)
}

fn here() -> PathBuf {
    PathBuf::from("<memory>")
}

/// Convenience for in-memory text.
pub fn parse_str(text: &str) -> Result<Matrix> {
    parse_matrix_market(text.as_bytes(), &here())
}
