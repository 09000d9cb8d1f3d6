//! MatrixMarket coordinate files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::SparseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    parse_matrix_market(BufReader::new(File::open(path)?))
}

/// Parse a coordinate-format stream. Symmetric and skew-symmetric storage is
/// expanded to the full matrix; `pattern` entries read as 1.0.
pub fn parse_matrix_market(reader: impl BufRead) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lno, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(parse_err(1, "empty file")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(lno, "missing %%MatrixMarket matrix header"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(lno, format!("unsupported format '{}'", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(lno, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        "skew-symmetric" => MmSymmetry::SkewSymmetric,
        other => return Err(parse_err(lno, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut seen = 0usize;
    for (lno, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let Some((rows, cols, nnz)) = size else {
            if parts.len() != 3 {
                return Err(parse_err(lno, "size line must hold rows, cols, entries"));
            }
            let p = |s: &str| s.parse::<usize>().map_err(|e| parse_err(lno, e.to_string()));
            let dims = (p(parts[0])?, p(parts[1])?, p(parts[2])?);
            if symmetry != MmSymmetry::General && dims.0 != dims.1 {
                return Err(parse_err(lno, "symmetric storage requires a square matrix"));
            }
            triplets.reserve(dims.2 * if symmetry == MmSymmetry::General { 1 } else { 2 });
            size = Some(dims);
            continue;
        };
        let want = if field == Field::Pattern { 2 } else { 3 };
        if parts.len() < want {
            return Err(parse_err(lno, format!("expected {want} fields, found {}", parts.len())));
        }
        if seen == nnz {
            return Err(parse_err(lno, format!("more than the declared {nnz} entries")));
        }
        let idx = |s: &str| -> Result<usize> {
            let v = s.parse::<usize>().map_err(|e| parse_err(lno, e.to_string()))?;
            v.checked_sub(1).ok_or_else(|| parse_err(lno, "indices are 1-based"))
        };
        let (r, c) = (idx(parts[0])?, idx(parts[1])?);
        if r >= rows || c >= cols {
            return Err(Error::IndexOutOfRange {
                row: r + 1,
                col: c + 1,
                rows,
                cols,
            });
        }
        let v = match field {
            Field::Pattern => 1.0,
            _ => parts[2]
                .parse::<f64>()
                .map_err(|e| parse_err(lno, format!("bad value '{}': {e}", parts[2])))?,
        };
        triplets.push((r, c, v));
        if r != c {
            match symmetry {
                MmSymmetry::General => {}
                MmSymmetry::Symmetric => triplets.push((c, r, v)),
                MmSymmetry::SkewSymmetric => triplets.push((c, r, -v)),
            }
        }
        seen += 1;
    }
    let Some((rows, cols, nnz)) = size else {
        return Err(parse_err(lno, "missing size line"));
    };
    if seen != nnz {
        return Err(parse_err(0, format!("declared {nnz} entries, found {seen}")));
    }
    SparseMatrix::from_triplets(rows, cols, triplets)
}

/// Write `m` in coordinate real format. With [`MmSymmetry::Symmetric`] only the
/// lower triangle is written and `m` must be symmetric.
pub fn write_matrix_market(path: impl AsRef<Path>, m: &SparseMatrix, symmetry: MmSymmetry) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(&mut w, m, symmetry)?;
    w.flush()?;
    Ok(())
}

fn write_to(w: &mut impl Write, m: &SparseMatrix, symmetry: MmSymmetry) -> Result<()> {
    let label = match symmetry {
        MmSymmetry::General => "general",
        MmSymmetry::Symmetric => {
            if !m.is_symmetric() {
                return Err(Error::InvalidParameter("matrix is not symmetric".into()));
            }
            "symmetric"
        }
        MmSymmetry::SkewSymmetric => {
            return Err(Error::InvalidParameter("skew-symmetric output is not supported".into()))
        }
    };
    let keep = |i: usize, j: usize| symmetry == MmSymmetry::General || i >= j;
    let count = m.iter().filter(|&(i, j, _)| keep(i, j)).count();
    writeln!(w, "%%MatrixMarket matrix coordinate real {label}")?;
    writeln!(w, "{} {} {}", m.n_rows(), m.n_cols(), count)?;
    for (i, j, v) in m.iter().filter(|&(i, j, _)| keep(i, j)) {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}
