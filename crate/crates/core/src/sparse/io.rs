use std::io::{BufRead, Write};

use super::{CooMatrix, SparseError};

/// Writes `COO n_rows n_cols nnz` followed by one `row col value` line per
/// triple, values at 17 significant digits.
pub fn write_coo<W: Write>(mut w: W, m: &CooMatrix) -> Result<(), SparseError> {
    writeln!(w, "COO {} {} {}", m.n_rows, m.n_cols, m.triples.len())?;
    for &(r, c, v) in &m.triples {
        writeln!(w, "{r} {c} {v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_coo`]. Lines starting with `#` before
/// the `COO` header are skipped.
pub fn read_coo<R: BufRead>(r: R) -> Result<CooMatrix, SparseError> {
    let mut lines = r.lines().enumerate();
    let (header_no, header) = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line?;
                if !line.starts_with('#') {
                    break (i + 1, line);
                }
            }
            None => {
                return Err(SparseError::Parse {
                    line: 0,
                    reason: "missing COO header".into(),
                })
            }
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_err = |line: usize, reason: String| SparseError::Parse { line, reason };
    if fields.len() != 4 || fields[0] != "COO" {
        return Err(parse_err(header_no, format!("bad header {header:?}")));
    }
    let dims: Vec<usize> = fields[1..]
        .iter()
        .map(|f| f.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_err(header_no, e.to_string()))?;
    let (n_rows, n_cols, nnz) = (dims[0], dims[1], dims[2]);
    let mut m = CooMatrix::new(n_rows, n_cols);
    m.triples.reserve(nnz);
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(r), Some(c), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(parse_err(
                i + 1,
                format!("expected `row col value`, got {line:?}"),
            ));
        };
        let row = r
            .parse::<usize>()
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
        let col = c
            .parse::<usize>()
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
        let value = v
            .parse::<f64>()
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
        if row >= n_rows || col >= n_cols {
            return Err(SparseError::OutOfRange {
                row,
                col,
                n_rows,
                n_cols,
            });
        }
        m.push(row, col, value);
    }
    if m.triples.len() != nnz {
        return Err(parse_err(
            header_no,
            format!("header declares {nnz} entries, found {}", m.triples.len()),
        ));
    }
    Ok(m)
}
