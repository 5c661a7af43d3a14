//! Sparse and dense matrices, sparse-dense products and the symmetric
//! normalisation `D̃^{-1/2} (A + I) D̃^{-1/2}` used for GCN propagation.
//!
//! Every kernel here is deterministic regardless of the rayon thread count:
//! parallel work is split by output row, and reductions over rows use fixed
//! chunk boundaries summed in order.

mod dense;
mod io;

pub use dense::DenseMatrix;
pub use io::{read_coo, write_coo};

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("entry ({row}, {col}) outside a {n_rows}x{n_cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("adjacency must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("negative edge weight {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },
    #[error(
        "adjacency has a stored self-loop at node {0}; self-loops are added during normalisation"
    )]
    SelfLoop(usize),
    #[error("malformed COO text at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SparseError {
    pub(crate) fn dims(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        SparseError::Dimension { op, lhs, rhs }
    }
}

/// Coordinate-format matrix. Duplicates are allowed until conversion to CSR,
/// where they are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub triples: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            triples: Vec::new(),
        }
    }

    pub fn with_triples(n_rows: usize, n_cols: usize, triples: Vec<(usize, usize, f64)>) -> Self {
        Self {
            n_rows,
            n_cols,
            triples,
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.triples.push((row, col, value));
    }

    /// Stores an undirected edge as the two triples `(i, j)` and `(j, i)`.
    pub fn push_symmetric(&mut self, i: usize, j: usize, value: f64) {
        self.triples.push((i, j, value));
        self.triples.push((j, i, value));
    }

    pub fn nnz(&self) -> usize {
        self.triples.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for &(r, c, v) in &self.triples {
            d.set(r, c, d.get(r, c) + v);
        }
        d
    }
}

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values stored in row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.iter() {
            d.set(r, c, v);
        }
        d
    }

    /// Largest absolute difference between `a[i][j]` and `a[j][i]`.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn spmm(&self, b: &DenseMatrix) -> Result<DenseMatrix, SparseError> {
        spmm(self, b)
    }
}

/// Converts to CSR, summing duplicate coordinates.
pub fn coo_to_csr(m: &CooMatrix) -> Result<CsrMatrix, SparseError> {
    for &(row, col, _) in &m.triples {
        if row >= m.n_rows || col >= m.n_cols {
            return Err(SparseError::OutOfRange {
                row,
                col,
                n_rows: m.n_rows,
                n_cols: m.n_cols,
            });
        }
    }
    let mut order: Vec<(usize, usize, f64)> = m.triples.clone();
    // Stable sort keeps duplicate summation order equal to insertion order.
    order.sort_by_key(|&(r, c, _)| (r, c));

    let mut row_offsets = vec![0usize; m.n_rows + 1];
    let mut col_indices = Vec::with_capacity(order.len());
    let mut values: Vec<f64> = Vec::with_capacity(order.len());
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in order {
        if last == Some((r, c)) {
            *values.last_mut().expect("duplicate follows an entry") += v;
            continue;
        }
        col_indices.push(c);
        values.push(v);
        row_offsets[r + 1] += 1;
        last = Some((r, c));
    }
    for r in 0..m.n_rows {
        row_offsets[r + 1] += row_offsets[r];
    }
    Ok(CsrMatrix {
        n_rows: m.n_rows,
        n_cols: m.n_cols,
        row_offsets,
        col_indices,
        values,
    })
}

/// Sparse-dense product `a · b`, parallel over output rows.
pub fn spmm(a: &CsrMatrix, b: &DenseMatrix) -> Result<DenseMatrix, SparseError> {
    if a.n_cols != b.n_rows() {
        return Err(SparseError::dims("spmm", (a.n_rows, a.n_cols), b.shape()));
    }
    let width = b.n_cols();
    let mut out = DenseMatrix::zeros(a.n_rows, width);
    if width == 0 {
        return Ok(out);
    }
    out.values_mut()
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(r, out_row)| {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &x) in out_row.iter_mut().zip(b.row(c)) {
                    *o += v * x;
                }
            }
        });
    Ok(out)
}

/// Returns `Â = D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃(i,i) = Σ_j (A + I)(i,j)`.
///
/// `a` must be square with non-negative weights and no stored diagonal; the
/// self-loops are added here. Every row of the result holds at least its
/// diagonal entry, so `D̃(i,i) ≥ 1`.
pub fn sym_normalize(a: &CooMatrix) -> Result<CsrMatrix, SparseError> {
    if !a.is_square() {
        return Err(SparseError::NotSquare(a.n_rows, a.n_cols));
    }
    for &(row, col, value) in &a.triples {
        if value < 0.0 || value.is_nan() {
            return Err(SparseError::NegativeWeight { row, col, value });
        }
        if row == col && value != 0.0 {
            return Err(SparseError::SelfLoop(row));
        }
    }
    let n = a.n_rows;
    let mut with_loops = a.clone();
    with_loops.triples.reserve(n);
    for i in 0..n {
        with_loops.push(i, i, 1.0);
    }
    let mut csr = coo_to_csr(&with_loops)?;
    let degree: Vec<f64> = (0..n).map(|r| csr.row(r).1.iter().sum()).collect();
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    for r in 0..n {
        let (s, e) = (csr.row_offsets[r], csr.row_offsets[r + 1]);
        for k in s..e {
            let c = csr.col_indices[k];
            csr.values[k] *= inv_sqrt[r] * inv_sqrt[c];
        }
    }
    Ok(csr)
}
