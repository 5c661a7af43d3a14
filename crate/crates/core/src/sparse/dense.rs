use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SparseError;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

/// Rows per work item when a product has to reduce over the row dimension.
/// Fixed so that the summation order never depends on the thread count.
const REDUCE_CHUNK: usize = 256;

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self, SparseError> {
        if values.len() != n_rows * n_cols {
            return Err(SparseError::Shape(format!(
                "{} values for a {}x{} matrix",
                values.len(),
                n_rows,
                n_cols
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for tests and examples.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged rows");
            values.extend_from_slice(row);
        }
        Self {
            n_rows,
            n_cols,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n_cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.n_cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, and a zero-column matrix has no row data anyway.
        let width = self.n_cols.max(1);
        self.values
            .chunks_exact(width)
            .take(if self.n_cols == 0 { 0 } else { self.n_rows })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                t.values[c * self.n_rows + r] = self.values[r * self.n_cols + c];
            }
        }
        t
    }

    /// Multiplies each row `r` by `scale[r]`.
    pub fn scale_rows(&self, scale: &[f64]) -> DenseMatrix {
        assert_eq!(scale.len(), self.n_rows);
        let mut out = self.clone();
        if self.n_cols > 0 {
            out.values
                .par_chunks_mut(self.n_cols)
                .zip(scale.par_iter())
                .for_each(|(row, &s)| row.iter_mut().for_each(|v| *v *= s));
        }
        out
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, SparseError> {
        if self.n_cols != rhs.n_rows {
            return Err(SparseError::dims("matmul", self.shape(), rhs.shape()));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, rhs.n_cols);
        if rhs.n_cols == 0 {
            return Ok(out);
        }
        out.values
            .par_chunks_mut(rhs.n_cols)
            .enumerate()
            .for_each(|(r, out_row)| {
                for (k, &a) in self.row(r).iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                        *o += a * b;
                    }
                }
            });
        Ok(out)
    }

    /// `selfᵀ · rhs` without materialising the transpose.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, SparseError> {
        if self.n_rows != rhs.n_rows {
            return Err(SparseError::dims("t_matmul", self.shape(), rhs.shape()));
        }
        let (p, q) = (self.n_cols, rhs.n_cols);
        let n_chunks = self.n_rows.div_ceil(REDUCE_CHUNK);
        let partials: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut acc = vec![0.0; p * q];
                let start = chunk * REDUCE_CHUNK;
                let end = (start + REDUCE_CHUNK).min(self.n_rows);
                for r in start..end {
                    let b = rhs.row(r);
                    for (i, &a) in self.row(r).iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        for (o, &bv) in acc[i * q..(i + 1) * q].iter_mut().zip(b) {
                            *o += a * bv;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut values = vec![0.0; p * q];
        for part in &partials {
            for (v, x) in values.iter_mut().zip(part) {
                *v += x;
            }
        }
        Ok(DenseMatrix {
            n_rows: p,
            n_cols: q,
            values,
        })
    }

    /// `self · rhsᵀ`.
    pub fn matmul_t(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, SparseError> {
        if self.n_cols != rhs.n_cols {
            return Err(SparseError::dims("matmul_t", self.shape(), rhs.shape()));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, rhs.n_rows);
        if rhs.n_rows == 0 {
            return Ok(out);
        }
        out.values
            .par_chunks_mut(rhs.n_rows)
            .enumerate()
            .for_each(|(r, out_row)| {
                let a = self.row(r);
                for (j, o) in out_row.iter_mut().enumerate() {
                    *o = a.iter().zip(rhs.row(j)).map(|(x, y)| x * y).sum();
                }
            });
        Ok(out)
    }
}
