use std::io::{BufRead, Write};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GcnError;
use crate::sparse::DenseMatrix;

/// Per-layer weights `W^(l)` of shape `dims[l] × dims[l+1]`.
///
/// `version` counts optimizer updates so that a forward cache can be matched
/// to the weights it was computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    weights: Vec<DenseMatrix>,
    version: u64,
}

impl GcnModel {
    pub fn from_weights(weights: Vec<DenseMatrix>) -> Result<Self, GcnError> {
        if weights.is_empty() {
            return Err(GcnError::InvalidDims(vec![]));
        }
        for pair in weights.windows(2) {
            if pair[0].n_cols() != pair[1].n_rows() {
                return Err(GcnError::InvalidDims(
                    weights.iter().map(|w| w.n_rows()).collect(),
                ));
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(GcnError::NonFinite("weights"));
        }
        Ok(Self {
            weights,
            version: 0,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// `[d_in, hidden..., n_classes]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.weights.iter().map(|w| w.n_rows()).collect();
        d.push(self.weights.last().map_or(0, |w| w.n_cols()));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].n_rows()
    }

    pub fn n_classes(&self) -> usize {
        self.weights.last().map_or(0, |w| w.n_cols())
    }

    pub fn weights(&self) -> &[DenseMatrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [DenseMatrix] {
        self.version += 1;
        &mut self.weights
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.weights.iter().map(DenseMatrix::frobenius_sq).sum()
    }
}

/// Glorot-uniform initialisation: `W^(l)` entries uniform in
/// `±sqrt(6 / (d_l + d_{l+1}))`, drawn from a ChaCha stream seeded with `seed`.
pub fn init_model(dims: &[usize], seed: u64) -> Result<GcnModel, GcnError> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(GcnError::InvalidDims(dims.to_vec()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = dims
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            let values = (0..fan_in * fan_out)
                .map(|_| dist.sample(&mut rng))
                .collect();
            DenseMatrix::from_vec(fan_in, fan_out, values).expect("sized above")
        })
        .collect();
    GcnModel::from_weights(weights)
}

/// Writes `GCN L d_0 ... d_L` followed by every weight row, values at 17
/// significant digits so that reading back is bitwise exact.
pub fn write_checkpoint<W: Write>(mut w: W, model: &GcnModel) -> Result<(), GcnError> {
    let dims = model.dims();
    write!(w, "GCN {}", model.n_layers())?;
    for d in &dims {
        write!(w, " {d}")?;
    }
    writeln!(w)?;
    for m in model.weights() {
        for row in m.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(r: R) -> Result<GcnModel, GcnError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| GcnError::Checkpoint("empty file".into()))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&"GCN") || fields.len() < 2 {
        return Err(GcnError::Checkpoint(format!("bad header {header:?}")));
    }
    let nums: Vec<usize> = fields[1..]
        .iter()
        .map(|f| f.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| GcnError::Checkpoint(e.to_string()))?;
    let n_layers = nums[0];
    let dims = &nums[1..];
    if dims.len() != n_layers + 1 || n_layers == 0 {
        return Err(GcnError::Checkpoint(format!(
            "header lists {} dims for {n_layers} layers",
            dims.len()
        )));
    }
    let mut weights = Vec::with_capacity(n_layers);
    for pair in dims.windows(2) {
        let (rows, cols) = (pair[0], pair[1]);
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| GcnError::Checkpoint("truncated weights".into()))??;
            let before = values.len();
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|e| GcnError::Checkpoint(format!("{tok:?}: {e}")))?,
                );
            }
            if values.len() - before != cols {
                return Err(GcnError::Checkpoint(format!(
                    "row with {} values, expected {cols}",
                    values.len() - before
                )));
            }
        }
        weights.push(DenseMatrix::from_vec(rows, cols, values)?);
    }
    GcnModel::from_weights(weights)
}
