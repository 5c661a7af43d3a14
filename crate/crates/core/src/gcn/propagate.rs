use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GcnError, GcnModel};
use crate::features::FeatureMatrix;
use crate::sparse::{spmm, CsrMatrix, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// No dropout, no rescaling.
    Eval,
    /// Inverted dropout with drop probability `dropout` on every layer input.
    Train { dropout: f64, seed: u64 },
}

/// A layer's input after dropout.
#[derive(Debug, Clone)]
enum LayerInput {
    /// One-hot features: `diag(scale)` or the identity when `scale` is `None`.
    Identity(Option<Vec<f64>>),
    Dense(DenseMatrix),
}

/// Intermediate values of a forward pass needed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    inputs: Vec<LayerInput>,
    masks: Vec<Option<Vec<f64>>>,
    /// `Â · dropout(H) · W` for every layer; the last entry is the logits.
    pre_activations: Vec<DenseMatrix>,
    z: DenseMatrix,
}

impl ForwardCache {
    /// Row-wise softmax output `Z`.
    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }

    pub fn logits(&self) -> &DenseMatrix {
        self.pre_activations.last().expect("at least one layer")
    }

    /// Post-ReLU hidden activations are recomputed from the cached
    /// pre-activations; index `l` is the output of hidden layer `l`.
    pub fn hidden(&self, l: usize) -> DenseMatrix {
        relu(&self.pre_activations[l])
    }
}

/// Bernoulli(keep) mask entries scaled by `1/keep`. Entry `(r, c)` of layer
/// `layer` always consumes word `r·cols + c` of ChaCha stream `layer`, so the
/// diagonal of a materialised identity draws exactly the same values as the
/// one-hot shortcut.
fn keep_threshold(dropout: f64) -> (f64, f64) {
    let keep = 1.0 - dropout;
    (keep * 4_294_967_296.0, 1.0 / keep)
}

fn dense_mask(seed: u64, layer: usize, rows: usize, cols: usize, dropout: f64) -> Vec<f64> {
    let (threshold, scale) = keep_threshold(dropout);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(layer as u64);
    (0..rows * cols)
        .map(|_| {
            if (rng.next_u32() as f64) < threshold {
                scale
            } else {
                0.0
            }
        })
        .collect()
}

fn identity_mask(seed: u64, layer: usize, n: usize, dropout: f64) -> Vec<f64> {
    let (threshold, scale) = keep_threshold(dropout);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(layer as u64);
    (0..n)
        .map(|r| {
            rng.set_word_pos((r * n + r) as u128);
            if (rng.next_u32() as f64) < threshold {
                scale
            } else {
                0.0
            }
        })
        .collect()
}

fn relu(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    out.values_mut()
        .par_iter_mut()
        .for_each(|v| *v = v.max(0.0));
    out
}

fn hadamard_in_place(m: &mut DenseMatrix, mask: &[f64]) {
    m.values_mut()
        .par_iter_mut()
        .zip(mask.par_iter())
        .for_each(|(v, s)| *v *= s);
}

/// Numerically stable row-wise softmax.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut z = logits.clone();
    let width = z.n_cols();
    if width == 0 {
        return z;
    }
    z.values_mut().par_chunks_mut(width).for_each(|row| {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    });
    z
}

/// Runs every layer: `H^(l+1) = ReLU(Â · dropout(H^(l)) · W^(l))` for hidden
/// layers and `Z = softmax(Â · dropout(H^(L)) · W^(L))` at the output. A
/// single-layer model maps features straight to class scores.
pub fn forward(
    model: &GcnModel,
    a_hat: &CsrMatrix,
    x: &FeatureMatrix,
    mode: Mode,
) -> Result<ForwardCache, GcnError> {
    if x.dim() != model.input_dim() {
        return Err(GcnError::InputDim {
            expected: model.input_dim(),
            got: x.dim(),
        });
    }
    let n = x.n_nodes();
    if a_hat.n_rows() != n || a_hat.n_cols() != n {
        return Err(crate::sparse::SparseError::Dimension {
            op: "forward",
            lhs: (a_hat.n_rows(), a_hat.n_cols()),
            rhs: (n, x.dim()),
        }
        .into());
    }
    let n_layers = model.n_layers();
    let mut inputs = Vec::with_capacity(n_layers);
    let mut masks = Vec::with_capacity(n_layers);
    let mut pre_activations: Vec<DenseMatrix> = Vec::with_capacity(n_layers);

    for (l, w) in model.weights().iter().enumerate() {
        let dropout = match mode {
            Mode::Train { dropout, seed } if dropout > 0.0 => Some((dropout, seed)),
            _ => None,
        };
        let (input, mask, projected) = if l == 0 {
            match x {
                FeatureMatrix::OneHot { .. } => {
                    let scale = dropout.map(|(p, seed)| identity_mask(seed, l, n, p));
                    let projected = match &scale {
                        Some(s) => w.scale_rows(s),
                        None => w.clone(),
                    };
                    (LayerInput::Identity(scale), None, projected)
                }
                FeatureMatrix::Dense(h) => {
                    let mut h = h.clone();
                    let mask = dropout.map(|(p, seed)| dense_mask(seed, l, n, h.n_cols(), p));
                    if let Some(m) = &mask {
                        hadamard_in_place(&mut h, m);
                    }
                    let projected = h.matmul(w)?;
                    (LayerInput::Dense(h), mask, projected)
                }
            }
        } else {
            let mut h = relu(&pre_activations[l - 1]);
            let mask = dropout.map(|(p, seed)| dense_mask(seed, l, n, h.n_cols(), p));
            if let Some(m) = &mask {
                hadamard_in_place(&mut h, m);
            }
            let projected = h.matmul(w)?;
            (LayerInput::Dense(h), mask, projected)
        };
        pre_activations.push(spmm(a_hat, &projected)?);
        inputs.push(input);
        masks.push(mask);
    }
    let z = softmax_rows(pre_activations.last().expect("n_layers >= 1"));
    if !z.is_finite() {
        return Err(GcnError::NonFinite("softmax output"));
    }
    Ok(ForwardCache {
        version: model.version(),
        inputs,
        masks,
        pre_activations,
        z,
    })
}

fn check_mask(
    labels: &[usize],
    mask: &[usize],
    n_rows: usize,
    n_classes: usize,
) -> Result<(), GcnError> {
    if mask.is_empty() {
        return Err(GcnError::EmptyMask);
    }
    for &d in mask {
        if d >= n_rows || d >= labels.len() {
            return Err(GcnError::LabelOutOfRange {
                index: d,
                n_labels: labels.len().min(n_rows),
            });
        }
        if labels[d] >= n_classes {
            return Err(GcnError::LabelOutOfRange {
                index: labels[d],
                n_labels: n_classes,
            });
        }
    }
    Ok(())
}

/// `-Σ_{d ∈ mask} ln Z[d, labels[d]]`, summed (not averaged) over the mask.
/// `labels` is indexed by node id.
pub fn masked_cross_entropy(
    z: &DenseMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<f64, GcnError> {
    check_mask(labels, mask, z.n_rows(), z.n_cols())?;
    Ok(mask.iter().map(|&d| -z.get(d, labels[d]).ln()).sum())
}

/// Same loss computed from pre-softmax scores with log-sum-exp, which stays
/// finite when a probability underflows.
pub fn masked_cross_entropy_from_logits(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<f64, GcnError> {
    check_mask(labels, mask, logits.n_rows(), logits.n_cols())?;
    Ok(mask
        .iter()
        .map(|&d| {
            let row = logits.row(d);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - row[labels[d]]
        })
        .sum())
}

/// Gradients of the masked cross-entropy (plus `l2_weight · Σ‖W‖²`) with
/// respect to every `W^(l)`, given the cache of the forward pass that
/// produced `Z` with the current weights.
pub fn backward(
    model: &GcnModel,
    a_hat: &CsrMatrix,
    cache: &ForwardCache,
    labels: &[usize],
    mask: &[usize],
    l2_weight: f64,
) -> Result<Vec<DenseMatrix>, GcnError> {
    if cache.version != model.version() || cache.inputs.len() != model.n_layers() {
        return Err(GcnError::StaleCache {
            cached: cache.version,
            current: model.version(),
        });
    }
    let z = &cache.z;
    check_mask(labels, mask, z.n_rows(), z.n_cols())?;
    let mut delta = DenseMatrix::zeros(z.n_rows(), z.n_cols());
    for &d in mask {
        let row = delta.row_mut(d);
        row.copy_from_slice(z.row(d));
        row[labels[d]] -= 1.0;
    }

    let mut grads = vec![DenseMatrix::zeros(0, 0); model.n_layers()];
    for l in (0..model.n_layers()).rev() {
        let w = &model.weights()[l];
        // Â is symmetric, so Âᵀ·δ = Â·δ.
        let g = spmm(a_hat, &delta)?;
        let mut dw = match &cache.inputs[l] {
            LayerInput::Identity(Some(scale)) => g.scale_rows(scale),
            LayerInput::Identity(None) => g.clone(),
            LayerInput::Dense(h) => h.t_matmul(&g)?,
        };
        if l2_weight > 0.0 {
            for (gv, wv) in dw.values_mut().iter_mut().zip(w.values()) {
                *gv += 2.0 * l2_weight * wv;
            }
        }
        grads[l] = dw;
        if l > 0 {
            let mut dh = g.matmul_t(w)?;
            if let Some(m) = &cache.masks[l] {
                hadamard_in_place(&mut dh, m);
            }
            let pre = &cache.pre_activations[l - 1];
            dh.values_mut()
                .par_iter_mut()
                .zip(pre.values().par_iter())
                .for_each(|(v, &s)| {
                    if s <= 0.0 {
                        *v = 0.0;
                    }
                });
            delta = dh;
        }
    }
    Ok(grads)
}

/// Index of the largest entry in each requested row; ties go to the lowest index.
pub fn argmax_rows(m: &DenseMatrix, rows: &[usize]) -> Vec<usize> {
    rows.iter()
        .map(|&r| {
            let row = m.row(r);
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Eval-mode class predictions for the given document nodes.
pub fn predict(
    model: &GcnModel,
    a_hat: &CsrMatrix,
    x: &FeatureMatrix,
    doc_indices: &[usize],
) -> Result<Vec<usize>, GcnError> {
    let cache = forward(model, a_hat, x, Mode::Eval)?;
    Ok(argmax_rows(cache.z(), doc_indices))
}
