use super::{GcnError, GcnModel};
use crate::sparse::DenseMatrix;

/// Bias-corrected Adam with per-weight first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<DenseMatrix>,
    second: Vec<DenseMatrix>,
}

impl AdamState {
    pub fn new(model: &GcnModel) -> Self {
        let zeros: Vec<DenseMatrix> = model
            .weights()
            .iter()
            .map(|w| DenseMatrix::zeros(w.n_rows(), w.n_cols()))
            .collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update with learning rate `lr`.
    pub fn step(
        &mut self,
        model: &mut GcnModel,
        grads: &[DenseMatrix],
        lr: f64,
    ) -> Result<(), GcnError> {
        if grads.len() != model.n_layers() || self.first.len() != model.n_layers() {
            return Err(GcnError::GradientShape(grads.len().min(model.n_layers())));
        }
        for (l, (g, w)) in grads.iter().zip(model.weights()).enumerate() {
            if g.shape() != w.shape() || self.first[l].shape() != w.shape() {
                return Err(GcnError::GradientShape(l));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (l, w) in model.weights_mut().iter_mut().enumerate() {
            let m = self.first[l].values_mut();
            let v = self.second[l].values_mut();
            let g = grads[l].values();
            for (k, wv) in w.values_mut().iter_mut().enumerate() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                *wv -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
