use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::propagate::{argmax_rows, backward, forward, masked_cross_entropy_from_logits, Mode};
use super::{init_model, AdamState, GcnError, GcnModel};
use crate::corpus::Corpus;
use crate::features::FeatureMatrix;
use crate::seed::derive_seed;
use crate::sparse::CsrMatrix;
use crate::textgraph::TextGraph;

const INIT_STREAM: u64 = u64::MAX;
const VALIDATION_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub l2_weight: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_layers: 2,
            hidden_dim: 200,
            learning_rate: 0.02,
            dropout: 0.5,
            l2_weight: 0.0,
            max_epochs: 200,
            patience: 10,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn dims(&self, input_dim: usize, n_classes: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(
            self.hidden_dim,
            self.n_layers.saturating_sub(1),
        ));
        dims.push(n_classes);
        dims
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    /// 1-based epoch at which training ended.
    pub stopping_epoch: usize,
    /// 1-based epoch whose weights were returned.
    pub best_epoch: usize,
    pub n_train: usize,
    pub n_val: usize,
}

/// Stops once the monitored loss has failed to improve on its best value
/// for `patience` consecutive epochs.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best_loss: f64,
    best_epoch: usize,
    epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            epoch: 0,
            since_best: 0,
        }
    }

    /// Records the loss of the next epoch; returns whether it is a new best.
    pub fn observe(&mut self, loss: f64) -> bool {
        self.epoch += 1;
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = self.epoch;
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Splits `train_docs` into (train, validation). The validation share is
/// `⌊fraction·n⌋` documents, at most `n − 1`, drawn per label in proportion
/// to label frequency and topped up at random. Both lists come back sorted.
pub fn carve_validation(
    train_docs: &[usize],
    labels: &[usize],
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let n = train_docs.len();
    if n == 0 || fraction <= 0.0 {
        return (train_docs.to_vec(), Vec::new());
    }
    let n_val = ((fraction * n as f64 + 1e-9).floor() as usize).min(n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &d in train_docs {
        groups.entry(labels[d]).or_default().push(d);
    }
    let mut val = Vec::with_capacity(n_val);
    let mut leftover = Vec::new();
    for group in groups.values_mut() {
        group.shuffle(&mut rng);
        let take = ((group.len() as f64 * fraction + 1e-9).floor() as usize)
            .min(group.len().saturating_sub(1));
        val.extend_from_slice(&group[..take]);
        leftover.extend_from_slice(&group[take..]);
    }
    leftover.shuffle(&mut rng);
    let missing = n_val.saturating_sub(val.len());
    val.extend(leftover.drain(..missing.min(leftover.len())));
    val.sort_unstable();
    leftover.sort_unstable();
    (leftover, val)
}

fn accuracy(pred: &[usize], labels: &[usize], docs: &[usize]) -> f64 {
    let correct = pred
        .iter()
        .zip(docs)
        .filter(|(p, &d)| **p == labels[d])
        .count();
    correct as f64 / docs.len() as f64
}

/// Full-batch training on an already normalised adjacency.
///
/// `labels` is indexed by node id and must cover every entry of
/// `train_docs`. Each epoch runs one Adam step, then an eval-mode pass on
/// the validation documents (or on the training documents when the
/// carve-out is empty). The weights from the epoch with the lowest
/// monitored loss are returned.
pub fn train_on(
    a_hat: &CsrMatrix,
    x: &FeatureMatrix,
    labels: &[usize],
    train_docs: &[usize],
    n_classes: usize,
    config: &TrainConfig,
) -> Result<(GcnModel, TrainHistory), GcnError> {
    if !(1..=5).contains(&config.n_layers) {
        return Err(GcnError::InvalidLayers(config.n_layers));
    }
    let (fit_docs, val_docs) = carve_validation(
        train_docs,
        labels,
        config.val_fraction,
        derive_seed(config.seed, VALIDATION_STREAM),
    );
    if fit_docs.is_empty() {
        return Err(GcnError::EmptyTrainingSet);
    }
    let monitor: &[usize] = if val_docs.is_empty() {
        &fit_docs
    } else {
        &val_docs
    };

    let mut model = init_model(
        &config.dims(x.dim(), n_classes),
        derive_seed(config.seed, INIT_STREAM),
    )?;
    let mut adam = AdamState::new(&model);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = model.clone();
    let mut history = TrainHistory {
        n_train: fit_docs.len(),
        n_val: val_docs.len(),
        ..TrainHistory::default()
    };
    let reg = |m: &GcnModel| {
        if config.l2_weight > 0.0 {
            config.l2_weight * m.l2_norm_sq()
        } else {
            0.0
        }
    };

    for epoch in 1..=config.max_epochs {
        let mode = Mode::Train {
            dropout: config.dropout,
            seed: derive_seed(config.seed, epoch as u64),
        };
        let cache = forward(&model, a_hat, x, mode)?;
        let train_loss =
            masked_cross_entropy_from_logits(cache.logits(), labels, &fit_docs)? + reg(&model);
        let grads = backward(&model, a_hat, &cache, labels, &fit_docs, config.l2_weight)?;
        drop(cache);
        adam.step(&mut model, &grads, config.learning_rate)?;

        let eval = forward(&model, a_hat, x, Mode::Eval)?;
        let val_loss = masked_cross_entropy_from_logits(eval.logits(), labels, monitor)?;
        let val_acc = accuracy(&argmax_rows(eval.z(), monitor), labels, monitor);
        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);
        history.val_accuracy.push(val_acc);
        history.stopping_epoch = epoch;
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5} acc {val_acc:.4}");

        if stopper.observe(val_loss) {
            best = model.clone();
        }
        if stopper.should_stop() {
            break;
        }
    }
    history.best_epoch = stopper.best_epoch();
    Ok((best, history))
}

/// Trains on the corpus's training documents over `graph`.
pub fn train(
    graph: &TextGraph,
    x: &FeatureMatrix,
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<(GcnModel, TrainHistory), GcnError> {
    let a_hat = graph.normalized_adjacency()?;
    let train_docs = corpus.train_indices();
    if train_docs.is_empty() {
        return Err(GcnError::EmptyTrainingSet);
    }
    train_on(
        a_hat,
        x,
        &corpus.doc_labels(),
        &train_docs,
        corpus.n_labels(),
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_stopping_on_worsening_loss() {
        let mut s = EarlyStopping::new(10);
        let mut stopped_at = None;
        for epoch in 1..=200 {
            s.observe(epoch as f64);
            if s.should_stop() {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(11));
        assert_eq!(s.best_epoch(), 1);
    }

    #[test]
    fn early_stopping_resets_on_improvement() {
        let mut s = EarlyStopping::new(2);
        assert!(s.observe(1.0));
        assert!(!s.observe(1.0));
        assert!(s.observe(0.5));
        assert!(!s.should_stop());
        s.observe(0.6);
        s.observe(0.7);
        assert!(s.should_stop());
        assert_eq!(s.best_epoch(), 3);
    }

    #[test]
    fn carve_validation_is_stratified_and_disjoint() {
        let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let docs: Vec<usize> = (0..40).collect();
        let (fit, val) = carve_validation(&docs, &labels, 0.1, 5);
        assert_eq!(val.len(), 4);
        assert_eq!(fit.len(), 36);
        let mut per_label = [0; 4];
        for &d in &val {
            per_label[labels[d]] += 1;
        }
        assert_eq!(per_label, [1, 1, 1, 1]);
        assert!(fit.iter().all(|d| !val.contains(d)));
        assert_eq!(carve_validation(&docs, &labels, 0.1, 5), (fit, val));
    }

    #[test]
    fn carve_validation_small_sets() {
        let labels = vec![0, 1];
        let (fit, val) = carve_validation(&[0, 1], &labels, 0.1, 1);
        assert_eq!((fit.len(), val.len()), (2, 0));
        let (fit, val) = carve_validation(&[0], &labels, 0.9, 1);
        assert_eq!((fit, val), (vec![0], vec![]));
    }

    #[test]
    fn dims_per_layer_count() {
        let c = TrainConfig {
            n_layers: 3,
            ..TrainConfig::default()
        };
        assert_eq!(c.dims(50, 4), vec![50, 200, 200, 4]);
        let c = TrainConfig {
            n_layers: 1,
            ..TrainConfig::default()
        };
        assert_eq!(c.dims(50, 4), vec![50, 4]);
    }
}
