use std::borrow::Cow;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Environment, ExperimentConfig, NodeFeature};
use crate::corpus::{load_corpus, sample_limited_split, Corpus};
use crate::features::{load_embedding_file, onehot_features, FeatureMatrix, LoadOptions};
use crate::gcn::{predict, train_on, write_checkpoint, GcnModel};
use crate::metrics::{evaluate, EvalResult};
use crate::sparse::CsrMatrix;
use crate::textgraph::{build_graph, EdgeConfig, TextGraph};

/// A failure inside one pipeline stage.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{stage}: {message}")]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

impl StageError {
    pub(crate) fn new(stage: &str, err: impl Display) -> Self {
        Self {
            stage: stage.to_string(),
            message: err.to_string(),
        }
    }
}

fn at<T, E: Display>(stage: &str, r: Result<T, E>) -> Result<T, StageError> {
    r.map_err(|e| StageError::new(stage, e))
}

/// Outcome of one (cell, repeat).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: String,
    pub repeat: usize,
    pub seed: u64,
    pub dataset: String,
    pub node_feature: String,
    pub edge_config: EdgeConfig,
    pub n_layers: usize,
    /// `None` for the dataset's own split.
    pub train_fraction: Option<f64>,
    pub result: EvalResult,
    pub stopping_epoch: usize,
    pub best_epoch: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub wall_time_secs: f64,
    /// Configuration that reproduces this record when run on its own.
    pub config: ExperimentConfig,
}

impl RunRecord {
    /// The record with its wall time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: String,
    pub repeat: usize,
    pub error: StageError,
    pub config: ExperimentConfig,
}

pub(crate) fn load_stage(config: &ExperimentConfig) -> Result<Corpus, StageError> {
    let corpus = at(
        "load",
        load_corpus(&config.meta_path, &config.text_path, &config.preproc),
    )?;
    for w in &corpus.warnings {
        log::warn!("{w}");
    }
    Ok(corpus)
}

/// Builds and normalises the graph, writing it under `output_dir/graphs/`.
pub(crate) fn graph_stage(
    corpus: &Corpus,
    config: &ExperimentConfig,
) -> Result<TextGraph, StageError> {
    let graph = at(
        "build_graph",
        build_graph(corpus, config.edge_config, &config.graph_params()),
    )?;
    at("normalize", graph.normalized_adjacency())?;
    if let Some(dir) = &config.output_dir {
        let path = dir
            .join("graphs")
            .join(format!("graph_{}.txt", config.edge_config));
        at("artifacts", write_file(&path, |w| graph.write(w)))?;
    }
    Ok(graph)
}

pub(crate) fn feature_stage(
    feature: &NodeFeature,
    graph: &TextGraph,
    zero_fill: bool,
) -> Result<FeatureMatrix, StageError> {
    match feature {
        NodeFeature::Onehot => Ok(onehot_features(graph.n_nodes())),
        NodeFeature::DenseFile(path) => at(
            "features",
            load_embedding_file(
                path,
                graph,
                LoadOptions {
                    zero_fill_missing: zero_fill,
                },
            ),
        ),
    }
}

fn write_file<E: Display>(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>,
) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| format!("{}: {e}", path.display()))?;
    w.flush().map_err(|e| format!("{}: {e}", path.display()))
}

fn apply_environment<'a>(
    corpus: &'a Corpus,
    env: &Environment,
) -> Result<Cow<'a, Corpus>, StageError> {
    match *env {
        Environment::Full => Ok(Cow::Borrowed(corpus)),
        Environment::Limited {
            fraction,
            seed,
            stratified,
        } => Ok(Cow::Owned(at(
            "split",
            sample_limited_split(corpus, fraction, seed, stratified),
        )?)),
    }
}

fn test_metrics(
    model: &GcnModel,
    a_hat: &CsrMatrix,
    x: &FeatureMatrix,
    corpus: &Corpus,
) -> Result<EvalResult, StageError> {
    let test_docs = corpus.test_indices();
    let labels = corpus.doc_labels();
    let pred = at("predict", predict(model, a_hat, x, &test_docs))?;
    let gold: Vec<usize> = test_docs.iter().map(|&d| labels[d]).collect();
    at("evaluate", evaluate(&pred, &gold, corpus.n_labels()))
}

/// Everything after graph construction, for one repeat whose seeds are
/// already baked into `config`.
pub(crate) fn run_prepared(
    corpus: &Corpus,
    graph: &TextGraph,
    x: &FeatureMatrix,
    config: &ExperimentConfig,
    repeat: usize,
) -> Result<RunRecord, StageError> {
    let start = Instant::now();
    let corpus = apply_environment(corpus, &config.environment)?;
    let a_hat = at("normalize", graph.normalized_adjacency())?;
    let labels = corpus.doc_labels();
    let train_docs = corpus.train_indices();
    let test_docs = corpus.test_indices();
    if train_docs.is_empty() {
        return Err(StageError::new("split", "no training documents"));
    }
    if test_docs.is_empty() {
        return Err(StageError::new("split", "no test documents"));
    }

    let (model, history) = at(
        "train",
        train_on(
            a_hat,
            x,
            &labels,
            &train_docs,
            corpus.n_labels(),
            &config.train,
        ),
    )?;
    let result = test_metrics(&model, a_hat, x, &corpus)?;
    let wall_time_secs = start.elapsed().as_secs_f64();

    let cell = config.cell_id();
    let record = RunRecord {
        cell: cell.clone(),
        repeat,
        seed: config.train.seed,
        dataset: config.dataset.clone(),
        node_feature: config.node_feature.label().to_string(),
        edge_config: config.edge_config,
        n_layers: config.train.n_layers,
        train_fraction: config.environment.train_fraction(),
        result,
        stopping_epoch: history.stopping_epoch,
        best_epoch: history.best_epoch,
        n_train: history.n_train,
        n_val: history.n_val,
        n_test: test_docs.len(),
        wall_time_secs,
        config: config.clone(),
    };
    if let Some(dir) = &config.output_dir {
        let stem = format!("{cell}_r{repeat}");
        let ckpt = dir.join("checkpoints").join(format!("{stem}.ckpt"));
        at(
            "artifacts",
            write_file(&ckpt, |w| write_checkpoint(w, &model)),
        )?;
        let json = dir.join("records").join(format!("{stem}.json"));
        at(
            "artifacts",
            write_file(&json, |w| serde_json::to_writer_pretty(w, &record)),
        )?;
    }
    log::info!(
        "{cell} r{repeat}: accuracy {:.4} after {} epochs",
        record.result.accuracy,
        record.stopping_epoch
    );
    Ok(record)
}

/// Inputs of a run once loading, splitting, graph construction and feature
/// loading are done.
#[derive(Debug)]
pub struct Prepared {
    /// Corpus with the environment's split applied.
    pub corpus: Corpus,
    pub graph: TextGraph,
    pub features: FeatureMatrix,
}

impl Prepared {
    /// Scores `model` on the test documents.
    pub fn score(&self, model: &GcnModel) -> Result<EvalResult, StageError> {
        let a_hat = at("normalize", self.graph.normalized_adjacency())?;
        test_metrics(model, a_hat, &self.features, &self.corpus)
    }
}

/// Runs every stage up to training for `config`, writing the graph file
/// when an output directory is set.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, StageError> {
    let corpus = load_stage(config)?;
    let graph = graph_stage(&corpus, config)?;
    let features = feature_stage(
        &config.node_feature,
        &graph,
        config.zero_fill_missing_features,
    )?;
    let corpus = apply_environment(&corpus, &config.environment)?.into_owned();
    Ok(Prepared {
        corpus,
        graph,
        features,
    })
}

/// Runs the whole pipeline once with the seeds in `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord, StageError> {
    let config = config.for_repeat(0);
    let corpus = load_stage(&config)?;
    let graph = graph_stage(&corpus, &config)?;
    let x = feature_stage(
        &config.node_feature,
        &graph,
        config.zero_fill_missing_features,
    )?;
    run_prepared(&corpus, &graph, &x, &config, 0)
}
