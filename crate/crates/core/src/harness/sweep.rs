use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Environment, ExperimentConfig, NodeFeature};
use super::experiment::{
    feature_stage, graph_stage, load_stage, run_prepared, CellFailure, RunRecord, StageError,
};
use super::report::EvalReport;
use crate::textgraph::{EdgeConfig, TextGraph};

/// Values per ablation axis. The sweep runs the cross product; an empty axis
/// takes its single value from the base configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub node_feature: Vec<NodeFeature>,
    pub edge_config: Vec<EdgeConfig>,
    pub n_layers: Vec<usize>,
    /// Fractions of all documents used for training, each run as a limited
    /// environment.
    pub train_fraction: Vec<f64>,
}

impl SweepSpec {
    /// Expands the grid into one configuration per cell, in axis order
    /// node feature, edge config, layers, train fraction.
    pub fn cells(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let features = or_base(&self.node_feature, &base.node_feature);
        let edges = or_base(&self.edge_config, &base.edge_config);
        let layers = or_base(&self.n_layers, &base.train.n_layers);
        let environments: Vec<Environment> = if self.train_fraction.is_empty() {
            vec![base.environment]
        } else {
            let (seed, stratified) = match base.environment {
                Environment::Limited {
                    seed, stratified, ..
                } => (seed, stratified),
                Environment::Full => (base.train.seed, true),
            };
            self.train_fraction
                .iter()
                .map(|&fraction| Environment::Limited {
                    fraction,
                    seed,
                    stratified,
                })
                .collect()
        };

        let mut cells = Vec::new();
        for f in &features {
            for &e in &edges {
                for &l in &layers {
                    for &env in &environments {
                        let mut c = base.clone();
                        c.node_feature = f.clone();
                        c.edge_config = e;
                        c.train.n_layers = l;
                        c.environment = env;
                        cells.push(c);
                    }
                }
            }
        }
        cells
    }
}

fn or_base<T: Clone>(axis: &[T], base: &T) -> Vec<T> {
    if axis.is_empty() {
        vec![base.clone()]
    } else {
        axis.to_vec()
    }
}

/// Runs every (cell, repeat) of the grid. Repeat `r` shifts the training and
/// sampling seeds by `r`. The corpus is loaded once and each graph built once
/// per edge configuration. Up to `jobs` runs proceed in parallel; records come
/// back in grid order whatever the execution order.
pub fn run_sweep(spec: &SweepSpec, base: &ExperimentConfig, jobs: usize) -> EvalReport {
    let cells = spec.cells(base);
    let n_repeats = base.n_repeats.max(1);
    let tasks: Vec<(ExperimentConfig, usize)> = cells
        .iter()
        .flat_map(|c| (0..n_repeats).map(move |r| (c.for_repeat(r), r)))
        .collect();

    let fail_all = |error: StageError| EvalReport {
        records: Vec::new(),
        failures: tasks
            .iter()
            .map(|(c, r)| CellFailure {
                cell: c.cell_id(),
                repeat: *r,
                error: error.clone(),
                config: c.clone(),
            })
            .collect(),
    };
    let corpus = match load_stage(base) {
        Ok(c) => c,
        Err(e) => return fail_all(e),
    };

    let mut graphs: HashMap<EdgeConfig, Result<TextGraph, StageError>> = HashMap::new();
    for c in &cells {
        graphs
            .entry(c.edge_config)
            .or_insert_with(|| graph_stage(&corpus, c));
    }
    let any_graph = cells
        .iter()
        .find_map(|c| graphs[&c.edge_config].as_ref().ok());
    let mut features = HashMap::new();
    for c in &cells {
        if !features.contains_key(&c.node_feature) {
            let x = match any_graph {
                Some(g) => feature_stage(&c.node_feature, g, c.zero_fill_missing_features),
                None => Err(StageError::new("features", "no graph could be built")),
            };
            features.insert(c.node_feature.clone(), x);
        }
    }

    let run =
        |(config, repeat): &(ExperimentConfig, usize)| -> Result<RunRecord, Box<CellFailure>> {
            let outcome = graphs[&config.edge_config]
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|g| {
                    let x = features[&config.node_feature]
                        .as_ref()
                        .map_err(Clone::clone)?;
                    run_prepared(&corpus, g, x, config, *repeat)
                });
            outcome.map_err(|error| {
                log::warn!("{} r{repeat} failed at {}", config.cell_id(), error);
                Box::new(CellFailure {
                    cell: config.cell_id(),
                    repeat: *repeat,
                    error,
                    config: config.clone(),
                })
            })
        };
    let outcomes: Vec<Result<RunRecord, Box<CellFailure>>> = if jobs <= 1 {
        tasks.iter().map(run).collect()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| tasks.par_iter().map(run).collect()),
            Err(e) => {
                log::warn!("could not start {jobs} workers ({e}); running sequentially");
                tasks.iter().map(run).collect()
            }
        }
    };

    let mut report = EvalReport::default();
    for o in outcomes {
        match o {
            Ok(r) => report.records.push(r),
            Err(f) => report.failures.push(*f),
        }
    }
    report
}
