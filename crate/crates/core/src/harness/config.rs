use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::PreprocConfig;
use crate::gcn::TrainConfig;
use crate::textgraph::{EdgeConfig, GraphParams, TfMode};

/// Initial node features: `"onehot"` or `{"dense_file": "<path>"}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeFeature {
    Onehot,
    DenseFile(PathBuf),
}

impl NodeFeature {
    pub fn label(&self) -> &'static str {
        match self {
            NodeFeature::Onehot => "onehot",
            NodeFeature::DenseFile(_) => "dense",
        }
    }

    /// `onehot`, or any other string taken as a feature-file path.
    pub fn parse(s: &str) -> NodeFeature {
        match s {
            "onehot" | "one-hot" | "one_hot" => NodeFeature::Onehot,
            path => NodeFeature::DenseFile(PathBuf::from(path)),
        }
    }
}

impl fmt::Display for NodeFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn default_stratified() -> bool {
    true
}

/// `"full"` uses the dataset's own split. `{"limited": {...}}` pools all
/// documents and samples a labelled fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    Full,
    Limited {
        fraction: f64,
        seed: u64,
        #[serde(default = "default_stratified")]
        stratified: bool,
    },
}

impl Environment {
    pub fn train_fraction(&self) -> Option<f64> {
        match self {
            Environment::Full => None,
            Environment::Limited { fraction, .. } => Some(*fraction),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Environment::Full => "full".to_string(),
            Environment::Limited { fraction, .. } => format!("{fraction}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Free-form dataset name copied into reports.
    pub dataset: String,
    pub meta_path: PathBuf,
    pub text_path: PathBuf,
    pub preproc: PreprocConfig,
    pub node_feature: NodeFeature,
    /// Zero vectors for graph nodes missing from a dense feature file.
    pub zero_fill_missing_features: bool,
    pub edge_config: EdgeConfig,
    pub window_size: usize,
    pub jaccard_threshold: f64,
    pub tf_mode: TfMode,
    pub train: TrainConfig,
    pub environment: Environment,
    pub n_repeats: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let graph = GraphParams::default();
        Self {
            dataset: String::new(),
            meta_path: PathBuf::new(),
            text_path: PathBuf::new(),
            preproc: PreprocConfig::default(),
            node_feature: NodeFeature::Onehot,
            zero_fill_missing_features: false,
            edge_config: EdgeConfig::D2wW2wD2d,
            window_size: graph.window_size,
            jaccard_threshold: graph.jaccard_threshold,
            tf_mode: graph.tf_mode,
            train: TrainConfig::default(),
            environment: Environment::Full,
            n_repeats: 5,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn graph_params(&self) -> GraphParams {
        GraphParams {
            window_size: self.window_size,
            jaccard_threshold: self.jaccard_threshold,
            tf_mode: self.tf_mode,
        }
    }

    /// Configuration of repeat `r`: training seed and limited-sampling seed
    /// both shifted by `r`.
    pub fn for_repeat(&self, r: usize) -> ExperimentConfig {
        let mut c = self.clone();
        c.train.seed = self.train.seed.wrapping_add(r as u64);
        if let Environment::Limited { seed, .. } = &mut c.environment {
            *seed = seed.wrapping_add(r as u64);
        }
        c.n_repeats = 1;
        c
    }

    /// Short identifier of the cell, used for artifact file names.
    pub fn cell_id(&self) -> String {
        format!(
            "{}_{}_L{}_{}",
            self.node_feature.label(),
            self.edge_config,
            self.train.n_layers,
            self.environment.label()
        )
    }
}

/// On-disk config: an [`ExperimentConfig`] plus an optional sweep block.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfigFile {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<super::SweepSpec>,
}

impl ConfigFile {
    /// Reads a JSON config. Relative data paths resolve against the config file's directory.
    pub fn load(path: &Path) -> Result<ConfigFile, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: ConfigFile = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        let e = &mut cfg.experiment;
        fix(&mut e.meta_path);
        fix(&mut e.text_path);
        if let NodeFeature::DenseFile(p) = &mut e.node_feature {
            fix(p);
        }
        if let Some(p) = &mut e.output_dir {
            fix(p);
        }
        if let Some(s) = &mut cfg.sweep {
            for f in &mut s.node_feature {
                if let NodeFeature::DenseFile(p) = f {
                    fix(p);
                }
            }
        }
        Ok(cfg)
    }
}
