//! Initial node features: implicit one-hot identity, or dense vectors read
//! from a feature file and reordered to the graph's node layout.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::sparse::{spmm, CsrMatrix, DenseMatrix, SparseError};
use crate::textgraph::TextGraph;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed feature header {0:?}, expected `FEAT n_nodes dim`")]
    Header(String),
    #[error("feature file has {file} nodes but the graph has {graph}")]
    NodeCountMismatch { file: usize, graph: usize },
    #[error("feature file has no row for node {0:?}")]
    MissingKey(String),
    #[error("feature file lists node {0:?} twice")]
    DuplicateKey(String),
    #[error("feature file row {0:?} does not name a node of the graph")]
    UnknownKey(String),
    #[error("non-finite value in row {0:?}")]
    NonFinite(String),
    #[error("row {key:?} has {got} values, expected {expected}")]
    Width {
        key: String,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    OneHot,
    Dense,
}

/// Node feature matrix `H₀`. One-hot features store nothing: the identity is implicit.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix {
    OneHot { n_nodes: usize },
    Dense(DenseMatrix),
}

impl FeatureMatrix {
    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureMatrix::OneHot { .. } => FeatureKind::OneHot,
            FeatureMatrix::Dense(_) => FeatureKind::Dense,
        }
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            FeatureMatrix::OneHot { n_nodes } => *n_nodes,
            FeatureMatrix::Dense(m) => m.n_rows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureMatrix::OneHot { n_nodes } => *n_nodes,
            FeatureMatrix::Dense(m) => m.n_cols(),
        }
    }

    /// Explicit matrix, materialising the identity for one-hot features.
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            FeatureMatrix::OneHot { n_nodes } => DenseMatrix::identity(*n_nodes),
            FeatureMatrix::Dense(m) => m.clone(),
        }
    }

    /// `Â · H₀`. For one-hot features this is `Â` itself, no product is formed.
    pub fn propagate(&self, a_hat: &CsrMatrix) -> Result<DenseMatrix, FeatureError> {
        match self {
            FeatureMatrix::OneHot { n_nodes } => {
                if a_hat.n_cols() != *n_nodes {
                    return Err(SparseError::Dimension {
                        op: "propagate",
                        lhs: (a_hat.n_rows(), a_hat.n_cols()),
                        rhs: (*n_nodes, *n_nodes),
                    }
                    .into());
                }
                Ok(a_hat.to_dense())
            }
            FeatureMatrix::Dense(m) => Ok(spmm(a_hat, m)?),
        }
    }
}

pub fn onehot_features(n_nodes: usize) -> FeatureMatrix {
    FeatureMatrix::OneHot { n_nodes }
}

/// Options for [`load_embedding_file`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Substitute a zero vector for graph nodes absent from the file instead
    /// of failing. The header's node count may then be smaller than N.
    pub zero_fill_missing: bool,
}

/// Loads a feature file and orders its rows to match `graph`'s node layout.
pub fn load_embedding_file(
    path: &Path,
    graph: &TextGraph,
    options: LoadOptions,
) -> Result<FeatureMatrix, FeatureError> {
    let file = File::open(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_embeddings(BufReader::new(file), &graph.node_keys(), options)
}

/// Parses the `FEAT n_nodes dim` format against the expected node keys.
pub fn read_embeddings<R: BufRead>(
    reader: R,
    node_keys: &[String],
    options: LoadOptions,
) -> Result<FeatureMatrix, FeatureError> {
    let mut lines = reader.lines();
    let io_err = |source| FeatureError::Io {
        path: PathBuf::from("<feature file>"),
        source,
    };
    let header = match lines.next() {
        Some(l) => l.map_err(io_err)?,
        None => return Err(FeatureError::Header(String::new())),
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (n_file, dim) = match parts.as_slice() {
        ["FEAT", n, d] => match (n.parse::<usize>(), d.parse::<usize>()) {
            (Ok(n), Ok(d)) => (n, d),
            _ => return Err(FeatureError::Header(header.clone())),
        },
        _ => return Err(FeatureError::Header(header.clone())),
    };
    let n_graph = node_keys.len();
    if n_file != n_graph && !(options.zero_fill_missing && n_file < n_graph) {
        return Err(FeatureError::NodeCountMismatch {
            file: n_file,
            graph: n_graph,
        });
    }

    let position: HashMap<&str, usize> = node_keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    let mut data = DenseMatrix::zeros(n_graph, dim);
    let mut filled = vec![false; n_graph];
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 2;
        let (key, rest) = line.split_once('\t').ok_or_else(|| FeatureError::Parse {
            line: line_no,
            reason: "expected `node_key<TAB>values`".into(),
        })?;
        let &node = position
            .get(key)
            .ok_or_else(|| FeatureError::UnknownKey(key.to_string()))?;
        if filled[node] {
            return Err(FeatureError::DuplicateKey(key.to_string()));
        }
        let row = data.row_mut(node);
        let mut got = 0;
        for tok in rest.split_whitespace() {
            let v: f64 = tok.parse().map_err(|e| FeatureError::Parse {
                line: line_no,
                reason: format!("{tok:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(FeatureError::NonFinite(key.to_string()));
            }
            if got < dim {
                row[got] = v;
            }
            got += 1;
        }
        if got != dim {
            return Err(FeatureError::Width {
                key: key.to_string(),
                expected: dim,
                got,
            });
        }
        filled[node] = true;
        rows += 1;
    }
    for (i, done) in filled.iter().enumerate() {
        if !done {
            if options.zero_fill_missing {
                log::warn!("no feature row for {}, using zeros", node_keys[i]);
            } else {
                return Err(FeatureError::MissingKey(node_keys[i].clone()));
            }
        }
    }
    if rows != n_file {
        return Err(FeatureError::Parse {
            line: 1,
            reason: format!("header declares {n_file} rows, found {rows}"),
        });
    }
    Ok(FeatureMatrix::Dense(data))
}

/// Writes rows of `data` keyed by `node_keys` in the feature file format.
pub fn write_embeddings<W: Write>(
    mut w: W,
    node_keys: &[String],
    data: &DenseMatrix,
) -> std::io::Result<()> {
    assert_eq!(node_keys.len(), data.n_rows());
    writeln!(w, "FEAT {} {}", data.n_rows(), data.n_cols())?;
    for (key, row) in node_keys.iter().zip(0..data.n_rows()) {
        write!(w, "{key}\t")?;
        for (j, v) in data.row(row).iter().enumerate() {
            if j > 0 {
                write!(w, " ")?;
            }
            write!(w, "{v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}
