//! Corpus-level heterogeneous graph: one node per document followed by one
//! node per vocabulary word, with word-document TF-IDF edges, optional
//! word-word PMI edges and optional document-document Jaccard edges.

mod jaccard;
mod pmi;
mod tfidf;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::sparse::{self, CooMatrix, CsrMatrix, SparseError};

pub use jaccard::jaccard_doc_edges;
pub use pmi::{count_windows, pmi_edges, PmiStats};
pub use tfidf::{document_frequency, tfidf_edges, TfMode};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("window size must be at least 1, got {0}")]
    InvalidWindow(usize),
    #[error("jaccard threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("unknown edge configuration {0:?}")]
    UnknownEdgeConfig(String),
    #[error("malformed graph header: {0}")]
    Header(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Which edge families make up the graph. The variants form an inclusion chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeConfig {
    /// Word-document edges only.
    D2w,
    /// Word-document and word-word edges.
    D2wW2w,
    /// All three edge families.
    D2wW2wD2d,
}

impl EdgeConfig {
    pub const ALL: [EdgeConfig; 3] = [EdgeConfig::D2w, EdgeConfig::D2wW2w, EdgeConfig::D2wW2wD2d];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeConfig::D2w => "d2w",
            EdgeConfig::D2wW2w => "d2w_w2w",
            EdgeConfig::D2wW2wD2d => "d2w_w2w_d2d",
        }
    }

    pub fn has_word_word(self) -> bool {
        self >= EdgeConfig::D2wW2w
    }

    pub fn has_doc_doc(self) -> bool {
        self == EdgeConfig::D2wW2wD2d
    }
}

impl fmt::Display for EdgeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeConfig {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d2w" | "d2w_only" => Ok(EdgeConfig::D2w),
            "d2w_w2w" | "+w2w" | "d2w+w2w" | "w2w" => Ok(EdgeConfig::D2wW2w),
            "d2w_w2w_d2d" | "+w2w+d2d" | "d2w+w2w+d2d" | "d2d" => Ok(EdgeConfig::D2wW2wD2d),
            _ => Err(GraphError::UnknownEdgeConfig(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphParams {
    pub window_size: usize,
    pub jaccard_threshold: f64,
    pub tf_mode: TfMode,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            window_size: 20,
            jaccard_threshold: 0.2,
            tf_mode: TfMode::Raw,
        }
    }
}

#[derive(Debug)]
pub struct TextGraph {
    doc_ids: Vec<String>,
    words: Vec<String>,
    adjacency: CooMatrix,
    edge_config: EdgeConfig,
    params: GraphParams,
    normalized: OnceLock<CsrMatrix>,
}

impl TextGraph {
    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.doc_ids.len() + self.words.len()
    }

    pub fn word_node(&self, word: usize) -> usize {
        self.n_docs() + word
    }

    pub fn adjacency(&self) -> &CooMatrix {
        &self.adjacency
    }

    pub fn edge_config(&self) -> EdgeConfig {
        self.edge_config
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    /// Key of node `i`: `doc:<doc_id>` for documents, `word:<word>` for words.
    pub fn node_key(&self, i: usize) -> String {
        match i.checked_sub(self.n_docs()) {
            None => format!("doc:{}", self.doc_ids[i]),
            Some(w) => format!("word:{}", self.words[w]),
        }
    }

    pub fn node_keys(&self) -> Vec<String> {
        (0..self.n_nodes()).map(|i| self.node_key(i)).collect()
    }

    /// `Â` for this graph, computed on first use.
    pub fn normalized_adjacency(&self) -> Result<&CsrMatrix, GraphError> {
        if let Some(a) = self.normalized.get() {
            return Ok(a);
        }
        let a_hat = sparse::sym_normalize(&self.adjacency)?;
        Ok(self.normalized.get_or_init(|| a_hat))
    }

    /// Writes the `# N D M edge_config window_size jaccard_threshold` header
    /// followed by the adjacency in COO text form.
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        writeln!(
            w,
            "# {} {} {} {} {} {}",
            self.n_nodes(),
            self.n_docs(),
            self.n_words(),
            self.edge_config,
            self.params.window_size,
            self.params.jaccard_threshold
        )
        .map_err(SparseError::from)?;
        sparse::write_coo(w, &self.adjacency)?;
        Ok(())
    }
}

/// Header fields of a serialized graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphHeader {
    pub n_nodes: usize,
    pub n_docs: usize,
    pub n_words: usize,
    pub edge_config: EdgeConfig,
    pub window_size: usize,
    pub jaccard_threshold: f64,
}

/// Reads a graph file written by [`TextGraph::write`].
pub fn read_graph<R: BufRead>(mut r: R) -> Result<(GraphHeader, CooMatrix), GraphError> {
    let mut first = String::new();
    r.read_line(&mut first).map_err(SparseError::from)?;
    let fields: Vec<&str> = first.split_whitespace().collect();
    if fields.len() != 7 || fields[0] != "#" {
        return Err(GraphError::Header(first.trim_end().to_string()));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| GraphError::Header(format!("{s:?}: {e}")))
    };
    let header = GraphHeader {
        n_nodes: num(fields[1])?,
        n_docs: num(fields[2])?,
        n_words: num(fields[3])?,
        edge_config: fields[4].parse()?,
        window_size: num(fields[5])?,
        jaccard_threshold: fields[6]
            .parse()
            .map_err(|e| GraphError::Header(format!("{:?}: {e}", fields[6])))?,
    };
    let adjacency = sparse::read_coo(r)?;
    if adjacency.n_rows != header.n_nodes
        || adjacency.n_cols != header.n_nodes
        || header.n_docs + header.n_words != header.n_nodes
    {
        return Err(GraphError::Header(format!(
            "header declares N={} (D={}, M={}) but matrix is {}x{}",
            header.n_nodes, header.n_docs, header.n_words, adjacency.n_rows, adjacency.n_cols
        )));
    }
    Ok((header, adjacency))
}

/// Assembles the adjacency for `config`: TF-IDF edges always, PMI edges from
/// `D2wW2w` on, Jaccard edges for `D2wW2wD2d`. Each undirected edge is stored
/// as two symmetric triples and the diagonal stays empty.
pub fn build_graph(
    corpus: &Corpus,
    config: EdgeConfig,
    params: &GraphParams,
) -> Result<TextGraph, GraphError> {
    if params.window_size < 1 {
        return Err(GraphError::InvalidWindow(params.window_size));
    }
    if !(0.0..=1.0).contains(&params.jaccard_threshold) {
        return Err(GraphError::InvalidThreshold(params.jaccard_threshold));
    }
    let d = corpus.n_docs();
    let n = d + corpus.n_words();
    let mut adjacency = CooMatrix::new(n, n);

    for (doc, word, w) in tfidf_edges(corpus, params.tf_mode) {
        adjacency.push_symmetric(doc, d + word, w);
    }
    if config.has_word_word() {
        let stats = count_windows(corpus, params.window_size)?;
        for (i, j, w) in pmi_edges(&stats) {
            adjacency.push_symmetric(d + i, d + j, w);
        }
    }
    if config.has_doc_doc() {
        for (a, b, w) in jaccard_doc_edges(corpus, params.jaccard_threshold)? {
            adjacency.push_symmetric(a, b, w);
        }
    }
    log::debug!(
        "built {config} graph: {n} nodes, {} stored entries",
        adjacency.nnz()
    );
    Ok(TextGraph {
        doc_ids: corpus
            .documents
            .iter()
            .map(|doc| doc.doc_id.clone())
            .collect(),
        words: corpus.vocabulary.words().to_vec(),
        adjacency,
        edge_config: config,
        params: *params,
        normalized: OnceLock::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, PreprocConfig};

    const LN2: f64 = std::f64::consts::LN_2;

    fn corpus(texts: &[&str]) -> Corpus {
        let meta: String = (0..texts.len())
            .map(|i| format!("d{i}\ttrain\tx\n"))
            .collect();
        let text: String = texts.iter().map(|t| format!("{t}\n")).collect();
        parse_corpus(&meta, &text, &PreprocConfig::raw()).unwrap()
    }

    #[test]
    fn window_counts_two_docs() {
        let c = corpus(&["a b", "a c"]);
        let s = count_windows(&c, 20).unwrap();
        let (a, b) = (0, 1);
        assert_eq!(s.total_windows, 2);
        assert_eq!(s.word_window_count[a], 2);
        assert_eq!(s.word_window_count[b], 1);
        assert_eq!(s.pair_count(a, b), 1);
        assert_eq!(s.pair_count(b, a), 1);
    }

    #[test]
    fn window_counts_presence_and_sliding() {
        let s = count_windows(&corpus(&["a a a"]), 20).unwrap();
        assert_eq!(s.total_windows, 1);
        assert_eq!(s.word_window_count, vec![1]);
        assert!(s.pair_window_count.is_empty());

        let s = count_windows(&corpus(&["a b c d e"]), 3).unwrap();
        assert_eq!(s.total_windows, 3);
        assert!(matches!(
            count_windows(&corpus(&["a"]), 0),
            Err(GraphError::InvalidWindow(0))
        ));
    }

    #[test]
    fn pmi_two_docs() {
        // p(a) = 1, so a is independent of everything: ln((1/2) / (1 · 1/2)) = 0.
        let c = corpus(&["a b", "a c"]);
        assert!(pmi_edges(&count_windows(&c, 20).unwrap()).is_empty());

        let c = corpus(&["a b", "c d"]);
        let edges = pmi_edges(&count_windows(&c, 20).unwrap());
        assert_eq!(edges.len(), 2);
        assert_eq!((edges[0].0, edges[0].1), (0, 1));
        assert!((edges[0].2 - LN2).abs() < 1e-15);
        assert_eq!((edges[1].0, edges[1].1), (2, 3));
    }

    #[test]
    fn pmi_omits_independent_and_absent_pairs() {
        // a and b co-occur in every window they each occupy half of: p(a,b)=1/4=p(a)p(b).
        let c = corpus(&["a b", "a c", "d b", "d c"]);
        let s = count_windows(&c, 20).unwrap();
        let edges = pmi_edges(&s);
        let a = c.vocabulary.index_of("a").unwrap();
        let b = c.vocabulary.index_of("b").unwrap();
        let d = c.vocabulary.index_of("d").unwrap();
        assert!(edges.iter().all(|&(i, j, _)| (i, j) != (a, b)));
        assert!(edges.iter().all(|&(i, j, _)| (i, j) != (a, d)));
        assert!(edges.iter().all(|e| e.2 > 0.0));
    }

    #[test]
    fn tfidf_examples() {
        let c = corpus(&["a b", "a c"]);
        let edges = tfidf_edges(&c, TfMode::Raw);
        assert_eq!(edges.len(), 2);
        assert_eq!((edges[0].0, edges[0].1), (0, 1));
        assert!((edges[0].2 - LN2).abs() < 1e-15);
        let c = corpus(&["b b", "a c"]);
        let edges = tfidf_edges(&c, TfMode::Raw);
        let b = c.vocabulary.index_of("b").unwrap();
        let w = edges.iter().find(|e| e.0 == 0 && e.1 == b).unwrap().2;
        assert!((w - 2.0 * LN2).abs() < 1e-15);
        let norm = tfidf_edges(&c, TfMode::Normalized);
        let w = norm.iter().find(|e| e.0 == 0 && e.1 == b).unwrap().2;
        assert!((w - LN2).abs() < 1e-15);
    }

    #[test]
    fn jaccard_examples() {
        let c = corpus(&["a b", "a c", "b a", "x y"]);
        let edges = jaccard_doc_edges(&c, 0.2).unwrap();
        let find = |d, e| edges.iter().find(|x| x.0 == d && x.1 == e).map(|x| x.2);
        assert!((find(0, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(find(0, 2), Some(1.0));
        assert_eq!(find(0, 3), None);
        assert!(edges.iter().all(|x| x.0 < x.1));
        assert!(matches!(
            jaccard_doc_edges(&c, 1.5),
            Err(GraphError::InvalidThreshold(_))
        ));
    }

    #[test]
    fn jaccard_skips_empty_documents() {
        let c = corpus(&["", "", "a"]);
        assert!(jaccard_doc_edges(&c, 0.0).unwrap().is_empty());
    }

    #[test]
    fn toy_graph_configurations() {
        let c = corpus(&["a b", "a c"]);
        let p = GraphParams::default();
        let g = build_graph(&c, EdgeConfig::D2w, &p).unwrap();
        assert_eq!(g.n_nodes(), 5);
        assert_eq!(g.adjacency().nnz(), 4);
        // No positive PMI in this corpus, so adding w2w changes nothing.
        let g2 = build_graph(&c, EdgeConfig::D2wW2w, &p).unwrap();
        assert_eq!(g2.adjacency(), g.adjacency());
        let c = corpus(&["a b", "c d", "a b c"]);
        let g3 = build_graph(&c, EdgeConfig::D2wW2w, &p).unwrap();
        let dense = g3.adjacency().to_dense();
        // #W=3, #W(a)=#W(b)=2, #W(a,b)=2: ln(2·3/4).
        assert!((dense.get(3, 4) - 1.5f64.ln()).abs() < 1e-15);
        assert_eq!(dense.get(3, 4), dense.get(4, 3));
        let empty = build_graph(&corpus(&[]), EdgeConfig::D2wW2wD2d, &p).unwrap();
        assert_eq!(empty.n_nodes(), 0);
        assert_eq!(empty.adjacency().nnz(), 0);
    }

    #[test]
    fn normalized_identity_without_edges() {
        // "a" occurs in every document, so its idf is zero and no edge survives.
        let c = corpus(&["a", "a"]);
        let g = build_graph(&c, EdgeConfig::D2w, &GraphParams::default()).unwrap();
        assert_eq!(g.adjacency().nnz(), 0);
        let a_hat = g.normalized_adjacency().unwrap();
        assert_eq!(a_hat.to_dense(), sparse::DenseMatrix::identity(3));
    }

    #[test]
    fn d2w_has_no_word_word_block() {
        let c = corpus(&["a b c", "a c d", "b d e"]);
        let g = build_graph(&c, EdgeConfig::D2w, &GraphParams::default()).unwrap();
        let a_hat = g.normalized_adjacency().unwrap();
        for (r, col, _) in a_hat.iter() {
            if r >= g.n_docs() && col >= g.n_docs() {
                assert_eq!(r, col);
            }
        }
    }

    #[test]
    fn graph_file_round_trip() {
        let c = corpus(&["a b c", "a c d", "b d e"]);
        let g = build_graph(&c, EdgeConfig::D2wW2wD2d, &GraphParams::default()).unwrap();
        let mut buf = Vec::new();
        g.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# 8 3 5 d2w_w2w_d2d 20 0.2\nCOO 8 8 "));
        let (header, adj) = read_graph(&buf[..]).unwrap();
        assert_eq!(header.n_docs, 3);
        assert_eq!(header.edge_config, EdgeConfig::D2wW2wD2d);
        assert_eq!(&adj, g.adjacency());
    }

    #[test]
    fn edge_config_parsing() {
        assert_eq!("+w2w".parse::<EdgeConfig>().unwrap(), EdgeConfig::D2wW2w);
        assert_eq!("d2w".parse::<EdgeConfig>().unwrap(), EdgeConfig::D2w);
        assert!("nope".parse::<EdgeConfig>().is_err());
        for e in EdgeConfig::ALL {
            assert_eq!(e.as_str().parse::<EdgeConfig>().unwrap(), e);
        }
    }

    #[test]
    fn node_keys_follow_layout() {
        let c = corpus(&["a b", "a c"]);
        let g = build_graph(&c, EdgeConfig::D2w, &GraphParams::default()).unwrap();
        assert_eq!(
            g.node_keys(),
            vec!["doc:d0", "doc:d1", "word:a", "word:b", "word:c"]
        );
    }
}
