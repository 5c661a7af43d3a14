use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

/// How the term-frequency factor of a word-document weight is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfMode {
    /// Raw in-document count.
    #[default]
    Raw,
    /// Count divided by document length.
    Normalized,
}

/// Document frequency of every vocabulary word.
pub fn document_frequency(corpus: &Corpus) -> Vec<usize> {
    let mut df = vec![0usize; corpus.n_words()];
    let mut seen = vec![usize::MAX; corpus.n_words()];
    for (d, doc) in corpus.documents.iter().enumerate() {
        for &w in &doc.tokens {
            if seen[w] != d {
                seen[w] = d;
                df[w] += 1;
            }
        }
    }
    df
}

/// Word-document edges `tf(d, m) · ln(D / df(m))`, sorted by `(doc, word)`.
/// Words present in every document get weight 0 and are left out.
pub fn tfidf_edges(corpus: &Corpus, tf_mode: TfMode) -> Vec<(usize, usize, f64)> {
    let n_docs = corpus.n_docs() as f64;
    let idf: Vec<f64> = document_frequency(corpus)
        .into_iter()
        .map(|df| {
            if df == 0 {
                0.0
            } else {
                (n_docs / df as f64).ln()
            }
        })
        .collect();
    let mut edges = Vec::new();
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for (d, doc) in corpus.documents.iter().enumerate() {
        let mut sorted = doc.tokens.clone();
        sorted.sort_unstable();
        counts.clear();
        for w in sorted {
            match counts.last_mut() {
                Some((last, c)) if *last == w => *c += 1,
                _ => counts.push((w, 1)),
            }
        }
        for &(w, c) in &counts {
            let tf = match tf_mode {
                TfMode::Raw => c as f64,
                TfMode::Normalized => c as f64 / doc.tokens.len() as f64,
            };
            let weight = tf * idf[w];
            if weight > 0.0 {
                edges.push((d, w, weight));
            }
        }
    }
    edges
}
