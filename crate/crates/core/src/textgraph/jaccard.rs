use rayon::prelude::*;

use super::GraphError;
use crate::corpus::Corpus;

fn distinct_sets(corpus: &Corpus) -> Vec<Vec<usize>> {
    corpus
        .documents
        .iter()
        .map(|d| {
            let mut s = d.tokens.clone();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect()
}

/// Document-document edges weighted by the Jaccard index of the two
/// documents' distinct-word sets, kept when `J ≥ threshold` and `J > 0`.
/// Output pairs satisfy `d < e` and are sorted.
pub fn jaccard_doc_edges(
    corpus: &Corpus,
    threshold: f64,
) -> Result<Vec<(usize, usize, f64)>, GraphError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(GraphError::InvalidThreshold(threshold));
    }
    let sets = distinct_sets(corpus);
    let n_docs = sets.len();
    let mut postings: Vec<Vec<usize>> = vec![Vec::new(); corpus.n_words()];
    for (d, s) in sets.iter().enumerate() {
        for &w in s {
            postings[w].push(d);
        }
    }

    let per_doc: Vec<Vec<(usize, usize, f64)>> = (0..n_docs)
        .into_par_iter()
        .map_init(
            || (vec![0u32; n_docs], Vec::<usize>::new()),
            |(inter, touched), d| {
                for &w in &sets[d] {
                    let list = &postings[w];
                    let start = list.partition_point(|&e| e <= d);
                    for &e in &list[start..] {
                        if inter[e] == 0 {
                            touched.push(e);
                        }
                        inter[e] += 1;
                    }
                }
                touched.sort_unstable();
                let mut out = Vec::new();
                for &e in touched.iter() {
                    let i = inter[e] as usize;
                    inter[e] = 0;
                    let union = sets[d].len() + sets[e].len() - i;
                    let j = i as f64 / union as f64;
                    if j >= threshold {
                        out.push((d, e, j));
                    }
                }
                touched.clear();
                out
            },
        )
        .collect();
    Ok(per_doc.into_iter().flatten().collect())
}
