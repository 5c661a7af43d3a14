use std::collections::HashMap;

use rayon::prelude::*;

use super::GraphError;
use crate::corpus::Corpus;

/// Sliding-window co-occurrence counts. Counts are by presence: a word
/// repeated inside one window counts once for that window.
#[derive(Debug, Clone, PartialEq)]
pub struct PmiStats {
    pub window_size: usize,
    /// `#W`, number of windows over the whole corpus.
    pub total_windows: u64,
    /// `#W(i)` per vocabulary word.
    pub word_window_count: Vec<u64>,
    /// `#W(i, j)` keyed by `(i, j)` with `i < j`.
    pub pair_window_count: HashMap<(usize, usize), u64>,
}

impl PmiStats {
    pub fn pair_count(&self, i: usize, j: usize) -> u64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.pair_window_count.get(&key).copied().unwrap_or(0)
    }
}

#[derive(Default)]
struct Partial {
    windows: u64,
    words: HashMap<usize, u64>,
    pairs: HashMap<(usize, usize), u64>,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.windows += other.windows;
        for (k, v) in other.words {
            *self.words.entry(k).or_default() += v;
        }
        for (k, v) in other.pairs {
            *self.pairs.entry(k).or_default() += v;
        }
        self
    }

    fn add_window(&mut self, window: &[usize], scratch: &mut Vec<usize>) {
        self.windows += 1;
        scratch.clear();
        scratch.extend_from_slice(window);
        scratch.sort_unstable();
        scratch.dedup();
        for (a, &i) in scratch.iter().enumerate() {
            *self.words.entry(i).or_default() += 1;
            for &j in &scratch[a + 1..] {
                *self.pairs.entry((i, j)).or_default() += 1;
            }
        }
    }
}

/// Slides a window of `window_size` tokens with stride 1 over every document.
/// A document no longer than the window, including an empty one, is a single
/// window. Windows never cross document boundaries.
pub fn count_windows(corpus: &Corpus, window_size: usize) -> Result<PmiStats, GraphError> {
    if window_size < 1 {
        return Err(GraphError::InvalidWindow(window_size));
    }
    let partial = corpus
        .documents
        .par_iter()
        .fold(
            || (Partial::default(), Vec::new()),
            |(mut acc, mut scratch), doc| {
                let t = &doc.tokens;
                if t.len() <= window_size {
                    acc.add_window(t, &mut scratch);
                } else {
                    for w in t.windows(window_size) {
                        acc.add_window(w, &mut scratch);
                    }
                }
                (acc, scratch)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(Partial::default, Partial::merge);

    let mut word_window_count = vec![0u64; corpus.n_words()];
    for (k, v) in partial.words {
        word_window_count[k] = v;
    }
    Ok(PmiStats {
        window_size,
        total_windows: partial.windows,
        word_window_count,
        pair_window_count: partial.pairs,
    })
}

/// Word-word edges `log(p(i,j) / (p(i) p(j)))` (natural log) for every pair
/// whose value is strictly positive, sorted by `(i, j)` with `i < j`.
pub fn pmi_edges(stats: &PmiStats) -> Vec<(usize, usize, f64)> {
    let total = stats.total_windows as f64;
    let mut edges: Vec<(usize, usize, f64)> = stats
        .pair_window_count
        .iter()
        .filter(|(_, &n)| n > 0)
        .filter_map(|(&(i, j), &n)| {
            let ni = stats.word_window_count[i] as f64;
            let nj = stats.word_window_count[j] as f64;
            let pmi = (n as f64 * total / (ni * nj)).ln();
            (pmi > 0.0).then_some((i, j, pmi))
        })
        .collect();
    edges.sort_unstable_by_key(|&(i, j, _)| (i, j));
    edges
}
