//! Labelled corpora: ingestion of the meta/text file pair, tokenisation,
//! vocabulary construction and the limited-label resampling used for the
//! semi-supervised setting.

mod stopwords;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("meta file has {meta} lines but text file has {text}")]
    LineCountMismatch { meta: usize, text: usize },
    #[error("meta line {line}: unknown split {token:?} (expected `train` or `test`)")]
    UnknownSplit { line: usize, token: String },
    #[error("meta line {line}: expected `doc_id<TAB>split<TAB>label`")]
    MalformedMeta { line: usize },
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("train fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn parse(token: &str) -> Option<Split> {
        match token {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
    pub label: String,
    pub split: Split,
}

/// Text preprocessing knobs. `None` fields resolve per corpus:
/// stopword removal defaults to on for `language == "en"` only, and
/// `min_word_freq` defaults to 5 for corpora of at least 5000 documents, else 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocConfig {
    pub lowercase: bool,
    pub clean: bool,
    pub remove_stopwords: Option<bool>,
    pub language: String,
    pub min_word_freq: Option<usize>,
}

impl Default for PreprocConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            clean: true,
            remove_stopwords: None,
            language: "en".to_string(),
            min_word_freq: None,
        }
    }
}

impl PreprocConfig {
    /// Everything off: split on whitespace only.
    pub fn raw() -> Self {
        Self {
            lowercase: false,
            clean: false,
            remove_stopwords: Some(false),
            language: "en".to_string(),
            min_word_freq: Some(1),
        }
    }

    pub fn stopwords_enabled(&self) -> bool {
        self.remove_stopwords.unwrap_or(self.language == "en")
    }

    pub fn resolved_min_word_freq(&self, n_docs: usize) -> usize {
        self.min_word_freq
            .unwrap_or(if n_docs >= 5000 { 5 } else { 1 })
    }
}

fn english_stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| stopwords::ENGLISH.iter().copied().collect())
}

/// Lowercases, replaces every character that is not a letter, digit or
/// apostrophe with a space, splits on whitespace and drops stopwords, each
/// step subject to `preproc`.
pub fn tokenize(text: &str, preproc: &PreprocConfig) -> Vec<String> {
    let mut s = if preproc.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    if preproc.clean {
        s = s
            .chars()
            .map(|c| {
                if c.is_alphanumeric() || c == '\'' {
                    c
                } else {
                    ' '
                }
            })
            .collect();
    }
    let drop_stop = preproc.stopwords_enabled();
    let stop = english_stopwords();
    s.split_whitespace()
        .filter(|w| !(drop_stop && stop.contains(w)))
        .map(str::to_string)
        .collect()
}

/// Bijection between words and contiguous indices `0..M`, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_sorted(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Self { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<usize>,
    pub label: usize,
    pub split: Split,
}

/// A tokenised, labelled corpus. Document order fixes the graph's document node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
    pub labels: Vec<String>,
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn n_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn n_words(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn doc_labels(&self) -> Vec<usize> {
        self.documents.iter().map(|d| d.label).collect()
    }

    pub fn indices_with_split(&self, split: Split) -> Vec<usize> {
        self.documents
            .iter()
            .enumerate()
            .filter(|(_, d)| d.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        self.indices_with_split(Split::Train)
    }

    pub fn test_indices(&self) -> Vec<usize> {
        self.indices_with_split(Split::Test)
    }

    /// Tokenises `docs`, drops words rarer than the resolved `min_word_freq`,
    /// and indexes the rest. Labels are sorted lexicographically.
    pub fn from_raw(
        docs: Vec<RawDocument>,
        preproc: &PreprocConfig,
    ) -> Result<Corpus, CorpusError> {
        let mut seen = HashSet::with_capacity(docs.len());
        for d in &docs {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(CorpusError::DuplicateDocId(d.doc_id.clone()));
            }
        }
        let tokenized: Vec<Vec<String>> = docs
            .par_iter()
            .map(|d| tokenize(&d.text, preproc))
            .collect();

        let mut freq: HashMap<&str, usize> = HashMap::new();
        for toks in &tokenized {
            for t in toks {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let min_freq = preproc.resolved_min_word_freq(docs.len());
        let mut words: Vec<String> = freq
            .iter()
            .filter(|(_, &c)| c >= min_freq)
            .map(|(w, _)| w.to_string())
            .collect();
        words.sort_unstable();
        let vocabulary = Vocabulary::from_sorted(words);

        let mut labels: Vec<String> = docs.iter().map(|d| d.label.clone()).collect();
        labels.sort_unstable();
        labels.dedup();
        let label_index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();

        let mut warnings = Vec::new();
        let documents = docs
            .into_iter()
            .zip(tokenized)
            .map(|(raw, toks)| {
                let tokens: Vec<usize> =
                    toks.iter().filter_map(|t| vocabulary.index_of(t)).collect();
                if tokens.is_empty() {
                    warnings.push(format!(
                        "document {:?} has no tokens after preprocessing",
                        raw.doc_id
                    ));
                }
                Document {
                    label: label_index[raw.label.as_str()],
                    doc_id: raw.doc_id,
                    tokens,
                    split: raw.split,
                }
            })
            .collect();
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Corpus {
            documents,
            vocabulary,
            labels,
            warnings,
        })
    }
}

fn split_lines(s: &str) -> Vec<&str> {
    s.lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect()
}

/// Parses meta and text contents already in memory. See [`load_corpus`].
pub fn parse_corpus(
    meta: &str,
    text: &str,
    preproc: &PreprocConfig,
) -> Result<Corpus, CorpusError> {
    let meta_lines = split_lines(meta);
    let text_lines = split_lines(text);
    if meta_lines.len() != text_lines.len() {
        return Err(CorpusError::LineCountMismatch {
            meta: meta_lines.len(),
            text: text_lines.len(),
        });
    }
    let mut raw = Vec::with_capacity(meta_lines.len());
    for (i, (m, t)) in meta_lines.iter().zip(&text_lines).enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = m.splitn(3, '\t').collect();
        if fields.len() != 3 || fields[0].is_empty() {
            return Err(CorpusError::MalformedMeta { line });
        }
        let split = Split::parse(fields[1]).ok_or_else(|| CorpusError::UnknownSplit {
            line,
            token: fields[1].to_string(),
        })?;
        raw.push(RawDocument {
            doc_id: fields[0].to_string(),
            text: t.to_string(),
            label: fields[2].to_string(),
            split,
        });
    }
    Corpus::from_raw(raw, preproc)
}

/// Loads a corpus from a meta file (`doc_id<TAB>split<TAB>label` per line)
/// and a text file holding one document per line in the same order.
pub fn load_corpus(
    meta_path: &Path,
    text_path: &Path,
    preproc: &PreprocConfig,
) -> Result<Corpus, CorpusError> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|source| CorpusError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    parse_corpus(&read(meta_path)?, &read(text_path)?, preproc)
}

/// Number of training documents for a fraction of `n_docs`: `⌈fraction·n_docs⌉`.
/// A tolerance of 1e-9 absorbs products such as `0.07 * 100 = 7.000000000000001`.
pub fn limited_train_count(fraction: f64, n_docs: usize) -> usize {
    let x = fraction * n_docs as f64;
    ((x - 1e-9).ceil().max(0.0) as usize).min(n_docs)
}

/// Pools all documents and reassigns splits so that `⌈fraction·D⌉` are train
/// and the rest test. With `stratified`, every label present gets at least
/// one training document first; if there are more labels than the count
/// allows, the count grows to the number of labels.
pub fn sample_limited_split(
    corpus: &Corpus,
    fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<Corpus, CorpusError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CorpusError::InvalidFraction(fraction));
    }
    let n = corpus.n_docs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; n];
    let mut n_train = limited_train_count(fraction, n);

    if stratified {
        let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); corpus.n_labels()];
        for (i, d) in corpus.documents.iter().enumerate() {
            by_label[d.label].push(i);
        }
        let mut picked = 0;
        for group in by_label.iter_mut().filter(|g| !g.is_empty()) {
            let &pick = group.choose(&mut rng).expect("non-empty group");
            chosen[pick] = true;
            picked += 1;
        }
        n_train = n_train.max(picked);
    }
    let mut rest: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
    rest.shuffle(&mut rng);
    let already = chosen.iter().filter(|&&c| c).count();
    for &i in rest.iter().take(n_train.saturating_sub(already)) {
        chosen[i] = true;
    }

    let mut out = corpus.clone();
    for (doc, &train) in out.documents.iter_mut().zip(&chosen) {
        doc.split = if train { Split::Train } else { Split::Test };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        let p = PreprocConfig::default();
        assert_eq!(
            tokenize("John feels happy", &p),
            toks(&["john", "feels", "happy"])
        );
        assert!(tokenize("", &p).is_empty());
        let no_stop = PreprocConfig {
            remove_stopwords: Some(false),
            ..PreprocConfig::default()
        };
        assert_eq!(tokenize("Don't stop!!", &no_stop), toks(&["don't", "stop"]));
        // "don't" is itself a stopword when removal is on.
        assert_eq!(tokenize("Don't stop!!", &p), toks(&["stop"]));
    }

    #[test]
    fn stopwords_default_by_language() {
        let zh = PreprocConfig {
            language: "zh".into(),
            ..PreprocConfig::default()
        };
        assert!(!zh.stopwords_enabled());
        assert_eq!(tokenize("the cat", &zh), toks(&["the", "cat"]));
    }

    #[test]
    fn load_two_docs() {
        let p = PreprocConfig {
            remove_stopwords: Some(false),
            ..PreprocConfig::default()
        };
        let c = parse_corpus("d0\ttrain\tx\nd1\ttest\ty\n", "A b.\na c\n", &p).unwrap();
        assert_eq!(c.n_docs(), 2);
        assert_eq!(c.n_words(), 3);
        assert_eq!(c.vocabulary.words(), &toks(&["a", "b", "c"])[..]);
        assert_eq!(c.documents[0].tokens, vec![0, 1]);
        assert_eq!(c.documents[1].split, Split::Test);
        assert_eq!(c.labels, toks(&["x", "y"]));
    }

    #[test]
    fn load_empty_and_mismatch() {
        let p = PreprocConfig::default();
        let c = parse_corpus("", "", &p).unwrap();
        assert_eq!((c.n_docs(), c.n_words()), (0, 0));
        let err = parse_corpus("a\ttrain\tx\nb\ttrain\tx\nc\ttrain\tx\n", "one\ntwo\n", &p);
        assert!(matches!(
            err,
            Err(CorpusError::LineCountMismatch { meta: 3, text: 2 })
        ));
    }

    #[test]
    fn load_errors() {
        let p = PreprocConfig::default();
        assert!(matches!(
            parse_corpus("a\tdev\tx\n", "t\n", &p),
            Err(CorpusError::UnknownSplit { line: 1, .. })
        ));
        assert!(matches!(
            parse_corpus("a\ttrain\n", "t\n", &p),
            Err(CorpusError::MalformedMeta { line: 1 })
        ));
        assert!(matches!(
            parse_corpus("a\ttrain\tx\na\ttest\tx\n", "t\nu\n", &p),
            Err(CorpusError::DuplicateDocId(_))
        ));
    }

    #[test]
    fn empty_document_kept_with_warning() {
        let c = parse_corpus(
            "a\ttrain\tx\nb\ttrain\tx\n",
            "words here\n!!! the\n",
            &PreprocConfig::default(),
        )
        .unwrap();
        assert_eq!(c.n_docs(), 2);
        assert!(c.documents[1].tokens.is_empty());
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn min_word_freq_filters() {
        let p = PreprocConfig {
            min_word_freq: Some(2),
            remove_stopwords: Some(false),
            ..PreprocConfig::default()
        };
        let c = parse_corpus("a\ttrain\tx\nb\ttrain\tx\n", "a b\na c\n", &p).unwrap();
        assert_eq!(c.vocabulary.words(), &toks(&["a"])[..]);
        assert_eq!(PreprocConfig::default().resolved_min_word_freq(5000), 5);
        assert_eq!(PreprocConfig::default().resolved_min_word_freq(4999), 1);
    }

    fn synthetic(n: usize, n_labels: usize) -> Corpus {
        let meta: String = (0..n)
            .map(|i| format!("d{i}\ttrain\tl{}\n", i % n_labels))
            .collect();
        let text: String = (0..n).map(|i| format!("w{}\n", i % 7)).collect();
        parse_corpus(&meta, &text, &PreprocConfig::default()).unwrap()
    }

    #[test]
    fn limited_split_counts() {
        let c = synthetic(200, 2);
        let s = sample_limited_split(&c, 0.01, 7, true).unwrap();
        assert_eq!(s.train_indices().len(), 2);
        assert_eq!(s.test_indices().len(), 198);
        let labels: HashSet<usize> = s
            .train_indices()
            .iter()
            .map(|&i| s.documents[i].label)
            .collect();
        assert_eq!(labels.len(), 2);

        let all = sample_limited_split(&c, 1.0, 7, true).unwrap();
        assert_eq!(all.train_indices().len(), 200);

        let again = sample_limited_split(&c, 0.01, 7, true).unwrap();
        assert_eq!(s, again);

        assert!(matches!(
            sample_limited_split(&c, 0.0, 1, true),
            Err(CorpusError::InvalidFraction(_))
        ));
        assert!(sample_limited_split(&c, 1.5, 1, true).is_err());
    }

    #[test]
    fn train_count_rounding() {
        assert_eq!(limited_train_count(0.01, 200), 2);
        assert_eq!(limited_train_count(0.07, 100), 7);
        assert_eq!(limited_train_count(0.011, 200), 3);
        assert_eq!(limited_train_count(1.0, 0), 0);
    }

    #[test]
    fn stratified_grows_to_label_count() {
        let c = synthetic(50, 5);
        let s = sample_limited_split(&c, 0.01, 3, true).unwrap();
        assert_eq!(s.train_indices().len(), 5);
        let u = sample_limited_split(&c, 0.01, 3, false).unwrap();
        assert_eq!(u.train_indices().len(), 1);
    }

    #[test]
    fn vocabulary_round_trip() {
        let c = synthetic(30, 3);
        for (i, w) in c.vocabulary.words().iter().enumerate() {
            assert_eq!(c.vocabulary.index_of(w), Some(i));
            assert_eq!(c.vocabulary.word(i), w);
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tokenize_idempotent(text in "\\PC{0,60}") {
                let p = PreprocConfig::default();
                let once = tokenize(&text, &p);
                let twice = tokenize(&once.join(" "), &p);
                prop_assert_eq!(once, twice);
            }

            #[test]
            fn stratified_covers_labels(n in 5usize..120, k in 1usize..5, frac in 0.001f64..1.0, seed in any::<u64>()) {
                let meta: String = (0..n).map(|i| format!("d{i}\ttrain\tl{}\n", i % k)).collect();
                let text: String = (0..n).map(|i| format!("w{i}\n")).collect();
                let c = parse_corpus(&meta, &text, &PreprocConfig::default()).unwrap();
                let s = sample_limited_split(&c, frac, seed, true).unwrap();
                let covered: HashSet<usize> = s.train_indices().iter().map(|&i| s.documents[i].label).collect();
                prop_assert_eq!(covered.len(), c.n_labels());
                prop_assert_eq!(s.train_indices().len(), limited_train_count(frac, n).max(c.n_labels()));
            }
        }
    }
}
