#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use textgcn::corpus::{parse_corpus, Corpus, PreprocConfig};
use textgcn::harness::ExperimentConfig;

const SPORT: &[&str] = &[
    "ball", "goal", "team", "match", "score", "coach", "league", "player",
];
const FOOD: &[&str] = &[
    "bread", "oven", "flour", "sugar", "recipe", "butter", "dough", "salt",
];

/// `n` documents alternating between two topics with disjoint vocabularies.
/// Every fourth document is a test document.
pub fn toy_files(n: usize) -> (String, String) {
    let mut meta = String::new();
    let mut text = String::new();
    for i in 0..n {
        let (label, words) = if i % 2 == 0 {
            ("sport", SPORT)
        } else {
            ("food", FOOD)
        };
        let split = if i % 4 == 3 { "test" } else { "train" };
        meta.push_str(&format!("d{i}\t{split}\t{label}\n"));
        let doc: Vec<&str> = (0..6)
            .map(|k| words[(i * 3 + k * 5) % words.len()])
            .collect();
        text.push_str(&doc.join(" "));
        text.push('\n');
    }
    (meta, text)
}

pub fn toy_corpus(n: usize) -> Corpus {
    let (meta, text) = toy_files(n);
    parse_corpus(&meta, &text, &PreprocConfig::raw()).unwrap()
}

/// Writes the toy dataset into `dir` and returns a small, fast config for it.
pub fn toy_config(dir: &Path, n: usize) -> ExperimentConfig {
    let (meta, text) = toy_files(n);
    let meta_path: PathBuf = dir.join("toy.txt");
    let text_path: PathBuf = dir.join("toy_corpus.txt");
    fs::write(&meta_path, meta).unwrap();
    fs::write(&text_path, text).unwrap();
    let mut c = ExperimentConfig {
        dataset: "toy".into(),
        meta_path,
        text_path,
        preproc: PreprocConfig::raw(),
        n_repeats: 2,
        ..ExperimentConfig::default()
    };
    c.train.hidden_dim = 16;
    c.train.max_epochs = 60;
    c
}
