//! Corpus-level text graphs and graph convolutional networks for text
//! classification, written against a small in-crate numeric kernel.
//!
//! The pipeline: [`corpus`] loads and tokenises labelled documents,
//! [`textgraph`] builds the document/word graph, [`features`] supplies the
//! initial node features, [`gcn`] trains the network and [`metrics`] scores
//! it. [`harness`] strings those together for single runs and ablation sweeps.

pub mod corpus;
pub mod features;
pub mod gcn;
pub mod harness;
pub mod metrics;
pub mod seed;
pub mod sparse;
pub mod textgraph;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
