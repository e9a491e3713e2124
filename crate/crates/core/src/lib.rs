//! Explainable resource allocation over a typed knowledge graph.
//!
//! The crate stores allocation knowledge as triples ([`graph`]), gives it
//! meaning through an [`ontology`], scores candidate task-to-resource
//! assignments with declarative graph-pattern [`rules`], and decides
//! allocations with a justification for every choice ([`reasoner`]). A
//! discrete-event [`sim`]ulator drives a loan-application process through
//! the reasoner, [`ingest`] mines knowledge from event logs and runs the
//! human review loop for graph updates, and [`service`] exposes it all over
//! HTTP.

pub mod demo;
pub mod eventlog;
pub mod graph;
pub mod ingest;
pub mod ontology;
pub mod reasoner;
pub mod rules;
pub mod service;
pub mod sim;
pub mod term;
pub mod text;
pub mod vocab;

use thiserror::Error;

pub use graph::{Graph, GraphUpdate, TripleSource};
pub use ontology::Ontology;
pub use reasoner::Reasoner;
pub use rules::RuleSet;
pub use term::{Term, Triple};

/// Failure to load one of the input documents.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("graph: {0}")]
    Graph(#[from] text::ParseError),
    #[error("graph: {0}")]
    Store(#[from] graph::StoreError),
    #[error("ontology: {0}")]
    Ontology(#[from] ontology::OntologyError),
    #[error("rules: {0}")]
    Rules(#[from] rules::RuleError),
    #[error("{0}")]
    Other(String),
}
