//! Knowledge ingestion: event-log parsing, indicator mining, and the
//! propose/review/apply loop for graph updates.

mod records;
mod mining;
mod review;

pub use records::{parse_event_log, EventRecord, ParsedLog, Reject};
pub use mining::{
    derive_expertise, derive_permissions, derive_seniority, seniority_indicators, CaseAttribute, ExpertiseConfig,
    SeniorityConfig,
};
pub use review::{propose_update, render_update, JournalEntry, ProposalBook, UpdateProposal, Verdict};

use thiserror::Error;

use crate::graph::StoreError;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("event log is empty")]
    EmptyFile,
    #[error("event log lacks column {0:?}")]
    MissingColumn(String),
    #[error("event log: {0}")]
    Csv(String),
    #[error("threshold must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("unknown case attribute {0:?}")]
    UnknownAttribute(String),
    #[error("unknown proposal {0}")]
    UnknownProposal(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("journal: {0}")]
    Journal(String),
}
