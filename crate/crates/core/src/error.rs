//! Crate-wide error type.
//!
//! Failures carry enough structure to act as evidence: a stuck embedding
//! reports where it stalled, a failed density search reports the witness,
//! and a stochastic procedure reports its tallies. Callers are expected to
//! inspect these, not just print them.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Where a greedy embedding ran out of candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedEvidence {
    /// Tree vertex that could not be placed.
    pub tree_vertex: usize,
    /// Host image of its parent, if the parent was already placed.
    pub parent_image: Option<usize>,
    /// Candidates that were adjacent to the parent image before filtering.
    pub candidates_adjacent: usize,
    /// Candidates remaining after removing used and forbidden vertices.
    pub candidates_free: usize,
    /// Short description of the stage that failed.
    pub stage: String,
}

impl std::fmt::Display for EmbedEvidence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "stage {}: tree vertex {} stuck (parent image {:?}, {} adjacent, {} free)",
            self.stage,
            self.tree_vertex,
            self.parent_image,
            self.candidates_adjacent,
            self.candidates_free
        )
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed or out-of-domain input (bad ids, inconsistent sizes).
    #[error("input: {0}")]
    Input(String),

    /// Text-format parse failure; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A stated hypothesis of the procedure does not hold for the input.
    #[error("precondition: {0}")]
    Precondition(String),

    /// A greedy embedding stalled; the evidence says where and why.
    #[error("embedding failed: {0}")]
    Embed(EmbedEvidence),

    /// An internal guarantee failed; indicates a bug, not bad input.
    #[error("contract violated: {0}")]
    Contract(String),

    /// The claimed avoiding property of a vertex set is refuted.
    #[error("avoiding property violated: {0}")]
    AvoidingViolation(String),

    /// The claimed absence of dense spots is refuted.
    #[error("nowhere-dense property violated: {0}")]
    NowhereDenseViolation(String),

    /// A randomized procedure exhausted its retry budget.
    #[error("stochastic failure after {attempts} attempts: {msg}")]
    Stochastic { attempts: usize, msg: String },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
