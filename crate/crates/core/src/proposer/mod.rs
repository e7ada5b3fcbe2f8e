//! Structure proposers: the outer search that decides which skeletons the
//! inner optimizers try.

mod enumerate;
pub mod mock;
pub mod protocol;
mod random;
mod remote;

pub use enumerate::{enumerate_structures, EnumConfig, EnumProposer};
pub use random::RandomProposer;
pub use remote::{Endpoint, RemoteError, RemoteProposer};

use crate::codec::{decode, CodecError, SequenceLabel};
use crate::data::Dataset;
use crate::netcore::{skeleton, Structure};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProposeError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("proposer produced no usable candidate ({0})")]
    Exhausted(String),
    #[error(transparent)]
    Remote(#[from] RemoteError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: SequenceLabel,
    pub score: f64,
    pub provenance: String,
}

/// Candidates sorted by descending score, deduplicated by label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub requested: usize,
}

impl CandidateSet {
    /// Decode, drop undecodable or degenerate labels and duplicates, sort by
    /// score (stable, so ties keep their input order) and keep the first `k`.
    pub fn build(raw: Vec<Candidate>, k: usize, m: usize, d0: usize) -> CandidateSet {
        let mut seen = HashSet::new();
        let mut kept: Vec<Candidate> = raw
            .into_iter()
            .filter(|c| match usable(&c.label, m, d0) {
                Ok(_) => seen.insert(c.label.clone()),
                Err(why) => {
                    tracing::warn!(label = %c.label, %why, "dropping candidate");
                    false
                }
            })
            .collect();
        kept.sort_by(|a, b| b.score.total_cmp(&a.score));
        kept.truncate(k);
        CandidateSet { candidates: kept, requested: k }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Decode `label` and check that it yields a non-degenerate skeleton.
pub fn usable(label: &SequenceLabel, m: usize, d0: usize) -> Result<Structure, CodecError> {
    let s = decode(label, m, d0)?;
    skeleton(&s)?;
    Ok(s)
}

/// Anything that answers "given this data, which structures should be tried".
pub trait Proposer: Send + Sync {
    fn name(&self) -> String;

    /// Replica count of the structures this proposer emits.
    fn replicas(&self) -> usize;

    fn propose(&self, data: &Dataset, k: usize) -> Result<CandidateSet, ProposeError>;
}
