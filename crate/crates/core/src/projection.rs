//! START/END/INSIDE label projection and checksummed projection artifacts.
//!
//! For every gold MWE, its first index sets `start`, its last index sets
//! `end`, and each member strictly between the two sets `inside`. Tokens
//! inside the span that are not members (the gap of a discontinuous MWE)
//! stay at zero.
//!
//! Artifact files are a single JSON object with the fields `version`,
//! `corpus_name`, `checksum` and `projections`, in that order. The checksum
//! is the SHA-256 of the compact JSON encoding of the `projections` array
//! alone, so re-versioning identical content keeps the same digest.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence};
use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::jsonl::write_bytes;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelProjection {
    pub sentence_id: String,
    #[serde(with = "crate::bits")]
    pub start: Vec<bool>,
    #[serde(with = "crate::bits")]
    pub end: Vec<bool>,
    #[serde(with = "crate::bits")]
    pub inside: Vec<bool>,
}

impl LabelProjection {
    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }
}

pub fn project(sentence: &Sentence) -> LabelProjection {
    let n = sentence.len();
    let mut projection = LabelProjection {
        sentence_id: sentence.id.clone(),
        start: vec![false; n],
        end: vec![false; n],
        inside: vec![false; n],
    };
    for mwe in &sentence.mwes {
        let members = mwe.token_indices();
        projection.start[mwe.first()] = true;
        projection.end[mwe.last()] = true;
        for &i in &members[1..members.len() - 1] {
            projection.inside[i] = true;
        }
    }
    projection
}

/// Number of MWE boundaries lost because another MWE in the sentence
/// already claimed the same START (or END) token.
pub fn boundary_collisions(sentence: &Sentence) -> usize {
    let starts: HashSet<usize> = sentence.mwes.iter().map(|m| m.first()).collect();
    let ends: HashSet<usize> = sentence.mwes.iter().map(|m| m.last()).collect();
    2 * sentence.mwes.len() - starts.len() - ends.len()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionArtifact {
    pub version: String,
    pub corpus_name: String,
    pub checksum: String,
    pub projections: Vec<LabelProjection>,
}

/// Digest of the projections payload.
pub fn payload_digest(projections: &[LabelProjection]) -> String {
    let payload = serde_json::to_vec(projections).expect("projections always serialize");
    sha256_hex(&payload)
}

impl ProjectionArtifact {
    pub fn build(corpus: &Corpus, version: &str) -> Self {
        let projections: Vec<_> = corpus.sentences.iter().map(project).collect();
        ProjectionArtifact {
            version: version.to_string(),
            corpus_name: corpus.name.clone(),
            checksum: payload_digest(&projections),
            projections,
        }
    }

    pub fn verify(&self) -> Result<()> {
        let actual = payload_digest(&self.projections);
        if actual != self.checksum {
            return Err(Error::Integrity {
                expected: self.checksum.clone(),
                actual,
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("artifact always serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Total boundary collisions across the corpus the artifact was built from.
    pub fn collisions(corpus: &Corpus) -> usize {
        corpus.sentences.iter().map(boundary_collisions).sum()
    }
}

pub fn write_artifact(corpus: &Corpus, version: &str, path: &Path) -> Result<ProjectionArtifact> {
    let artifact = ProjectionArtifact::build(corpus, version);
    write_bytes(path, &artifact.to_bytes())?;
    Ok(artifact)
}

/// Reads an artifact and refuses it unless the payload digest matches.
pub fn read_artifact(path: &Path) -> Result<ProjectionArtifact> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let artifact: ProjectionArtifact = serde_json::from_slice(&bytes)
        .map_err(|e| Error::malformed(path, e.line(), e.to_string()))?;
    for p in &artifact.projections {
        if p.end.len() != p.start.len() || p.inside.len() != p.start.len() {
            return Err(Error::Schema(format!(
                "projection `{}` has unequal label lengths",
                p.sentence_id
            )));
        }
    }
    artifact.verify()?;
    Ok(artifact)
}
