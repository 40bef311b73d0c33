//! Dependency distances and noun-phrase chunk tags.
//!
//! Distances are shortest-path lengths in the undirected graph whose edges
//! are `(token, head)` pairs, capped at [`DEFAULT_DISTANCE_CAP`]. Pairs in
//! different components (unparsed tokens, forests) report the cap.
//!
//! Feature files are line-delimited JSON:
//!
//! ```text
//! {"sentence_id":"s1","inside_np":[0,1,1,0],"dep_heads":[null,2,0,0]}
//! ```

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence};
use crate::error::{Error, Result};
use crate::jsonl;

pub const DEFAULT_DISTANCE_CAP: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepDistanceMatrix {
    n: usize,
    cap: u8,
    dist: Vec<u8>,
}

impl DepDistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> u8 {
        self.cap
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }
}

pub fn dep_distances(sentence: &Sentence, cap: u8) -> Result<DepDistanceMatrix> {
    let heads: Vec<Option<usize>> = sentence.tokens.iter().map(|t| t.head).collect();
    distances_from_heads(&sentence.id, &heads, cap)
}

/// Same as [`dep_distances`] for a bare head vector (e.g. from a feature file).
pub fn distances_from_heads(
    sentence_id: &str,
    heads: &[Option<usize>],
    cap: u8,
) -> Result<DepDistanceMatrix> {
    if cap == 0 {
        return Err(Error::Config("distance cap must be at least 1".into()));
    }
    let n = heads.len();
    if let Some((i, h)) = heads
        .iter()
        .enumerate()
        .find_map(|(i, h)| h.filter(|&h| h >= n || h == i).map(|h| (i, h)))
    {
        return Err(Error::Schema(format!(
            "sentence `{sentence_id}`: token {i} has invalid head {h}"
        )));
    }
    if let Some(cycle) = find_cycle(heads) {
        return Err(Error::HeadCycle {
            sentence_id: sentence_id.to_string(),
            cycle,
        });
    }

    let mut adjacency = vec![Vec::new(); n];
    for (i, head) in heads.iter().enumerate() {
        if let Some(h) = *head {
            adjacency[i].push(h);
            adjacency[h].push(i);
        }
    }

    let mut dist = vec![cap; n * n];
    let mut queue = VecDeque::new();
    for source in 0..n {
        let row = &mut dist[source * n..(source + 1) * n];
        let mut seen = vec![false; n];
        seen[source] = true;
        row[source] = 0;
        queue.clear();
        queue.push_back((source, 0u8));
        while let Some((node, d)) = queue.pop_front() {
            // anything at depth >= cap already holds the cap
            if d + 1 >= cap {
                continue;
            }
            for &next in &adjacency[node] {
                if !seen[next] {
                    seen[next] = true;
                    row[next] = d + 1;
                    queue.push_back((next, d + 1));
                }
            }
        }
    }
    Ok(DepDistanceMatrix { n, cap, dist })
}

/// Returns the token indices of the first head cycle found, in path order.
fn find_cycle(heads: &[Option<usize>]) -> Option<Vec<usize>> {
    const UNSEEN: u8 = 0;
    const ON_PATH: u8 = 1;
    const DONE: u8 = 2;
    let mut state = vec![UNSEEN; heads.len()];
    for start in 0..heads.len() {
        let mut path = Vec::new();
        let mut node = Some(start);
        while let Some(i) = node {
            match state[i] {
                DONE => break,
                ON_PATH => {
                    let pos = path.iter().position(|&p| p == i).unwrap();
                    return Some(path[pos..].to_vec());
                }
                _ => {
                    state[i] = ON_PATH;
                    path.push(i);
                    node = heads[i];
                }
            }
        }
        for p in path {
            state[p] = DONE;
        }
    }
    None
}

/// Mean distance from token `i` to every other token.
pub fn mean_dep_distance(matrix: &DepDistanceMatrix, i: usize) -> Result<f64> {
    if matrix.n < 2 {
        return Err(Error::UndefinedInput(format!(
            "mean distance needs at least 2 tokens, sentence has {}",
            matrix.n
        )));
    }
    if i >= matrix.n {
        return Err(Error::UndefinedInput(format!(
            "token {i} out of range for {} tokens",
            matrix.n
        )));
    }
    let total: u32 = matrix
        .row(i)
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| u32::from(d))
        .sum();
    Ok(f64::from(total) / (matrix.n - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkTags {
    #[serde(with = "crate::bits")]
    pub inside_np: Vec<bool>,
}

const NP_TAGS: [&str; 5] = ["DET", "ADJ", "NOUN", "PROPN", "NUM"];

/// Deterministic fallback chunker: each maximal run of DET/ADJ/NOUN/PROPN/NUM
/// tokens is inside an NP up to and including its last NOUN or PROPN. Runs
/// without a noun are left outside.
pub fn heuristic_chunk_tags(sentence: &Sentence) -> Result<ChunkTags> {
    let tags = sentence
        .tokens
        .iter()
        .map(|t| {
            t.upos.as_deref().ok_or_else(|| {
                Error::Schema(format!(
                    "sentence `{}`: token {} has no UPOS tag",
                    sentence.id, t.index
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut inside_np = vec![false; tags.len()];
    let mut i = 0;
    while i < tags.len() {
        if !NP_TAGS.contains(&tags[i]) {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut last_noun = None;
        while i < tags.len() && NP_TAGS.contains(&tags[i]) {
            if matches!(tags[i], "NOUN" | "PROPN") {
                last_noun = Some(i);
            }
            i += 1;
        }
        if let Some(end) = last_noun {
            inside_np[run_start..=end].iter_mut().for_each(|b| *b = true);
        }
    }
    Ok(ChunkTags { inside_np })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub sentence_id: String,
    #[serde(with = "crate::bits")]
    pub inside_np: Vec<bool>,
    pub dep_heads: Vec<Option<usize>>,
}

impl FeatureRecord {
    pub fn new(sentence: &Sentence, chunks: ChunkTags) -> Self {
        FeatureRecord {
            sentence_id: sentence.id.clone(),
            inside_np: chunks.inside_np,
            dep_heads: sentence.tokens.iter().map(|t| t.head).collect(),
        }
    }

    fn check(&self, sentence: &Sentence) -> Result<()> {
        let n = sentence.len();
        if self.inside_np.len() != n || self.dep_heads.len() != n {
            return Err(Error::Schema(format!(
                "features for `{}`: inside_np has {} and dep_heads {} entries, sentence has {n} tokens",
                self.sentence_id,
                self.inside_np.len(),
                self.dep_heads.len()
            )));
        }
        Ok(())
    }

    pub fn distances(&self, cap: u8) -> Result<DepDistanceMatrix> {
        distances_from_heads(&self.sentence_id, &self.dep_heads, cap)
    }
}

/// Loads a feature file and checks every record against `corpus`.
/// Sentences absent from the file are simply absent from the map.
pub fn load_features(path: &Path, corpus: &Corpus) -> Result<BTreeMap<String, FeatureRecord>> {
    let mut map = BTreeMap::new();
    for (line, record) in jsonl::read_records::<FeatureRecord>(path)? {
        let sentence = corpus
            .get(&record.sentence_id)
            .ok_or_else(|| Error::UnknownSentence(record.sentence_id.clone()))?;
        record
            .check(sentence)
            .map_err(|e| Error::malformed(path, line, e.to_string()))?;
        if map.insert(record.sentence_id.clone(), record).is_some() {
            return Err(Error::malformed(path, line, "duplicate sentence_id"));
        }
    }
    Ok(map)
}

/// Chunk tags from a feature file, returned verbatim.
pub fn load_chunk_tags(path: &Path, corpus: &Corpus) -> Result<BTreeMap<String, ChunkTags>> {
    Ok(load_features(path, corpus)?
        .into_iter()
        .map(|(id, r)| (id, ChunkTags { inside_np: r.inside_np }))
        .collect())
}

pub fn write_features(records: &[FeatureRecord], path: &Path) -> Result<()> {
    jsonl::write_records(path, records)
}
