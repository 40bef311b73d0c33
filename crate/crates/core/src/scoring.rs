//! Per-token probability exchange and the lexicon baseline scorer.
//!
//! Probability files are line-delimited JSON, one sentence per line:
//!
//! ```text
//! {"sentence_id":"s1","p_start":[0.91,0.0,0.02,0.0],"p_end":[0.0,0.0,0.0,0.88],"p_inside":[0.0,0.1,0.1,0.0]}
//! ```
//!
//! Values are written rounded to six decimal places.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, Token};
use crate::error::{Error, Result};
use crate::jsonl;

/// Widest span a gapped lexicon match may cover (two boundaries, at most 11 gap tokens).
pub const MAX_MATCH_WIDTH: usize = 13;
const MAX_KEY_MEMBERS: usize = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenProbabilities {
    pub sentence_id: String,
    pub p_start: Vec<f64>,
    pub p_end: Vec<f64>,
    pub p_inside: Vec<f64>,
}

pub type ProbabilityMap = BTreeMap<String, TokenProbabilities>;

impl TokenProbabilities {
    pub fn zeros(sentence_id: impl Into<String>, n: usize) -> Self {
        TokenProbabilities {
            sentence_id: sentence_id.into(),
            p_start: vec![0.0; n],
            p_end: vec![0.0; n],
            p_inside: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.p_start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_start.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.p_start.len();
        if self.p_end.len() != n || self.p_inside.len() != n {
            return Err(Error::Schema(format!(
                "`{}`: probability sequences have lengths {}/{}/{}",
                self.sentence_id,
                n,
                self.p_end.len(),
                self.p_inside.len()
            )));
        }
        for (name, values) in [
            ("p_start", &self.p_start),
            ("p_end", &self.p_end),
            ("p_inside", &self.p_inside),
        ] {
            if let Some((i, v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(Error::Schema(format!(
                    "`{}`: {name}[{i}] = {v} is outside [0,1]",
                    self.sentence_id
                )));
            }
        }
        Ok(())
    }

    fn rounded(&self) -> Self {
        let round = |v: &Vec<f64>| v.iter().map(|x| (x * 1e6).round() / 1e6).collect();
        TokenProbabilities {
            sentence_id: self.sentence_id.clone(),
            p_start: round(&self.p_start),
            p_end: round(&self.p_end),
            p_inside: round(&self.p_inside),
        }
    }
}

pub fn write_probabilities(map: &ProbabilityMap, path: &Path) -> Result<()> {
    let rounded: Vec<_> = map.values().map(TokenProbabilities::rounded).collect();
    jsonl::write_records(path, &rounded)
}

pub fn load_probabilities(path: &Path) -> Result<ProbabilityMap> {
    let mut map = ProbabilityMap::new();
    for (line, record) in jsonl::read_records::<TokenProbabilities>(path)? {
        record
            .validate()
            .map_err(|e| Error::malformed(path, line, e.to_string()))?;
        let id = record.sentence_id.clone();
        if map.insert(id, record).is_some() {
            return Err(Error::malformed(path, line, "duplicate sentence_id"));
        }
    }
    Ok(map)
}

/// Checks that every probability record names a sentence of `corpus` and has
/// one value per token.
pub fn check_against(map: &ProbabilityMap, corpus: &Corpus) -> Result<()> {
    let lengths: HashMap<&str, usize> = corpus
        .sentences
        .iter()
        .map(|s| (s.id.as_str(), s.len()))
        .collect();
    for (id, probs) in map {
        let n = lengths
            .get(id.as_str())
            .ok_or_else(|| Error::UnknownSentence(id.clone()))?;
        if probs.len() != *n {
            return Err(Error::Schema(format!(
                "`{id}`: {} probabilities for {n} tokens",
                probs.len()
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LexiconKey {
    pub members: Vec<String>,
    /// True for MWEs seen with intervening non-member tokens.
    pub gapped: bool,
}

/// Gold MWE member sequences observed in training data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MweLexicon {
    entries: BTreeMap<LexiconKey, usize>,
}

impl MweLexicon {
    pub fn count(&self, members: &[&str], gapped: bool) -> usize {
        let key = LexiconKey {
            members: members.iter().map(|m| m.to_string()).collect(),
            gapped,
        };
        self.entries.get(&key).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LexiconKey, usize)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }
}

fn normalize(token: &Token) -> String {
    token
        .lemma
        .as_deref()
        .unwrap_or(&token.surface)
        .to_lowercase()
}

/// Counts every gold MWE of `train` by its normalized member sequence.
pub fn build_lexicon(train: &Corpus) -> MweLexicon {
    let mut entries = BTreeMap::new();
    for sentence in &train.sentences {
        for mwe in &sentence.mwes {
            let members = mwe.token_indices();
            if members.len() > MAX_KEY_MEMBERS {
                continue;
            }
            let key = LexiconKey {
                members: members
                    .iter()
                    .map(|&i| normalize(&sentence.tokens[i]))
                    .collect(),
                gapped: !mwe.is_continuous(),
            };
            *entries.entry(key).or_insert(0) += 1;
        }
    }
    MweLexicon { entries }
}

/// Marks every lexicon match: START at its first token, END at its last,
/// INSIDE at interior members. Contiguous keys match contiguous runs only;
/// gapped keys match placements with at least one gap and width at most
/// [`MAX_MATCH_WIDTH`].
pub fn baseline_score(sentence: &Sentence, lexicon: &MweLexicon) -> TokenProbabilities {
    let words: Vec<String> = sentence.tokens.iter().map(normalize).collect();
    let mut probs = TokenProbabilities::zeros(&sentence.id, words.len());
    let mut mark = |positions: &[usize]| {
        probs.p_start[positions[0]] = 1.0;
        probs.p_end[positions[positions.len() - 1]] = 1.0;
        for &p in &positions[1..positions.len() - 1] {
            probs.p_inside[p] = 1.0;
        }
    };
    for key in lexicon.entries.keys() {
        let k = key.members.len();
        if key.gapped {
            let mut placement = Vec::with_capacity(k);
            for start in 0..words.len() {
                if words[start] == key.members[0] {
                    placement.clear();
                    placement.push(start);
                    gapped_matches(&words, &key.members, &mut placement, &mut mark);
                }
            }
        } else {
            for start in 0..words.len().saturating_sub(k - 1) {
                if words[start..start + k] == key.members[..] {
                    let positions: Vec<usize> = (start..start + k).collect();
                    mark(&positions);
                }
            }
        }
    }
    probs
}

fn gapped_matches(
    words: &[String],
    members: &[String],
    placement: &mut Vec<usize>,
    on_match: &mut impl FnMut(&[usize]),
) {
    let first = placement[0];
    let last = *placement.last().unwrap();
    if placement.len() == members.len() {
        if last - first + 1 > members.len() {
            on_match(placement);
        }
        return;
    }
    let next_member = &members[placement.len()];
    let limit = (first + MAX_MATCH_WIDTH).min(words.len());
    for pos in last + 1..limit {
        if &words[pos] == next_member {
            placement.push(pos);
            gapped_matches(words, members, placement, on_match);
            placement.pop();
        }
    }
}

/// Scores every sentence of `corpus` with the baseline.
pub fn score_corpus(corpus: &Corpus, lexicon: &MweLexicon) -> ProbabilityMap {
    corpus
        .sentences
        .iter()
        .map(|s| (s.id.clone(), baseline_score(s, lexicon)))
        .collect()
}
