//! Training-set augmentation: oversampling and lexical substitution.
//!
//! Both strategies pick `floor(ratio * m)` of the `m` MWE-bearing TRAIN
//! sentences, uniformly without replacement from a seeded ChaCha8 stream,
//! and append one new sentence per pick in selection order. Existing
//! sentences are never modified.
//!
//! Substitution lexicon files are line-delimited JSON:
//!
//! ```text
//! {"word":"market","similar":["exchange","marketplace"]}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Split};
use crate::error::{Error, Result};
use crate::jsonl;

/// Customary selection ratios; others are accepted with a warning.
pub const STANDARD_RATIOS: [f64; 4] = [0.10, 0.20, 0.30, 0.40];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentStrategy {
    Oversample,
    #[serde(rename = "lexsub")]
    LexSub,
}

impl FromStr for AugmentStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oversample" => Ok(AugmentStrategy::Oversample),
            "lexsub" => Ok(AugmentStrategy::LexSub),
            other => Err(Error::Config(format!("unknown augmentation strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub strategy: AugmentStrategy,
    pub ratio: f64,
    pub seed: u64,
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(Error::Config(format!(
                "augmentation ratio {} is outside (0,1]",
                self.ratio
            )));
        }
        Ok(())
    }

    pub fn is_standard_ratio(&self) -> bool {
        STANDARD_RATIOS.iter().any(|r| (r - self.ratio).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubstitutionLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LexiconRecord {
    word: String,
    similar: Vec<String>,
}

impl SubstitutionLexicon {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<S>)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (word, similar) in entries {
            let word = word.into().to_lowercase();
            let similar: Vec<String> = similar.into_iter().map(Into::into).collect();
            match similar.first() {
                None => {
                    return Err(Error::Schema(format!(
                        "substitution list for `{word}` is empty"
                    )))
                }
                Some(first) if first.to_lowercase() == word => {
                    return Err(Error::Schema(format!("`{word}` lists itself as rank-1 substitute")))
                }
                _ => {}
            }
            map.insert(word, similar);
        }
        Ok(SubstitutionLexicon { entries: map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let records = jsonl::read_records::<LexiconRecord>(path)?;
        let mut entries = Vec::with_capacity(records.len());
        for (line, r) in records {
            Self::new([(r.word.clone(), r.similar.clone())])
                .map_err(|e| Error::malformed(path, line, e.to_string()))?;
            entries.push((r.word, r.similar));
        }
        Self::new(entries)
    }

    pub fn best(&self, word: &str) -> Option<&str> {
        self.entries
            .get(&word.to_lowercase())
            .and_then(|v| v.first())
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentOutcome {
    pub corpus: Corpus,
    pub selected: usize,
    pub emitted: usize,
    /// Selected sentences without any eligible token (substitution only).
    pub skipped: usize,
}

fn select(train: &Corpus, cfg: &AugmentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    cfg.validate()?;
    let bearing: Vec<usize> = train
        .sentences
        .iter()
        .enumerate()
        .filter(|(_, s)| s.split == Split::Train && !s.mwes.is_empty())
        .map(|(i, _)| i)
        .collect();
    if bearing.is_empty() {
        return Err(Error::Augment(
            "no MWE-bearing training sentences to select from".into(),
        ));
    }
    let take = (cfg.ratio * bearing.len() as f64 + 1e-9).floor() as usize;
    Ok(index::sample(rng, bearing.len(), take)
        .into_iter()
        .map(|k| bearing[k])
        .collect())
}

fn fresh_id(base: &str, tag: &str, taken: &mut HashSet<String>) -> String {
    let mut k = 1;
    loop {
        let id = format!("{base}#{tag}{k}");
        if taken.insert(id.clone()) {
            return id;
        }
        k += 1;
    }
}

pub fn oversample(train: &Corpus, cfg: &AugmentConfig) -> Result<AugmentOutcome> {
    if cfg.strategy != AugmentStrategy::Oversample {
        return Err(Error::Config("oversample called with a non-oversample config".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let picks = select(train, cfg, &mut rng)?;
    let mut taken: HashSet<String> = train.sentences.iter().map(|s| s.id.clone()).collect();
    let mut corpus = train.clone();
    for &i in &picks {
        let mut copy = train.sentences[i].clone();
        copy.id = fresh_id(&copy.id, "dup", &mut taken);
        corpus.sentences.push(copy);
    }
    Ok(AugmentOutcome {
        corpus,
        selected: picks.len(),
        emitted: picks.len(),
        skipped: 0,
    })
}

fn match_case(original: &str, replacement: &str) -> String {
    let mut chars = replacement.chars();
    match (original.chars().next(), chars.next()) {
        (Some(o), Some(r)) if o.is_uppercase() => r.to_uppercase().chain(chars).collect(),
        _ => replacement.to_string(),
    }
}

/// For each selected sentence, replaces one random non-MWE token that has a
/// lexicon entry with its rank-1 substitute. The copy keeps every
/// annotation; the substituted token loses its lemma.
pub fn lexical_substitute(
    train: &Corpus,
    lexicon: &SubstitutionLexicon,
    cfg: &AugmentConfig,
) -> Result<AugmentOutcome> {
    if cfg.strategy != AugmentStrategy::LexSub {
        return Err(Error::Config("lexical_substitute called with a non-lexsub config".into()));
    }
    if lexicon.is_empty() {
        return Err(Error::Augment("substitution lexicon is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let picks = select(train, cfg, &mut rng)?;
    let mut taken: HashSet<String> = train.sentences.iter().map(|s| s.id.clone()).collect();
    let mut corpus = train.clone();
    let mut skipped = 0;
    for &i in &picks {
        let source = &train.sentences[i];
        let in_mwe: HashSet<usize> = source
            .mwes
            .iter()
            .flat_map(|m| m.token_indices().iter().copied())
            .collect();
        let eligible: Vec<usize> = source
            .tokens
            .iter()
            .filter(|t| !in_mwe.contains(&t.index) && lexicon.best(&t.surface).is_some())
            .map(|t| t.index)
            .collect();
        let Some(&target) = eligible.choose(&mut rng) else {
            skipped += 1;
            continue;
        };
        let mut copy = source.clone();
        copy.id = fresh_id(&source.id, "sub", &mut taken);
        let token = &mut copy.tokens[target];
        let substitute = lexicon.best(&token.surface).expect("eligible tokens have entries");
        token.surface = match_case(&token.surface, substitute);
        token.lemma = None;
        corpus.sentences.push(copy);
    }
    Ok(AugmentOutcome {
        corpus,
        selected: picks.len(),
        emitted: picks.len() - skipped,
        skipped,
    })
}

pub fn augment(
    train: &Corpus,
    cfg: &AugmentConfig,
    lexicon: Option<&SubstitutionLexicon>,
) -> Result<AugmentOutcome> {
    match cfg.strategy {
        AugmentStrategy::Oversample => oversample(train, cfg),
        AugmentStrategy::LexSub => {
            let lexicon = lexicon.ok_or_else(|| {
                Error::Config("lexical substitution needs a lexicon".into())
            })?;
            lexical_substitute(train, lexicon, cfg)
        }
    }
}
