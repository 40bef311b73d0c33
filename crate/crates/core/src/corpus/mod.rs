//! Corpus model and readers.
//!
//! Every reader produces the same validated [`Corpus`]. The canonical format
//! is line-delimited JSON, one sentence per line:
//!
//! ```text
//! {"id":"s1","split":"train","tokens":[{"surface":"looked","lemma":"look","upos":"VERB","head":null},
//!   {"surface":"the","head":2},{"surface":"information","head":0},{"surface":"up","head":0}],
//!   "mwes":[{"indices":[0,3],"type":"VERB"}]}
//! ```
//!
//! `head` is a 0-based token index, or `null` for the root and for unparsed
//! tokens. MWE types are `NOUN`, `VERB`, `MOD_CONN`, `CLAUSE` and `OTHER`
//! (`MOD/CONN` is accepted on input).

mod coam;
mod streusle;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

pub use streusle::{map_streusle_type, TypeMap};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub head: Option<usize>,
    pub deprel: Option<String>,
}

impl Token {
    pub fn new(index: usize, surface: impl Into<String>) -> Self {
        Token {
            index,
            surface: surface.into(),
            lemma: None,
            upos: None,
            head: None,
            deprel: None,
        }
    }

    pub fn with_upos(mut self, upos: impl Into<String>) -> Self {
        self.upos = Some(upos.into());
        self
    }

    pub fn with_head(mut self, head: Option<usize>) -> Self {
        self.head = head;
        self
    }

    pub fn with_lemma(mut self, lemma: impl Into<String>) -> Self {
        self.lemma = Some(lemma.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MweType {
    #[serde(rename = "NOUN")]
    Noun,
    #[serde(rename = "VERB")]
    Verb,
    #[serde(rename = "MOD_CONN", alias = "MOD/CONN")]
    ModConn,
    #[serde(rename = "CLAUSE")]
    Clause,
    #[serde(rename = "OTHER")]
    Other,
}

impl MweType {
    pub const ALL: [MweType; 5] = [
        MweType::Noun,
        MweType::Verb,
        MweType::ModConn,
        MweType::Clause,
        MweType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MweType::Noun => "NOUN",
            MweType::Verb => "VERB",
            MweType::ModConn => "MOD_CONN",
            MweType::Clause => "CLAUSE",
            MweType::Other => "OTHER",
        }
    }
}

impl fmt::Display for MweType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MweType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NOUN" => Ok(MweType::Noun),
            "VERB" => Ok(MweType::Verb),
            "MOD_CONN" | "MOD/CONN" => Ok(MweType::ModConn),
            "CLAUSE" => Ok(MweType::Clause),
            "OTHER" => Ok(MweType::Other),
            other => Err(Error::UnknownType(other.to_string())),
        }
    }
}

/// A gold MWE: a strictly increasing set of at least two token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MweAnnotation {
    token_indices: Vec<usize>,
    mwe_type: MweType,
}

impl MweAnnotation {
    pub fn new(token_indices: Vec<usize>, mwe_type: MweType) -> Result<Self> {
        check_index_set(&token_indices).map_err(Error::InvalidCorpus)?;
        Ok(MweAnnotation {
            token_indices,
            mwe_type,
        })
    }

    pub fn token_indices(&self) -> &[usize] {
        &self.token_indices
    }

    pub fn mwe_type(&self) -> MweType {
        self.mwe_type
    }

    pub fn first(&self) -> usize {
        self.token_indices[0]
    }

    pub fn last(&self) -> usize {
        self.token_indices[self.token_indices.len() - 1]
    }

    pub fn width(&self) -> usize {
        self.last() - self.first() + 1
    }

    pub fn is_continuous(&self) -> bool {
        is_contiguous(&self.token_indices)
    }
}

fn check_index_set(indices: &[usize]) -> std::result::Result<(), String> {
    if indices.len() < 2 {
        return Err(format!(
            "MWE must have at least 2 tokens, got {:?}",
            indices
        ));
    }
    if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
        let kind = if w[0] == w[1] { "duplicate" } else { "unsorted" };
        return Err(format!(
            "{kind} index in MWE {:?}: indices must be strictly increasing",
            indices
        ));
    }
    Ok(())
}

/// True when the sorted index set forms one contiguous integer range.
pub fn is_contiguous(indices: &[usize]) -> bool {
    match (indices.first(), indices.last()) {
        (Some(first), Some(last)) => last - first + 1 == indices.len(),
        _ => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "development" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub mwes: Vec<MweAnnotation>,
    pub split: Split,
}

impl Sentence {
    /// Builds a sentence from bare surfaces; tokens carry no annotation.
    pub fn from_surfaces(id: impl Into<String>, split: Split, surfaces: &[&str]) -> Self {
        Sentence {
            id: id.into(),
            tokens: surfaces
                .iter()
                .enumerate()
                .map(|(i, s)| Token::new(i, *s))
                .collect(),
            mwes: Vec::new(),
            split,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Adds a gold MWE after checking it against this sentence.
    pub fn push_mwe(&mut self, mwe: MweAnnotation) -> Result<()> {
        self.check_mwe(&mwe).map_err(Error::InvalidCorpus)?;
        self.mwes.push(mwe);
        Ok(())
    }

    fn check_mwe(&self, mwe: &MweAnnotation) -> std::result::Result<(), String> {
        if mwe.last() >= self.tokens.len() {
            return Err(format!(
                "sentence `{}`: MWE index {} out of range for {} tokens",
                self.id,
                mwe.last(),
                self.tokens.len()
            ));
        }
        if self
            .mwes
            .iter()
            .any(|m| m.token_indices == mwe.token_indices)
        {
            return Err(format!(
                "sentence `{}`: duplicate MWE {:?}",
                self.id, mwe.token_indices
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_inner().map_err(Error::InvalidCorpus)
    }

    fn validate_inner(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        for (i, token) in self.tokens.iter().enumerate() {
            if token.index != i {
                return Err(format!(
                    "sentence `{}`: token at position {i} has index {}",
                    self.id, token.index
                ));
            }
            match token.head {
                Some(h) if h >= n => {
                    return Err(format!(
                        "sentence `{}`: token {i} has head {h} out of range for {n} tokens",
                        self.id
                    ))
                }
                Some(h) if h == i => {
                    return Err(format!(
                        "sentence `{}`: token {i} is its own head",
                        self.id
                    ))
                }
                _ => {}
            }
        }
        let mut seen = HashSet::new();
        for mwe in &self.mwes {
            check_index_set(&mwe.token_indices)?;
            if mwe.last() >= n {
                return Err(format!(
                    "sentence `{}`: MWE index {} out of range for {n} tokens",
                    self.id,
                    mwe.last()
                ));
            }
            if !seen.insert(mwe.token_indices.as_slice()) {
                return Err(format!(
                    "sentence `{}`: duplicate MWE {:?}",
                    self.id, mwe.token_indices
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, sentences: Vec<Sentence>) -> Result<Self> {
        let corpus = Corpus {
            name: name.into(),
            sentences,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for sentence in &self.sentences {
            sentence.validate()?;
            if !ids.insert(sentence.id.as_str()) {
                return Err(Error::InvalidCorpus(format!(
                    "duplicate sentence id `{}`",
                    sentence.id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sentence> {
        self.sentences.iter().filter(move |s| s.split == split)
    }

    /// A new corpus holding only the sentences of one split.
    pub fn subset(&self, split: Split) -> Corpus {
        Corpus {
            name: format!("{}.{split}", self.name),
            sentences: self.split(split).cloned().collect(),
        }
    }

    pub fn mwe_count(&self) -> usize {
        self.sentences.iter().map(|s| s.mwes.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Canonical,
    Coam,
    Streusle,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "canonical" => Ok(CorpusFormat::Canonical),
            "coam" => Ok(CorpusFormat::Coam),
            "streusle" => Ok(CorpusFormat::Streusle),
            other => Err(Error::Config(format!("unknown corpus format `{other}`"))),
        }
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    load_corpus_with(path, format, &TypeMap::default())
}

/// Like [`load_corpus`], with an explicit STREUSLE type table.
pub fn load_corpus_with(path: &Path, format: CorpusFormat, types: &TypeMap) -> Result<Corpus> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    let sentences = match format {
        CorpusFormat::Canonical => read_canonical(path)?,
        CorpusFormat::Coam => coam::read(path)?,
        CorpusFormat::Streusle => streusle::read(path, types)?,
    };
    let mut ids = HashSet::new();
    for (_, sentence) in &sentences {
        if !ids.insert(sentence.id.as_str()) {
            return Err(Error::InvalidCorpus(format!(
                "duplicate sentence id `{}`",
                sentence.id
            )));
        }
    }
    Ok(Corpus {
        name,
        sentences: sentences.into_iter().map(|(_, s)| s).collect(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CanonicalRecord {
    id: String,
    split: Split,
    tokens: Vec<CanonicalToken>,
    #[serde(default)]
    mwes: Vec<CanonicalMwe>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CanonicalToken {
    surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upos: Option<String>,
    #[serde(default)]
    head: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deprel: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CanonicalMwe {
    indices: Vec<usize>,
    #[serde(rename = "type")]
    mwe_type: String,
}

fn read_canonical(path: &Path) -> Result<Vec<(usize, Sentence)>> {
    jsonl::read_records::<CanonicalRecord>(path)?
        .into_iter()
        .map(|(line, record)| {
            let tokens = record
                .tokens
                .into_iter()
                .enumerate()
                .map(|(index, t)| Token {
                    index,
                    surface: t.surface,
                    lemma: t.lemma,
                    upos: t.upos,
                    head: t.head,
                    deprel: t.deprel,
                })
                .collect();
            let mwes = record
                .mwes
                .into_iter()
                .map(|m| Ok((m.indices, m.mwe_type.parse::<MweType>()?)))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::malformed(path, line, e.to_string()))?;
            let sentence = assemble(record.id, record.split, tokens, mwes)
                .map_err(|msg| Error::malformed(path, line, msg))?;
            Ok((line, sentence))
        })
        .collect()
}

/// Shared by the readers: attaches MWEs to tokens and runs full validation.
pub(crate) fn assemble(
    id: String,
    split: Split,
    tokens: Vec<Token>,
    mwes: Vec<(Vec<usize>, MweType)>,
) -> std::result::Result<Sentence, String> {
    let mut sentence = Sentence {
        id,
        tokens,
        mwes: Vec::with_capacity(mwes.len()),
        split,
    };
    for (indices, mwe_type) in mwes {
        check_index_set(&indices)?;
        sentence.mwes.push(MweAnnotation {
            token_indices: indices,
            mwe_type,
        });
    }
    sentence.validate_inner()?;
    Ok(sentence)
}

fn to_record(sentence: &Sentence) -> CanonicalRecord {
    CanonicalRecord {
        id: sentence.id.clone(),
        split: sentence.split,
        tokens: sentence
            .tokens
            .iter()
            .map(|t| CanonicalToken {
                surface: t.surface.clone(),
                lemma: t.lemma.clone(),
                upos: t.upos.clone(),
                head: t.head,
                deprel: t.deprel.clone(),
            })
            .collect(),
        mwes: sentence
            .mwes
            .iter()
            .map(|m| CanonicalMwe {
                indices: m.token_indices.clone(),
                mwe_type: m.mwe_type.as_str().to_string(),
            })
            .collect(),
    }
}

pub fn corpus_to_bytes(corpus: &Corpus) -> Result<Vec<u8>> {
    let records: Vec<_> = corpus.sentences.iter().map(to_record).collect();
    jsonl::to_bytes(&records)
}

/// Writes the canonical line-delimited format.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    jsonl::write_bytes(path, &corpus_to_bytes(corpus)?)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SplitCounts {
    pub sentences: usize,
    pub mwes: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub sentences: usize,
    pub mwes: usize,
    pub per_split: BTreeMap<Split, SplitCounts>,
    pub types: BTreeMap<MweType, usize>,
    pub continuous: usize,
    pub discontinuous: usize,
    /// Keyed by width, i.e. last index - first index + 1.
    pub span_lengths: BTreeMap<usize, usize>,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for sentence in &corpus.sentences {
        stats.sentences += 1;
        let split = stats.per_split.entry(sentence.split).or_default();
        split.sentences += 1;
        split.mwes += sentence.mwes.len();
        for mwe in &sentence.mwes {
            stats.mwes += 1;
            *stats.types.entry(mwe.mwe_type).or_default() += 1;
            if mwe.is_continuous() {
                stats.continuous += 1;
            } else {
                stats.discontinuous += 1;
            }
            *stats.span_lengths.entry(mwe.width()).or_default() += 1;
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_looked_up_example() {
        let f = write_tmp(
            r#"{"id":"s1","split":"train","tokens":[{"surface":"looked"},{"surface":"the"},{"surface":"information"},{"surface":"up"}],"mwes":[{"indices":[0,3],"type":"VERB"}]}"#,
        );
        let corpus = load_corpus(f.path(), CorpusFormat::Canonical).unwrap();
        assert_eq!(corpus.len(), 1);
        let s = &corpus.sentences[0];
        assert_eq!(s.mwes.len(), 1);
        assert_eq!(s.mwes[0].token_indices(), &[0, 3]);
        assert_eq!(s.mwes[0].mwe_type(), MweType::Verb);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let f = write_tmp("");
        let corpus = load_corpus(f.path(), CorpusFormat::Canonical).unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus_stats(&corpus), CorpusStats::default());
    }

    #[test]
    fn duplicate_index_is_rejected_with_line() {
        let f = write_tmp(concat!(
            "\n",
            r#"{"id":"a","split":"test","tokens":[{"surface":"x"},{"surface":"y"},{"surface":"z"}],"mwes":[{"indices":[2,2],"type":"NOUN"}]}"#
        ));
        match load_corpus(f.path(), CorpusFormat::Canonical) {
            Err(Error::Malformed { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn single_token_mwe_is_rejected() {
        let f = write_tmp(
            r#"{"id":"a","split":"test","tokens":[{"surface":"x"},{"surface":"y"}],"mwes":[{"indices":[1],"type":"NOUN"}]}"#,
        );
        assert!(matches!(
            load_corpus(f.path(), CorpusFormat::Canonical),
            Err(Error::Malformed { .. })
        ));
    }

    #[test]
    fn out_of_range_and_bad_head_are_rejected() {
        let f = write_tmp(
            r#"{"id":"a","split":"test","tokens":[{"surface":"x"},{"surface":"y"}],"mwes":[{"indices":[0,2],"type":"NOUN"}]}"#,
        );
        assert!(load_corpus(f.path(), CorpusFormat::Canonical).is_err());
        let f = write_tmp(
            r#"{"id":"a","split":"test","tokens":[{"surface":"x","head":0},{"surface":"y"}]}"#,
        );
        let err = load_corpus(f.path(), CorpusFormat::Canonical).unwrap_err();
        assert!(err.to_string().contains("own head"), "{err}");
    }

    #[test]
    fn duplicate_sentence_id_and_unknown_type() {
        let rec = r#"{"id":"a","split":"test","tokens":[{"surface":"x"}]}"#;
        let f = write_tmp(&format!("{rec}\n{rec}\n"));
        assert!(matches!(
            load_corpus(f.path(), CorpusFormat::Canonical),
            Err(Error::InvalidCorpus(_))
        ));
        let f = write_tmp(
            r#"{"id":"a","split":"test","tokens":[{"surface":"x"},{"surface":"y"}],"mwes":[{"indices":[0,1],"type":"IDIOM"}]}"#,
        );
        let err = load_corpus(f.path(), CorpusFormat::Canonical).unwrap_err();
        assert!(err.to_string().contains("IDIOM"));
    }

    #[test]
    fn overlapping_gold_mwes_are_permitted() {
        let f = write_tmp(
            r#"{"id":"a","split":"test","tokens":[{"surface":"x"},{"surface":"y"},{"surface":"z"}],"mwes":[{"indices":[0,1],"type":"NOUN"},{"indices":[1,2],"type":"MOD/CONN"}]}"#,
        );
        let corpus = load_corpus(f.path(), CorpusFormat::Canonical).unwrap();
        assert_eq!(corpus.sentences[0].mwes[1].mwe_type(), MweType::ModConn);
    }

    #[test]
    fn stats_count_continuity_and_width() {
        let mut s = Sentence::from_surfaces("s", Split::Train, &["looked", "the", "information", "up"]);
        s.push_mwe(MweAnnotation::new(vec![0, 3], MweType::Verb).unwrap())
            .unwrap();
        let mut t = Sentence::from_surfaces("t", Split::Test, &["a", "b", "c"]);
        t.push_mwe(MweAnnotation::new(vec![1, 2], MweType::Noun).unwrap())
            .unwrap();
        let corpus = Corpus::new("c", vec![s, t]).unwrap();
        let stats = corpus_stats(&corpus);
        assert_eq!(stats.discontinuous, 1);
        assert_eq!(stats.continuous, 1);
        assert_eq!(stats.span_lengths.get(&4), Some(&1));
        assert_eq!(stats.span_lengths.get(&2), Some(&1));
        assert_eq!(stats.per_split[&Split::Train].mwes, 1);
        assert_eq!(stats.types[&MweType::Noun], 1);
    }

    #[test]
    fn push_mwe_rejects_duplicates() {
        let mut s = Sentence::from_surfaces("s", Split::Train, &["a", "b"]);
        let m = MweAnnotation::new(vec![0, 1], MweType::Noun).unwrap();
        s.push_mwe(m.clone()).unwrap();
        assert!(s.push_mwe(m).is_err());
    }
}
