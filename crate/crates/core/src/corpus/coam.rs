//! CoAM-style adapter.
//!
//! One JSON object per line with parallel token arrays:
//!
//! ```text
//! {"sent_id":"coam-17","split":"test","tokens":["In","fact",",","prices","rose"],
//!  "lemmas":["in","fact",",","price","rise"],"upos":["ADP","NOUN","PUNCT","NOUN","VERB"],
//!  "heads":[1,4,4,4,null],"mwes":[{"token_ids":[0,1],"type":"MOD/CONN"}]}
//! ```
//!
//! `lemmas`, `upos`, `heads` and `deprels` are optional; when present they
//! must have one entry per token. `split` defaults to `train`.

use std::path::Path;

use serde::Deserialize;

use super::{assemble, MweType, Sentence, Split, Token};
use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Deserialize)]
struct CoamRecord {
    sent_id: String,
    #[serde(default)]
    split: Option<String>,
    tokens: Vec<String>,
    #[serde(default)]
    lemmas: Option<Vec<String>>,
    #[serde(default)]
    upos: Option<Vec<String>>,
    #[serde(default)]
    heads: Option<Vec<Option<usize>>>,
    #[serde(default)]
    deprels: Option<Vec<String>>,
    #[serde(default)]
    mwes: Vec<CoamMwe>,
}

#[derive(Debug, Deserialize)]
struct CoamMwe {
    token_ids: Vec<usize>,
    #[serde(rename = "type")]
    mwe_type: String,
}

fn column<T: Clone>(
    name: &str,
    values: &Option<Vec<T>>,
    n: usize,
) -> std::result::Result<Vec<Option<T>>, String> {
    match values {
        None => Ok(vec![None; n]),
        Some(v) if v.len() == n => Ok(v.iter().cloned().map(Some).collect()),
        Some(v) => Err(format!("`{name}` has {} entries for {n} tokens", v.len())),
    }
}

pub(super) fn read(path: &Path) -> Result<Vec<(usize, Sentence)>> {
    jsonl::read_records::<CoamRecord>(path)?
        .into_iter()
        .map(|(line, record)| {
            convert(record)
                .map(|s| (line, s))
                .map_err(|msg| Error::malformed(path, line, msg))
        })
        .collect()
}

fn convert(record: CoamRecord) -> std::result::Result<Sentence, String> {
    let n = record.tokens.len();
    let split = match &record.split {
        Some(s) => s.parse::<Split>().map_err(|e| e.to_string())?,
        None => Split::Train,
    };
    let lemmas = column("lemmas", &record.lemmas, n)?;
    let upos = column("upos", &record.upos, n)?;
    let deprels = column("deprels", &record.deprels, n)?;
    let heads: Vec<Option<usize>> = match &record.heads {
        None => vec![None; n],
        Some(h) if h.len() == n => h.clone(),
        Some(h) => return Err(format!("`heads` has {} entries for {n} tokens", h.len())),
    };
    let tokens = record
        .tokens
        .into_iter()
        .enumerate()
        .map(|(i, surface)| Token {
            index: i,
            surface,
            lemma: lemmas[i].clone(),
            upos: upos[i].clone(),
            head: heads[i],
            deprel: deprels[i].clone(),
        })
        .collect();
    let mwes = record
        .mwes
        .into_iter()
        .map(|m| {
            let ty = m.mwe_type.parse::<MweType>().map_err(|e| e.to_string())?;
            Ok((m.token_ids, ty))
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    assemble(record.sent_id, split, tokens, mwes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_corpus, CorpusFormat};
    use std::io::Write;

    #[test]
    fn reads_parallel_arrays() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            r#"{{"sent_id":"coam-17","split":"test","tokens":["In","fact",",","prices","rose"],"upos":["ADP","NOUN","PUNCT","NOUN","VERB"],"heads":[1,4,4,4,null],"mwes":[{{"token_ids":[0,1],"type":"MOD/CONN"}}]}}"#
        )
        .unwrap();
        let corpus = load_corpus(f.path(), CorpusFormat::Coam).unwrap();
        let s = &corpus.sentences[0];
        assert_eq!(s.split, Split::Test);
        assert_eq!(s.tokens[0].head, Some(1));
        assert_eq!(s.tokens[4].head, None);
        assert_eq!(s.tokens[3].upos.as_deref(), Some("NOUN"));
        assert_eq!(s.mwes[0].mwe_type(), MweType::ModConn);
    }

    #[test]
    fn column_length_mismatch_is_reported() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"sent_id":"x","tokens":["a","b"],"heads":[null]}}"#).unwrap();
        let err = load_corpus(f.path(), CorpusFormat::Coam).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }), "{err}");
    }
}
