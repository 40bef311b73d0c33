//! STREUSLE adapter: reads `.conllulex` files and harmonizes categories.
//!
//! Only strong MWEs (the `SMWE` column, `group:position`) are read. The MWE
//! label is the `LEXCAT` value found on the group's first token, mapped
//! through a [`TypeMap`]. Sentence ids come from `# sent_id = ...` comments;
//! the split from a `# split = ...` comment, else from the file name
//! (`train`/`dev`/`test`), else `train`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use super::{assemble, MweType, Sentence, Split, Token};
use crate::error::{Error, Result};

const DEFAULT_TABLE: &str = include_str!("../../data/streusle_types.tsv");

// conllulex column positions
const ID: usize = 0;
const FORM: usize = 1;
const LEMMA: usize = 2;
const UPOS: usize = 3;
const HEAD: usize = 6;
const DEPREL: usize = 7;
const SMWE: usize = 10;
const LEXCAT: usize = 11;

/// Editable mapping from fine-grained STREUSLE labels to [`MweType`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMap {
    entries: HashMap<String, MweType>,
}

impl TypeMap {
    /// Parses `label<TAB>TYPE` lines. `CLAUSE` is refused: no STREUSLE
    /// category corresponds to it.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, ty) = line
                .split_once('\t')
                .ok_or_else(|| Error::Config(format!("type map line {}: expected label<TAB>type", i + 1)))?;
            let ty: MweType = ty.trim().parse()?;
            if ty == MweType::Clause {
                return Err(Error::Config(format!(
                    "type map line {}: `{label}` cannot map to CLAUSE",
                    i + 1
                )));
            }
            entries.insert(label.trim().to_string(), ty);
        }
        Ok(TypeMap { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }

    pub fn map(&self, fine_label: &str) -> Result<MweType> {
        self.entries
            .get(fine_label)
            .copied()
            .ok_or_else(|| Error::UnknownType(fine_label.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Default for TypeMap {
    fn default() -> Self {
        static DEFAULT: OnceLock<TypeMap> = OnceLock::new();
        DEFAULT
            .get_or_init(|| TypeMap::from_tsv(DEFAULT_TABLE).expect("bundled type table is valid"))
            .clone()
    }
}

/// Maps a STREUSLE category through the bundled table.
pub fn map_streusle_type(fine_label: &str) -> Result<MweType> {
    TypeMap::default().map(fine_label)
}

fn split_from_name(path: &Path) -> Split {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    if name.contains("test") {
        Split::Test
    } else if name.contains("dev") {
        Split::Dev
    } else {
        Split::Train
    }
}

#[derive(Default)]
struct Block {
    first_line: usize,
    sent_id: Option<String>,
    split: Option<Split>,
    rows: Vec<(usize, Vec<String>)>,
}

pub(super) fn read(path: &Path, types: &TypeMap) -> Result<Vec<(usize, Sentence)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let default_split = split_from_name(path);
    let mut sentences = Vec::new();
    let mut block = Block::default();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !block.rows.is_empty() {
                let b = std::mem::take(&mut block);
                sentences.push(finish(path, b, default_split, types, sentences.len())?);
            }
            block = Block::default();
            continue;
        }
        if block.first_line == 0 {
            block.first_line = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => block.sent_id = Some(value.trim().to_string()),
                    "split" => {
                        block.split = Some(
                            value
                                .trim()
                                .parse()
                                .map_err(|e: Error| Error::malformed(path, line_no, e.to_string()))?,
                        )
                    }
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(str::to_string).collect();
        if cols.len() <= LEXCAT {
            return Err(Error::malformed(
                path,
                line_no,
                format!("expected at least {} columns, found {}", LEXCAT + 1, cols.len()),
            ));
        }
        // multiword-token ranges and empty nodes
        if cols[ID].contains('-') || cols[ID].contains('.') {
            continue;
        }
        block.rows.push((line_no, cols));
    }
    if !block.rows.is_empty() {
        let n = sentences.len();
        sentences.push(finish(path, block, default_split, types, n)?);
    }
    Ok(sentences)
}

fn opt(value: &str) -> Option<String> {
    (value != "_").then(|| value.to_string())
}

type Group = (Vec<(usize, usize)>, Option<(usize, String)>);

fn finish(
    path: &Path,
    block: Block,
    default_split: Split,
    types: &TypeMap,
    ordinal: usize,
) -> Result<(usize, Sentence)> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let id = block
        .sent_id
        .unwrap_or_else(|| format!("{stem}-{}", ordinal + 1));
    let mut tokens = Vec::with_capacity(block.rows.len());
    // SMWE group -> ((member ordinal, position) pairs, (line, LEXCAT) of member 1)
    let mut groups: BTreeMap<usize, Group> = BTreeMap::new();

    for (position, (line_no, cols)) in block.rows.iter().enumerate() {
        let bad = |msg: String| Error::malformed(path, *line_no, msg);
        let id_num: usize = cols[ID]
            .parse()
            .map_err(|_| bad(format!("bad token id `{}`", cols[ID])))?;
        if id_num != position + 1 {
            return Err(bad(format!(
                "token id {id_num} out of sequence (expected {})",
                position + 1
            )));
        }
        let head = match cols[HEAD].as_str() {
            "_" | "0" => None,
            h => Some(
                h.parse::<usize>()
                    .map_err(|_| bad(format!("bad head `{h}`")))?
                    - 1,
            ),
        };
        tokens.push(Token {
            index: position,
            surface: cols[FORM].clone(),
            lemma: opt(&cols[LEMMA]),
            upos: opt(&cols[UPOS]),
            head,
            deprel: opt(&cols[DEPREL]),
        });
        if cols[SMWE] != "_" {
            let (group, member) = cols[SMWE]
                .split_once(':')
                .and_then(|(g, m)| Some((g.parse::<usize>().ok()?, m.parse::<usize>().ok()?)))
                .ok_or_else(|| bad(format!("bad SMWE value `{}`", cols[SMWE])))?;
            let entry = groups.entry(group).or_default();
            entry.0.push((member, position));
            if member == 1 && cols[LEXCAT] != "_" {
                entry.1 = Some((*line_no, cols[LEXCAT].clone()));
            }
        }
    }

    let mut mwes = Vec::with_capacity(groups.len());
    for (group, (mut members, label)) in groups {
        members.sort_unstable();
        let (label_line, label) = label.ok_or_else(|| {
            Error::malformed(
                path,
                block.first_line,
                format!("strong MWE group {group} has no LEXCAT on its first token"),
            )
        })?;
        let ty = types
            .map(&label)
            .map_err(|e| Error::malformed(path, label_line, e.to_string()))?;
        let mut indices: Vec<usize> = members.into_iter().map(|(_, pos)| pos).collect();
        indices.sort_unstable();
        mwes.push((indices, ty));
    }
    let split = block.split.unwrap_or(default_split);
    let sentence = assemble(id, split, tokens, mwes)
        .map_err(|msg| Error::malformed(path, block.first_line, msg))?;
    Ok((block.first_line, sentence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_corpus, CorpusFormat};
    use std::io::Write;

    #[test]
    fn family_labels() {
        assert_eq!(map_streusle_type("verb-particle/construction").unwrap(), MweType::Verb);
        assert_eq!(map_streusle_type("noun/compound").unwrap(), MweType::Noun);
        assert_eq!(map_streusle_type("PP").unwrap(), MweType::ModConn);
        assert_eq!(map_streusle_type("DISC").unwrap(), MweType::Other);
    }

    #[test]
    fn unknown_label_is_an_error() {
        assert!(matches!(
            map_streusle_type("xyz-unknown"),
            Err(Error::UnknownType(l)) if l == "xyz-unknown"
        ));
    }

    #[test]
    fn clause_is_never_produced() {
        let map = TypeMap::default();
        assert!(map.entries.values().all(|t| *t != MweType::Clause));
        assert!(TypeMap::from_tsv("foo\tCLAUSE\n").is_err());
    }

    #[test]
    fn custom_table_overrides() {
        let map = TypeMap::from_tsv("# c\nfoo/bar\tNOUN\n").unwrap();
        assert_eq!(map.map("foo/bar").unwrap(), MweType::Noun);
        assert!(map.map("V").is_err());
    }

    fn row(id: usize, form: &str, upos: &str, head: usize, smwe: &str, lexcat: &str) -> String {
        format!(
            "{id}\t{form}\t{}\t{upos}\t_\t_\t{head}\tdep\t_\t_\t{smwe}\t{lexcat}\t_\t_\t_\t_\t_\t_\t_",
            form.to_lowercase()
        )
    }

    #[test]
    fn reads_conllulex_with_gapped_mwe() {
        let mut f = tempfile::Builder::new()
            .suffix(".test.conllulex")
            .tempfile()
            .unwrap();
        let lines = [
            "# sent_id = reviews-001".to_string(),
            row(1, "Looked", "VERB", 0, "1:1", "V.VPC.full"),
            row(2, "the", "DET", 3, "_", "DET"),
            row(3, "information", "NOUN", 1, "_", "N"),
            row(4, "up", "ADP", 1, "1:2", "_"),
            String::new(),
            "# sent_id = reviews-002".to_string(),
            "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\t_\t_".to_string(),
            row(1, "do", "AUX", 3, "_", "AUX"),
            row(2, "n't", "PART", 3, "_", "ADV"),
            row(3, "go", "VERB", 0, "_", "V"),
        ];
        writeln!(f, "{}", lines.join("\n")).unwrap();
        let corpus = load_corpus(f.path(), CorpusFormat::Streusle).unwrap();
        assert_eq!(corpus.len(), 2);
        let s = &corpus.sentences[0];
        assert_eq!(s.id, "reviews-001");
        assert_eq!(s.split, Split::Test);
        assert_eq!(s.tokens[0].head, None);
        assert_eq!(s.tokens[2].head, Some(0));
        assert_eq!(s.mwes.len(), 1);
        assert_eq!(s.mwes[0].token_indices(), &[0, 3]);
        assert_eq!(s.mwes[0].mwe_type(), MweType::Verb);
        assert_eq!(corpus.sentences[1].len(), 3);
    }

    #[test]
    fn unknown_lexcat_reports_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let lines = [
            row(1, "a", "X", 0, "1:1", "WEIRD"),
            row(2, "b", "X", 1, "1:2", "_"),
        ];
        writeln!(f, "{}", lines.join("\n")).unwrap();
        let err = load_corpus(f.path(), CorpusFormat::Streusle).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }), "{err}");
        assert!(err.to_string().contains("WEIRD"));
    }
}
