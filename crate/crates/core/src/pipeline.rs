//! Manifest-driven end-to-end run.
//!
//! Stages, in order: load, augment, project, features, score, tune,
//! reconstruct, evaluate. Every input is checked before anything is written,
//! and the output directory receives:
//!
//! | file                  | content                                        |
//! |-----------------------|------------------------------------------------|
//! | `run.json`            | manifest echo, toolkit version, input digests  |
//! | `projections.json`    | checksummed projection artifact of train       |
//! | `probabilities.jsonl` | per-token probabilities for dev and test       |
//! | `tune_trace.tsv`      | grid-search trace (when thresholds are tuned)  |
//! | `predictions.jsonl`   | reconstructed test predictions                 |
//! | `report.json`         | evaluation report                              |
//! | `report.txt`          | the same report as a table                     |
//!
//! Nothing carries a timestamp, so a rerun of the same manifest reproduces
//! every file byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{augment, AugmentConfig, AugmentStrategy, SubstitutionLexicon};
use crate::corpus::{load_corpus, Corpus, CorpusFormat, Split};
use crate::digest::file_sha256;
use crate::error::{Error, Result};
use crate::evaluate::{evaluate, EvalReport};
use crate::features::{dep_distances, load_features, DepDistanceMatrix, DEFAULT_DISTANCE_CAP};
use crate::jsonl::write_bytes;
use crate::projection::write_artifact;
use crate::reconstruct::{reconstruct_corpus, write_predictions, ReconstructionConfig, Thresholds};
use crate::scoring::{build_lexicon, check_against, load_probabilities, score_corpus, write_probabilities, ProbabilityMap};
use crate::tune::{carve_dev, grid_search, write_trace, ThresholdGrid};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DEV_FRACTION: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSection {
    pub strategy: AugmentStrategy,
    pub ratio: f64,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
}

/// A run description. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub corpus: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
    /// External probabilities; the lexicon baseline is used when absent.
    #[serde(default)]
    pub probabilities: Option<PathBuf>,
    #[serde(default)]
    pub features: Option<PathBuf>,
    /// Fixed thresholds; tuned on dev when absent.
    #[serde(default)]
    pub thresholds: Option<Thresholds>,
    #[serde(default)]
    pub grid: Option<String>,
    #[serde(default)]
    pub dev_fraction: Option<f64>,
    #[serde(default)]
    pub reconstruction: ReconstructionConfig,
    #[serde(default = "yes")]
    pub dependency_filter: bool,
    #[serde(default)]
    pub augmentation: Option<AugmentSection>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_version")]
    pub projection_version: String,
}

fn default_format() -> String {
    "canonical".into()
}

fn default_version() -> String {
    "v1".into()
}

fn yes() -> bool {
    true
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok((manifest, base))
    }

    fn inputs(&self) -> Vec<(&'static str, &Path)> {
        let mut v = vec![("corpus", self.corpus.as_path())];
        if let Some(p) = &self.probabilities {
            v.push(("probabilities", p));
        }
        if let Some(p) = &self.features {
            v.push(("features", p));
        }
        if let Some(p) = self.augmentation.as_ref().and_then(|a| a.lexicon.as_deref()) {
            v.push(("lexicon", p));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct RunRecord<'a> {
    toolkit: &'static str,
    version: &'static str,
    seed: u64,
    manifest: &'a RunManifest,
    input_digests: BTreeMap<&'static str, String>,
    projection_checksum: String,
    thresholds: Thresholds,
    dev_sentences: usize,
    test_sentences: usize,
    augmented_sentences: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub report: EvalReport,
    pub thresholds: Thresholds,
    pub output_dir: PathBuf,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn matrices_for(
    corpus: &Corpus,
    features: Option<&BTreeMap<String, crate::features::FeatureRecord>>,
) -> Result<BTreeMap<String, DepDistanceMatrix>> {
    corpus
        .sentences
        .iter()
        .map(|s| {
            let m = match features.and_then(|f| f.get(&s.id)) {
                Some(record) => record.distances(DEFAULT_DISTANCE_CAP)?,
                None => dep_distances(s, DEFAULT_DISTANCE_CAP)?,
            };
            Ok((s.id.clone(), m))
        })
        .collect()
}

/// Runs every stage. `seed` overrides the manifest seed only when the
/// manifest has none.
pub fn run_pipeline(manifest: &RunManifest, base_dir: &Path, fallback_seed: Option<u64>) -> Result<PipelineOutcome> {
    let resolve = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base_dir.join(p)
        }
    };
    let seed = manifest.seed.or(fallback_seed).unwrap_or(DEFAULT_SEED);

    // configuration checks, before any output exists
    let mut input_digests = BTreeMap::new();
    for (name, path) in manifest.inputs() {
        let path = resolve(path);
        if !path.is_file() {
            return Err(Error::Config(format!(
                "{name} file {} does not exist",
                path.display()
            )));
        }
        input_digests.insert(name, file_sha256(&path)?);
    }
    let format: CorpusFormat = manifest.format.parse()?;
    manifest.reconstruction.validate()?;
    if let Some(t) = &manifest.thresholds {
        t.validate()?;
    }
    let grid = match &manifest.grid {
        Some(spec) => ThresholdGrid::parse(spec)?,
        None => ThresholdGrid::default(),
    };
    let aug_cfg = manifest.augmentation.as_ref().map(|a| AugmentConfig {
        strategy: a.strategy,
        ratio: a.ratio,
        seed,
    });
    if let Some(cfg) = &aug_cfg {
        cfg.validate()?;
        if cfg.strategy == AugmentStrategy::LexSub
            && manifest.augmentation.as_ref().and_then(|a| a.lexicon.as_ref()).is_none()
        {
            return Err(Error::Config("lexsub augmentation needs a lexicon".into()));
        }
    }

    let corpus = stage("load", load_corpus(&resolve(&manifest.corpus), format))?;
    let corpus = if manifest.thresholds.is_none() && corpus.split(Split::Dev).next().is_none() {
        let fraction = manifest.dev_fraction.unwrap_or(DEFAULT_DEV_FRACTION);
        stage("load", carve_dev(&corpus, fraction, seed))?
    } else {
        corpus
    };
    let dev = corpus.subset(Split::Dev);
    let test = corpus.subset(Split::Test);
    if test.is_empty() {
        return Err(Error::Config("corpus has no test sentences".into()));
    }
    if manifest.thresholds.is_none() && dev.is_empty() {
        return Err(Error::Config("no dev sentences to tune thresholds on".into()));
    }
    let mut train = corpus.subset(Split::Train);
    let mut augmented = 0;
    if let Some(cfg) = &aug_cfg {
        let lexicon = match manifest.augmentation.as_ref().and_then(|a| a.lexicon.as_ref()) {
            Some(p) => Some(stage("augment", SubstitutionLexicon::load(&resolve(p)))?),
            None => None,
        };
        let outcome = stage("augment", augment(&train, cfg, lexicon.as_ref()))?;
        augmented = outcome.emitted;
        train = outcome.corpus;
    }

    let mut scored = dev.clone();
    scored.sentences.extend(test.sentences.iter().cloned());

    let features = match &manifest.features {
        Some(p) => Some(stage("features", load_features(&resolve(p), &corpus))?),
        None => None,
    };
    let matrices = if manifest.dependency_filter {
        Some(stage("features", matrices_for(&scored, features.as_ref()))?)
    } else {
        None
    };

    let probs: ProbabilityMap = match &manifest.probabilities {
        Some(p) => {
            let map = stage("score", load_probabilities(&resolve(p)))?;
            let needed: ProbabilityMap = scored
                .sentences
                .iter()
                .filter_map(|s| map.get(&s.id).map(|p| (s.id.clone(), p.clone())))
                .collect();
            stage("score", check_against(&needed, &scored))?;
            needed
        }
        None => score_corpus(&scored, &build_lexicon(&train)),
    };

    let (thresholds, trace) = match manifest.thresholds {
        Some(t) => (t, None),
        None => {
            let result = stage(
                "tune",
                grid_search(&dev, &probs, &grid, &manifest.reconstruction, matrices.as_ref()),
            )?;
            (result.best, Some(result.trace))
        }
    };

    let predictions = stage(
        "reconstruct",
        reconstruct_corpus(&test, &probs, &thresholds, &manifest.reconstruction, matrices.as_ref()),
    )?;
    let report = stage("evaluate", evaluate(&predictions, &test))?;

    let out = resolve(&manifest.output_dir);
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let artifact = stage(
        "project",
        write_artifact(&train, &manifest.projection_version, &out.join("projections.json")),
    )?;
    write_probabilities(&probs, &out.join("probabilities.jsonl"))?;
    if let Some(trace) = &trace {
        write_trace(trace, &out.join("tune_trace.tsv"))?;
    }
    write_predictions(&predictions, &out.join("predictions.jsonl"))?;
    let mut report_json = serde_json::to_vec_pretty(&report).expect("report serializes");
    report_json.push(b'\n');
    write_bytes(&out.join("report.json"), &report_json)?;
    write_bytes(&out.join("report.txt"), report.render_table().as_bytes())?;
    let record = RunRecord {
        toolkit: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        manifest,
        input_digests,
        projection_checksum: artifact.checksum,
        thresholds,
        dev_sentences: dev.len(),
        test_sentences: test.len(),
        augmented_sentences: augmented,
    };
    let mut run_json = serde_json::to_vec_pretty(&record).expect("run record serializes");
    run_json.push(b'\n');
    write_bytes(&out.join("run.json"), &run_json)?;

    Ok(PipelineOutcome {
        report,
        thresholds,
        output_dir: out,
    })
}

/// Process exit code for an error, one per failure class.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_) => 3,
        Error::Malformed { .. }
        | Error::InvalidCorpus(_)
        | Error::UnknownType(_)
        | Error::Schema(_)
        | Error::UnknownSentence(_)
        | Error::HeadCycle { .. }
        | Error::UndefinedInput(_) => 4,
        Error::Integrity { .. } => 5,
        Error::Io { .. } => 6,
        Error::Augment(_) => 7,
        Error::Stage { .. } => 1,
    }
}
