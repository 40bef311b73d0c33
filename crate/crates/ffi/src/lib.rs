//! C ABI for spanforge.
//!
//! Objects cross the boundary as opaque handles (`SfCorpus`,
//! `SfProbabilities`, `SfPredictions`) created by `*_load` or producer
//! functions and released with the matching `*_free`. Every fallible function
//! returns an [`SfStatus`]; on failure the message is available from
//! [`sf_last_error`] on the same thread until the next failing call.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access the function
//! performs. Strings are NUL-terminated UTF-8. Handles must not be used after
//! they are freed. Null handles and null strings are reported as
//! `SF_STATUS_INVALID_ARGUMENT`, never dereferenced.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use spanforge::corpus::{load_corpus, Corpus, CorpusFormat, Split};
use spanforge::features::{dep_distances, DEFAULT_DISTANCE_CAP};
use spanforge::projection::{read_artifact, write_artifact};
use spanforge::reconstruct::{reconstruct_corpus, write_predictions, SentencePredictions};
use spanforge::scoring::{build_lexicon, check_against, load_probabilities, score_corpus, ProbabilityMap};
use spanforge::tune::{grid_search, ThresholdGrid};
use spanforge::{Error, OverlapPolicy, ReconstructionConfig, Thresholds};

/// Result codes. The non-zero values match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    Internal = 1,
    InvalidArgument = 2,
    Config = 3,
    InputData = 4,
    Integrity = 5,
    Io = 6,
    Augment = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfOverlapPolicy {
    Greedy = 0,
    AllowAll = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfThresholds {
    pub tau_start: f64,
    pub tau_end: f64,
    pub tau_inside: f64,
}

/// Exact-match counts and micro scores in percent, rounded to one decimal.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SfScores {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub struct SfCorpus(Corpus);

pub struct SfProbabilities(ProbabilityMap);

pub struct SfPredictions(Vec<SentencePredictions>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SfStatus {
    match spanforge::pipeline::exit_code(err) {
        3 => SfStatus::Config,
        4 => SfStatus::InputData,
        5 => SfStatus::Integrity,
        6 => SfStatus::Io,
        7 => SfStatus::Augment,
        _ => SfStatus::Internal,
    }
}

enum Failure {
    Arg(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg.to_string());
            SfStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside spanforge".into());
            SfStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> Result<PathBuf, Failure> {
    str_arg(p, what).map(PathBuf::from)
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Arg(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Arg("string argument is not valid UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Arg(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a canonical JSONL corpus.
///
/// # Safety
/// `path` is a valid C string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_corpus_load(path: *const c_char, out: *mut *mut SfCorpus) -> SfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Arg("out is null"));
        }
        let path = path_arg(path, "path is null")?;
        emit(out, SfCorpus(load_corpus(&path, CorpusFormat::Canonical)?))
    })
}

/// # Safety
/// `corpus` is null or a handle from `sf_corpus_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_corpus_free(corpus: *mut SfCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of sentences, 0 for a null handle.
///
/// # Safety
/// `corpus` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_corpus_len(corpus: *const SfCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// Number of gold MWEs, 0 for a null handle.
///
/// # Safety
/// `corpus` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_corpus_mwe_count(corpus: *const SfCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.mwe_count())
}

/// Loads a token probability file.
///
/// # Safety
/// `path` is a valid C string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_probabilities_load(
    path: *const c_char,
    out: *mut *mut SfProbabilities,
) -> SfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Arg("out is null"));
        }
        let path = path_arg(path, "path is null")?;
        emit(out, SfProbabilities(load_probabilities(&path)?))
    })
}

/// Lexicon-lookup baseline: builds a lexicon from the TRAIN sentences of
/// `train` and scores every sentence of `target`.
///
/// # Safety
/// Handles are live; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_probabilities_baseline(
    train: *const SfCorpus,
    target: *const SfCorpus,
    out: *mut *mut SfProbabilities,
) -> SfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Arg("out is null"));
        }
        let train = handle(train, "train is null")?;
        let target = handle(target, "target is null")?;
        let lexicon = build_lexicon(&train.0.subset(Split::Train));
        emit(out, SfProbabilities(score_corpus(&target.0, &lexicon)))
    })
}

/// # Safety
/// `probs` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_probabilities_free(probs: *mut SfProbabilities) {
    if !probs.is_null() {
        drop(Box::from_raw(probs));
    }
}

fn config_for(policy: SfOverlapPolicy) -> ReconstructionConfig {
    ReconstructionConfig::default().with_policy(match policy {
        SfOverlapPolicy::Greedy => OverlapPolicy::GreedyNonOverlap,
        SfOverlapPolicy::AllowAll => OverlapPolicy::AllowAll,
    })
}

fn scored_part(corpus: &Corpus, probs: &ProbabilityMap) -> Result<Corpus, Error> {
    check_against(probs, corpus)?;
    let mut part = corpus.clone();
    part.sentences.retain(|s| probs.contains_key(&s.id));
    Ok(part)
}

fn matrices(
    corpus: &Corpus,
    dep_filter: bool,
) -> Result<Option<std::collections::BTreeMap<String, spanforge::features::DepDistanceMatrix>>, Error> {
    if !dep_filter {
        return Ok(None);
    }
    corpus
        .sentences
        .iter()
        .map(|s| Ok((s.id.clone(), dep_distances(s, DEFAULT_DISTANCE_CAP)?)))
        .collect::<Result<_, Error>>()
        .map(Some)
}

/// Reconstructs MWEs for every corpus sentence that has probabilities. With
/// `dep_filter`, discontinuous candidates are checked against dependency
/// distances computed from the corpus heads.
///
/// # Safety
/// Handles are live; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_reconstruct(
    corpus: *const SfCorpus,
    probs: *const SfProbabilities,
    thresholds: SfThresholds,
    policy: SfOverlapPolicy,
    dep_filter: bool,
    out: *mut *mut SfPredictions,
) -> SfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Arg("out is null"));
        }
        let corpus = handle(corpus, "corpus is null")?;
        let probs = handle(probs, "probabilities are null")?;
        let t = Thresholds::new(thresholds.tau_start, thresholds.tau_end, thresholds.tau_inside)?;
        let part = scored_part(&corpus.0, &probs.0)?;
        let m = matrices(&part, dep_filter)?;
        let predictions = reconstruct_corpus(&part, &probs.0, &t, &config_for(policy), m.as_ref())?;
        emit(out, SfPredictions(predictions))
    })
}

/// Grid search over `lo:hi:step` on the DEV sentences of `corpus`.
///
/// # Safety
/// Handles are live; `grid` is a valid C string; `best` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_tune(
    corpus: *const SfCorpus,
    probs: *const SfProbabilities,
    grid: *const c_char,
    policy: SfOverlapPolicy,
    dep_filter: bool,
    best: *mut SfThresholds,
) -> SfStatus {
    guard(|| {
        if best.is_null() {
            return Err(Failure::Arg("best is null"));
        }
        let corpus = handle(corpus, "corpus is null")?;
        let probs = handle(probs, "probabilities are null")?;
        let grid = ThresholdGrid::parse(str_arg(grid, "grid is null")?)?;
        let dev = corpus.0.subset(Split::Dev);
        if dev.is_empty() {
            return Err(Error::Config("corpus has no dev sentences".into()).into());
        }
        let m = matrices(&dev, dep_filter)?;
        let result = grid_search(&dev, &probs.0, &grid, &config_for(policy), m.as_ref())?;
        *best = SfThresholds {
            tau_start: result.best.tau_start,
            tau_end: result.best.tau_end,
            tau_inside: result.best.tau_inside,
        };
        Ok(())
    })
}

/// Total number of predicted MWEs, 0 for a null handle.
///
/// # Safety
/// `predictions` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_predictions_count(predictions: *const SfPredictions) -> usize {
    predictions
        .as_ref()
        .map_or(0, |p| p.0.iter().map(|s| s.mwes.len()).sum())
}

/// # Safety
/// `predictions` is a live handle; `path` is a valid C string.
#[no_mangle]
pub unsafe extern "C" fn sf_predictions_write(
    predictions: *const SfPredictions,
    path: *const c_char,
) -> SfStatus {
    guard(|| {
        let predictions = handle(predictions, "predictions are null")?;
        let path = path_arg(path, "path is null")?;
        write_predictions(&predictions.0, &path)?;
        Ok(())
    })
}

/// # Safety
/// `predictions` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_predictions_free(predictions: *mut SfPredictions) {
    if !predictions.is_null() {
        drop(Box::from_raw(predictions));
    }
}

/// Exact-match evaluation against the sentences of `gold`.
///
/// # Safety
/// Handles are live; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_evaluate(
    predictions: *const SfPredictions,
    gold: *const SfCorpus,
    out: *mut SfScores,
) -> SfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Arg("out is null"));
        }
        let predictions = handle(predictions, "predictions are null")?;
        let gold = handle(gold, "gold is null")?;
        let report = spanforge::evaluate(&predictions.0, &gold.0)?;
        let p = report.micro_percent;
        *out = SfScores {
            true_positives: report.counts.tp,
            false_positives: report.counts.fp,
            false_negatives: report.counts.fn_,
            precision: p.precision,
            recall: p.recall,
            f1: p.f1,
        };
        Ok(())
    })
}

/// Writes the checksummed projection artifact of `corpus`. When
/// `checksum_out` is non-null it receives the 64 hex digits and a NUL, so it
/// must hold at least 65 bytes.
///
/// # Safety
/// `corpus` is live; strings are valid; `checksum_out` is null or 65 bytes.
#[no_mangle]
pub unsafe extern "C" fn sf_artifact_write(
    corpus: *const SfCorpus,
    version: *const c_char,
    path: *const c_char,
    checksum_out: *mut c_char,
) -> SfStatus {
    guard(|| {
        let corpus = handle(corpus, "corpus is null")?;
        let version = str_arg(version, "version is null")?;
        let path = path_arg(path, "path is null")?;
        let artifact = write_artifact(&corpus.0, version, &path)?;
        if !checksum_out.is_null() {
            let bytes = artifact.checksum.as_bytes();
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), checksum_out, bytes.len());
            *checksum_out.add(bytes.len()) = 0;
        }
        Ok(())
    })
}

/// Reads an artifact and checks its digest. A mismatch returns
/// `SF_STATUS_INTEGRITY`.
///
/// # Safety
/// `path` is a valid C string.
#[no_mangle]
pub unsafe extern "C" fn sf_artifact_verify(path: *const c_char) -> SfStatus {
    guard(|| {
        let path = path_arg(path, "path is null")?;
        read_artifact(&path)?;
        Ok(())
    })
}
