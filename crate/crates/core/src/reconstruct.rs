//! Span reconstruction from per-token START/END/INSIDE probabilities.
//!
//! Every token pair `(s, e)` with `e > s`, `p_start[s] >= tau_start`,
//! `p_end[e] >= tau_end` and width `e - s + 1 <= max_width` yields a member
//! set `{s} ∪ {t in (s, e) : p_inside[t] >= tau_inside} ∪ {e}`, kept when its
//! size lies in `[min_members, max_members]`. Interior tokens below the
//! inside threshold are gaps, which is how discontinuous MWEs come out.
//!
//! Discontinuous candidates are then checked against dependency distances,
//! and overlapping candidates resolved according to [`OverlapPolicy`].
//!
//! Only pairs whose two boundaries already pass their thresholds are
//! expanded, so the cost is `O(k * m * width)` for `k` qualifying starts and
//! `m` qualifying ends; [`EnumerationStats`] records the expansions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{is_contiguous, Corpus};
use crate::error::{Error, Result};
use crate::features::DepDistanceMatrix;
use crate::jsonl;
use crate::scoring::{ProbabilityMap, TokenProbabilities};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_start: f64,
    pub tau_end: f64,
    pub tau_inside: f64,
}

impl Thresholds {
    pub fn new(tau_start: f64, tau_end: f64, tau_inside: f64) -> Result<Self> {
        let t = Thresholds {
            tau_start,
            tau_end,
            tau_inside,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn uniform(tau: f64) -> Self {
        Thresholds {
            tau_start: tau,
            tau_end: tau,
            tau_inside: tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_start", self.tau_start),
            ("tau_end", self.tau_end),
            ("tau_inside", self.tau_inside),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0,1]")));
            }
        }
        Ok(())
    }

    pub(crate) fn lexicographic(&self, other: &Self) -> Ordering {
        self.tau_start
            .total_cmp(&other.tau_start)
            .then(self.tau_end.total_cmp(&other.tau_end))
            .then(self.tau_inside.total_cmp(&other.tau_inside))
    }
}

impl fmt::Display for Thresholds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.2}/{:.2}/{:.2}",
            self.tau_start, self.tau_end, self.tau_inside
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverlapPolicy {
    /// Highest score first; a candidate sharing any token with an accepted one is dropped.
    #[serde(rename = "greedy")]
    GreedyNonOverlap,
    #[serde(rename = "all")]
    AllowAll,
}

impl FromStr for OverlapPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(OverlapPolicy::GreedyNonOverlap),
            "all" => Ok(OverlapPolicy::AllowAll),
            other => Err(Error::Config(format!("unknown overlap policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionConfig {
    pub max_width: usize,
    pub min_members: usize,
    pub max_members: usize,
    /// Consecutive members of a discontinuous candidate further apart than
    /// this (in dependency distance) reject the candidate.
    pub dep_reject_above: u8,
    pub overlap_policy: OverlapPolicy,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            max_width: 13,
            min_members: 2,
            max_members: 6,
            dep_reject_above: 4,
            overlap_policy: OverlapPolicy::GreedyNonOverlap,
        }
    }
}

impl ReconstructionConfig {
    pub fn with_policy(mut self, policy: OverlapPolicy) -> Self {
        self.overlap_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2 <= self.min_members
            && self.min_members <= self.max_members
            && self.max_members <= self.max_width)
        {
            return Err(Error::Config(format!(
                "need 2 <= min_members ({}) <= max_members ({}) <= max_width ({})",
                self.min_members, self.max_members, self.max_width
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedMwe {
    #[serde(rename = "indices")]
    pub token_indices: Vec<usize>,
    /// `p_start[first] * p_end[last]`
    pub score: f64,
}

impl PredictedMwe {
    pub fn first(&self) -> usize {
        self.token_indices[0]
    }

    pub fn last(&self) -> usize {
        self.token_indices[self.token_indices.len() - 1]
    }

    pub fn is_continuous(&self) -> bool {
        is_contiguous(&self.token_indices)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnumerationStats {
    /// `(s, e)` pairs whose member set was built.
    pub pair_expansions: usize,
}

pub fn enumerate_candidates(
    probs: &TokenProbabilities,
    t: &Thresholds,
    cfg: &ReconstructionConfig,
) -> Vec<PredictedMwe> {
    enumerate_candidates_counted(probs, t, cfg).0
}

pub fn enumerate_candidates_counted(
    probs: &TokenProbabilities,
    t: &Thresholds,
    cfg: &ReconstructionConfig,
) -> (Vec<PredictedMwe>, EnumerationStats) {
    let mut stats = EnumerationStats::default();
    let starts: Vec<usize> = (0..probs.len())
        .filter(|&i| probs.p_start[i] >= t.tau_start)
        .collect();
    if starts.is_empty() {
        return (Vec::new(), stats);
    }
    let ends: Vec<usize> = (0..probs.len())
        .filter(|&i| probs.p_end[i] >= t.tau_end)
        .collect();

    let mut out = Vec::new();
    for &s in &starts {
        let lo = ends.partition_point(|&e| e <= s);
        for &e in ends[lo..].iter().take_while(|&&e| e - s < cfg.max_width) {
            stats.pair_expansions += 1;
            let mut members = Vec::with_capacity(e - s + 1);
            members.push(s);
            members.extend((s + 1..e).filter(|&i| probs.p_inside[i] >= t.tau_inside));
            members.push(e);
            if members.len() < cfg.min_members || members.len() > cfg.max_members {
                continue;
            }
            out.push(PredictedMwe {
                score: probs.p_start[s] * probs.p_end[e],
                token_indices: members,
            });
        }
    }
    (out, stats)
}

/// Drops discontinuous candidates whose consecutive members are more than
/// `cfg.dep_reject_above` apart in the dependency graph. Contiguous
/// candidates always pass.
pub fn dep_filter(
    candidates: Vec<PredictedMwe>,
    matrix: Option<&DepDistanceMatrix>,
    cfg: &ReconstructionConfig,
) -> Result<Vec<PredictedMwe>> {
    let mut kept = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        if candidate.is_continuous() {
            kept.push(candidate);
            continue;
        }
        let matrix = matrix.ok_or_else(|| {
            Error::Config(format!(
                "discontinuous candidate {:?} needs a dependency distance matrix",
                candidate.token_indices
            ))
        })?;
        if candidate.last() >= matrix.n() {
            return Err(Error::Config(format!(
                "distance matrix covers {} tokens, candidate reaches index {}",
                matrix.n(),
                candidate.last()
            )));
        }
        let plausible = candidate
            .token_indices
            .windows(2)
            .all(|w| matrix.get(w[0], w[1]) <= cfg.dep_reject_above);
        if plausible {
            kept.push(candidate);
        }
    }
    Ok(kept)
}

fn by_span(a: &PredictedMwe, b: &PredictedMwe) -> Ordering {
    (a.first(), a.last(), &a.token_indices).cmp(&(b.first(), b.last(), &b.token_indices))
}

pub fn resolve_overlaps(candidates: Vec<PredictedMwe>, policy: OverlapPolicy) -> Vec<PredictedMwe> {
    match policy {
        OverlapPolicy::AllowAll => candidates,
        OverlapPolicy::GreedyNonOverlap => {
            let mut ranked = candidates;
            ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| by_span(a, b)));
            let mut used: Vec<usize> = Vec::new();
            let mut accepted = Vec::new();
            for candidate in ranked {
                if candidate.token_indices.iter().any(|i| used.contains(i)) {
                    continue;
                }
                used.extend_from_slice(&candidate.token_indices);
                accepted.push(candidate);
            }
            accepted.sort_by(by_span);
            accepted
        }
    }
}

/// Enumerate, filter by dependency distance (only when a matrix is given),
/// then resolve overlaps.
pub fn reconstruct_sentence(
    probs: &TokenProbabilities,
    t: &Thresholds,
    cfg: &ReconstructionConfig,
    matrix: Option<&DepDistanceMatrix>,
) -> Result<Vec<PredictedMwe>> {
    t.validate()?;
    cfg.validate()?;
    let mut candidates = enumerate_candidates(probs, t, cfg);
    if matrix.is_some() {
        candidates = dep_filter(candidates, matrix, cfg)?;
    }
    Ok(resolve_overlaps(candidates, cfg.overlap_policy))
}

pub const BRUTE_FORCE_MAX_TOKENS: usize = 16;

/// Reference reconstruction by exhaustive subset enumeration. Every subset of
/// 2..=max_members tokens is checked against the gates directly: boundary
/// thresholds at its min and max, inside threshold for each interior
/// member, no interior non-member reaching the inside threshold, width, and
/// the dependency rule.
pub fn brute_force_reference(
    probs: &TokenProbabilities,
    t: &Thresholds,
    cfg: &ReconstructionConfig,
    matrix: Option<&DepDistanceMatrix>,
) -> Result<Vec<PredictedMwe>> {
    t.validate()?;
    cfg.validate()?;
    let n = probs.len();
    if n > BRUTE_FORCE_MAX_TOKENS {
        return Err(Error::UndefinedInput(format!(
            "brute force reference is limited to {BRUTE_FORCE_MAX_TOKENS} tokens, got {n}"
        )));
    }
    let mut found = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size < 2 || size < cfg.min_members || size > cfg.max_members {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let first = members[0];
        let last = members[size - 1];
        if last - first + 1 > cfg.max_width
            || probs.p_start[first] < t.tau_start
            || probs.p_end[last] < t.tau_end
        {
            continue;
        }
        let inside_ok = (first + 1..last).all(|i| {
            let member = mask & (1 << i) != 0;
            member == (probs.p_inside[i] >= t.tau_inside)
        });
        if !inside_ok {
            continue;
        }
        let contiguous = size == last - first + 1;
        if let (false, Some(m)) = (contiguous, matrix) {
            let mut prev = first;
            let mut ok = true;
            for &i in &members[1..] {
                if m.get(prev, i) > cfg.dep_reject_above {
                    ok = false;
                }
                prev = i;
            }
            if !ok {
                continue;
            }
        }
        found.push(PredictedMwe {
            score: probs.p_start[first] * probs.p_end[last],
            token_indices: members,
        });
    }

    let mut out = match cfg.overlap_policy {
        OverlapPolicy::AllowAll => found,
        OverlapPolicy::GreedyNonOverlap => {
            let mut order: Vec<usize> = (0..found.len()).collect();
            order.sort_by(|&a, &b| {
                let (x, y) = (&found[a], &found[b]);
                y.score
                    .total_cmp(&x.score)
                    .then(x.first().cmp(&y.first()))
                    .then(x.last().cmp(&y.last()))
            });
            let mut taken = vec![false; n];
            let mut accepted = Vec::new();
            for idx in order {
                let c = &found[idx];
                if c.token_indices.iter().all(|&i| !taken[i]) {
                    for &i in &c.token_indices {
                        taken[i] = true;
                    }
                    accepted.push(c.clone());
                }
            }
            accepted
        }
    };
    out.sort_by_key(|m| (m.first(), m.last()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePredictions {
    pub sentence_id: String,
    pub mwes: Vec<PredictedMwe>,
}

/// Reconstructs every sentence of `corpus` in parallel; output keeps corpus order.
pub fn reconstruct_corpus(
    corpus: &Corpus,
    probs: &ProbabilityMap,
    t: &Thresholds,
    cfg: &ReconstructionConfig,
    matrices: Option<&BTreeMap<String, DepDistanceMatrix>>,
) -> Result<Vec<SentencePredictions>> {
    corpus
        .sentences
        .par_iter()
        .map(|sentence| {
            let p = probs.get(&sentence.id).ok_or_else(|| {
                Error::Config(format!("no probabilities for sentence `{}`", sentence.id))
            })?;
            if p.len() != sentence.len() {
                return Err(Error::Schema(format!(
                    "`{}`: {} probabilities for {} tokens",
                    sentence.id,
                    p.len(),
                    sentence.len()
                )));
            }
            let matrix = match matrices {
                Some(m) => Some(m.get(&sentence.id).ok_or_else(|| {
                    Error::Config(format!(
                        "no dependency distances for sentence `{}`",
                        sentence.id
                    ))
                })?),
                None => None,
            };
            Ok(SentencePredictions {
                sentence_id: sentence.id.clone(),
                mwes: reconstruct_sentence(p, t, cfg, matrix)?,
            })
        })
        .collect()
}

pub fn write_predictions(predictions: &[SentencePredictions], path: &Path) -> Result<()> {
    jsonl::write_records(path, predictions)
}

pub fn load_predictions(path: &Path) -> Result<Vec<SentencePredictions>> {
    jsonl::read_records::<SentencePredictions>(path)?
        .into_iter()
        .map(|(line, record)| {
            for m in &record.mwes {
                let ok = m.token_indices.len() >= 2
                    && m.token_indices.windows(2).all(|w| w[0] < w[1]);
                if !ok {
                    return Err(Error::malformed(
                        path,
                        line,
                        format!("prediction {:?} is not a strictly increasing set of >= 2 indices", m.token_indices),
                    ));
                }
            }
            Ok(record)
        })
        .collect()
}
