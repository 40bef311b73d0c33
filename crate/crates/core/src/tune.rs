//! Grid search over the three reconstruction thresholds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, Split};
use crate::error::{Error, Result};
use crate::evaluate::{exact_match_counts, micro_prf, MatchCounts};
use crate::features::DepDistanceMatrix;
use crate::jsonl::write_bytes;
use crate::reconstruct::{reconstruct_corpus, ReconstructionConfig, Thresholds};
use crate::scoring::ProbabilityMap;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdGrid {
    values: Vec<f64>,
}

impl ThresholdGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("threshold grid is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Config(format!("grid value {v} is outside [0,1]")));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("grid values must be strictly ascending".into()));
        }
        Ok(ThresholdGrid { values })
    }

    /// `lo:hi:step`, inclusive of `hi` when it falls on the step.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad grid spec `{spec}`")))
            })
            .collect::<Result<_>>()?;
        let [lo, hi, step] = parts[..] else {
            return Err(Error::Config(format!("grid spec `{spec}` is not lo:hi:step")));
        };
        if step <= 0.0 || hi < lo {
            return Err(Error::Config(format!("bad grid spec `{spec}`")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let values = (0..count)
            .map(|k| ((lo + k as f64 * step) * 1e6).round() / 1e6)
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn triples(&self) -> Vec<Thresholds> {
        let v = &self.values;
        let mut out = Vec::with_capacity(v.len().pow(3));
        for &s in v {
            for &e in v {
                for &i in v {
                    out.push(Thresholds {
                        tau_start: s,
                        tau_end: e,
                        tau_inside: i,
                    });
                }
            }
        }
        out
    }
}

impl Default for ThresholdGrid {
    /// 0.20 to 0.60 in steps of 0.05.
    fn default() -> Self {
        Self::parse("0.2:0.6:0.05").expect("default grid is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub thresholds: Thresholds,
    pub counts: MatchCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub best: Thresholds,
    pub best_f1: f64,
    /// Every triple, in lexicographic order.
    pub trace: Vec<TracePoint>,
}

/// Evaluates every grid triple on `dev` and keeps the best micro F1; ties go
/// to the lexicographically smallest `(tau_start, tau_end, tau_inside)`.
pub fn grid_search(
    dev: &Corpus,
    probs: &ProbabilityMap,
    grid: &ThresholdGrid,
    cfg: &ReconstructionConfig,
    matrices: Option<&BTreeMap<String, DepDistanceMatrix>>,
) -> Result<TuneResult> {
    cfg.validate()?;
    if let Some(s) = dev.sentences.iter().find(|s| !probs.contains_key(&s.id)) {
        return Err(Error::Config(format!(
            "no probabilities for dev sentence `{}`",
            s.id
        )));
    }
    let trace = grid
        .triples()
        .into_par_iter()
        .map(|t| {
            let predictions = reconstruct_corpus(dev, probs, &t, cfg, matrices)?;
            let counts = exact_match_counts(&predictions, dev)?;
            let prf = micro_prf(&counts);
            Ok(TracePoint {
                thresholds: t,
                counts,
                precision: prf.precision,
                recall: prf.recall,
                f1: prf.f1,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = trace
        .iter()
        .reduce(|best, p| {
            let better = p.f1 > best.f1
                || (p.f1 == best.f1 && p.thresholds.lexicographic(&best.thresholds).is_lt());
            if better {
                p
            } else {
                best
            }
        })
        .expect("grid is never empty");
    Ok(TuneResult {
        best: best.thresholds,
        best_f1: best.f1,
        trace,
    })
}

/// Relabels a seeded random share of the TRAIN sentences as DEV. The share
/// is `round(fraction * |train|)`, at least one sentence when `fraction > 0`.
pub fn carve_dev(corpus: &Corpus, fraction: f64, seed: u64) -> Result<Corpus> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!("dev fraction {fraction} is outside [0,1)")));
    }
    let train: Vec<usize> = corpus
        .sentences
        .iter()
        .enumerate()
        .filter(|(_, s)| s.split == Split::Train)
        .map(|(i, _)| i)
        .collect();
    let mut take = (fraction * train.len() as f64).round() as usize;
    if fraction > 0.0 && take == 0 && train.len() > 1 {
        take = 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<usize> = train.choose_multiple(&mut rng, take).copied().collect();
    let mut out = corpus.clone();
    for i in chosen {
        out.sentences[i].split = Split::Dev;
    }
    Ok(out)
}

/// Tab-separated trace, one row per triple.
pub fn trace_tsv(trace: &[TracePoint]) -> String {
    let mut out = String::from("tau_start\ttau_end\ttau_inside\ttp\tfp\tfn\tprecision\trecall\tf1\n");
    for p in trace {
        let t = &p.thresholds;
        let _ = writeln!(
            out,
            "{:.2}\t{:.2}\t{:.2}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            t.tau_start,
            t.tau_end,
            t.tau_inside,
            p.counts.tp,
            p.counts.fp,
            p.counts.fn_,
            p.precision,
            p.recall,
            p.f1
        );
    }
    out
}

pub fn write_trace(trace: &[TracePoint], path: &Path) -> Result<()> {
    write_bytes(path, trace_tsv(trace).as_bytes())
}
