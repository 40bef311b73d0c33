//! Exact span-match evaluation.
//!
//! A prediction is a true positive only when its index set equals a gold
//! MWE's set in the same sentence. Each gold MWE absorbs at most one
//! prediction, so a repeated identical prediction counts once as TP and then
//! as FP. Predictions are untyped: gold types only feed per-type recall, and
//! no per-type precision exists.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{is_contiguous, Corpus, MweType, Sentence};
use crate::error::{Error, Result};
use crate::reconstruct::SentencePredictions;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MatchCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        MatchCounts { tp, fp, fn_ }
    }
}

impl std::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Percentages rounded half-up to one decimal.
    pub fn percent(&self) -> Prf {
        Prf {
            precision: percent(self.precision),
            recall: percent(self.recall),
            f1: percent(self.f1),
        }
    }
}

/// `ratio * 100`, rounded half-up to one decimal place.
pub fn percent(ratio: f64) -> f64 {
    // the epsilon keeps exact .x5 values from rounding down on binary noise
    ((ratio * 1000.0) + 0.5 + 1e-9).floor() / 10.0
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn prf_from(tp_pred: usize, n_pred: usize, matched_gold: usize, n_gold: usize) -> Prf {
    let precision = ratio(tp_pred, n_pred);
    let recall = ratio(matched_gold, n_gold);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f1,
    }
}

pub fn micro_prf(c: &MatchCounts) -> Prf {
    prf_from(c.tp, c.tp + c.fp, c.tp, c.tp + c.fn_)
}

/// Per-sentence matching: which predictions are TP, which gold MWEs matched.
struct SentenceMatch<'a> {
    gold: &'a Sentence,
    preds: &'a [crate::reconstruct::PredictedMwe],
    pred_tp: Vec<bool>,
    gold_matched: Vec<bool>,
}

fn match_sentence<'a>(
    gold: &'a Sentence,
    preds: &'a [crate::reconstruct::PredictedMwe],
) -> SentenceMatch<'a> {
    let mut index: HashMap<&[usize], usize> = HashMap::new();
    for (i, mwe) in gold.mwes.iter().enumerate() {
        index.insert(mwe.token_indices(), i);
    }
    let mut gold_matched = vec![false; gold.mwes.len()];
    let pred_tp = preds
        .iter()
        .map(|p| match index.get(p.token_indices.as_slice()) {
            Some(&g) if !gold_matched[g] => {
                gold_matched[g] = true;
                true
            }
            _ => false,
        })
        .collect();
    SentenceMatch {
        gold,
        preds,
        pred_tp,
        gold_matched,
    }
}

fn match_all<'a>(
    pred: &'a [SentencePredictions],
    gold: &'a Corpus,
) -> Result<Vec<SentenceMatch<'a>>> {
    let mut by_id: HashMap<&str, &SentencePredictions> = HashMap::new();
    for p in pred {
        if gold.get(&p.sentence_id).is_none() {
            return Err(Error::UnknownSentence(p.sentence_id.clone()));
        }
        if by_id.insert(p.sentence_id.as_str(), p).is_some() {
            return Err(Error::Schema(format!(
                "duplicate prediction record for `{}`",
                p.sentence_id
            )));
        }
    }
    Ok(gold
        .sentences
        .iter()
        .map(|s| {
            let preds = by_id.get(s.id.as_str()).map_or(&[][..], |p| &p.mwes[..]);
            match_sentence(s, preds)
        })
        .collect())
}

pub fn exact_match_counts(pred: &[SentencePredictions], gold: &Corpus) -> Result<MatchCounts> {
    Ok(counts_of(&match_all(pred, gold)?))
}

fn counts_of(matches: &[SentenceMatch<'_>]) -> MatchCounts {
    let mut c = MatchCounts::default();
    for m in matches {
        let tp = m.pred_tp.iter().filter(|b| **b).count();
        c.tp += tp;
        c.fp += m.preds.len() - tp;
        c.fn_ += m.gold_matched.iter().filter(|b| !**b).count();
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeRecall {
    pub recall: f64,
    pub recall_percent: f64,
    pub matched: usize,
    pub support: usize,
}

/// Recall per gold type; types without gold support are omitted.
pub fn type_recall(
    pred: &[SentencePredictions],
    gold: &Corpus,
) -> Result<BTreeMap<MweType, TypeRecall>> {
    Ok(type_recall_of(&match_all(pred, gold)?))
}

fn type_recall_of(matches: &[SentenceMatch<'_>]) -> BTreeMap<MweType, TypeRecall> {
    let mut tallies: BTreeMap<MweType, (usize, usize)> = BTreeMap::new();
    for m in matches {
        for (mwe, &hit) in m.gold.mwes.iter().zip(&m.gold_matched) {
            let t = tallies.entry(mwe.mwe_type()).or_default();
            t.0 += usize::from(hit);
            t.1 += 1;
        }
    }
    tallies
        .into_iter()
        .map(|(ty, (matched, support))| {
            let recall = ratio(matched, support);
            (
                ty,
                TypeRecall {
                    recall,
                    recall_percent: percent(recall),
                    matched,
                    support,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StratumMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub percent: Prf,
    /// Gold MWEs in this stratum.
    pub support: usize,
    pub predictions: usize,
    pub true_positives: usize,
    pub matched_gold: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub continuous: StratumMetrics,
    pub discontinuous: StratumMetrics,
}

pub fn continuity_metrics(pred: &[SentencePredictions], gold: &Corpus) -> Result<ContinuityReport> {
    Ok(continuity_of(&match_all(pred, gold)?))
}

fn continuity_of(matches: &[SentenceMatch<'_>]) -> ContinuityReport {
    // [continuous, discontinuous] x (tp_pred, n_pred, matched_gold, n_gold)
    let mut acc = [[0usize; 4]; 2];
    for m in matches {
        for (p, &tp) in m.preds.iter().zip(&m.pred_tp) {
            let k = usize::from(!is_contiguous(&p.token_indices));
            acc[k][0] += usize::from(tp);
            acc[k][1] += 1;
        }
        for (g, &hit) in m.gold.mwes.iter().zip(&m.gold_matched) {
            let k = usize::from(!g.is_continuous());
            acc[k][2] += usize::from(hit);
            acc[k][3] += 1;
        }
    }
    let stratum = |a: [usize; 4]| {
        let prf = prf_from(a[0], a[1], a[2], a[3]);
        StratumMetrics {
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
            percent: prf.percent(),
            support: a[3],
            predictions: a[1],
            true_positives: a[0],
            matched_gold: a[2],
        }
    };
    ContinuityReport {
        continuous: stratum(acc[0]),
        discontinuous: stratum(acc[1]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: MatchCounts,
    pub micro: Prf,
    pub micro_percent: Prf,
    pub per_type_recall: BTreeMap<MweType, TypeRecall>,
    pub continuity: ContinuityReport,
    pub n_pred_continuous: usize,
    pub n_pred_discontinuous: usize,
}

pub fn evaluate(pred: &[SentencePredictions], gold: &Corpus) -> Result<EvalReport> {
    let matches = match_all(pred, gold)?;
    let counts = counts_of(&matches);
    let micro = micro_prf(&counts);
    let continuity = continuity_of(&matches);
    Ok(EvalReport {
        counts,
        micro,
        micro_percent: micro.percent(),
        per_type_recall: type_recall_of(&matches),
        n_pred_continuous: continuity.continuous.predictions,
        n_pred_discontinuous: continuity.discontinuous.predictions,
        continuity,
    })
}

impl EvalReport {
    /// Plain-text table mirroring the JSON report.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let c = &self.counts;
        let m = &self.micro_percent;
        let _ = writeln!(out, "predictions {}  gold {}  tp {}  fp {}  fn {}", c.tp + c.fp, c.tp + c.fn_, c.tp, c.fp, c.fn_);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<14} {:>6} {:>6} {:>6} {:>6}", "", "P", "R", "F1", "N");
        let _ = writeln!(
            out,
            "{:<14} {:>6.1} {:>6.1} {:>6.1} {:>6}",
            "micro",
            m.precision,
            m.recall,
            m.f1,
            c.tp + c.fn_
        );
        for (label, s) in [
            ("continuous", &self.continuity.continuous),
            ("discontinuous", &self.continuity.discontinuous),
        ] {
            let _ = writeln!(
                out,
                "{:<14} {:>6.1} {:>6.1} {:>6.1} {:>6}",
                label, s.percent.precision, s.percent.recall, s.percent.f1, s.support
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<14} {:>6} {:>6}", "type", "Rec", "N");
        for (ty, r) in &self.per_type_recall {
            let _ = writeln!(out, "{:<14} {:>6.1} {:>6}", ty.as_str(), r.recall_percent, r.support);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{MweAnnotation, Split};
    use crate::reconstruct::PredictedMwe;

    fn gold(mwes: &[(&[usize], MweType)]) -> Corpus {
        let mut s = Sentence::from_surfaces("s", Split::Test, &["a"; 8]);
        for (idx, ty) in mwes {
            s.push_mwe(MweAnnotation::new(idx.to_vec(), *ty).unwrap()).unwrap();
        }
        Corpus::new("g", vec![s]).unwrap()
    }

    fn pred(sets: &[&[usize]]) -> Vec<SentencePredictions> {
        vec![SentencePredictions {
            sentence_id: "s".into(),
            mwes: sets
                .iter()
                .map(|s| PredictedMwe { token_indices: s.to_vec(), score: 1.0 })
                .collect(),
        }]
    }

    #[test]
    fn identity_match() {
        let c = exact_match_counts(&pred(&[&[0, 3]]), &gold(&[(&[0, 3], MweType::Verb)])).unwrap();
        assert_eq!(c, MatchCounts::new(1, 0, 0));
    }

    #[test]
    fn boundary_mismatch_is_fp_and_fn() {
        let c = exact_match_counts(&pred(&[&[0, 2, 3]]), &gold(&[(&[0, 3], MweType::Verb)])).unwrap();
        assert_eq!(c, MatchCounts::new(0, 1, 1));
    }

    #[test]
    fn no_predictions() {
        let g = gold(&[(&[0, 1], MweType::Noun), (&[3, 4], MweType::Noun)]);
        assert_eq!(exact_match_counts(&[], &g).unwrap(), MatchCounts::new(0, 0, 2));
    }

    #[test]
    fn duplicate_predictions_count_once() {
        let c = exact_match_counts(&pred(&[&[0, 1], &[0, 1]]), &gold(&[(&[0, 1], MweType::Noun)])).unwrap();
        assert_eq!(c, MatchCounts::new(1, 1, 0));
    }

    #[test]
    fn unknown_sentence() {
        let mut p = pred(&[&[0, 1]]);
        p[0].sentence_id = "nope".into();
        assert!(matches!(exact_match_counts(&p, &gold(&[])), Err(Error::UnknownSentence(_))));
    }

    #[test]
    fn micro_arithmetic() {
        let prf = micro_prf(&MatchCounts::new(268, 119, 113)).percent();
        assert_eq!((prf.precision, prf.recall, prf.f1), (69.3, 70.3, 69.8));
        assert_eq!(micro_prf(&MatchCounts::new(0, 0, 0)), Prf::default());
        let prf = micro_prf(&MatchCounts::new(5, 0, 0)).percent();
        assert_eq!((prf.precision, prf.recall, prf.f1), (100.0, 100.0, 100.0));
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(percent(0.6925), 69.3);
        assert_eq!(percent(0.00049), 0.0);
        assert_eq!(percent(0.0005), 0.1);
        assert_eq!(percent(1.0), 100.0);
    }

    #[test]
    fn type_recall_omits_empty_types() {
        let g = gold(&[(&[0, 1], MweType::Noun), (&[3, 4], MweType::Verb)]);
        let r = type_recall(&pred(&[&[0, 1]]), &g).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[&MweType::Noun].recall_percent, 100.0);
        assert_eq!(r[&MweType::Verb].recall_percent, 0.0);
        assert!(!r.contains_key(&MweType::Clause));
    }

    #[test]
    fn continuity_strata() {
        let g = gold(&[(&[0, 2], MweType::Verb), (&[4, 5, 6], MweType::Noun)]);
        let r = continuity_metrics(&pred(&[&[0, 2], &[4, 5]]), &g).unwrap();
        assert_eq!(r.discontinuous.true_positives, 1);
        assert_eq!(r.discontinuous.support, 1);
        assert_eq!(r.discontinuous.precision, 1.0);
        assert_eq!(r.continuous.predictions, 1);
        assert_eq!(r.continuous.true_positives, 0);
        assert_eq!(r.continuous.recall, 0.0);
    }

    #[test]
    fn report_identities() {
        let g = gold(&[(&[0, 2], MweType::Verb), (&[4, 5, 6], MweType::Noun), (&[6, 7], MweType::ModConn)]);
        let r = evaluate(&pred(&[&[0, 2], &[4, 5, 6], &[1, 3]]), &g).unwrap();
        let cont = &r.continuity;
        assert_eq!(cont.continuous.true_positives + cont.discontinuous.true_positives, r.counts.tp);
        assert_eq!(cont.continuous.support + cont.discontinuous.support, r.counts.tp + r.counts.fn_);
        let matched: usize = r.per_type_recall.values().map(|t| t.matched).sum();
        assert_eq!(matched, r.counts.tp);
        assert!(r.render_table().contains("micro"));
    }
}
