mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spanforge::corpus::{Corpus, MweAnnotation, MweType, Sentence, Split};
use spanforge::evaluate::{evaluate, exact_match_counts, micro_prf, percent, MatchCounts};
use spanforge::reconstruct::{PredictedMwe, SentencePredictions};

fn random_set<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    loop {
        let mut v: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        v.truncate(6);
        if v.len() >= 2 {
            return v;
        }
    }
}

fn random_case(seed: u64) -> (Corpus, Vec<SentencePredictions>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::new();
    let mut predictions = Vec::new();
    for k in 0..rng.gen_range(1..8) {
        let n = rng.gen_range(3..9);
        let mut s = Sentence::from_surfaces(format!("e{k}"), Split::Test, &vec!["w"; n]);
        for _ in 0..rng.gen_range(0..4) {
            let ty = MweType::ALL[rng.gen_range(0..MweType::ALL.len())];
            let _ = s.push_mwe(MweAnnotation::new(random_set(&mut rng, n), ty).unwrap());
        }
        let mut mwes = Vec::new();
        for _ in 0..rng.gen_range(0..4) {
            let indices = if !s.mwes.is_empty() && rng.gen_bool(0.5) {
                s.mwes[rng.gen_range(0..s.mwes.len())].token_indices().to_vec()
            } else {
                random_set(&mut rng, n)
            };
            mwes.push(PredictedMwe { token_indices: indices, score: 0.5 });
        }
        if rng.gen_bool(0.8) {
            predictions.push(SentencePredictions { sentence_id: s.id.clone(), mwes });
        }
        sentences.push(s);
    }
    (Corpus::new("eval", sentences).unwrap(), predictions)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn counts_match_nested_loop_matcher(seed in any::<u64>()) {
        let (gold, pred) = random_case(seed);
        let by_id: BTreeMap<String, Vec<Vec<usize>>> = pred
            .iter()
            .map(|p| (p.sentence_id.clone(), p.mwes.iter().map(|m| m.token_indices.clone()).collect()))
            .collect();
        let (tp, fp, fn_) = common::nested_loop_counts(&by_id, &gold);
        let c = exact_match_counts(&pred, &gold).unwrap();
        prop_assert_eq!((c.tp, c.fp, c.fn_), (tp, fp, fn_));

        let report = evaluate(&pred, &gold).unwrap();
        let n_pred: usize = pred.iter().map(|p| p.mwes.len()).sum();
        prop_assert_eq!(report.n_pred_continuous + report.n_pred_discontinuous, n_pred);
        let cont = &report.continuity;
        prop_assert_eq!(cont.continuous.support + cont.discontinuous.support, gold.mwe_count());
        let type_support: usize = report.per_type_recall.values().map(|r| r.support).sum();
        prop_assert_eq!(type_support, gold.mwe_count());
        let type_matched: usize = report.per_type_recall.values().map(|r| r.matched).sum();
        prop_assert_eq!(type_matched, c.tp);
    }

    #[test]
    fn f1_is_harmonic_mean(tp in 0..500usize, fp in 0..500usize, fn_ in 0..500usize) {
        let p = micro_prf(&MatchCounts::new(tp, fp, fn_));
        prop_assert!((0.0..=1.0).contains(&p.f1));
        if p.precision + p.recall > 0.0 {
            let h = 2.0 * p.precision * p.recall / (p.precision + p.recall);
            prop_assert!((p.f1 - h).abs() < 1e-12);
        } else {
            prop_assert_eq!(p.f1, 0.0);
        }
    }
}

#[test]
fn rounding_fixtures() {
    assert_eq!(percent(6.0 / 7.0), 85.7);
    assert_eq!(percent(0.0005), 0.1);
    assert_eq!(percent(0.00049), 0.0);
    assert_eq!(percent(1.0), 100.0);
}

#[test]
fn duplicate_predictions_are_false_positives() {
    let mut s = Sentence::from_surfaces("d", Split::Test, &["a", "b", "c"]);
    s.push_mwe(MweAnnotation::new(vec![0, 1], MweType::Noun).unwrap()).unwrap();
    let gold = Corpus::new("g", vec![s]).unwrap();
    let twice = PredictedMwe { token_indices: vec![0, 1], score: 1.0 };
    let pred = vec![SentencePredictions { sentence_id: "d".into(), mwes: vec![twice.clone(), twice] }];
    assert_eq!(exact_match_counts(&pred, &gold).unwrap(), MatchCounts::new(1, 1, 0));
}
