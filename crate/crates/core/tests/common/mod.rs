//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use spanforge::corpus::{Corpus, MweAnnotation, MweType, Sentence, Split, Token};
use spanforge::reconstruct::{OverlapPolicy, PredictedMwe, ReconstructionConfig, Thresholds};
use spanforge::scoring::TokenProbabilities;

/// Probabilities drawn from a coarse grid so that score ties and exact
/// threshold hits both happen often.
pub fn coarse_probability<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen_bool(0.25) {
        0.0
    } else {
        f64::from(rng.gen_range(0..=20u32)) / 20.0
    }
}

pub fn random_probs<R: Rng>(rng: &mut R, id: &str, n: usize) -> TokenProbabilities {
    let mut p = TokenProbabilities::zeros(id, n);
    for i in 0..n {
        p.p_start[i] = coarse_probability(rng);
        p.p_end[i] = coarse_probability(rng);
        p.p_inside[i] = coarse_probability(rng);
    }
    p
}

pub fn random_thresholds<R: Rng>(rng: &mut R) -> Thresholds {
    let mut draw = || f64::from(rng.gen_range(0..=20u32)) / 20.0;
    Thresholds::new(draw(), draw(), draw()).unwrap()
}

/// Random dependency forest over `n` tokens: tokens are visited in a random
/// order and each either becomes a root or attaches to an already visited token.
pub fn random_forest<R: Rng>(rng: &mut R, n: usize) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![None; n];
    for k in 1..n {
        if rng.gen_bool(0.85) {
            heads[order[k]] = Some(order[rng.gen_range(0..k)]);
        }
    }
    heads
}

/// Floyd-Warshall over the undirected head edges, capped.
pub fn floyd_warshall(heads: &[Option<usize>], cap: u8) -> Vec<Vec<u8>> {
    let n = heads.len();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        if let Some(h) = heads[i] {
            d[i][h] = 1;
            d[h][i] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d.iter()
        .map(|row| row.iter().map(|&x| x.min(cap as usize) as u8).collect())
        .collect()
}

/// All candidate index sets by scanning every (first, last, subset) triple.
/// Shares nothing with the library code paths.
pub fn oracle_candidates(
    p: &TokenProbabilities,
    t: &Thresholds,
    cfg: &ReconstructionConfig,
    dist: Option<&[Vec<u8>]>,
) -> Vec<(Vec<usize>, f64)> {
    let n = p.p_start.len();
    let mut out = Vec::new();
    for first in 0..n {
        for last in first + 1..n {
            if last - first + 1 > cfg.max_width {
                continue;
            }
            if p.p_start[first] < t.tau_start || p.p_end[last] < t.tau_end {
                continue;
            }
            let mut members = vec![first];
            for i in first + 1..last {
                if p.p_inside[i] >= t.tau_inside {
                    members.push(i);
                }
            }
            members.push(last);
            if members.len() < cfg.min_members || members.len() > cfg.max_members {
                continue;
            }
            let gapped = members.len() != last - first + 1;
            if let (true, Some(d)) = (gapped, dist) {
                let far = members
                    .iter()
                    .zip(members.iter().skip(1))
                    .any(|(&a, &b)| d[a][b] > cfg.dep_reject_above);
                if far {
                    continue;
                }
            }
            out.push((members, p.p_start[first] * p.p_end[last]));
        }
    }
    out
}

pub fn oracle_reconstruct(
    p: &TokenProbabilities,
    t: &Thresholds,
    cfg: &ReconstructionConfig,
    dist: Option<&[Vec<u8>]>,
) -> BTreeSet<Vec<usize>> {
    let mut cands = oracle_candidates(p, t, cfg, dist);
    match cfg.overlap_policy {
        OverlapPolicy::AllowAll => cands.into_iter().map(|(m, _)| m).collect(),
        OverlapPolicy::GreedyNonOverlap => {
            // selection sort, one winner at a time
            let mut used = BTreeSet::new();
            let mut kept = BTreeSet::new();
            while !cands.is_empty() {
                let mut best = 0;
                for k in 1..cands.len() {
                    let (a, sa) = (&cands[k].0, cands[k].1);
                    let (b, sb) = (&cands[best].0, cands[best].1);
                    let key_a = (a[0], a[a.len() - 1]);
                    let key_b = (b[0], b[b.len() - 1]);
                    if sa > sb || (sa == sb && key_a < key_b) {
                        best = k;
                    }
                }
                let (m, _) = cands.swap_remove(best);
                if m.iter().all(|i| !used.contains(i)) {
                    used.extend(m.iter().copied());
                    kept.insert(m);
                }
            }
            kept
        }
    }
}

pub fn index_sets(mwes: &[PredictedMwe]) -> BTreeSet<Vec<usize>> {
    mwes.iter().map(|m| m.token_indices.clone()).collect()
}

/// Nested-loop exact matcher: each prediction is compared against every
/// gold MWE of its sentence; a gold MWE can be claimed once.
pub fn nested_loop_counts(
    pred: &BTreeMap<String, Vec<Vec<usize>>>,
    gold: &Corpus,
) -> (usize, usize, usize) {
    let (mut tp, mut fp, mut n_gold) = (0, 0, 0);
    for s in &gold.sentences {
        let golds: Vec<Vec<usize>> = s.mwes.iter().map(|m| m.token_indices().to_vec()).collect();
        n_gold += golds.len();
        let mut claimed = vec![false; golds.len()];
        for p in pred.get(&s.id).into_iter().flatten() {
            let mut hit = false;
            for (g, gi) in golds.iter().enumerate() {
                if !claimed[g] && gi == p {
                    claimed[g] = true;
                    hit = true;
                    break;
                }
            }
            if hit {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    (tp, fp, n_gold - tp)
}

/// BFS over the undirected head graph, used as a second distance oracle.
pub fn bfs_from(heads: &[Option<usize>], src: usize) -> Vec<Option<usize>> {
    let n = heads.len();
    let mut adj = vec![Vec::new(); n];
    for (i, h) in heads.iter().enumerate() {
        if let Some(h) = *h {
            adj[i].push(h);
            adj[h].push(i);
        }
    }
    let mut dist = vec![None; n];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(dist[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

const WORDS: [&str; 12] = [
    "the", "report", "was", "quickly", "read", "by", "every", "new", "member", "of", "staff", "today",
];

/// A sentence of `n` filler words with heads forming a chain to token 0.
pub fn filler_sentence(id: &str, split: Split, n: usize) -> Sentence {
    let tokens = (0..n)
        .map(|i| {
            Token::new(i, WORDS[i % WORDS.len()])
                .with_upos("NOUN")
                .with_head(if i == 0 { None } else { Some(i - 1) })
        })
        .collect();
    Sentence {
        id: id.to_string(),
        tokens,
        mwes: Vec::new(),
        split,
    }
}

/// Synthetic corpus where every sentence carries one of a small set of
/// idioms, contiguous or gapped, inside filler text.
pub fn idiom_corpus(train: usize, test: usize) -> Corpus {
    let idioms: [(&[&str], &[usize], MweType); 4] = [
        (&["kick", "the", "bucket"], &[0, 1, 2], MweType::Verb),
        (&["by", "and", "large"], &[0, 1, 2], MweType::ModConn),
        (&["take", "a", "long", "walk"], &[0, 3], MweType::Verb),
        (&["hot", "dog"], &[0, 1], MweType::Noun),
    ];
    let mut sentences = Vec::new();
    for k in 0..train + test {
        let (words, members, ty) = idioms[k % idioms.len()];
        let split = if k < train { Split::Train } else { Split::Test };
        let lead = 1 + k % 3;
        let mut surfaces: Vec<&str> = vec!["we"; lead];
        surfaces.extend_from_slice(words);
        surfaces.extend_from_slice(&["today", "again"]);
        let mut s = Sentence::from_surfaces(format!("s{k:03}"), split, &surfaces);
        for (i, tok) in s.tokens.iter_mut().enumerate() {
            tok.head = if i == lead { None } else { Some(lead) };
        }
        let indices = members.iter().map(|m| m + lead).collect();
        s.push_mwe(MweAnnotation::new(indices, ty).unwrap()).unwrap();
        sentences.push(s);
    }
    Corpus::new("idioms", sentences).unwrap()
}
