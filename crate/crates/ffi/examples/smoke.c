/* Loads a corpus, scores it with the lexicon baseline, reconstructs and evaluates.
 * usage: smoke CORPUS.jsonl */
#include <stdio.h>

#include "spanforge.h"

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: %s CORPUS.jsonl\n", argv[0]);
        return 2;
    }
    SfCorpus *corpus = NULL;
    SfStatus st = sf_corpus_load(argv[1], &corpus);
    if (st != SF_STATUS_OK) {
        fprintf(stderr, "load: %s\n", sf_last_error());
        return st;
    }
    SfProbabilities *probs = NULL;
    SfPredictions *preds = NULL;
    SfScores scores = {0};
    SfThresholds t = {0.5, 0.5, 0.5};
    st = sf_probabilities_baseline(corpus, corpus, &probs);
    if (st == SF_STATUS_OK)
        st = sf_reconstruct(corpus, probs, t, SF_OVERLAP_POLICY_GREEDY, true, &preds);
    if (st == SF_STATUS_OK)
        st = sf_evaluate(preds, corpus, &scores);
    if (st != SF_STATUS_OK)
        fprintf(stderr, "error: %s\n", sf_last_error());
    else
        printf("spanforge %s tp=%zu fp=%zu fn=%zu f1=%.1f\n", sf_version(),
               scores.true_positives, scores.false_positives, scores.false_negatives, scores.f1);
    sf_predictions_free(preds);
    sf_probabilities_free(probs);
    sf_corpus_free(corpus);
    return st;
}
