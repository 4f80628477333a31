#pragma once

// Response-generation metrics: smoothed sentence BLEU over sampled responses,
// bag-of-words embedding similarities and distinct-n diversity.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dialogwae/corpus.hpp"

namespace dialogwae {

struct MetricsReport {
  double bleu_recall = 0.0;
  double bleu_precision = 0.0;
  double bleu_f1 = 0.0;
  double bow_average = 0.0;
  double bow_extrema = 0.0;
  double bow_greedy = 0.0;
  double intra_dist1 = 0.0;
  double intra_dist2 = 0.0;
  double inter_dist1 = 0.0;
  double inter_dist2 = 0.0;
  double avg_length = 0.0;
};

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);
/// Column order of the results tables: R, P, F1, A, E, G, intra-1/2, inter-1/2, L.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& report);

/// Sentence BLEU over n-grams 1..max_n with uniform weights, brevity penalty
/// and Chen & Cherry smoothing 7 (method 4 then method 5), matching NLTK's
/// sentence_bleu(..., smoothing_function=method7). Throws on empty input.
double smoothed_sentence_bleu(std::span<const TokenId> hypothesis,
                             std::span<const TokenId> reference, int max_n = 3);

struct BleuSummary {
  double precision = 0.0;  // mean over samples
  double recall = 0.0;     // max over samples
  double f1 = 0.0;
};

BleuSummary summarize_bleu(std::span<const double> sample_scores);
/// Empty samples score 0 rather than throwing.
BleuSummary bleu_over_samples(std::span<const std::vector<TokenId>> samples,
                              std::span<const TokenId> reference);

struct BowScores {
  double average = 0.0;
  double extrema = 0.0;
  double greedy = 0.0;
};

/// Cosine-based similarities between the two token bags. Ids outside the
/// table use the unk row. Zero-norm vectors contribute similarity 0.
BowScores bow_similarity(std::span<const TokenId> hypothesis, std::span<const TokenId> reference,
                         const EmbeddingTable& embeddings);

struct DistinctScores {
  double intra_dist1 = 0.0;
  double intra_dist2 = 0.0;
  double inter_dist1 = 0.0;
  double inter_dist2 = 0.0;
};

/// |unique n-grams| / |n-grams| of one response; 0 when shorter than n.
double distinct_n(std::span<const TokenId> response, int n);
DistinctScores distinct(std::span<const std::vector<TokenId>> samples);

/// Produces `n` responses (without bos/eos) for every exchange's context.
using ResponseSampler = std::function<std::vector<std::vector<std::vector<TokenId>>>(
    std::span<const Exchange> contexts, std::int64_t n)>;

struct ContextScores {
  BleuSummary bleu;
  BowScores bow;  // max over samples
  DistinctScores distinct;
  double avg_length = 0.0;
};

ContextScores score_context(std::span<const std::vector<TokenId>> samples,
                            std::span<const TokenId> reference, const EmbeddingTable& embeddings);

struct EvaluateOptions {
  std::int64_t n_samples = 10;
  std::size_t chunk_size = 32;  // contexts handed to the sampler at once
};

/// Per-context scores averaged over the test set.
MetricsReport evaluate(const ResponseSampler& sampler, std::span<const Exchange> test,
                       const EmbeddingTable& embeddings, const EvaluateOptions& options = {});

}  // namespace dialogwae
