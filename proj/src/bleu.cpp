// Sentence BLEU with smoothing 7, following NLTK's sentence_bleu step by step
// so that scores agree with the widely used reference implementation:
//   * modified precisions p_n = clipped matches / max(1, hypothesis n-grams)
//   * 0 when there is no unigram match
//   * method 4: zero-match orders get 1 / (2^i * 5 / ln(hyp_len)) / denominator
//   * method 5: p_n <- (m_{n-1} + p_n + p_{n+1}) / 3 with m_0 = p_1 + 1; the
//     extra (n+1) term is NLTK's 5-gram precision regardless of max_n.

#include <cmath>
#include <map>
#include <stdexcept>

#include "dialogwae/metrics.hpp"

namespace dialogwae {

namespace {

using NGram = std::vector<TokenId>;

std::map<NGram, int> count_ngrams(std::span<const TokenId> tokens, int n) {
  std::map<NGram, int> counts;
  const auto len = static_cast<int>(tokens.size());
  for (int i = 0; i + n <= len; ++i) {
    ++counts[NGram(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

struct Precision {
  long numerator = 0;
  long denominator = 1;
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

Precision modified_precision(std::span<const TokenId> hypothesis,
                             std::span<const TokenId> reference, int n) {
  const auto hyp_counts = count_ngrams(hypothesis, n);
  const auto ref_counts = count_ngrams(reference, n);
  long matched = 0, total = 0;
  for (const auto& [gram, count] : hyp_counts) {
    total += count;
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) matched += std::min(count, it->second);
  }
  return {matched, std::max<long>(1, total)};
}

constexpr double kMethod4K = 5.0;
constexpr int kMethod5ExtraOrder = 5;

}  // namespace

double smoothed_sentence_bleu(std::span<const TokenId> hypothesis,
                              std::span<const TokenId> reference, int max_n) {
  if (hypothesis.empty()) throw std::invalid_argument("BLEU needs a non-empty hypothesis");
  if (reference.empty()) throw std::invalid_argument("BLEU needs a non-empty reference");
  if (max_n < 1) throw std::invalid_argument("max_n must be >= 1");

  std::vector<Precision> raw;
  for (int n = 1; n <= max_n; ++n) raw.push_back(modified_precision(hypothesis, reference, n));
  if (raw[0].numerator == 0) return 0.0;

  const auto hyp_len = static_cast<double>(hypothesis.size());
  const auto ref_len = static_cast<double>(reference.size());
  const double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);

  std::vector<double> p;
  p.reserve(raw.size());
  for (const auto& r : raw) p.push_back(r.value());

  // Method 4.
  int increment = 1;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].numerator == 0 && hypothesis.size() > 1) {
      const double numerator = 1.0 / (std::pow(2.0, increment) * kMethod4K / std::log(hyp_len));
      p[i] = numerator / static_cast<double>(raw[i].denominator);
      ++increment;
    }
  }

  // Method 5.
  std::vector<double> next = p;
  next.push_back(modified_precision(hypothesis, reference, kMethod5ExtraOrder).value());
  double previous = p[0] + 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = (previous + p[i] + next[i + 1]) / 3.0;
    previous = p[i];
  }

  const double weight = 1.0 / static_cast<double>(max_n);
  double log_sum = 0.0;
  for (double pi : p) {
    if (pi > 0.0) log_sum += weight * std::log(pi);
  }
  return bp * std::exp(log_sum);
}

BleuSummary summarize_bleu(std::span<const double> sample_scores) {
  BleuSummary out;
  if (sample_scores.empty()) return out;
  double sum = 0.0;
  for (double s : sample_scores) {
    sum += s;
    out.recall = std::max(out.recall, s);
  }
  out.precision = sum / static_cast<double>(sample_scores.size());
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

BleuSummary bleu_over_samples(std::span<const std::vector<TokenId>> samples,
                              std::span<const TokenId> reference) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& sample : samples) {
    scores.push_back(sample.empty() || reference.empty()
                         ? 0.0
                         : smoothed_sentence_bleu(sample, reference));
  }
  return summarize_bleu(scores);
}

}  // namespace dialogwae
