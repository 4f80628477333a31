#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "dialogwae/metrics.hpp"

namespace dialogwae {

namespace {

using Vec = std::vector<double>;

std::vector<Vec> lookup(std::span<const TokenId> tokens, const EmbeddingTable& embeddings) {
  const auto rows = embeddings.rows();
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (TokenId id : tokens) ids.push_back((id >= 0 && id < rows) ? id : kUnkId);
  auto index = torch::tensor(ids, torch::kInt64);
  auto picked = embeddings.weights.index_select(0, index).to(torch::kFloat64).contiguous();
  const auto dim = picked.size(1);
  const double* data = picked.data_ptr<double>();
  std::vector<Vec> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = static_cast<std::int64_t>(i);
    out.emplace_back(data + row * dim, data + (row + 1) * dim);
  }
  return out;
}

double cosine(const Vec& a, const Vec& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Vec mean_vector(const std::vector<Vec>& vectors) {
  Vec out(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  for (auto& x : out) x /= static_cast<double>(vectors.size());
  return out;
}

Vec extrema_vector(const std::vector<Vec>& vectors) {
  const auto dim = vectors.front().size();
  Vec out(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    double hi = vectors.front()[i], lo = hi;
    for (const auto& v : vectors) {
      hi = std::max(hi, v[i]);
      lo = std::min(lo, v[i]);
    }
    out[i] = std::abs(hi) >= std::abs(lo) ? hi : lo;
  }
  return out;
}

double greedy_direction(const std::vector<Vec>& from, const std::vector<Vec>& to) {
  double total = 0.0;
  for (const auto& a : from) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& b : to) best = std::max(best, cosine(a, b));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

std::vector<std::vector<TokenId>> ngrams(std::span<const TokenId> tokens, int n) {
  std::vector<std::vector<TokenId>> out;
  const auto len = static_cast<int>(tokens.size());
  for (int i = 0; i + n <= len; ++i) out.emplace_back(tokens.begin() + i, tokens.begin() + i + n);
  return out;
}

double inter_distinct(std::span<const std::vector<TokenId>> samples, int n) {
  std::set<std::vector<TokenId>> unique;
  std::size_t total = 0;
  for (const auto& s : samples) {
    for (auto& g : ngrams(s, n)) {
      unique.insert(std::move(g));
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(unique.size()) / static_cast<double>(total);
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["bleu_recall"] = r.bleu_recall;
  j["bleu_precision"] = r.bleu_precision;
  j["bleu_f1"] = r.bleu_f1;
  j["bow_average"] = r.bow_average;
  j["bow_extrema"] = r.bow_extrema;
  j["bow_greedy"] = r.bow_greedy;
  j["intra_dist1"] = r.intra_dist1;
  j["intra_dist2"] = r.intra_dist2;
  j["inter_dist1"] = r.inter_dist1;
  j["inter_dist2"] = r.inter_dist2;
  j["avg_length"] = r.avg_length;
  return nlohmann::json(j);
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.bleu_recall = j.at("bleu_recall").get<double>();
  r.bleu_precision = j.at("bleu_precision").get<double>();
  r.bleu_f1 = j.at("bleu_f1").get<double>();
  r.bow_average = j.at("bow_average").get<double>();
  r.bow_extrema = j.at("bow_extrema").get<double>();
  r.bow_greedy = j.at("bow_greedy").get<double>();
  r.intra_dist1 = j.at("intra_dist1").get<double>();
  r.intra_dist2 = j.at("intra_dist2").get<double>();
  r.inter_dist1 = j.at("inter_dist1").get<double>();
  r.inter_dist2 = j.at("inter_dist2").get<double>();
  r.avg_length = j.at("avg_length").get<double>();
  return r;
}

std::string metrics_csv_header() {
  return "bleu_recall,bleu_precision,bleu_f1,bow_average,bow_extrema,bow_greedy,"
         "intra_dist1,intra_dist2,inter_dist1,inter_dist2,avg_length";
}

std::string metrics_csv_row(const MetricsReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << r.bleu_recall << ',' << r.bleu_precision << ',' << r.bleu_f1 << ','
      << r.bow_average << ',' << r.bow_extrema << ',' << r.bow_greedy << ',' << r.intra_dist1 << ','
      << r.intra_dist2 << ',' << r.inter_dist1 << ',' << r.inter_dist2 << ',' << r.avg_length;
  return out.str();
}

BowScores bow_similarity(std::span<const TokenId> hypothesis, std::span<const TokenId> reference,
                         const EmbeddingTable& embeddings) {
  if (hypothesis.empty() || reference.empty()) return {};
  const auto hyp = lookup(hypothesis, embeddings);
  const auto ref = lookup(reference, embeddings);
  BowScores out;
  out.average = cosine(mean_vector(hyp), mean_vector(ref));
  out.extrema = cosine(extrema_vector(hyp), extrema_vector(ref));
  out.greedy = 0.5 * (greedy_direction(hyp, ref) + greedy_direction(ref, hyp));
  return out;
}

double distinct_n(std::span<const TokenId> response, int n) {
  const auto grams = ngrams(response, n);
  if (grams.empty()) return 0.0;
  std::set<std::vector<TokenId>> unique(grams.begin(), grams.end());
  return static_cast<double>(unique.size()) / static_cast<double>(grams.size());
}

DistinctScores distinct(std::span<const std::vector<TokenId>> samples) {
  DistinctScores out;
  if (samples.empty()) return out;
  for (const auto& s : samples) {
    out.intra_dist1 += distinct_n(s, 1);
    out.intra_dist2 += distinct_n(s, 2);
  }
  out.intra_dist1 /= static_cast<double>(samples.size());
  out.intra_dist2 /= static_cast<double>(samples.size());
  out.inter_dist1 = inter_distinct(samples, 1);
  out.inter_dist2 = inter_distinct(samples, 2);
  return out;
}

ContextScores score_context(std::span<const std::vector<TokenId>> samples,
                            std::span<const TokenId> reference, const EmbeddingTable& embeddings) {
  ContextScores out;
  out.bleu = bleu_over_samples(samples, reference);
  if (!samples.empty()) {
    const double lowest = std::numeric_limits<double>::lowest();
    out.bow = {lowest, lowest, lowest};
  }
  for (const auto& s : samples) {
    const auto bow = bow_similarity(s, reference, embeddings);
    out.bow.average = std::max(out.bow.average, bow.average);
    out.bow.extrema = std::max(out.bow.extrema, bow.extrema);
    out.bow.greedy = std::max(out.bow.greedy, bow.greedy);
    out.avg_length += static_cast<double>(s.size());
  }
  if (!samples.empty()) out.avg_length /= static_cast<double>(samples.size());
  out.distinct = distinct(samples);
  return out;
}

MetricsReport evaluate(const ResponseSampler& sampler, std::span<const Exchange> test,
                       const EmbeddingTable& embeddings, const EvaluateOptions& options) {
  if (test.empty()) throw std::invalid_argument("evaluation needs a non-empty test set");
  if (options.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);

  MetricsReport sum;
  for (std::size_t begin = 0; begin < test.size(); begin += chunk) {
    const auto part = test.subspan(begin, std::min(chunk, test.size() - begin));
    const auto samples = sampler(part, options.n_samples);
    if (samples.size() != part.size()) {
      throw std::runtime_error("sampler returned the wrong number of contexts");
    }
    for (std::size_t i = 0; i < part.size(); ++i) {
      const auto scores = score_context(samples[i], part[i].response.words(), embeddings);
      sum.bleu_recall += scores.bleu.recall;
      sum.bleu_precision += scores.bleu.precision;
      sum.bleu_f1 += scores.bleu.f1;
      sum.bow_average += scores.bow.average;
      sum.bow_extrema += scores.bow.extrema;
      sum.bow_greedy += scores.bow.greedy;
      sum.intra_dist1 += scores.distinct.intra_dist1;
      sum.intra_dist2 += scores.distinct.intra_dist2;
      sum.inter_dist1 += scores.distinct.inter_dist1;
      sum.inter_dist2 += scores.distinct.inter_dist2;
      sum.avg_length += scores.avg_length;
    }
  }
  const auto n = static_cast<double>(test.size());
  for (double* field : {&sum.bleu_recall, &sum.bleu_precision, &sum.bleu_f1, &sum.bow_average,
                        &sum.bow_extrema, &sum.bow_greedy, &sum.intra_dist1, &sum.intra_dist2,
                        &sum.inter_dist1, &sum.inter_dist2, &sum.avg_length}) {
    *field /= n;
  }
  return sum;
}

}  // namespace dialogwae
