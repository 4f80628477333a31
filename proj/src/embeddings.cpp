#include <fstream>
#include <sstream>

#include "dialogwae/corpus.hpp"

namespace dialogwae {

EmbeddingTable random_embeddings(std::int64_t rows, std::int64_t dim, at::Generator& generator) {
  auto weights = torch::empty({rows, dim}, torch::kFloat32);
  weights.uniform_(-kInitRange, kInitRange, generator);
  return {weights};
}

LoadedEmbeddings load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                 std::int64_t dim, at::Generator& generator) {
  std::ifstream in(path);
  if (!in) throw CorpusError(path, 0, "cannot open embedding file");

  const auto rows = static_cast<std::int64_t>(vocab.size());
  // Coverage counts ordinary tokens only; reserved symbols never appear in pretrained files.
  LoadedEmbeddings result{random_embeddings(rows, dim, generator),
                          {0, vocab.size() - kReservedTokens}};
  auto table = result.table.weights.accessor<float, 2>();
  std::vector<bool> seen(vocab.size(), false);

  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<float> values;
    values.reserve(static_cast<std::size_t>(dim));
    for (std::string field; fields >> field;) {
      try {
        values.push_back(std::stof(field));
      } catch (const std::exception&) {
        throw CorpusError(path, line_no, "non-numeric embedding value '" + field + "'");
      }
    }
    if (static_cast<std::int64_t>(values.size()) != dim) {
      throw CorpusError(path, line_no,
                        "embedding dimension " + std::to_string(values.size()) +
                            " does not match expected " + std::to_string(dim));
    }
    if (!vocab.contains(token)) continue;
    const auto id = vocab.id(token);
    for (std::int64_t j = 0; j < dim; ++j) table[id][j] = values[static_cast<std::size_t>(j)];
    if (static_cast<std::size_t>(id) >= kReservedTokens && !seen[static_cast<std::size_t>(id)]) {
      seen[static_cast<std::size_t>(id)] = true;
      ++result.coverage.covered;
    }
  }
  return result;
}

}  // namespace dialogwae
