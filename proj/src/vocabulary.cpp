#include <algorithm>
#include <fstream>

#include "dialogwae/corpus.hpp"

namespace dialogwae {

namespace {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> tokens = {"<pad>", "<unk>", "<s>", "</s>"};
  return tokens;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<TokenId>(i));
  }
}

Vocabulary Vocabulary::build(std::span<const Dialogue> dialogues, std::size_t limit) {
  if (limit < 1) throw std::invalid_argument("vocabulary limit must be >= 1");

  struct Entry {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> stats;
  std::vector<std::string> order;
  const auto& reserved = reserved_tokens();
  for (const auto& dialogue : dialogues) {
    for (const auto& utt : dialogue.utterances) {
      for (const auto& tok : utt.tokens) {
        if (std::find(reserved.begin(), reserved.end(), tok) != reserved.end()) continue;
        auto [it, inserted] = stats.try_emplace(tok);
        if (inserted) {
          it->second.first_seen = order.size();
          order.push_back(tok);
        }
        ++it->second.count;
      }
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    return stats[a].count > stats[b].count;
  });
  if (order.size() > limit) order.resize(limit);

  std::vector<std::string> tokens = reserved;
  tokens.insert(tokens.end(), order.begin(), order.end());
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError(path, 0, "cannot open vocabulary file");
  std::vector<std::string> tokens;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line.find_first_of(" \t") != std::string::npos) {
      throw CorpusError(path, line_no, "vocabulary lines must hold exactly one token");
    }
    tokens.push_back(line);
  }
  const auto& reserved = reserved_tokens();
  if (tokens.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), tokens.begin())) {
    throw CorpusError(path, 0, "vocabulary must start with <pad> <unk> <s> </s>");
  }
  Vocabulary vocab(std::move(tokens));
  if (vocab.index_.size() != vocab.tokens_.size()) {
    throw CorpusError(path, 0, "duplicate vocabulary entry");
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError(path, 0, "cannot write vocabulary file");
  for (const auto& tok : tokens_) out << tok << '\n';
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    return tokens_[static_cast<std::size_t>(kUnkId)];
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(id(tok));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (TokenId id : ids) tokens.push_back(token(id));
  return tokens;
}

std::string Vocabulary::to_text(std::span<const TokenId> ids) const {
  std::string text;
  for (TokenId id : ids) {
    if (id == kEosId) break;
    if (id == kPadId || id == kBosId) continue;
    if (!text.empty()) text += ' ';
    text += token(id);
  }
  return text;
}

}  // namespace dialogwae
