#include "dialogwae/corpus.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dialogwae {

namespace {

std::vector<std::string> split_whitespace(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(std::move(tok));
  return tokens;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

Dialogue parse_delimited(const std::string& line, const std::filesystem::path& path,
                         std::size_t line_no) {
  Dialogue dialogue;
  std::vector<std::string> current;
  auto flush = [&](bool trailing) {
    if (current.empty()) {
      if (trailing) return;
      throw CorpusError(path, line_no, "empty utterance between delimiters");
    }
    const char* speaker = dialogue.utterances.size() % 2 == 0 ? "A" : "B";
    dialogue.utterances.push_back({std::move(current), speaker});
    current.clear();
  };
  for (auto& tok : split_whitespace(line)) {
    if (tok == kUtteranceDelimiter) {
      flush(false);
    } else {
      current.push_back(std::move(tok));
    }
  }
  flush(true);
  return dialogue;
}

Dialogue parse_json_line(const std::string& line, const std::filesystem::path& path,
                         std::size_t line_no) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw CorpusError(path, line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!record.is_object() || !record.contains("utterances") || !record.contains("speakers")) {
    throw CorpusError(path, line_no, "record needs 'utterances' and 'speakers'");
  }
  const auto& utts = record["utterances"];
  const auto& speakers = record["speakers"];
  if (!utts.is_array() || !speakers.is_array() || utts.size() != speakers.size()) {
    throw CorpusError(path, line_no, "'utterances' and 'speakers' must be arrays of equal length");
  }
  Dialogue dialogue;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (!utts[i].is_string() || !speakers[i].is_string()) {
      throw CorpusError(path, line_no, "utterances and speakers must be strings");
    }
    auto tokens = split_whitespace(utts[i].get<std::string>());
    if (tokens.empty()) throw CorpusError(path, line_no, "empty utterance");
    dialogue.utterances.push_back({std::move(tokens), speakers[i].get<std::string>()});
  }
  return dialogue;
}

}  // namespace

CorpusError::CorpusError(const std::filesystem::path& file, std::size_t line,
                         const std::string& what)
    : std::runtime_error(file.string() + (line > 0 ? ":" + std::to_string(line) : "") + ": " +
                         what),
      file_(file),
      line_(line) {}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "delimited") return CorpusFormat::kDelimited;
  if (name == "jsonl") return CorpusFormat::kJsonLines;
  throw std::invalid_argument("unknown corpus format '" + std::string(name) +
                              "' (expected 'delimited' or 'jsonl')");
}

std::string_view corpus_format_name(CorpusFormat format) {
  return format == CorpusFormat::kDelimited ? "delimited" : "jsonl";
}

CorpusLoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw CorpusError(path, 0, "cannot open corpus file");

  CorpusLoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    Dialogue dialogue = format == CorpusFormat::kDelimited ? parse_delimited(line, path, line_no)
                                                           : parse_json_line(line, path, line_no);
    if (dialogue.utterances.size() < 2) {
      result.warnings.push_back(path.string() + ":" + std::to_string(line_no) +
                                ": dialogue with fewer than 2 utterances dropped");
      continue;
    }
    result.dialogues.push_back(std::move(dialogue));
  }
  return result;
}

std::span<const TokenId> Utterance::words() const {
  std::span<const TokenId> all(tokens);
  if (!all.empty() && all.back() == kEosId) return all.first(all.size() - 1);
  return all;
}

Utterance encode_utterance(const RawUtterance& raw, const Vocabulary& vocab,
                           std::size_t max_utterance_len) {
  const std::size_t keep = std::min(raw.tokens.size(), max_utterance_len);
  Utterance utt;
  utt.speaker = raw.speaker;
  utt.tokens = vocab.encode(std::span<const std::string>(raw.tokens).first(keep));
  utt.tokens.push_back(kEosId);
  return utt;
}

std::vector<Exchange> make_exchanges(std::span<const Dialogue> dialogues, const Vocabulary& vocab,
                                     std::size_t context_window, std::size_t max_utterance_len) {
  if (context_window < 1) throw std::invalid_argument("context_window must be >= 1");
  std::vector<Exchange> exchanges;
  for (const auto& dialogue : dialogues) {
    std::vector<Utterance> encoded;
    encoded.reserve(dialogue.utterances.size());
    for (const auto& raw : dialogue.utterances) {
      encoded.push_back(encode_utterance(raw, vocab, max_utterance_len));
    }
    for (std::size_t t = 1; t < encoded.size(); ++t) {
      const std::size_t begin = t > context_window ? t - context_window : 0;
      Exchange ex;
      ex.response = encoded[t];
      for (std::size_t i = begin; i < t; ++i) {
        ex.context.push_back(encoded[i]);
        ex.floors.push_back(encoded[i].speaker == ex.response.speaker ? 1 : 0);
      }
      exchanges.push_back(std::move(ex));
    }
  }
  return exchanges;
}

at::Generator make_generator(std::uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

}  // namespace dialogwae
