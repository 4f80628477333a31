#pragma once

// Dialogue ingestion: corpus readers, vocabulary, embedding table, exchange
// extraction and padded batching.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <torch/torch.h>

namespace dialogwae {

using TokenId = std::int64_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kBosId = 2;
inline constexpr TokenId kEosId = 3;
inline constexpr std::size_t kReservedTokens = 4;

inline constexpr std::string_view kUtteranceDelimiter = "__eou__";

/// Raised for unreadable or malformed input files. `line()` is 1-based, 0 when
/// the error is not tied to a line.
class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::filesystem::path& file, std::size_t line, const std::string& what);

  const std::filesystem::path& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::filesystem::path file_;
  std::size_t line_;
};

struct RawUtterance {
  std::vector<std::string> tokens;
  std::string speaker;
};

struct Dialogue {
  std::vector<RawUtterance> utterances;
};

enum class CorpusFormat { kDelimited, kJsonLines };

/// Accepts "delimited" or "jsonl".
CorpusFormat parse_corpus_format(std::string_view name);
std::string_view corpus_format_name(CorpusFormat format);

struct CorpusLoadResult {
  std::vector<Dialogue> dialogues;
  std::vector<std::string> warnings;
};

/// Reads one dialogue per line.
///
/// Delimited lines hold utterances separated by `__eou__` with alternating
/// speakers "A"/"B". JSON-lines records carry `utterances` and `speakers`
/// arrays of equal length. Blank lines are skipped; dialogues with fewer
/// than two utterances are dropped with a warning.
CorpusLoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format);

class Vocabulary {
 public:
  /// Keeps the `limit` most frequent tokens; ties go to the token seen first.
  static Vocabulary build(std::span<const Dialogue> dialogues, std::size_t limit);
  /// One token per line in id order, reserved tokens included.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;
  /// Space-joined surface form, stopping at eos and skipping pad/bos.
  std::string to_text(std::span<const TokenId> ids) const;

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Row i holds the vector for token id i.
struct EmbeddingTable {
  torch::Tensor weights;  // [vocab, dim], float32

  std::int64_t rows() const { return weights.size(0); }
  std::int64_t dim() const { return weights.size(1); }
};

struct EmbeddingCoverage {
  std::size_t covered = 0;
  std::size_t total = 0;
  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(covered) / total; }
};

struct LoadedEmbeddings {
  EmbeddingTable table;
  EmbeddingCoverage coverage;
};

inline constexpr double kInitRange = 0.02;

EmbeddingTable random_embeddings(std::int64_t rows, std::int64_t dim, at::Generator& generator);

/// Text vectors, one "token v1 ... v_dim" per line. Vocabulary rows absent
/// from the file are drawn from U(-0.02, 0.02).
LoadedEmbeddings load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                 std::int64_t dim, at::Generator& generator);

/// Token ids always end with eos.
struct Utterance {
  std::vector<TokenId> tokens;
  std::string speaker;

  std::size_t length() const { return tokens.size(); }
  /// Tokens without the trailing eos.
  std::span<const TokenId> words() const;
};

struct Exchange {
  std::vector<Utterance> context;
  Utterance response;
  std::vector<std::uint8_t> floors;  // 1 iff context[i] shares the response speaker
};

/// Head-truncates to `max_utterance_len` ids and appends eos.
Utterance encode_utterance(const RawUtterance& raw, const Vocabulary& vocab,
                           std::size_t max_utterance_len);

/// Emits one exchange per response u_t, t = 2..k, with the preceding
/// min(t - 1, context_window) utterances as context.
std::vector<Exchange> make_exchanges(std::span<const Dialogue> dialogues, const Vocabulary& vocab,
                                     std::size_t context_window, std::size_t max_utterance_len);

/// Padded tensors for a group of exchanges. Context dimensions are padded to
/// the batch maxima; pad ids only ever follow a sequence's true length.
struct ExchangeBatch {
  torch::Tensor context_tokens;       // [B, W, L] int64
  torch::Tensor context_utt_lengths;  // [B, W] int64, 0 beyond the context length
  torch::Tensor context_lengths;      // [B] int64
  torch::Tensor floors;               // [B, W] float32
  torch::Tensor response_tokens;      // [B, R] int64
  torch::Tensor response_lengths;     // [B] int64

  std::int64_t size() const { return context_lengths.size(0); }
};

ExchangeBatch collate(std::span<const Exchange> exchanges);
ExchangeBatch collate(std::span<const std::reference_wrapper<const Exchange>> exchanges);

/// Lazily materialises shuffled mini-batches; the last batch may be partial.
class BatchStream {
 public:
  BatchStream(std::span<const Exchange> exchanges, std::size_t batch_size,
              std::optional<std::uint64_t> shuffle_seed);

  std::size_t num_batches() const;
  std::optional<ExchangeBatch> next();
  /// Exchange indices of every batch, in emission order.
  const std::vector<std::int64_t>& order() const { return order_; }

 private:
  std::span<const Exchange> exchanges_;
  std::size_t batch_size_;
  std::vector<std::int64_t> order_;
  std::size_t cursor_ = 0;
};

/// Deterministic for a given seed; `std::nullopt` keeps corpus order.
BatchStream batch_exchanges(std::span<const Exchange> exchanges, std::size_t batch_size,
                            std::optional<std::uint64_t> shuffle_seed);

/// Binary exchange cache written by `prepare`.
void save_exchanges(const std::filesystem::path& path, std::span<const Exchange> exchanges);
std::vector<Exchange> load_exchanges(const std::filesystem::path& path);

void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_embedding_table(const std::filesystem::path& path);

at::Generator make_generator(std::uint64_t seed);

}  // namespace dialogwae
