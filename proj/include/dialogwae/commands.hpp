#pragma once

// Subcommands behind the `dialogwae` executable. Each one validates its
// inputs completely before touching the output directory.

#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dialogwae/config.hpp"
#include "dialogwae/corpus.hpp"
#include "dialogwae/metrics.hpp"
#include "dialogwae/model.hpp"
#include "dialogwae/trainer.hpp"

namespace dialogwae {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

RunPaths run_paths(const RunConfig& config);

struct PrepareSummary {
  std::size_t vocab_size = 0;
  std::size_t train_exchanges = 0;
  std::size_t valid_exchanges = 0;
  std::size_t test_exchanges = 0;
  EmbeddingCoverage coverage;
  std::vector<std::string> warnings;
};

PrepareSummary cmd_prepare(const RunConfig& config, std::ostream& out);

/// Everything `prepare` wrote.
struct PreparedData {
  Vocabulary vocab;
  EmbeddingTable embeddings;
  std::vector<Exchange> train;
  std::vector<Exchange> valid;
  std::vector<Exchange> test;
};

PreparedData load_prepared(const RunConfig& config);

/// Fresh model whose word embedding starts from `embeddings`.
DialogWAE build_model(ModelConfig model_config, const EmbeddingTable& embeddings,
                      std::uint64_t seed);

/// Model rebuilt from a checkpoint's own configuration and parameters.
DialogWAE load_model(const std::filesystem::path& checkpoint);

/// Trains from scratch, or resumes when `resume_from` names a checkpoint.
TrainResult cmd_train(const RunConfig& config,
                      const std::optional<std::filesystem::path>& resume_from, std::ostream& out);

/// Defaults to the latest checkpoint of the run.
MetricsReport cmd_evaluate(const RunConfig& config,
                           const std::optional<std::filesystem::path>& checkpoint,
                           std::ostream& out);

struct SweepRow {
  std::int64_t k = 0;
  MetricsReport metrics;
};

/// One mixture-prior model per K in `config.sweep_k`, all with the same seed.
std::vector<SweepRow> cmd_sweep_k(const RunConfig& config, std::ostream& out);

/// JSON line per test context with every sampled response.
void cmd_sample(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint,
                std::ostream& out);

struct ChatReply {
  bool understood = false;  // false when the input has no known word
  std::vector<SampledResponse> samples;
};

class ChatSession {
 public:
  ChatSession(DialogWAE model, Vocabulary vocab, const RunConfig& config);

  ChatReply respond(const std::string& line);
  void reset() { context_.clear(); }
  const std::deque<Utterance>& context() const { return context_; }
  const Vocabulary& vocab() const { return vocab_; }

  static constexpr const char* kUserSpeaker = "user";
  static constexpr const char* kModelSpeaker = "model";

 private:
  void push(Utterance utterance);

  DialogWAE model_;
  Vocabulary vocab_;
  std::size_t window_;
  std::size_t max_utterance_len_;
  std::int64_t max_decode_len_;
  std::int64_t n_samples_;
  at::Generator generator_;
  std::deque<Utterance> context_;
};

/// Read-eval loop over `in`. `/reset` clears the context, `/quit` ends it.
int run_chat(ChatSession& session, std::istream& in, std::ostream& out, bool show_all);

/// Full command line handling; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace dialogwae
