#pragma once

// Flat JSON run configuration shared by every subcommand.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dialogwae/model.hpp"
#include "dialogwae/trainer.hpp"

namespace dialogwae {

inline constexpr const char* kOutputRootEnv = "DIALOGWAE_OUTPUT_ROOT";

/// Bad configuration or arguments. Maps to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::filesystem::path train_path;
  std::filesystem::path valid_path;
  std::filesystem::path test_path;
  std::string corpus_format = "delimited";
  std::filesystem::path embedding_path;
  std::filesystem::path output_dir = "runs/default";

  std::int64_t vocab_size = 10000;
  std::int64_t context_window = 10;
  std::int64_t max_utterance_len = 40;

  ModelConfig model;
  TrainConfig train;

  std::int64_t eval_max_contexts = 0;  // 0 evaluates every test exchange
  std::vector<std::int64_t> sweep_k = {1, 2, 3, 4, 5, 6, 7, 8, 9};
};

/// Unknown keys and mistyped values are rejected. Relative paths resolve
/// against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

/// Range checks on every field. Paths are checked by the commands that use them.
void validate(const RunConfig& config);

/// Layout below `output_dir`.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path vocab() const { return data() / "vocab.txt"; }
  std::filesystem::path train_cache() const { return data() / "train.bin"; }
  std::filesystem::path valid_cache() const { return data() / "valid.bin"; }
  std::filesystem::path test_cache() const { return data() / "test.bin"; }
  std::filesystem::path embeddings() const { return data() / "embeddings.bin"; }
  std::filesystem::path checkpoints() const { return root / "ckpt"; }
  std::filesystem::path train_log() const { return root / "train_log.jsonl"; }
  std::filesystem::path eval() const { return root / "eval"; }
  std::filesystem::path sweep() const { return root / "sweep"; }
};

/// Highest `epoch-N` directory below `checkpoint_root`, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& checkpoint_root);

}  // namespace dialogwae
