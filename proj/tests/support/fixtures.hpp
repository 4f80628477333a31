#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dialogwae/commands.hpp"
#include "dialogwae/config.hpp"
#include "dialogwae/corpus.hpp"
#include "dialogwae/model.hpp"

namespace fixtures {

std::filesystem::path source_path(const std::string& relative);

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

/// Small dimensions for fast unit tests.
dialogwae::ModelConfig tiny_model_config(std::int64_t vocab_size);

/// Random exchanges over ids [4, vocab_size).
std::vector<dialogwae::Exchange> random_exchanges(std::size_t count, std::int64_t vocab_size,
                                                  std::uint64_t seed, std::size_t max_context = 3,
                                                  std::size_t max_len = 6);

/// The bundled toy configuration with its output redirected to `output_dir`.
dialogwae::RunConfig toy_run_config(const std::filesystem::path& output_dir);

/// Copies of every parameter keyed by name.
std::vector<std::pair<std::string, torch::Tensor>> snapshot(torch::nn::Module& module);

/// Names whose tensors differ from `before`.
std::vector<std::string> changed_parameters(
    torch::nn::Module& module, const std::vector<std::pair<std::string, torch::Tensor>>& before);

}  // namespace fixtures
