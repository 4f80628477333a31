#include "fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace fixtures {

namespace fs = std::filesystem;

fs::path source_path(const std::string& relative) { return fs::path(DIALOGWAE_SOURCE_DIR) / relative; }

TempDir::TempDir() {
  static std::random_device device;
  const auto base = fs::temp_directory_path();
  for (;;) {
    auto candidate = base / ("dialogwae-test-" + std::to_string(device()));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

dialogwae::ModelConfig tiny_model_config(std::int64_t vocab_size) {
  dialogwae::ModelConfig c;
  c.vocab_size = vocab_size;
  c.embedding_dim = 8;
  c.utterance_hidden = 6;
  c.context_hidden = 10;
  c.decoder_hidden = 12;
  c.noise_dim = 5;
  c.latent_dim = 7;
  c.prior_hidden = 9;
  c.recognition_hidden = 9;
  c.q_hidden = 11;
  c.g_hidden = 11;
  c.critic_hidden = 13;
  c.components = 3;
  c.init_range = 0.2;
  return c;
}

std::vector<dialogwae::Exchange> random_exchanges(std::size_t count, std::int64_t vocab_size,
                                                  std::uint64_t seed, std::size_t max_context,
                                                  std::size_t max_len) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto utterance = [&](const std::string& speaker) {
    dialogwae::Utterance u;
    u.speaker = speaker;
    const auto len = pick(1, max_len);
    for (std::size_t i = 0; i < len; ++i) {
      u.tokens.push_back(static_cast<dialogwae::TokenId>(pick(4, static_cast<std::size_t>(vocab_size - 1))));
    }
    u.tokens.push_back(dialogwae::kEosId);
    return u;
  };
  std::vector<dialogwae::Exchange> out;
  for (std::size_t i = 0; i < count; ++i) {
    dialogwae::Exchange e;
    const auto turns = pick(1, max_context);
    for (std::size_t t = 0; t < turns; ++t) {
      e.context.push_back(utterance((turns - t) % 2 == 0 ? "A" : "B"));
      e.floors.push_back((turns - t) % 2 == 0 ? 1 : 0);
    }
    e.response = utterance("A");
    out.push_back(std::move(e));
  }
  return out;
}

dialogwae::RunConfig toy_run_config(const fs::path& output_dir) {
  auto config = dialogwae::load_run_config(source_path("configs/toy.json"));
  config.output_dir = output_dir;
  return config;
}

std::vector<std::pair<std::string, torch::Tensor>> snapshot(torch::nn::Module& module) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& item : module.named_parameters()) {
    out.emplace_back(item.key(), item.value().detach().clone());
  }
  return out;
}

std::vector<std::string> changed_parameters(
    torch::nn::Module& module, const std::vector<std::pair<std::string, torch::Tensor>>& before) {
  std::vector<std::string> changed;
  const auto now = module.named_parameters();
  for (const auto& [name, value] : before) {
    if (!torch::equal(now[name], value)) changed.push_back(name);
  }
  return changed;
}

}  // namespace fixtures
