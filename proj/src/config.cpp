#include "dialogwae/config.hpp"

#include <charconv>
#include <fstream>
#include <type_traits>

namespace dialogwae {

namespace {

using nlohmann::json;

// Every configuration key in serialization order. `v(key, field)` is called
// once per field; prior and corpus format are handled separately.
template <class Config, class Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("train_path", c.train_path);
  v("valid_path", c.valid_path);
  v("test_path", c.test_path);
  v("corpus_format", c.corpus_format);
  v("embedding_path", c.embedding_path);
  v("output_dir", c.output_dir);
  v("vocab_size", c.vocab_size);
  v("context_window", c.context_window);
  v("max_utterance_len", c.max_utterance_len);
  v("embedding_dim", c.model.embedding_dim);
  v("utterance_hidden", c.model.utterance_hidden);
  v("context_hidden", c.model.context_hidden);
  v("decoder_hidden", c.model.decoder_hidden);
  v("noise_dim", c.model.noise_dim);
  v("latent_dim", c.model.latent_dim);
  v("prior_hidden", c.model.prior_hidden);
  v("recognition_hidden", c.model.recognition_hidden);
  v("q_hidden", c.model.q_hidden);
  v("g_hidden", c.model.g_hidden);
  v("critic_hidden", c.model.critic_hidden);
  v("prior", c.model.prior);
  v("k", c.model.components);
  v("tau", c.model.tau);
  v("init_range", c.model.init_range);
  v("point_mass_latent", c.model.point_mass_latent);
  v("decoder_feed_latent", c.model.decoder_feed_latent);
  v("n_critic", c.train.n_critic);
  v("batch_size", c.train.batch_size);
  v("ae_lr", c.train.ae_lr);
  v("ae_clip", c.train.ae_clip);
  v("lr_decay", c.train.lr_decay);
  v("lr_decay_every", c.train.lr_decay_every);
  v("gan_lr_generator", c.train.gan_lr_generator);
  v("gan_lr_critic", c.train.gan_lr_critic);
  v("lambda_gp", c.train.lambda_gp);
  v("max_epochs", c.train.max_epochs);
  v("patience", c.train.patience);
  v("seed", c.train.seed);
  v("n_samples", c.train.n_samples);
  v("max_decode_len", c.train.max_decode_len);
  v("val_max_contexts", c.train.val_max_contexts);
  v("eval_max_contexts", c.eval_max_contexts);
  v("sweep_k", c.sweep_k);
}

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
  throw ValidationError("config key '" + key + "' must be " + expected);
}

struct Reader {
  const json& source;
  std::filesystem::path base_dir;

  template <class T>
  void operator()(const char* key, T& field) const {
    auto it = source.find(key);
    if (it == source.end()) return;
    read(key, *it, field);
  }

  void read(const std::string& key, const json& value, std::filesystem::path& field) const {
    if (!value.is_string()) bad_type(key, "a string");
    std::filesystem::path p = value.get<std::string>();
    field = (p.empty() || p.is_absolute() || base_dir.empty()) ? p
                                                               : (base_dir / p).lexically_normal();
  }
  void read(const std::string& key, const json& value, std::string& field) const {
    if (!value.is_string()) bad_type(key, "a string");
    field = value.get<std::string>();
  }
  void read(const std::string& key, const json& value, PriorKind& field) const {
    if (!value.is_string()) bad_type(key, "a string");
    try {
      field = parse_prior_kind(value.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ValidationError("config key '" + key + "': " + e.what());
    }
  }
  void read(const std::string& key, const json& value, bool& field) const {
    if (!value.is_boolean()) bad_type(key, "a boolean");
    field = value.get<bool>();
  }
  void read(const std::string& key, const json& value, double& field) const {
    if (!value.is_number()) bad_type(key, "a number");
    field = value.get<double>();
  }
  template <class T>
    requires std::is_integral_v<T>
  void read(const std::string& key, const json& value, T& field) const {
    if (!value.is_number_integer()) bad_type(key, "an integer");
    if (std::is_unsigned_v<T> && !value.is_number_unsigned() && value.get<std::int64_t>() < 0) {
      bad_type(key, "a non-negative integer");
    }
    field = value.get<T>();
  }
  void read(const std::string& key, const json& value, std::vector<std::int64_t>& field) const {
    if (!value.is_array()) bad_type(key, "an array of integers");
    std::vector<std::int64_t> out;
    for (const auto& item : value) {
      if (!item.is_number_integer()) bad_type(key, "an array of integers");
      out.push_back(item.get<std::int64_t>());
    }
    field = std::move(out);
  }
};

struct Writer {
  nlohmann::ordered_json& out;

  template <class T>
  void operator()(const char* key, const T& field) const {
    if constexpr (std::is_same_v<T, std::filesystem::path>) {
      out[key] = field.string();
    } else if constexpr (std::is_same_v<T, PriorKind>) {
      out[key] = std::string(prior_kind_name(field));
    } else {
      out[key] = field;
    }
  }
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  RunConfig config;
  std::vector<std::string> known;
  visit_fields(config, [&](const char* key, auto&) { known.emplace_back(key); });
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  visit_fields(config, Reader{j, base_dir});
  return config;
}

json config_to_json(const RunConfig& config) {
  nlohmann::ordered_json out;
  RunConfig copy = config;
  visit_fields(copy, Writer{out});
  return json(out);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

void validate(const RunConfig& c) {
  try {
    parse_corpus_format(c.corpus_format);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("corpus_format: ") + e.what());
  }
  require(!c.output_dir.empty(), "output_dir must not be empty");
  require(c.vocab_size >= 1, "vocab_size must be >= 1");
  require(c.context_window >= 1, "context_window must be >= 1");
  require(c.max_utterance_len >= 1, "max_utterance_len must be >= 1");

  const auto& m = c.model;
  for (auto [name, value] : {std::pair{"embedding_dim", m.embedding_dim},
                             {"utterance_hidden", m.utterance_hidden},
                             {"context_hidden", m.context_hidden},
                             {"decoder_hidden", m.decoder_hidden},
                             {"noise_dim", m.noise_dim},
                             {"latent_dim", m.latent_dim},
                             {"prior_hidden", m.prior_hidden},
                             {"recognition_hidden", m.recognition_hidden},
                             {"q_hidden", m.q_hidden},
                             {"g_hidden", m.g_hidden},
                             {"critic_hidden", m.critic_hidden}}) {
    require(value >= 1, std::string(name) + " must be >= 1");
  }
  require(m.prior != PriorKind::kMixture || m.components >= 1, "k must be >= 1 for the mixture prior");
  require(m.tau > 0.0, "tau must be > 0");
  require(m.init_range > 0.0, "init_range must be > 0");

  const auto& t = c.train;
  require(t.n_critic >= 1, "n_critic must be >= 1");
  require(t.batch_size >= 1, "batch_size must be >= 1");
  require(t.ae_lr > 0.0, "ae_lr must be > 0");
  require(t.ae_clip > 0.0, "ae_clip must be > 0");
  require(t.lr_decay >= 0.0 && t.lr_decay < 1.0, "lr_decay must be in [0, 1)");
  require(t.lr_decay_every >= 1, "lr_decay_every must be >= 1");
  require(t.gan_lr_generator > 0.0, "gan_lr_generator must be > 0");
  require(t.gan_lr_critic > 0.0, "gan_lr_critic must be > 0");
  require(t.lambda_gp > 0.0, "lambda_gp must be > 0");
  require(t.max_epochs >= 1, "max_epochs must be >= 1");
  require(t.patience >= 1, "patience must be >= 1");
  require(t.n_samples >= 1, "n_samples must be >= 1");
  require(t.max_decode_len >= 1, "max_decode_len must be >= 1");
  require(c.eval_max_contexts >= 0, "eval_max_contexts must be >= 0");
  require(!c.sweep_k.empty(), "sweep_k must not be empty");
  for (auto k : c.sweep_k) require(k >= 1, "sweep_k entries must be >= 1");
}

std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& root) {
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec)) return std::nullopt;
  std::optional<std::filesystem::path> best;
  long best_epoch = -1;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (!name.starts_with("epoch-")) continue;
    long epoch = 0;
    const char* first = name.data() + 6;
    const char* last = name.data() + name.size();
    auto [ptr, err] = std::from_chars(first, last, epoch);
    if (err != std::errc() || ptr != last || first == last) continue;
    if (epoch > best_epoch) {
      best_epoch = epoch;
      best = entry.path();
    }
  }
  return best;
}

}  // namespace dialogwae
