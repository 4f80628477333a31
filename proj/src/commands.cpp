#include "dialogwae/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace dialogwae {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void require_file(const fs::path& path, const std::string& what) {
  std::error_code ec;
  if (path.empty()) throw ValidationError(what + " is not set");
  if (!fs::is_regular_file(path, ec)) {
    throw ValidationError(what + " not found: " + path.string());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

std::vector<Exchange> exchanges_from(const fs::path& path, CorpusFormat format,
                                     const Vocabulary& vocab, const RunConfig& config,
                                     std::vector<std::string>& warnings) {
  if (path.empty()) return {};
  auto loaded = load_corpus(path, format);
  warnings.insert(warnings.end(), loaded.warnings.begin(), loaded.warnings.end());
  return make_exchanges(loaded.dialogues, vocab, static_cast<std::size_t>(config.context_window),
                        static_cast<std::size_t>(config.max_utterance_len));
}

// Checkpoints store the run configuration next to the vocabulary size the
// model was built with.
json checkpoint_snapshot(const RunConfig& config, std::size_t vocab_entries) {
  nlohmann::ordered_json j;
  j["run"] = config_to_json(config);
  j["vocab_entries"] = vocab_entries;
  return json(j);
}

ModelConfig model_config_for(const RunConfig& config, const PreparedData& data) {
  if (data.embeddings.dim() != config.model.embedding_dim) {
    throw ValidationError("embedding_dim " + std::to_string(config.model.embedding_dim) +
                          " does not match the prepared table (" +
                          std::to_string(data.embeddings.dim()) + "); rerun prepare");
  }
  ModelConfig model = config.model;
  model.vocab_size = static_cast<std::int64_t>(data.vocab.size());
  return model;
}

fs::path resolve_checkpoint(const RunConfig& config, const std::optional<fs::path>& checkpoint) {
  fs::path dir;
  if (checkpoint) {
    dir = *checkpoint;
  } else if (auto latest = latest_checkpoint(run_paths(config).checkpoints())) {
    dir = *latest;
  } else {
    throw ValidationError("no checkpoint found under " + run_paths(config).checkpoints().string());
  }
  for (const char* name : {"params", "config.json"}) require_file(dir / name, "checkpoint file");
  return dir;
}

std::span<const Exchange> capped(const std::vector<Exchange>& exchanges, std::int64_t cap) {
  std::span<const Exchange> all(exchanges);
  if (cap > 0 && static_cast<std::size_t>(cap) < all.size()) {
    return all.first(static_cast<std::size_t>(cap));
  }
  return all;
}

void write_metrics(const fs::path& dir, const MetricsReport& report) {
  write_text(dir / "metrics.json", to_json(report).dump(2) + "\n");
  write_text(dir / "metrics.csv", metrics_csv_header() + "\n" + metrics_csv_row(report) + "\n");
}

TrainResult train_model(DialogWAE model, const RunConfig& config, const PreparedData& data,
                        const fs::path& root, const std::optional<fs::path>& resume_from,
                        std::ostream& out) {
  Trainer trainer(std::move(model), config.train);
  if (resume_from) trainer.load_checkpoint(*resume_from);

  fs::create_directories(root);
  std::ofstream log(root / "train_log.jsonl",
                    resume_from ? std::ios::binary | std::ios::app : std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (root / "train_log.jsonl").string());

  TrainOptions options;
  options.checkpoint_root = root / "ckpt";
  options.config_snapshot = checkpoint_snapshot(config, data.vocab.size());
  options.log = &log;
  options.metric_embeddings = &data.embeddings;
  options.on_epoch = [&out](const EpochRecord& record) {
    out << "epoch " << record.epoch << "  l_rec " << record.l_rec << "  l_disc " << record.l_disc
        << "  lr_ae " << record.lr_ae << '\n';
  };
  return trainer.train(data.train, data.valid, options);
}

}  // namespace

RunPaths run_paths(const RunConfig& config) { return RunPaths{config.output_dir}; }

PrepareSummary cmd_prepare(const RunConfig& config, std::ostream& out) {
  validate(config);
  const auto format = parse_corpus_format(config.corpus_format);
  require_file(config.train_path, "train_path");
  if (!config.valid_path.empty()) require_file(config.valid_path, "valid_path");
  if (!config.test_path.empty()) require_file(config.test_path, "test_path");
  if (!config.embedding_path.empty()) require_file(config.embedding_path, "embedding_path");

  PrepareSummary summary;
  auto train = load_corpus(config.train_path, format);
  summary.warnings = train.warnings;
  auto vocab = Vocabulary::build(train.dialogues, static_cast<std::size_t>(config.vocab_size));
  const auto train_exchanges =
      make_exchanges(train.dialogues, vocab, static_cast<std::size_t>(config.context_window),
                     static_cast<std::size_t>(config.max_utterance_len));
  const auto valid_exchanges =
      exchanges_from(config.valid_path, format, vocab, config, summary.warnings);
  const auto test_exchanges =
      exchanges_from(config.test_path, format, vocab, config, summary.warnings);

  auto gen = make_generator(config.train.seed);
  const auto rows = static_cast<std::int64_t>(vocab.size());
  LoadedEmbeddings embeddings;
  if (config.embedding_path.empty()) {
    embeddings.table = random_embeddings(rows, config.model.embedding_dim, gen);
    embeddings.coverage.total = vocab.size() - kReservedTokens;
  } else {
    embeddings = load_embeddings(config.embedding_path, vocab, config.model.embedding_dim, gen);
  }

  const auto paths = run_paths(config);
  fs::create_directories(paths.data());
  vocab.save(paths.vocab());
  save_exchanges(paths.train_cache(), train_exchanges);
  save_exchanges(paths.valid_cache(), valid_exchanges);
  save_exchanges(paths.test_cache(), test_exchanges);
  save_embedding_table(paths.embeddings(), embeddings.table);

  summary.vocab_size = vocab.size();
  summary.train_exchanges = train_exchanges.size();
  summary.valid_exchanges = valid_exchanges.size();
  summary.test_exchanges = test_exchanges.size();
  summary.coverage = embeddings.coverage;

  for (const auto& w : summary.warnings) out << "warning: " << w << '\n';
  nlohmann::ordered_json report;
  report["vocab_size"] = summary.vocab_size;
  report["train_exchanges"] = summary.train_exchanges;
  report["valid_exchanges"] = summary.valid_exchanges;
  report["test_exchanges"] = summary.test_exchanges;
  report["embedding_coverage"] = summary.coverage.fraction();
  out << report.dump() << '\n';
  return summary;
}

PreparedData load_prepared(const RunConfig& config) {
  const auto paths = run_paths(config);
  for (const auto& p : {paths.vocab(), paths.train_cache(), paths.valid_cache(), paths.test_cache(),
                        paths.embeddings()}) {
    require_file(p, "prepared file (run prepare first)");
  }
  PreparedData data{Vocabulary::load(paths.vocab()), load_embedding_table(paths.embeddings()),
                    load_exchanges(paths.train_cache()), load_exchanges(paths.valid_cache()),
                    load_exchanges(paths.test_cache())};
  if (data.embeddings.rows() != static_cast<std::int64_t>(data.vocab.size())) {
    throw std::runtime_error("prepared embedding table does not match the vocabulary");
  }
  return data;
}

DialogWAE build_model(ModelConfig model_config, const EmbeddingTable& embeddings,
                      std::uint64_t seed) {
  DialogWAE model(model_config);
  auto gen = make_generator(seed);
  model->reset_parameters(gen, &embeddings);
  return model;
}

DialogWAE load_model(const fs::path& checkpoint) {
  const auto stored = read_json_file(checkpoint / "config.json").at("config");
  const auto run = config_from_json(stored.at("run"));
  ModelConfig model_config = run.model;
  model_config.vocab_size = stored.at("vocab_entries").get<std::int64_t>();
  DialogWAE model(model_config);
  torch::load(model, (checkpoint / "params").string());
  model->eval();
  return model;
}

TrainResult cmd_train(const RunConfig& config, const std::optional<fs::path>& resume_from,
                      std::ostream& out) {
  validate(config);
  if (resume_from) resolve_checkpoint(config, resume_from);
  const auto data = load_prepared(config);
  if (data.train.empty()) throw ValidationError("prepared training set is empty");
  const auto model_config = model_config_for(config, data);

  const auto paths = run_paths(config);
  if (!resume_from) fs::remove_all(paths.checkpoints());
  auto model = build_model(model_config, data.embeddings, config.train.seed);
  return train_model(model, config, data, paths.root, resume_from, out);
}

MetricsReport cmd_evaluate(const RunConfig& config, const std::optional<fs::path>& checkpoint,
                           std::ostream& out) {
  validate(config);
  const auto dir = resolve_checkpoint(config, checkpoint);
  const auto data = load_prepared(config);
  if (data.test.empty()) throw ValidationError("prepared test set is empty (set test_path)");

  auto model = load_model(dir);
  const auto report = evaluate_model(model, capped(data.test, config.eval_max_contexts),
                                     data.embeddings, config.train.n_samples, config.train.seed,
                                     config.train.max_decode_len);
  write_metrics(run_paths(config).eval(), report);
  out << to_json(report).dump(2) << '\n';
  return report;
}

std::vector<SweepRow> cmd_sweep_k(const RunConfig& config, std::ostream& out) {
  validate(config);
  const auto data = load_prepared(config);
  if (data.train.empty()) throw ValidationError("prepared training set is empty");
  const auto& eval_set = data.test.empty() ? data.valid : data.test;
  if (eval_set.empty()) throw ValidationError("sweep-k needs a test or validation set");
  model_config_for(config, data);

  const auto sweep_root = run_paths(config).sweep();
  std::vector<SweepRow> rows;
  for (auto k : config.sweep_k) {
    RunConfig run = config;
    run.model.prior = PriorKind::kMixture;
    run.model.components = k;
    const auto root = sweep_root / ("k-" + std::to_string(k));
    fs::remove_all(root / "ckpt");
    out << "K = " << k << '\n';
    auto model = build_model(model_config_for(run, data), data.embeddings, run.train.seed);
    train_model(model, run, data, root, std::nullopt, out);
    const auto report = evaluate_model(model, capped(eval_set, run.eval_max_contexts),
                                       data.embeddings, run.train.n_samples, run.train.seed,
                                       run.train.max_decode_len);
    write_metrics(root / "eval", report);
    rows.push_back({k, report});
  }

  json table = json::array();
  std::string csv = "k," + metrics_csv_header() + "\n";
  for (const auto& row : rows) {
    nlohmann::ordered_json entry;
    entry["k"] = row.k;
    entry["metrics"] = to_json(row.metrics);
    table.push_back(json(entry));
    csv += std::to_string(row.k) + "," + metrics_csv_row(row.metrics) + "\n";
  }
  write_text(sweep_root / "results.json", table.dump(2) + "\n");
  write_text(sweep_root / "results.csv", csv);
  out << csv;
  return rows;
}

void cmd_sample(const RunConfig& config, const std::optional<fs::path>& checkpoint,
                std::ostream& out) {
  validate(config);
  const auto dir = resolve_checkpoint(config, checkpoint);
  const auto data = load_prepared(config);
  if (data.test.empty()) throw ValidationError("prepared test set is empty (set test_path)");

  auto model = load_model(dir);
  auto gen = make_generator(config.train.seed);
  const auto contexts = capped(data.test, config.eval_max_contexts);
  constexpr std::size_t kChunk = 32;
  for (std::size_t begin = 0; begin < contexts.size(); begin += kChunk) {
    const auto part = contexts.subspan(begin, std::min(kChunk, contexts.size() - begin));
    torch::Tensor c;
    {
      torch::NoGradGuard no_grad;
      c = model->encode_context(collate(part));
    }
    const auto sampled =
        model->sample_responses(c, config.train.n_samples, gen, config.train.max_decode_len);
    for (std::size_t i = 0; i < part.size(); ++i) {
      nlohmann::ordered_json line;
      json context = json::array();
      for (const auto& u : part[i].context) context.push_back(data.vocab.to_text(u.tokens));
      line["context"] = context;
      line["reference"] = data.vocab.to_text(part[i].response.tokens);
      json samples = json::array();
      for (const auto& s : sampled[i]) {
        nlohmann::ordered_json entry;
        entry["response"] = data.vocab.to_text(s.tokens);
        entry["component_weights"] = s.component_weights;
        samples.push_back(json(entry));
      }
      line["samples"] = samples;
      out << line.dump() << '\n';
    }
  }
}

ChatSession::ChatSession(DialogWAE model, Vocabulary vocab, const RunConfig& config)
    : model_(std::move(model)),
      vocab_(std::move(vocab)),
      window_(static_cast<std::size_t>(config.context_window)),
      max_utterance_len_(static_cast<std::size_t>(config.max_utterance_len)),
      max_decode_len_(config.train.max_decode_len),
      n_samples_(config.train.n_samples),
      generator_(make_generator(config.train.seed)) {
  model_->eval();
}

void ChatSession::push(Utterance utterance) {
  context_.push_back(std::move(utterance));
  while (context_.size() > window_) context_.pop_front();
}

ChatReply ChatSession::respond(const std::string& line) {
  RawUtterance raw;
  raw.speaker = kUserSpeaker;
  std::istringstream words(line);
  for (std::string w; words >> w;) raw.tokens.push_back(w);

  ChatReply reply;
  const bool known = std::any_of(raw.tokens.begin(), raw.tokens.end(),
                                 [&](const std::string& w) { return vocab_.contains(w); });
  if (!known) return reply;
  reply.understood = true;
  push(encode_utterance(raw, vocab_, max_utterance_len_));

  Exchange exchange;
  exchange.context.assign(context_.begin(), context_.end());
  exchange.response = Utterance{{kEosId}, kModelSpeaker};
  for (const auto& u : exchange.context) exchange.floors.push_back(u.speaker == kModelSpeaker);

  torch::Tensor c;
  {
    torch::NoGradGuard no_grad;
    c = model_->encode_context(collate(std::span<const Exchange>(&exchange, 1)));
  }
  reply.samples = std::move(model_->sample_responses(c, n_samples_, generator_, max_decode_len_)[0]);

  Utterance own;
  own.speaker = kModelSpeaker;
  own.tokens = reply.samples.front().tokens;
  if (own.tokens.size() > max_utterance_len_) own.tokens.resize(max_utterance_len_);
  own.tokens.push_back(kEosId);
  push(std::move(own));
  return reply;
}

int run_chat(ChatSession& session, std::istream& in, std::ostream& out, bool show_all) {
  for (std::string line; std::getline(in, line);) {
    if (line == "/quit") break;
    if (line == "/reset") {
      session.reset();
      out << "(context cleared)\n";
      continue;
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto reply = session.respond(line);
    if (!reply.understood) {
      out << "(none of those words are in the vocabulary; try rephrasing)\n";
      continue;
    }
    if (!show_all) {
      out << "model: " << session.vocab().to_text(reply.samples.front().tokens) << '\n';
      continue;
    }
    for (std::size_t i = 0; i < reply.samples.size(); ++i) {
      const auto& s = reply.samples[i];
      out << "model[" << i << "]: " << session.vocab().to_text(s.tokens);
      if (!s.component_weights.empty()) {
        out << "  weights:";
        for (double w : s.component_weights) out << ' ' << w;
      }
      out << '\n';
    }
  }
  out << std::flush;
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Conditional Wasserstein autoencoder for dialogue response generation",
               "dialogwae"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> checkpoint;
  std::optional<std::uint64_t> seed;
  std::vector<std::int64_t> k_values;
  std::optional<std::int64_t> n_samples;
  bool show_all = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--k", k_values, "mixture components (comma list for sweep-k)")
        ->delimiter(',');
    sub->add_option("--n-samples", n_samples, "responses sampled per context");
  };
  auto* prepare = app.add_subcommand("prepare", "build vocabulary, embeddings and exchange caches");
  auto* train = app.add_subcommand("train", "train a model, checkpointing every epoch");
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test set");
  auto* sweep = app.add_subcommand("sweep-k", "train and evaluate one model per K");
  auto* sample = app.add_subcommand("sample", "print sampled responses for test contexts");
  auto* chat = app.add_subcommand("chat", "interactive session with a checkpoint");
  for (auto* sub : {prepare, train, evaluate, sweep, sample, chat}) add_common(sub);
  for (auto* sub : {train, evaluate, sample, chat}) {
    sub->add_option("--checkpoint", checkpoint, "checkpoint directory (epoch-N)");
  }
  chat->add_flag("--all", show_all, "print every sample with its component weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  torch::set_num_threads(1);
  try {
    RunConfig config = load_run_config(config_path);
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
      config.output_dir = root;
    }
    if (seed) config.train.seed = *seed;
    if (n_samples) config.train.n_samples = *n_samples;
    if (!k_values.empty()) {
      if (sweep->parsed()) {
        config.sweep_k = k_values;
      } else if (k_values.size() == 1) {
        config.model.components = k_values.front();
      } else {
        throw ValidationError("--k takes a single value outside sweep-k");
      }
    }
    validate(config);

    std::optional<fs::path> ckpt;
    if (checkpoint) ckpt = fs::path(*checkpoint);

    if (prepare->parsed()) {
      cmd_prepare(config, out);
    } else if (train->parsed()) {
      const auto result = cmd_train(config, ckpt, out);
      out << "last checkpoint: " << result.last_checkpoint.string() << '\n';
    } else if (evaluate->parsed()) {
      cmd_evaluate(config, ckpt, out);
    } else if (sweep->parsed()) {
      cmd_sweep_k(config, out);
    } else if (sample->parsed()) {
      cmd_sample(config, ckpt, out);
    } else if (chat->parsed()) {
      const auto dir = resolve_checkpoint(config, ckpt);
      auto vocab = Vocabulary::load(run_paths(config).vocab());
      ChatSession session(load_model(dir), std::move(vocab), config);
      return run_chat(session, in, out, show_all);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const CorpusError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const TrainingDiverged& e) {
    err << "error: " << e.what();
    if (!e.last_good_checkpoint().empty()) {
      err << " (last good checkpoint: " << e.last_good_checkpoint().string() << ")";
    }
    err << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace dialogwae
