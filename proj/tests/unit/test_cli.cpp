#include "testing.hpp"

#include <cstdlib>
#include <sstream>

#include "dialogwae/commands.hpp"
#include "fixtures.hpp"

using namespace dialogwae;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json small_config(const fs::path& output_dir) {
  return {
      {"train_path", fixtures::source_path("data/toy/train.txt").string()},
      {"valid_path", fixtures::source_path("data/toy/valid.txt").string()},
      {"test_path", fixtures::source_path("data/toy/test.txt").string()},
      {"output_dir", output_dir.string()},
      {"embedding_dim", 8},
      {"utterance_hidden", 8},
      {"context_hidden", 12},
      {"decoder_hidden", 12},
      {"noise_dim", 6},
      {"latent_dim", 6},
      {"prior_hidden", 8},
      {"recognition_hidden", 8},
      {"q_hidden", 8},
      {"g_hidden", 8},
      {"critic_hidden", 8},
      {"init_range", 0.2},
      {"batch_size", 64},
      {"max_epochs", 1},
      {"n_samples", 3},
      {"max_decode_len", 10},
      {"val_max_contexts", 5},
      {"eval_max_contexts", 8},
  };
}

fs::path write_config(const fixtures::TempDir& dir, const json& config, const std::string& name = "run.json") {
  auto path = dir / name;
  fixtures::write_file(path, config.dump(2));
  return path;
}

struct CliResult {
  int code = 0;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "dialogwae");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

int run_binary(const std::string& args) {
  const std::string command = std::string(DIALOGWAE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("config validation") {
  TEST_CASE("unknown key") {
    fixtures::TempDir dir;
    auto config = small_config(dir / "out");
    config["learning_rate"] = 0.1;
    auto r = cli({"prepare", "--config", write_config(dir, config).string()});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("learning_rate") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out"));
  }

  TEST_CASE("invalid values fail before any output") {
    const std::vector<std::pair<std::string, json>> mutations = {
        {"train_path", "/nonexistent/train.txt"},
        {"corpus_format", "xml"},
        {"vocab_size", 0},
        {"context_window", 0},
        {"max_utterance_len", -1},
        {"embedding_dim", 0},
        {"latent_dim", "big"},
        {"prior", "uniform"},
        {"k", 0},
        {"tau", 0.0},
        {"n_critic", 0},
        {"batch_size", 0},
        {"ae_lr", -1.0},
        {"ae_clip", 0.0},
        {"lr_decay", 1.0},
        {"gan_lr_generator", 0.0},
        {"gan_lr_critic", -1e-5},
        {"lambda_gp", 0.0},
        {"max_epochs", 0},
        {"n_samples", 0},
        {"seed", -3},
        {"sweep_k", json::array()},
    };
    for (const auto& [key, value] : mutations) {
      fixtures::TempDir dir;
      auto config = small_config(dir / "out");
      config[key] = value;
      const auto path = write_config(dir, config);
      for (const char* command : {"prepare", "train", "sweep-k"}) {
        auto r = cli({command, "--config", path.string()});
        CHECK_MESSAGE(r.code == kExitValidation, key, " ", command);
        CHECK_MESSAGE(!fs::exists(dir / "out"), key, " ", command);
      }
    }
  }

  TEST_CASE("command line errors") {
    CHECK(cli({}).code == kExitValidation);
    CHECK(cli({"prepare"}).code == kExitValidation);
    CHECK(cli({"fly", "--config", "x.json"}).code == kExitValidation);
    CHECK(cli({"prepare", "--config", "/nonexistent/config.json"}).code == kExitValidation);
    CHECK(cli({"train", "--config", "x.json", "--all"}).code == kExitValidation);
  }

  TEST_CASE("relative paths resolve against the config file") {
    fixtures::TempDir dir;
    fixtures::write_file(dir / "cfg" / "run.json", R"({"train_path": "../data/a.txt", "output_dir": "out"})");
    auto config = load_run_config(dir / "cfg" / "run.json");
    CHECK(config.train_path == (dir / "data" / "a.txt").lexically_normal());
    CHECK(config.output_dir == (dir / "cfg" / "out").lexically_normal());
  }

  TEST_CASE("config json round trip") {
    fixtures::TempDir dir;
    auto config = config_from_json(small_config(dir / "out"), {});
    auto again = config_from_json(config_to_json(config), {});
    CHECK(config_to_json(again) == config_to_json(config));
  }
}

TEST_SUITE("prepare") {
  TEST_CASE("idempotent with identical bytes") {
    fixtures::TempDir dir;
    const auto path = write_config(dir, small_config(dir / "out"));
    REQUIRE(cli({"prepare", "--config", path.string()}).code == kExitOk);
    RunPaths paths{dir / "out"};
    const std::vector<fs::path> files{paths.vocab(), paths.train_cache(), paths.valid_cache(),
                                      paths.test_cache(), paths.embeddings()};
    std::vector<std::string> first;
    for (const auto& f : files) first.push_back(fixtures::read_file(f));
    REQUIRE(cli({"prepare", "--config", path.string()}).code == kExitOk);
    for (std::size_t i = 0; i < files.size(); ++i) {
      CHECK_MESSAGE(fixtures::read_file(files[i]) == first[i], files[i].string());
    }
  }

  TEST_CASE("seed flag and output root override") {
    fixtures::TempDir dir;
    const auto path = write_config(dir, small_config(dir / "out"));
    REQUIRE(cli({"prepare", "--config", path.string(), "--seed", "5"}).code == kExitOk);
    const auto a = fixtures::read_file(RunPaths{dir / "out"}.embeddings());
    REQUIRE(cli({"prepare", "--config", path.string(), "--seed", "6"}).code == kExitOk);
    CHECK(fixtures::read_file(RunPaths{dir / "out"}.embeddings()) != a);

    ::setenv(kOutputRootEnv, (dir / "elsewhere").c_str(), 1);
    auto r = cli({"prepare", "--config", path.string()});
    ::unsetenv(kOutputRootEnv);
    CHECK(r.code == kExitOk);
    CHECK(fs::exists(RunPaths{dir / "elsewhere"}.vocab()));
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("train, evaluate, sample and chat") {
    fixtures::TempDir dir;
    const auto path = write_config(dir, small_config(dir / "out")).string();
    REQUIRE(cli({"prepare", "--config", path}).code == kExitOk);
    auto trained = cli({"train", "--config", path});
    REQUIRE_MESSAGE(trained.code == kExitOk, trained.err);
    RunPaths paths{dir / "out"};
    CHECK(fs::exists(paths.checkpoints() / "epoch-1" / "params"));
    CHECK(fixtures::read_file(paths.train_log()).find("\"epoch\":1") != std::string::npos);

    auto evaluated = cli({"evaluate", "--config", path});
    REQUIRE_MESSAGE(evaluated.code == kExitOk, evaluated.err);
    auto metrics = json::parse(fixtures::read_file(paths.eval() / "metrics.json"));
    CHECK(metrics.contains("bleu_f1"));
    CHECK(fs::exists(paths.eval() / "metrics.csv"));

    auto sampled = cli({"sample", "--config", path, "--n-samples", "2"});
    REQUIRE(sampled.code == kExitOk);
    std::istringstream lines(sampled.out);
    std::string first;
    std::getline(lines, first);
    auto line = json::parse(first);
    CHECK(line["samples"].size() == 2);
    CHECK(line["samples"][0]["component_weights"].size() == 3);

    auto chat = cli({"chat", "--config", path}, "yes\nzzzz qqqq\n/reset\n/quit\nyes\n");
    CHECK(chat.code == kExitOk);
    CHECK(chat.out.find("model: ") != std::string::npos);
    CHECK(chat.out.find("vocabulary") != std::string::npos);
    CHECK(chat.out.find("(context cleared)") != std::string::npos);

    auto all = cli({"chat", "--config", path, "--all"}, "do you like music\n");
    CHECK(all.code == kExitOk);
    CHECK(all.out.find("model[2]") != std::string::npos);

    auto config = load_run_config(path);
    ChatSession session(load_model(*latest_checkpoint(paths.checkpoints())),
                        Vocabulary::load(paths.vocab()), config);
    for (int turn = 0; turn < 12; ++turn) {
      REQUIRE(session.respond("do you like music").understood);
      CHECK(session.context().size() == std::min<std::size_t>(10, 2 * (turn + 1)));
    }
    CHECK(session.context().back().speaker == ChatSession::kModelSpeaker);
    const auto before = session.context().size();
    CHECK_FALSE(session.respond("zzzz qqqq").understood);
    CHECK(session.context().size() == before);
    session.reset();
    CHECK(session.context().empty());

    CHECK(cli({"evaluate", "--config", path, "--checkpoint", (dir / "missing").string()}).code ==
          kExitValidation);
  }

  TEST_CASE("train before prepare is a runtime error") {
    fixtures::TempDir dir;
    const auto path = write_config(dir, small_config(dir / "out")).string();
    CHECK(cli({"train", "--config", path}).code != kExitOk);
  }

  TEST_CASE("sweep over two values of K") {
    fixtures::TempDir dir;
    const auto path = write_config(dir, small_config(dir / "out")).string();
    REQUIRE(cli({"prepare", "--config", path}).code == kExitOk);
    auto r = cli({"sweep-k", "--config", path, "--k", "1,3"});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    RunPaths paths{dir / "out"};
    auto results = json::parse(fixtures::read_file(paths.sweep() / "results.json"));
    REQUIRE(results.size() == 2);
    CHECK(results[0]["k"] == 1);
    CHECK(results[1]["k"] == 3);
    for (const auto& row : results) CHECK(row["metrics"].size() == 11);
    std::istringstream csv(fixtures::read_file(paths.sweep() / "results.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 3);
  }
}

TEST_CASE("executable exit codes") {
  fixtures::TempDir dir;
  auto config = small_config(dir / "out");
  const auto good = write_config(dir, config).string();
  config["nope"] = 1;
  const auto bad = write_config(dir, config, "bad.json").string();
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("prepare --config " + bad) == 1);
  CHECK(run_binary("prepare --config " + good) == 0);
  CHECK(run_binary("evaluate --config " + good) == 1);
}
