#include "dialogwae/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace dialogwae {

namespace {

std::vector<torch::Tensor> group_params(DialogWAE& model, std::span<const ParamGroup> groups) {
  return model->parameters_of(groups);
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw TrainingDiverged(std::string(what) + " became non-finite", {});
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::uint64_t validation_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

}  // namespace

double ae_learning_rate(const TrainConfig& config, std::int64_t epoch) {
  double lr = config.ae_lr;
  const std::int64_t decays = config.lr_decay_every > 0 ? epoch / config.lr_decay_every : 0;
  for (std::int64_t i = 0; i < decays; ++i) lr *= (1.0 - config.lr_decay);
  return lr;
}

nlohmann::json to_json(const EpochRecord& record) {
  nlohmann::ordered_json j;
  j["epoch"] = record.epoch;
  j["l_rec"] = record.l_rec;
  j["l_disc"] = record.l_disc;
  j["critic_l_disc"] = record.critic_l_disc;
  j["gradient_penalty"] = record.gradient_penalty;
  j["lr_ae"] = record.lr_ae;
  j["val_l_rec"] = record.val_l_rec ? nlohmann::json(*record.val_l_rec) : nlohmann::json(nullptr);
  j["val_metrics"] = record.val_metrics ? to_json(*record.val_metrics) : nlohmann::json(nullptr);
  return nlohmann::json(j);
}

std::uint64_t config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Trainer::Trainer(DialogWAE model, TrainConfig config)
    : model_(std::move(model)),
      config_(config),
      generator_(make_generator(config.seed)),
      ae_params_(group_params(model_, kAutoencoderGroups)),
      ae_optimizer_(ae_params_, torch::optim::SGDOptions(config.ae_lr)),
      generator_optimizer_(group_params(model_, kGeneratorGroups),
                           torch::optim::RMSpropOptions(config.gan_lr_generator)),
      critic_optimizer_(group_params(model_, kCriticGroups),
                        torch::optim::RMSpropOptions(config.gan_lr_critic)) {
  if (config_.n_critic < 0) throw std::invalid_argument("n_critic must be >= 0");
  if (config_.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  set_epoch(1);
}

void Trainer::set_epoch(std::int64_t epoch) {
  epoch_ = epoch;
  const double lr = ae_learning_rate(config_, epoch);
  for (auto& group : ae_optimizer_.param_groups()) {
    static_cast<torch::optim::SGDOptions&>(group.options()).lr(lr);
  }
}

double Trainer::current_ae_lr() const {
  return static_cast<const torch::optim::SGDOptions&>(ae_optimizer_.param_groups().front().options())
      .lr();
}

EncodedExchanges Trainer::encode_frozen(const ExchangeBatch& batch) {
  torch::NoGradGuard no_grad;
  auto enc = model_->encode(batch);
  return {enc.response.detach(), enc.context.detach()};
}

double Trainer::generator_step(const EncodedExchanges& enc) {
  model_->zero_grad();
  auto posterior = model_->sample_posterior(enc.response, enc.context, generator_);
  auto prior = model_->sample_prior(enc.context, generator_);
  auto loss = discriminator_loss(model_->critic_scores(posterior.z, enc.context),
                                 model_->critic_scores(prior.z, enc.context));
  const double value = loss.item<double>();
  require_finite(value, "discriminator loss");
  (-loss).backward();
  generator_optimizer_.step();
  ++generator_updates_;
  return value;
}

CriticStepResult Trainer::critic_step(const EncodedExchanges& enc) {
  model_->zero_grad();
  torch::Tensor post_z, prior_z;
  {
    torch::NoGradGuard no_grad;
    post_z = model_->sample_posterior(enc.response, enc.context, generator_).z;
    prior_z = model_->sample_prior(enc.context, generator_).z;
  }
  auto l_disc = discriminator_loss(model_->critic_scores(post_z, enc.context),
                                   model_->critic_scores(prior_z, enc.context));
  auto penalty = gradient_penalty(model_->critic_fn(), post_z, prior_z, enc.context,
                                  config_.lambda_gp, generator_);
  CriticStepResult result{l_disc.item<double>(), penalty.item<double>()};
  require_finite(result.l_disc + result.gradient_penalty, "critic loss");
  (l_disc + penalty).backward();
  critic_optimizer_.step();
  ++critic_updates_;
  return result;
}

double Trainer::gan_generator_step(const ExchangeBatch& batch) {
  return generator_step(encode_frozen(batch));
}

CriticStepResult Trainer::gan_critic_step(const ExchangeBatch& batch) {
  return critic_step(encode_frozen(batch));
}

double Trainer::ae_step(const ExchangeBatch& batch) {
  model_->zero_grad();
  auto enc = model_->encode(batch);
  auto posterior = model_->sample_posterior(enc.response, enc.context, generator_);
  auto loss = model_->reconstruction_loss(posterior, enc.context, batch);
  const double value = loss.item<double>();
  require_finite(value, "reconstruction loss");
  loss.backward();
  torch::nn::utils::clip_grad_norm_(ae_params_, config_.ae_clip);
  ae_optimizer_.step();
  ++ae_updates_;
  return value;
}

IterationStats Trainer::train_iteration(const ExchangeBatch& batch) {
  IterationStats stats;
  // Encoders only change in the AE step, so one frozen encoding serves the
  // generator step and every critic step.
  const auto enc = encode_frozen(batch);
  stats.l_disc = generator_step(enc);
  for (std::int64_t i = 0; i < config_.n_critic; ++i) {
    const auto critic = critic_step(enc);
    stats.critic_l_disc += critic.l_disc;
    stats.gradient_penalty += critic.gradient_penalty;
  }
  if (config_.n_critic > 0) {
    stats.critic_l_disc /= static_cast<double>(config_.n_critic);
    stats.gradient_penalty /= static_cast<double>(config_.n_critic);
  }
  stats.l_rec = ae_step(batch);
  return stats;
}

EpochRecord Trainer::run_epoch(std::span<const Exchange> train, std::int64_t epoch) {
  set_epoch(epoch);
  model_->train();
  EpochRecord record;
  record.epoch = epoch;
  record.lr_ae = current_ae_lr();
  auto stream = batch_exchanges(train, static_cast<std::size_t>(config_.batch_size),
                                config_.seed + static_cast<std::uint64_t>(epoch));
  std::size_t batches = 0;
  while (auto batch = stream.next()) {
    const auto stats = train_iteration(*batch);
    record.l_rec += stats.l_rec;
    record.l_disc += stats.l_disc;
    record.critic_l_disc += stats.critic_l_disc;
    record.gradient_penalty += stats.gradient_penalty;
    ++batches;
  }
  if (batches > 0) {
    const auto n = static_cast<double>(batches);
    record.l_rec /= n;
    record.l_disc /= n;
    record.critic_l_disc /= n;
    record.gradient_penalty /= n;
  }
  return record;
}

double Trainer::validation_loss(std::span<const Exchange> valid) {
  if (valid.empty()) return std::numeric_limits<double>::quiet_NaN();
  torch::NoGradGuard no_grad;
  model_->eval();
  auto gen = make_generator(validation_seed(config_.seed));
  auto stream = batch_exchanges(valid, static_cast<std::size_t>(config_.batch_size), std::nullopt);
  double total = 0.0;
  while (auto batch = stream.next()) {
    auto enc = model_->encode(*batch);
    auto posterior = model_->sample_posterior(enc.response, enc.context, gen);
    total += model_->reconstruction_loss(posterior, enc.context, *batch).item<double>() *
             static_cast<double>(batch->size());
  }
  model_->train();
  return total / static_cast<double>(valid.size());
}

TrainResult Trainer::train(std::span<const Exchange> train, std::span<const Exchange> valid,
                           const TrainOptions& options) {
  if (train.empty()) throw std::invalid_argument("training needs a non-empty corpus");
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::int64_t since_best = 0;
  const std::int64_t first_epoch = epoch_;

  for (std::int64_t epoch = first_epoch; epoch <= config_.max_epochs; ++epoch) {
    EpochRecord record;
    try {
      record = run_epoch(train, epoch);
    } catch (const TrainingDiverged& e) {
      throw TrainingDiverged(std::string(e.what()) + " in epoch " + std::to_string(epoch),
                             result.last_checkpoint);
    }

    if (!valid.empty()) {
      record.val_l_rec = validation_loss(valid);
      if (options.metric_embeddings != nullptr && config_.val_max_contexts > 0) {
        const auto subset = valid.first(std::min(valid.size(), config_.val_max_contexts));
        record.val_metrics = evaluate_model(model_, subset, *options.metric_embeddings,
                                            config_.n_samples, validation_seed(config_.seed),
                                            config_.max_decode_len);
      }
    }
    result.epochs.push_back(record);
    // Next epoch if training resumes from this point.
    epoch_ = epoch + 1;

    const auto record_json = to_json(record);
    if (options.log != nullptr) *options.log << record_json.dump() << '\n' << std::flush;
    if (!options.checkpoint_root.empty()) {
      auto dir = options.checkpoint_root / ("epoch-" + std::to_string(epoch));
      save_checkpoint(dir, options.config_snapshot, record_json);
      result.last_checkpoint = dir;
    }
    if (options.on_epoch) options.on_epoch(record);

    const double monitored = record.val_l_rec.value_or(record.l_rec);
    if (monitored < best) {
      best = monitored;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config_.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

void Trainer::save_checkpoint(const std::filesystem::path& dir,
                              const nlohmann::json& config_snapshot,
                              const nlohmann::json& metrics) const {
  std::filesystem::create_directories(dir);
  torch::save(model_, (dir / "params").string());

  torch::serialize::OutputArchive optim;
  torch::serialize::OutputArchive ae, gen, critic;
  ae_optimizer_.save(ae);
  generator_optimizer_.save(gen);
  critic_optimizer_.save(critic);
  optim.write("ae", ae);
  optim.write("generator", gen);
  optim.write("critic", critic);
  optim.save_to((dir / "optim").string());

  torch::serialize::OutputArchive rng;
  rng.write("generator_state", generator_.get_state());
  rng.write("counters", torch::tensor({epoch_, generator_updates_, critic_updates_, ae_updates_},
                                      torch::kInt64));
  rng.save_to((dir / "rng").string());

  nlohmann::ordered_json cfg;
  cfg["config"] = config_snapshot;
  cfg["config_hash"] = config_hash(config_snapshot);
  write_json(dir / "config.json", nlohmann::json(cfg));
  write_json(dir / "metrics.json", metrics);
}

void Trainer::load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("checkpoint directory not found: " + dir.string());
  }
  torch::load(model_, (dir / "params").string());

  torch::serialize::InputArchive optim;
  optim.load_from((dir / "optim").string());
  torch::serialize::InputArchive ae, gen, critic;
  optim.read("ae", ae);
  optim.read("generator", gen);
  optim.read("critic", critic);
  ae_optimizer_.load(ae);
  generator_optimizer_.load(gen);
  critic_optimizer_.load(critic);

  torch::serialize::InputArchive rng;
  rng.load_from((dir / "rng").string());
  torch::Tensor state, counters;
  rng.read("generator_state", state);
  rng.read("counters", counters);
  generator_.set_state(state);
  auto c = counters.accessor<std::int64_t, 1>();
  generator_updates_ = c[1];
  critic_updates_ = c[2];
  ae_updates_ = c[3];
  set_epoch(c[0]);
}

ResponseSampler make_model_sampler(DialogWAE model, at::Generator& generator,
                                   std::int64_t max_len) {
  return [model, &generator, max_len](std::span<const Exchange> contexts,
                                      std::int64_t n) mutable {
    torch::NoGradGuard no_grad;
    auto batch = collate(contexts);
    auto c = model->encode_context(batch);
    auto sampled = model->sample_responses(c, n, generator, max_len);
    std::vector<std::vector<std::vector<TokenId>>> out(sampled.size());
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      for (auto& s : sampled[i]) out[i].push_back(std::move(s.tokens));
    }
    return out;
  };
}

MetricsReport evaluate_model(DialogWAE model, std::span<const Exchange> test,
                             const EmbeddingTable& embeddings, std::int64_t n_samples,
                             std::uint64_t seed, std::int64_t max_len) {
  const bool was_training = model->is_training();
  model->eval();
  auto gen = make_generator(seed);
  EvaluateOptions options;
  options.n_samples = n_samples;
  auto report = evaluate(make_model_sampler(model, gen, max_len), test, embeddings, options);
  if (was_training) model->train();
  return report;
}

}  // namespace dialogwae
