#pragma once

// Epochwise alternation of the adversarial (GAN) and reconstruction (AE)
// phases. Per mini-batch: one generator step, n_critic critic steps, one AE
// step. Each step updates only its own parameter sets:
//   generator: Q, G, PriNet, RecNet   (RMSprop, ascent on L_disc)
//   critic:    D                      (RMSprop, descent on L_disc + GP)
//   AE:        UEnc, CEnc, RecNet, Q, Dec   (SGD + clipping, descent on L_rec)

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include <torch/torch.h>

#include "dialogwae/corpus.hpp"
#include "dialogwae/metrics.hpp"
#include "dialogwae/model.hpp"

namespace dialogwae {

struct TrainConfig {
  std::int64_t n_critic = 5;
  std::int64_t batch_size = 32;
  double ae_lr = 1.0;
  double ae_clip = 1.0;
  double lr_decay = 0.4;
  std::int64_t lr_decay_every = 10;
  double gan_lr_generator = 5e-5;
  double gan_lr_critic = 1e-5;
  double lambda_gp = 10.0;
  std::int64_t max_epochs = 100;
  std::int64_t patience = 10;
  std::uint64_t seed = 1;
  std::int64_t n_samples = 10;
  std::int64_t max_decode_len = 40;
  std::size_t val_max_contexts = 100;
};

inline const std::array<ParamGroup, 4> kGeneratorGroups = {
    ParamGroup::kPosteriorGenerator, ParamGroup::kPriorGenerator, ParamGroup::kPriorNet,
    ParamGroup::kRecognitionNet};
inline const std::array<ParamGroup, 1> kCriticGroups = {ParamGroup::kCritic};
inline const std::array<ParamGroup, 5> kAutoencoderGroups = {
    ParamGroup::kUtteranceEncoder, ParamGroup::kContextEncoder, ParamGroup::kRecognitionNet,
    ParamGroup::kPosteriorGenerator, ParamGroup::kDecoder};

/// AE learning rate in (1-based) `epoch`: ae_lr * (1 - lr_decay)^floor(epoch / lr_decay_every).
double ae_learning_rate(const TrainConfig& config, std::int64_t epoch);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::filesystem::path last_good_checkpoint)
      : std::runtime_error(what), last_good_checkpoint_(std::move(last_good_checkpoint)) {}
  const std::filesystem::path& last_good_checkpoint() const { return last_good_checkpoint_; }

 private:
  std::filesystem::path last_good_checkpoint_;
};

struct CriticStepResult {
  double l_disc = 0.0;
  double gradient_penalty = 0.0;
};

struct IterationStats {
  double l_disc = 0.0;  // from the generator step
  double critic_l_disc = 0.0;  // mean over the critic steps
  double gradient_penalty = 0.0;
  double l_rec = 0.0;
};

struct EpochRecord {
  std::int64_t epoch = 0;
  double l_rec = 0.0;
  double l_disc = 0.0;
  double critic_l_disc = 0.0;
  double gradient_penalty = 0.0;
  double lr_ae = 0.0;
  std::optional<double> val_l_rec;
  std::optional<MetricsReport> val_metrics;
};

nlohmann::json to_json(const EpochRecord& record);

struct TrainOptions {
  /// Checkpoints go to `<checkpoint_root>/epoch-N/`; empty disables them.
  std::filesystem::path checkpoint_root;
  /// Stored as config.json in every checkpoint.
  nlohmann::json config_snapshot = nlohmann::json::object();
  /// One JSON record per epoch.
  std::ostream* log = nullptr;
  /// Enables per-epoch validation metrics.
  const EmbeddingTable* metric_embeddings = nullptr;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::int64_t best_epoch = 0;
  bool early_stopped = false;
  std::filesystem::path last_checkpoint;
};

class Trainer {
 public:
  Trainer(DialogWAE model, TrainConfig config);

  DialogWAE& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  at::Generator& generator() { return generator_; }

  double gan_generator_step(const ExchangeBatch& batch);
  CriticStepResult gan_critic_step(const ExchangeBatch& batch);
  /// Returns the reconstruction loss before the update.
  double ae_step(const ExchangeBatch& batch);
  IterationStats train_iteration(const ExchangeBatch& batch);

  /// Sets the AE learning rate for `epoch` (1-based).
  void set_epoch(std::int64_t epoch);
  std::int64_t epoch() const { return epoch_; }
  double current_ae_lr() const;

  EpochRecord run_epoch(std::span<const Exchange> train, std::int64_t epoch);
  double validation_loss(std::span<const Exchange> valid);
  TrainResult train(std::span<const Exchange> train, std::span<const Exchange> valid,
                    const TrainOptions& options = {});

  void save_checkpoint(const std::filesystem::path& dir, const nlohmann::json& config_snapshot,
                       const nlohmann::json& metrics) const;
  /// Restores parameters, optimizer and random state; training resumes after
  /// the stored epoch.
  void load_checkpoint(const std::filesystem::path& dir);

  std::int64_t generator_updates() const { return generator_updates_; }
  std::int64_t critic_updates() const { return critic_updates_; }
  std::int64_t ae_updates() const { return ae_updates_; }

 private:
  EncodedExchanges encode_frozen(const ExchangeBatch& batch);
  double generator_step(const EncodedExchanges& enc);
  CriticStepResult critic_step(const EncodedExchanges& enc);

  DialogWAE model_;
  TrainConfig config_;
  at::Generator generator_;
  std::vector<torch::Tensor> ae_params_;
  torch::optim::SGD ae_optimizer_;
  torch::optim::RMSprop generator_optimizer_;
  torch::optim::RMSprop critic_optimizer_;
  std::int64_t epoch_ = 1;
  std::int64_t generator_updates_ = 0;
  std::int64_t critic_updates_ = 0;
  std::int64_t ae_updates_ = 0;
};

/// Samples through the prior and greedy decoding, `max_len` tokens at most.
ResponseSampler make_model_sampler(DialogWAE model, at::Generator& generator, std::int64_t max_len);

MetricsReport evaluate_model(DialogWAE model, std::span<const Exchange> test,
                             const EmbeddingTable& embeddings, std::int64_t n_samples,
                             std::uint64_t seed, std::int64_t max_len);

/// 64-bit FNV-1a of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& config);

}  // namespace dialogwae
