#pragma once

#include <array>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include <torch/torch.h>

#include "dialogwae/corpus.hpp"
#include "dialogwae/decoder.hpp"
#include "dialogwae/encoders.hpp"
#include "dialogwae/latent.hpp"

namespace dialogwae {

enum class PriorKind { kGaussian, kMixture };

PriorKind parse_prior_kind(std::string_view name);
std::string_view prior_kind_name(PriorKind kind);

struct ModelConfig {
  std::int64_t vocab_size = 10000;
  std::int64_t embedding_dim = 200;
  std::int64_t utterance_hidden = 300;  // per direction
  std::int64_t context_hidden = 300;
  std::int64_t decoder_hidden = 300;
  std::int64_t noise_dim = 200;
  std::int64_t latent_dim = 200;
  std::int64_t prior_hidden = 200;
  std::int64_t recognition_hidden = 200;
  std::int64_t q_hidden = 200;
  std::int64_t g_hidden = 200;
  std::int64_t critic_hidden = 400;
  PriorKind prior = PriorKind::kMixture;
  std::int64_t components = 3;
  double tau = 0.1;
  /// Linear weights start in U(-init_range, init_range).
  double init_range = kInitRange;
  /// Ablation: noise collapses to its mean, so z is a deterministic function of c (and x).
  bool point_mass_latent = false;
  bool decoder_feed_latent = false;
};

/// Parameter sets named by the training algorithm. The word embedding is
/// shared by the utterance encoder and the decoder and belongs to both.
enum class ParamGroup {
  kUtteranceEncoder,
  kContextEncoder,
  kRecognitionNet,
  kPriorNet,
  kPosteriorGenerator,  // Q
  kPriorGenerator,      // G
  kCritic,              // D
  kDecoder,
};

std::string_view param_group_name(ParamGroup group);
inline constexpr std::array<ParamGroup, 8> kAllParamGroups = {
    ParamGroup::kUtteranceEncoder, ParamGroup::kContextEncoder,    ParamGroup::kRecognitionNet,
    ParamGroup::kPriorNet,         ParamGroup::kPosteriorGenerator, ParamGroup::kPriorGenerator,
    ParamGroup::kCritic,           ParamGroup::kDecoder};

struct EncodedExchanges {
  torch::Tensor response;  // x, [B, 2 * utterance_hidden]
  torch::Tensor context;   // c, [B, context_hidden]
};

struct SampledResponse {
  std::vector<TokenId> tokens;
  std::vector<double> component_weights;  // empty for the Gaussian prior
};

class DialogWAEImpl : public torch::nn::Module {
 public:
  explicit DialogWAEImpl(ModelConfig config);

  /// Linear layers U(-init_range, init_range) with zero bias, GRU weights and biases
  /// U(-1/sqrt(h), 1/sqrt(h)), embeddings from `pretrained` when given and
  /// U(-0.02, 0.02) otherwise.
  void reset_parameters(at::Generator& generator, const EmbeddingTable* pretrained = nullptr);

  torch::Tensor encode_context(const ExchangeBatch& batch);
  EncodedExchanges encode(const ExchangeBatch& batch);

  GaussianParams posterior_params(const torch::Tensor& response, const torch::Tensor& context);
  LatentSample sample_posterior(const torch::Tensor& response, const torch::Tensor& context,
                                at::Generator& generator);
  LatentSample sample_prior(const torch::Tensor& context, at::Generator& generator);
  /// z = G(mu_k) for every row: the noise-free latent of mixture component k.
  /// Falls back to G(mu) for the Gaussian prior.
  LatentSample prior_component_latent(const torch::Tensor& context, std::int64_t component);

  torch::Tensor critic_scores(const torch::Tensor& z, const torch::Tensor& context);
  CriticFn critic_fn();

  torch::Tensor reconstruction_loss(const LatentSample& z, const torch::Tensor& context,
                                    const ExchangeBatch& batch);

  std::vector<std::vector<TokenId>> greedy_decode(const torch::Tensor& z,
                                                  const torch::Tensor& context,
                                                  std::int64_t max_len);

  /// n independent prior draws per context row, each greedy-decoded.
  /// Result is [rows][n].
  std::vector<std::vector<SampledResponse>> sample_responses(const torch::Tensor& context,
                                                             std::int64_t n,
                                                             at::Generator& generator,
                                                             std::int64_t max_len);

  std::vector<torch::Tensor> parameters_of(std::initializer_list<ParamGroup> groups);
  std::vector<torch::Tensor> parameters_of(std::span<const ParamGroup> groups);
  /// Fully qualified parameter names ("decoder.gru.weight_ih_l0", ...) per group.
  std::vector<std::string> parameter_names_of(ParamGroup group);

  const ModelConfig& config() const { return config_; }
  torch::nn::Embedding& embedding() { return embedding_; }
  UtteranceEncoder& utterance_encoder() { return utterance_encoder_; }
  ContextEncoder& context_encoder() { return context_encoder_; }
  RecognitionNet& recognition_net() { return recognition_net_; }
  GaussianPriorNet& gaussian_prior() { return gaussian_prior_; }
  MixturePriorNet& mixture_prior() { return mixture_prior_; }
  LatentGenerator& posterior_generator() { return q_; }
  LatentGenerator& prior_generator() { return g_; }
  Critic& critic() { return critic_; }
  Decoder& decoder() { return decoder_; }

 private:
  torch::nn::Module& group_module(ParamGroup group);

  ModelConfig config_;
  torch::nn::Embedding embedding_{nullptr};
  UtteranceEncoder utterance_encoder_{nullptr};
  ContextEncoder context_encoder_{nullptr};
  RecognitionNet recognition_net_{nullptr};
  GaussianPriorNet gaussian_prior_{nullptr};
  MixturePriorNet mixture_prior_{nullptr};
  LatentGenerator q_{nullptr};
  LatentGenerator g_{nullptr};
  Critic critic_{nullptr};
  Decoder decoder_{nullptr};
};
TORCH_MODULE(DialogWAE);

}  // namespace dialogwae
