#include "dialogwae/model.hpp"

#include <cmath>
#include <stdexcept>

namespace dialogwae {

PriorKind parse_prior_kind(std::string_view name) {
  if (name == "gaussian") return PriorKind::kGaussian;
  if (name == "mixture") return PriorKind::kMixture;
  throw std::invalid_argument("unknown prior '" + std::string(name) +
                              "' (expected 'gaussian' or 'mixture')");
}

std::string_view prior_kind_name(PriorKind kind) {
  return kind == PriorKind::kGaussian ? "gaussian" : "mixture";
}

std::string_view param_group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::kUtteranceEncoder: return "UEnc";
    case ParamGroup::kContextEncoder: return "CEnc";
    case ParamGroup::kRecognitionNet: return "RecNet";
    case ParamGroup::kPriorNet: return "PriNet";
    case ParamGroup::kPosteriorGenerator: return "Q";
    case ParamGroup::kPriorGenerator: return "G";
    case ParamGroup::kCritic: return "D";
    case ParamGroup::kDecoder: return "Dec";
  }
  return "?";
}

DialogWAEImpl::DialogWAEImpl(ModelConfig config) : config_(config) {
  if (config_.prior == PriorKind::kMixture && config_.components < 1) {
    throw std::invalid_argument("mixture prior needs K >= 1");
  }
  embedding_ = register_module(
      "embedding", torch::nn::Embedding(config_.vocab_size, config_.embedding_dim));
  utterance_encoder_ = register_module("utterance_encoder",
                                       UtteranceEncoder(embedding_, config_.utterance_hidden));
  context_encoder_ = register_module(
      "context_encoder", ContextEncoder(utterance_encoder_->output_dim(), config_.context_hidden));
  recognition_net_ = register_module(
      "recognition_net",
      RecognitionNet(utterance_encoder_->output_dim(), config_.context_hidden,
                     config_.recognition_hidden, config_.noise_dim));
  if (config_.prior == PriorKind::kGaussian) {
    gaussian_prior_ = register_module(
        "prior_net", GaussianPriorNet(config_.context_hidden, config_.prior_hidden, config_.noise_dim));
  } else {
    mixture_prior_ = register_module(
        "prior_net", MixturePriorNet(config_.context_hidden, config_.prior_hidden, config_.noise_dim,
                                     config_.components));
  }
  q_ = register_module("q", LatentGenerator(config_.noise_dim, config_.q_hidden, config_.latent_dim));
  g_ = register_module("g", LatentGenerator(config_.noise_dim, config_.g_hidden, config_.latent_dim));
  critic_ = register_module(
      "critic", Critic(config_.latent_dim, config_.context_hidden, config_.critic_hidden));
  DecoderOptions dec;
  dec.vocab_size = config_.vocab_size;
  dec.hidden = config_.decoder_hidden;
  dec.latent_dim = config_.latent_dim;
  dec.context_dim = config_.context_hidden;
  dec.feed_latent_each_step = config_.decoder_feed_latent;
  decoder_ = register_module("decoder", Decoder(embedding_, dec));
}

void DialogWAEImpl::reset_parameters(at::Generator& generator, const EmbeddingTable* pretrained) {
  torch::NoGradGuard no_grad;
  for (const auto& item : named_modules()) {
    auto& module = item.value();
    if (auto* linear = dynamic_cast<torch::nn::LinearImpl*>(module.get())) {
      linear->weight.uniform_(-config_.init_range, config_.init_range, generator);
      if (linear->bias.defined()) linear->bias.zero_();
    } else if (auto* gru = dynamic_cast<torch::nn::GRUImpl*>(module.get())) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(gru->options.hidden_size()));
      for (auto& p : gru->parameters(/*recurse=*/false)) p.uniform_(-bound, bound, generator);
    } else if (auto* emb = dynamic_cast<torch::nn::EmbeddingImpl*>(module.get())) {
      if (pretrained != nullptr) {
        if (pretrained->rows() != emb->weight.size(0) || pretrained->dim() != emb->weight.size(1)) {
          throw std::invalid_argument("pretrained embedding shape does not match the model");
        }
        emb->weight.copy_(pretrained->weights);
      } else {
        emb->weight.uniform_(-kInitRange, kInitRange, generator);
      }
    }
  }
}

torch::Tensor DialogWAEImpl::encode_context(const ExchangeBatch& batch) {
  const auto b = batch.context_tokens.size(0);
  const auto w = batch.context_tokens.size(1);
  const auto l = batch.context_tokens.size(2);
  auto flat_tokens = batch.context_tokens.reshape({b * w, l});
  auto flat_lengths = batch.context_utt_lengths.reshape({b * w});
  auto real = flat_lengths.gt(0).nonzero().squeeze(1);
  auto vectors = utterance_encoder_->forward(flat_tokens.index_select(0, real),
                                             flat_lengths.index_select(0, real));
  auto all = torch::zeros({b * w, vectors.size(1)}, vectors.options());
  all = all.index_copy(0, real, vectors).view({b, w, -1});
  return context_encoder_->forward(all, batch.floors, batch.context_lengths);
}

EncodedExchanges DialogWAEImpl::encode(const ExchangeBatch& batch) {
  auto context = encode_context(batch);
  auto response = utterance_encoder_->forward(batch.response_tokens, batch.response_lengths);
  return {response, context};
}

GaussianParams DialogWAEImpl::posterior_params(const torch::Tensor& response,
                                               const torch::Tensor& context) {
  return recognition_net_->forward(response, context);
}

LatentSample DialogWAEImpl::sample_posterior(const torch::Tensor& response,
                                             const torch::Tensor& context,
                                             at::Generator& generator) {
  auto params = posterior_params(response, context);
  auto eps = config_.point_mass_latent ? params.mu : sample_gaussian_noise(params, generator);
  return {q_->forward(eps), LatentSource::kPosterior, eps, std::nullopt};
}

LatentSample DialogWAEImpl::sample_prior(const torch::Tensor& context, at::Generator& generator) {
  if (config_.prior == PriorKind::kGaussian) {
    auto params = gaussian_prior_->forward(context);
    auto eps = config_.point_mass_latent ? params.mu : sample_gaussian_noise(params, generator);
    return {g_->forward(eps), LatentSource::kPrior, eps, std::nullopt};
  }
  auto params = mixture_prior_->forward(context);
  MixtureNoise noise;
  if (config_.point_mass_latent) {
    noise.weights = params.weights();
    noise.epsilon = mix_components(params, noise.weights, torch::zeros_like(params.means));
  } else {
    noise = sample_mixture_noise(params, config_.tau, generator);
  }
  return {g_->forward(noise.epsilon), LatentSource::kPrior, noise.epsilon, noise.weights};
}

LatentSample DialogWAEImpl::prior_component_latent(const torch::Tensor& context,
                                                   std::int64_t component) {
  if (config_.prior == PriorKind::kGaussian) {
    auto eps = gaussian_prior_->forward(context).mu;
    return {g_->forward(eps), LatentSource::kPrior, eps, std::nullopt};
  }
  auto params = mixture_prior_->forward(context);
  if (component < 0 || component >= params.components()) {
    throw std::out_of_range("mixture component index out of range");
  }
  auto weights = torch::one_hot(torch::full({context.size(0)}, component, torch::kInt64),
                                params.components())
                     .to(params.means.dtype());
  auto eps = mix_components(params, weights, torch::zeros_like(params.means));
  return {g_->forward(eps), LatentSource::kPrior, eps, weights};
}

torch::Tensor DialogWAEImpl::critic_scores(const torch::Tensor& z, const torch::Tensor& context) {
  return critic_->forward(z, context);
}

CriticFn DialogWAEImpl::critic_fn() {
  return [critic = critic_](const torch::Tensor& z, const torch::Tensor& c) mutable {
    return critic->forward(z, c);
  };
}

torch::Tensor DialogWAEImpl::reconstruction_loss(const LatentSample& z,
                                                 const torch::Tensor& context,
                                                 const ExchangeBatch& batch) {
  return decoder_->reconstruction_loss(z.z, context, batch.response_tokens, batch.response_lengths);
}

std::vector<std::vector<TokenId>> DialogWAEImpl::greedy_decode(const torch::Tensor& z,
                                                               const torch::Tensor& context,
                                                               std::int64_t max_len) {
  return decoder_->greedy_decode(z, context, max_len);
}

std::vector<std::vector<SampledResponse>> DialogWAEImpl::sample_responses(
    const torch::Tensor& context, std::int64_t n, at::Generator& generator, std::int64_t max_len) {
  if (n < 1) throw std::invalid_argument("need at least one sample");
  torch::NoGradGuard no_grad;
  const auto rows = context.size(0);
  // Row r * n + j is sample j of context r.
  auto repeated = context.repeat_interleave(n, 0);
  auto latent = sample_prior(repeated, generator);
  auto decoded = decoder_->greedy_decode(latent.z, repeated, max_len);

  std::vector<std::vector<SampledResponse>> out(static_cast<std::size_t>(rows));
  torch::Tensor weights;
  if (latent.component_weights) weights = latent.component_weights->to(torch::kFloat64).contiguous();
  for (std::int64_t r = 0; r < rows; ++r) {
    auto& bucket = out[static_cast<std::size_t>(r)];
    bucket.reserve(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j) {
      const auto idx = r * n + j;
      SampledResponse sample;
      sample.tokens = std::move(decoded[static_cast<std::size_t>(idx)]);
      if (weights.defined()) {
        auto row = weights[idx];
        sample.component_weights.assign(row.data_ptr<double>(), row.data_ptr<double>() + row.numel());
      }
      bucket.push_back(std::move(sample));
    }
  }
  return out;
}

torch::nn::Module& DialogWAEImpl::group_module(ParamGroup group) {
  switch (group) {
    case ParamGroup::kUtteranceEncoder: return *utterance_encoder_;
    case ParamGroup::kContextEncoder: return *context_encoder_;
    case ParamGroup::kRecognitionNet: return *recognition_net_;
    case ParamGroup::kPriorNet:
      return config_.prior == PriorKind::kGaussian ? static_cast<torch::nn::Module&>(*gaussian_prior_)
                                                   : static_cast<torch::nn::Module&>(*mixture_prior_);
    case ParamGroup::kPosteriorGenerator: return *q_;
    case ParamGroup::kPriorGenerator: return *g_;
    case ParamGroup::kCritic: return *critic_;
    case ParamGroup::kDecoder: return *decoder_;
  }
  throw std::logic_error("unknown parameter group");
}

std::vector<torch::Tensor> DialogWAEImpl::parameters_of(std::initializer_list<ParamGroup> groups) {
  return parameters_of(std::span<const ParamGroup>(groups.begin(), groups.size()));
}

std::vector<torch::Tensor> DialogWAEImpl::parameters_of(std::span<const ParamGroup> groups) {
  std::vector<torch::Tensor> params;
  bool embedding_added = false;
  for (auto group : groups) {
    for (auto& p : group_module(group).parameters()) params.push_back(p);
    const bool uses_embedding =
        group == ParamGroup::kUtteranceEncoder || group == ParamGroup::kDecoder;
    if (uses_embedding && !embedding_added) {
      params.push_back(embedding_->weight);
      embedding_added = true;
    }
  }
  return params;
}

std::vector<std::string> DialogWAEImpl::parameter_names_of(ParamGroup group) {
  std::string prefix;
  switch (group) {
    case ParamGroup::kUtteranceEncoder: prefix = "utterance_encoder."; break;
    case ParamGroup::kContextEncoder: prefix = "context_encoder."; break;
    case ParamGroup::kRecognitionNet: prefix = "recognition_net."; break;
    case ParamGroup::kPriorNet: prefix = "prior_net."; break;
    case ParamGroup::kPosteriorGenerator: prefix = "q."; break;
    case ParamGroup::kPriorGenerator: prefix = "g."; break;
    case ParamGroup::kCritic: prefix = "critic."; break;
    case ParamGroup::kDecoder: prefix = "decoder."; break;
  }
  std::vector<std::string> names;
  for (const auto& item : named_parameters()) {
    if (item.key().rfind(prefix, 0) == 0) names.push_back(item.key());
  }
  if (group == ParamGroup::kUtteranceEncoder || group == ParamGroup::kDecoder) {
    names.push_back("embedding.weight");
  }
  return names;
}

}  // namespace dialogwae
