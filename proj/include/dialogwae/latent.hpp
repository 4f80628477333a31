#pragma once

// Latent-space machinery: recognition and prior noise networks, the Q/G
// generators, the Wasserstein critic and its losses.

#include <functional>
#include <optional>

#include <torch/torch.h>

namespace dialogwae {

/// log-variances are clamped to this range before exponentiation.
inline constexpr double kLogVarMin = -20.0;
inline constexpr double kLogVarMax = 20.0;

/// Diagonal Gaussian over the noise space; tensors are [B, noise_dim].
struct GaussianParams {
  torch::Tensor mu;
  torch::Tensor log_var;
};

/// K-component diagonal mixture; logits [B, K], means/log_vars [B, K, noise_dim].
struct MixtureParams {
  torch::Tensor logits;
  torch::Tensor means;
  torch::Tensor log_vars;

  std::int64_t components() const { return logits.size(-1); }
  /// Mixture coefficients softmax(logits).
  torch::Tensor weights() const { return torch::softmax(logits, -1); }
};

enum class LatentSource { kPrior, kPosterior };

struct LatentSample {
  torch::Tensor z;        // [B, latent_dim]
  LatentSource source;
  torch::Tensor epsilon;  // [B, noise_dim], the noise z was generated from
  std::optional<torch::Tensor> component_weights;  // [B, K], mixture prior only
};

/// eps = mu + exp(log_var / 2) * eta for a given standard-normal draw eta.
torch::Tensor reparameterize(const GaussianParams& params, const torch::Tensor& eta);
torch::Tensor sample_gaussian_noise(const GaussianParams& params, at::Generator& generator);

/// g = -log(-log(u)), u ~ U(0, 1), shaped like `like`.
torch::Tensor sample_gumbel(const torch::Tensor& like, at::Generator& generator);
/// softmax((logits + gumbel) / tau) over the last dimension. Throws for tau <= 0.
torch::Tensor gumbel_softmax_with_noise(const torch::Tensor& logits, const torch::Tensor& gumbel,
                                        double tau);
torch::Tensor gumbel_softmax(const torch::Tensor& logits, double tau, at::Generator& generator);

struct MixtureNoise {
  torch::Tensor epsilon;  // [B, noise_dim]
  torch::Tensor weights;  // [B, K]
};

/// Soft selection: eps = sum_k v_k * (mu_k + sigma_k * eta_k), with
/// eta [B, K, noise_dim] independent per component.
torch::Tensor mix_components(const MixtureParams& params, const torch::Tensor& weights,
                             const torch::Tensor& eta);
MixtureNoise sample_mixture_noise(const MixtureParams& params, double tau,
                                  at::Generator& generator);

/// Linear-tanh-linear-tanh trunk followed by separate mean and log-variance
/// projections.
class GaussianHeadNetImpl : public torch::nn::Module {
 public:
  GaussianHeadNetImpl(std::int64_t input_dim, std::int64_t hidden, std::int64_t noise_dim);

  GaussianParams forward(const torch::Tensor& input);

  torch::Tensor trunk(const torch::Tensor& input);
  torch::nn::Linear& mu_head() { return mu_; }
  torch::nn::Linear& log_var_head() { return log_var_; }

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr}, mu_{nullptr}, log_var_{nullptr};
};
TORCH_MODULE(GaussianHeadNet);

/// Posterior noise parameters from [x ; c].
class RecognitionNetImpl : public torch::nn::Module {
 public:
  RecognitionNetImpl(std::int64_t response_dim, std::int64_t context_dim, std::int64_t hidden,
                     std::int64_t noise_dim);

  GaussianParams forward(const torch::Tensor& response, const torch::Tensor& context);

  GaussianHeadNet& net() { return net_; }

 private:
  GaussianHeadNet net_{nullptr};
};
TORCH_MODULE(RecognitionNet);

/// Unimodal prior noise parameters from c.
class GaussianPriorNetImpl : public torch::nn::Module {
 public:
  GaussianPriorNetImpl(std::int64_t context_dim, std::int64_t hidden, std::int64_t noise_dim);

  GaussianParams forward(const torch::Tensor& context);

  GaussianHeadNet& net() { return net_; }

 private:
  GaussianHeadNet net_{nullptr};
};
TORCH_MODULE(GaussianPriorNet);

/// K heads [e_k ; mu_k ; log_var_k] = W_k f(c) + b_k over a shared tanh trunk.
class MixturePriorNetImpl : public torch::nn::Module {
 public:
  MixturePriorNetImpl(std::int64_t context_dim, std::int64_t hidden, std::int64_t noise_dim,
                      std::int64_t components);

  MixtureParams forward(const torch::Tensor& context);

  std::int64_t components() const { return components_; }
  std::int64_t noise_dim() const { return noise_dim_; }
  torch::nn::Linear& heads() { return heads_; }

 private:
  std::int64_t noise_dim_;
  std::int64_t components_;
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr}, heads_{nullptr};
};
TORCH_MODULE(MixturePriorNet);

/// Three linear layers with ReLU between them (generators Q and G).
class LatentGeneratorImpl : public torch::nn::Module {
 public:
  LatentGeneratorImpl(std::int64_t noise_dim, std::int64_t hidden, std::int64_t latent_dim);

  torch::Tensor forward(const torch::Tensor& epsilon);

  torch::nn::Linear& layer(int index);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr}, fc3_{nullptr};
};
TORCH_MODULE(LatentGenerator);

/// Wasserstein critic D(z, c): three linear layers with ReLU between them on
/// [z ; c], scalar output without activation.
class CriticImpl : public torch::nn::Module {
 public:
  CriticImpl(std::int64_t latent_dim, std::int64_t context_dim, std::int64_t hidden);

  /// → [B]
  torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& context);

  torch::nn::Linear& layer(int index);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr}, fc3_{nullptr};
};
TORCH_MODULE(Critic);

using CriticFn = std::function<torch::Tensor(const torch::Tensor& z, const torch::Tensor& c)>;

/// mean(D(z, c)) - mean(D(z~, c)) from per-pair scores.
torch::Tensor discriminator_loss(const torch::Tensor& posterior_scores,
                                 const torch::Tensor& prior_scores);
torch::Tensor discriminator_loss(const CriticFn& critic, const torch::Tensor& posterior_z,
                                 const torch::Tensor& prior_z, const torch::Tensor& context);

/// d D(z, c) / d z per row, [B, latent_dim].
torch::Tensor critic_input_gradient(const CriticFn& critic, const torch::Tensor& z,
                                    const torch::Tensor& context, bool create_graph);

/// lambda * mean((||grad_zhat D(zhat, c)|| - 1)^2) at zhat = alpha z + (1 - alpha) z~,
/// alpha [B, 1]. The context is not interpolated.
torch::Tensor gradient_penalty_at(const CriticFn& critic, const torch::Tensor& posterior_z,
                                  const torch::Tensor& prior_z, const torch::Tensor& context,
                                  const torch::Tensor& alpha, double lambda);
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& posterior_z,
                               const torch::Tensor& prior_z, const torch::Tensor& context,
                               double lambda, at::Generator& generator);

/// U(-0.02, 0.02) weights and zero biases, the convention for every linear layer.
void init_linear(torch::nn::Linear& layer, at::Generator& generator);

}  // namespace dialogwae
