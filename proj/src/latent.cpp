#include "dialogwae/latent.hpp"

#include <stdexcept>

namespace dialogwae {

namespace {

torch::Tensor standard_normal_like(const torch::Tensor& like, at::Generator& generator) {
  return torch::randn(like.sizes(), generator, like.options().requires_grad(false));
}

void check_same_batch(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.size(0) == 0 || b.size(0) == 0) throw std::invalid_argument("empty latent batch");
  if (a.size(0) != b.size(0)) {
    throw std::invalid_argument("posterior and prior batches differ in size");
  }
}

}  // namespace

void init_linear(torch::nn::Linear& layer, at::Generator& generator) {
  torch::NoGradGuard no_grad;
  layer->weight.uniform_(-0.02, 0.02, generator);
  if (layer->bias.defined()) layer->bias.zero_();
}

torch::Tensor reparameterize(const GaussianParams& params, const torch::Tensor& eta) {
  auto std = torch::exp(0.5 * params.log_var.clamp(kLogVarMin, kLogVarMax));
  return params.mu + std * eta;
}

torch::Tensor sample_gaussian_noise(const GaussianParams& params, at::Generator& generator) {
  return reparameterize(params, standard_normal_like(params.mu, generator));
}

torch::Tensor sample_gumbel(const torch::Tensor& like, at::Generator& generator) {
  auto u = torch::rand(like.sizes(), generator, like.options().requires_grad(false));
  // rand() can return exactly 0; keep u inside (0, 1).
  u = u.clamp(1e-20, 1.0 - 1e-7);
  return -torch::log(-torch::log(u));
}

torch::Tensor gumbel_softmax_with_noise(const torch::Tensor& logits, const torch::Tensor& gumbel,
                                        double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("Gumbel-Softmax temperature must be > 0");
  return torch::softmax((logits + gumbel) / tau, -1);
}

torch::Tensor gumbel_softmax(const torch::Tensor& logits, double tau, at::Generator& generator) {
  if (!(tau > 0.0)) throw std::invalid_argument("Gumbel-Softmax temperature must be > 0");
  return gumbel_softmax_with_noise(logits, sample_gumbel(logits, generator), tau);
}

torch::Tensor mix_components(const MixtureParams& params, const torch::Tensor& weights,
                             const torch::Tensor& eta) {
  auto std = torch::exp(0.5 * params.log_vars.clamp(kLogVarMin, kLogVarMax));
  auto per_component = params.means + std * eta;  // [B, K, d]
  return (weights.unsqueeze(-1) * per_component).sum(1);
}

MixtureNoise sample_mixture_noise(const MixtureParams& params, double tau,
                                  at::Generator& generator) {
  auto weights = gumbel_softmax(params.logits, tau, generator);
  auto eta = standard_normal_like(params.means, generator);
  return {mix_components(params, weights, eta), weights};
}

GaussianHeadNetImpl::GaussianHeadNetImpl(std::int64_t input_dim, std::int64_t hidden,
                                         std::int64_t noise_dim) {
  fc1_ = register_module("fc1", torch::nn::Linear(input_dim, hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(hidden, hidden));
  mu_ = register_module("mu", torch::nn::Linear(hidden, noise_dim));
  log_var_ = register_module("log_var", torch::nn::Linear(hidden, noise_dim));
}

torch::Tensor GaussianHeadNetImpl::trunk(const torch::Tensor& input) {
  return torch::tanh(fc2_->forward(torch::tanh(fc1_->forward(input))));
}

GaussianParams GaussianHeadNetImpl::forward(const torch::Tensor& input) {
  auto h = trunk(input);
  return {mu_->forward(h), log_var_->forward(h)};
}

RecognitionNetImpl::RecognitionNetImpl(std::int64_t response_dim, std::int64_t context_dim,
                                       std::int64_t hidden, std::int64_t noise_dim) {
  net_ = register_module("net", GaussianHeadNet(response_dim + context_dim, hidden, noise_dim));
}

GaussianParams RecognitionNetImpl::forward(const torch::Tensor& response,
                                           const torch::Tensor& context) {
  return net_->forward(torch::cat({response, context}, 1));
}

GaussianPriorNetImpl::GaussianPriorNetImpl(std::int64_t context_dim, std::int64_t hidden,
                                           std::int64_t noise_dim) {
  net_ = register_module("net", GaussianHeadNet(context_dim, hidden, noise_dim));
}

GaussianParams GaussianPriorNetImpl::forward(const torch::Tensor& context) {
  return net_->forward(context);
}

MixturePriorNetImpl::MixturePriorNetImpl(std::int64_t context_dim, std::int64_t hidden,
                                         std::int64_t noise_dim, std::int64_t components)
    : noise_dim_(noise_dim), components_(components) {
  if (components < 1) throw std::invalid_argument("mixture prior needs K >= 1");
  fc1_ = register_module("fc1", torch::nn::Linear(context_dim, hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(hidden, hidden));
  // Row block k of the stacked projection is head k: [e_k ; mu_k ; log_var_k].
  heads_ = register_module("heads", torch::nn::Linear(hidden, components * (1 + 2 * noise_dim)));
}

MixtureParams MixturePriorNetImpl::forward(const torch::Tensor& context) {
  auto h = torch::tanh(fc2_->forward(torch::tanh(fc1_->forward(context))));
  auto out = heads_->forward(h).view({-1, components_, 1 + 2 * noise_dim_});
  return {out.select(2, 0), out.narrow(2, 1, noise_dim_), out.narrow(2, 1 + noise_dim_, noise_dim_)};
}

LatentGeneratorImpl::LatentGeneratorImpl(std::int64_t noise_dim, std::int64_t hidden,
                                         std::int64_t latent_dim) {
  fc1_ = register_module("fc1", torch::nn::Linear(noise_dim, hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(hidden, hidden));
  fc3_ = register_module("fc3", torch::nn::Linear(hidden, latent_dim));
}

torch::Tensor LatentGeneratorImpl::forward(const torch::Tensor& epsilon) {
  return fc3_->forward(torch::relu(fc2_->forward(torch::relu(fc1_->forward(epsilon)))));
}

torch::nn::Linear& LatentGeneratorImpl::layer(int index) {
  switch (index) {
    case 0: return fc1_;
    case 1: return fc2_;
    case 2: return fc3_;
    default: throw std::out_of_range("generator has three layers");
  }
}

CriticImpl::CriticImpl(std::int64_t latent_dim, std::int64_t context_dim, std::int64_t hidden) {
  fc1_ = register_module("fc1", torch::nn::Linear(latent_dim + context_dim, hidden));
  fc2_ = register_module("fc2", torch::nn::Linear(hidden, hidden));
  fc3_ = register_module("fc3", torch::nn::Linear(hidden, 1));
}

torch::Tensor CriticImpl::forward(const torch::Tensor& z, const torch::Tensor& context) {
  auto h = torch::relu(fc1_->forward(torch::cat({z, context}, 1)));
  return fc3_->forward(torch::relu(fc2_->forward(h))).squeeze(-1);
}

torch::nn::Linear& CriticImpl::layer(int index) {
  switch (index) {
    case 0: return fc1_;
    case 1: return fc2_;
    case 2: return fc3_;
    default: throw std::out_of_range("critic has three layers");
  }
}

torch::Tensor discriminator_loss(const torch::Tensor& posterior_scores,
                                 const torch::Tensor& prior_scores) {
  check_same_batch(posterior_scores, prior_scores);
  return posterior_scores.mean() - prior_scores.mean();
}

torch::Tensor discriminator_loss(const CriticFn& critic, const torch::Tensor& posterior_z,
                                 const torch::Tensor& prior_z, const torch::Tensor& context) {
  check_same_batch(posterior_z, prior_z);
  return discriminator_loss(critic(posterior_z, context), critic(prior_z, context));
}

torch::Tensor critic_input_gradient(const CriticFn& critic, const torch::Tensor& z,
                                    const torch::Tensor& context, bool create_graph) {
  auto input = z.requires_grad() ? z : z.detach().requires_grad_(true);
  auto scores = critic(input, context);
  auto grads = torch::autograd::grad({scores.sum()}, {input}, /*grad_outputs=*/{},
                                     /*retain_graph=*/create_graph, create_graph,
                                     /*allow_unused=*/true);
  // A critic that ignores z (e.g. all-zero weights) yields no gradient edge.
  return grads[0].defined() ? grads[0] : torch::zeros_like(input);
}

torch::Tensor gradient_penalty_at(const CriticFn& critic, const torch::Tensor& posterior_z,
                                  const torch::Tensor& prior_z, const torch::Tensor& context,
                                  const torch::Tensor& alpha, double lambda) {
  check_same_batch(posterior_z, prior_z);
  auto interpolated = (alpha * posterior_z.detach() + (1.0 - alpha) * prior_z.detach())
                          .requires_grad_(true);
  auto grad = critic_input_gradient(critic, interpolated, context.detach(), /*create_graph=*/true);
  auto norm = grad.norm(2, /*dim=*/1);
  return lambda * (norm - 1.0).pow(2).mean();
}

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& posterior_z,
                               const torch::Tensor& prior_z, const torch::Tensor& context,
                               double lambda, at::Generator& generator) {
  check_same_batch(posterior_z, prior_z);
  auto alpha = torch::rand({posterior_z.size(0), 1}, generator, posterior_z.options().requires_grad(false));
  return gradient_penalty_at(critic, posterior_z, prior_z, context, alpha, lambda);
}

}  // namespace dialogwae
