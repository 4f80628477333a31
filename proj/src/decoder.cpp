#include "dialogwae/decoder.hpp"

#include <stdexcept>

namespace dialogwae {

torch::Tensor shift_right(const torch::Tensor& response) {
  auto bos = torch::full({response.size(0), 1}, kBosId, response.options());
  return torch::cat({bos, response.narrow(1, 0, response.size(1) - 1)}, 1);
}

torch::Tensor masked_token_nll(const torch::Tensor& logits, const torch::Tensor& targets,
                               const torch::Tensor& lengths) {
  const auto steps = logits.size(1);
  auto log_probs = torch::log_softmax(logits, -1);
  auto gold = log_probs.gather(2, targets.unsqueeze(-1)).squeeze(-1);  // [B, T]
  auto positions = torch::arange(steps, lengths.options()).unsqueeze(0);
  auto mask = (positions < lengths.unsqueeze(1)).to(gold.dtype());
  // where() keeps non-finite values at padded positions out of the sum.
  auto nll = torch::where(mask > 0, -gold, torch::zeros_like(gold));
  return nll.sum(1).mean();
}

torch::Tensor argmax_lowest(const torch::Tensor& scores) {
  // Ties are resolved explicitly rather than relying on the kernel's choice.
  auto best = std::get<0>(scores.max(-1, /*keepdim=*/true));
  auto ids = torch::arange(scores.size(-1), torch::TensorOptions().dtype(torch::kInt64))
                 .expand_as(scores);
  auto candidates = torch::where(scores == best, ids, torch::full_like(ids, scores.size(-1)));
  return std::get<0>(candidates.min(-1));
}

DecoderImpl::DecoderImpl(torch::nn::Embedding embedding, DecoderOptions options)
    : embedding_(std::move(embedding)), options_(options) {
  const auto cond_dim = options_.latent_dim + options_.context_dim;
  auto input_dim = embedding_->options.embedding_dim();
  if (options_.feed_latent_each_step) input_dim += cond_dim;
  init_ = register_module("init", torch::nn::Linear(cond_dim, options_.hidden));
  gru_ = register_module(
      "gru", torch::nn::GRU(torch::nn::GRUOptions(input_dim, options_.hidden).batch_first(true)));
  out_ = register_module("out", torch::nn::Linear(options_.hidden, options_.vocab_size));
}

torch::Tensor DecoderImpl::initial_state(const torch::Tensor& z, const torch::Tensor& context) {
  return torch::tanh(init_->forward(torch::cat({z, context}, 1)));
}

torch::Tensor DecoderImpl::step_inputs(const torch::Tensor& embedded,
                                       const torch::Tensor& conditioning) {
  if (!options_.feed_latent_each_step) return embedded;
  auto cond = conditioning.unsqueeze(1).expand({-1, embedded.size(1), -1});
  return torch::cat({embedded, cond}, 2);
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& z, const torch::Tensor& context,
                                   const torch::Tensor& inputs) {
  auto h0 = initial_state(z, context).unsqueeze(0);
  auto conditioning = torch::cat({z, context}, 1);
  auto [outputs, h_n] = gru_->forward(step_inputs(embedding_->forward(inputs), conditioning), h0);
  (void)h_n;
  return out_->forward(outputs);
}

torch::Tensor DecoderImpl::reconstruction_loss(const torch::Tensor& z,
                                               const torch::Tensor& context,
                                               const torch::Tensor& response,
                                               const torch::Tensor& response_lengths) {
  if (response.size(1) == 0 || response_lengths.min().item<std::int64_t>() < 1) {
    throw std::invalid_argument("reconstruction loss needs non-empty responses");
  }
  auto logits = forward(z, context, shift_right(response));
  return masked_token_nll(logits, response, response_lengths);
}

std::vector<std::vector<TokenId>> DecoderImpl::greedy_decode(const torch::Tensor& z,
                                                             const torch::Tensor& context,
                                                             std::int64_t max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  torch::NoGradGuard no_grad;
  const auto batch = z.size(0);
  auto hidden = initial_state(z, context).unsqueeze(0);
  auto conditioning = torch::cat({z, context}, 1);
  auto token = torch::full({batch, 1}, kBosId, torch::kInt64);

  std::vector<std::vector<TokenId>> result(static_cast<std::size_t>(batch));
  std::vector<bool> done(static_cast<std::size_t>(batch), false);
  std::int64_t remaining = batch;
  for (std::int64_t step = 0; step < max_len && remaining > 0; ++step) {
    auto [output, h_n] = gru_->forward(step_inputs(embedding_->forward(token), conditioning), hidden);
    hidden = h_n;
    auto next = argmax_lowest(out_->forward(output.squeeze(1)));
    auto ids = next.accessor<std::int64_t, 1>();
    for (std::int64_t b = 0; b < batch; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      if (done[bi]) continue;
      if (ids[b] == kEosId) {
        done[bi] = true;
        --remaining;
      } else {
        result[bi].push_back(ids[b]);
      }
    }
    token = next.unsqueeze(1);
  }
  return result;
}

}  // namespace dialogwae
