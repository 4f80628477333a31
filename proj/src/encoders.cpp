#include "dialogwae/encoders.hpp"

#include <stdexcept>

namespace dialogwae {

torch::Tensor packed_final_state(torch::nn::GRU& gru, const torch::Tensor& inputs,
                                 const torch::Tensor& lengths) {
  auto cpu_lengths = lengths.to(torch::kCPU, torch::kInt64);
  if (cpu_lengths.numel() == 0) throw std::invalid_argument("empty batch");
  if (cpu_lengths.min().item<std::int64_t>() < 1) {
    throw std::invalid_argument("sequence lengths must be >= 1");
  }
  // Trailing pad columns beyond the batch maximum are never part of the pack.
  const auto max_len = cpu_lengths.max().item<std::int64_t>();
  auto packed = torch::nn::utils::rnn::pack_padded_sequence(
      inputs.narrow(1, 0, max_len), cpu_lengths, /*batch_first=*/true,
      /*enforce_sorted=*/false);
  auto [output, h_n] = gru->forward_with_packed_input(packed);
  (void)output;
  return h_n;
}

UtteranceEncoderImpl::UtteranceEncoderImpl(torch::nn::Embedding embedding, std::int64_t hidden)
    : embedding_(std::move(embedding)), hidden_(hidden) {
  const auto input_dim = embedding_->options.embedding_dim();
  gru_ = register_module(
      "gru", torch::nn::GRU(torch::nn::GRUOptions(input_dim, hidden).batch_first(true).bidirectional(true)));
}

torch::Tensor UtteranceEncoderImpl::forward(const torch::Tensor& tokens,
                                            const torch::Tensor& lengths) {
  auto h_n = packed_final_state(gru_, embedding_->forward(tokens), lengths);
  // h_n: [2, N, H]; index 0 is the forward direction.
  return torch::cat({h_n[0], h_n[1]}, /*dim=*/1);
}

ContextEncoderImpl::ContextEncoderImpl(std::int64_t utterance_dim, std::int64_t hidden)
    : hidden_(hidden) {
  gru_ = register_module(
      "gru", torch::nn::GRU(torch::nn::GRUOptions(utterance_dim + 1, hidden).batch_first(true)));
}

torch::Tensor ContextEncoderImpl::forward(const torch::Tensor& utterance_vectors,
                                          const torch::Tensor& floors,
                                          const torch::Tensor& lengths) {
  auto steps = torch::cat({utterance_vectors, floors.unsqueeze(-1).to(utterance_vectors.dtype())},
                          /*dim=*/2);
  return packed_final_state(gru_, steps, lengths)[0];
}

}  // namespace dialogwae
