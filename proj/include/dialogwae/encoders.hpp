#pragma once

#include <torch/torch.h>

namespace dialogwae {

/// Bidirectional GRU over word embeddings. The utterance vector is the
/// forward state after the last real token concatenated with the backward
/// state after the first token; positions past `lengths` are never read.
class UtteranceEncoderImpl : public torch::nn::Module {
 public:
  /// `embedding` is shared with the decoder and registered by the owner.
  UtteranceEncoderImpl(torch::nn::Embedding embedding, std::int64_t hidden);

  /// tokens [N, L] int64, lengths [N] → [N, 2 * hidden]
  torch::Tensor forward(const torch::Tensor& tokens, const torch::Tensor& lengths);

  std::int64_t output_dim() const { return 2 * hidden_; }
  torch::nn::GRU& gru() { return gru_; }

 private:
  torch::nn::Embedding embedding_;
  std::int64_t hidden_;
  torch::nn::GRU gru_{nullptr};
};
TORCH_MODULE(UtteranceEncoder);

/// Unidirectional GRU over [utterance vector ; floor] steps; returns the
/// hidden state after each context's last real utterance.
class ContextEncoderImpl : public torch::nn::Module {
 public:
  ContextEncoderImpl(std::int64_t utterance_dim, std::int64_t hidden);

  /// utterance_vectors [B, W, D], floors [B, W], lengths [B] → [B, hidden]
  torch::Tensor forward(const torch::Tensor& utterance_vectors, const torch::Tensor& floors,
                        const torch::Tensor& lengths);

  std::int64_t output_dim() const { return hidden_; }
  torch::nn::GRU& gru() { return gru_; }

 private:
  std::int64_t hidden_;
  torch::nn::GRU gru_{nullptr};
};
TORCH_MODULE(ContextEncoder);

/// Runs `gru` over the packed valid prefix of each row and returns h_n as
/// [num_directions, N, hidden] in the original row order.
torch::Tensor packed_final_state(torch::nn::GRU& gru, const torch::Tensor& inputs,
                                 const torch::Tensor& lengths);

}  // namespace dialogwae
