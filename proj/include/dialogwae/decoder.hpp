#pragma once

#include <vector>

#include <torch/torch.h>

#include "dialogwae/corpus.hpp"

namespace dialogwae {

struct DecoderOptions {
  std::int64_t vocab_size = 10000;
  std::int64_t hidden = 300;
  std::int64_t latent_dim = 200;
  std::int64_t context_dim = 300;
  /// Also concatenate [z ; c] to every input step (off: [z ; c] only sets h_0).
  bool feed_latent_each_step = false;
};

/// GRU response decoder conditioned on (z, c) through its initial state
/// h_0 = tanh(W [z ; c] + b).
class DecoderImpl : public torch::nn::Module {
 public:
  /// `embedding` is shared with the utterance encoder and registered by the owner.
  DecoderImpl(torch::nn::Embedding embedding, DecoderOptions options);

  torch::Tensor initial_state(const torch::Tensor& z, const torch::Tensor& context);

  /// Teacher-forced logits: inputs [B, T] → [B, T, vocab].
  torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& context,
                        const torch::Tensor& inputs);

  /// Summed token NLL over real positions, averaged over the batch. `response`
  /// holds gold ids ending with eos; inputs are the same ids shifted right by bos.
  torch::Tensor reconstruction_loss(const torch::Tensor& z, const torch::Tensor& context,
                                    const torch::Tensor& response,
                                    const torch::Tensor& response_lengths);

  /// Argmax decoding from bos until eos or `max_len` tokens; bos/eos excluded.
  std::vector<std::vector<TokenId>> greedy_decode(const torch::Tensor& z,
                                                  const torch::Tensor& context,
                                                  std::int64_t max_len);

  const DecoderOptions& options() const { return options_; }
  torch::nn::Linear& output_layer() { return out_; }
  torch::nn::Linear& init_layer() { return init_; }
  torch::nn::GRU& gru() { return gru_; }

 private:
  torch::Tensor step_inputs(const torch::Tensor& embedded, const torch::Tensor& conditioning);

  torch::nn::Embedding embedding_;
  DecoderOptions options_;
  torch::nn::Linear init_{nullptr};
  torch::nn::GRU gru_{nullptr};
  torch::nn::Linear out_{nullptr};
};
TORCH_MODULE(Decoder);

/// [B, T] → [B, T]: bos followed by all but the last token of each row.
torch::Tensor shift_right(const torch::Tensor& response);

/// Sum over t < lengths[b] of -log softmax(logits[b, t])[targets[b, t]],
/// averaged over b.
torch::Tensor masked_token_nll(const torch::Tensor& logits, const torch::Tensor& targets,
                               const torch::Tensor& lengths);

/// Index of the largest entry per row; ties go to the lowest index.
torch::Tensor argmax_lowest(const torch::Tensor& scores);

}  // namespace dialogwae
