#include <algorithm>
#include <numeric>

#include "dialogwae/corpus.hpp"

namespace dialogwae {

namespace {

template <typename Range, typename Get>
ExchangeBatch collate_impl(const Range& exchanges, Get get) {
  const auto batch = static_cast<std::int64_t>(exchanges.size());
  if (batch == 0) throw std::invalid_argument("cannot collate an empty batch");

  std::int64_t max_ctx = 1, max_utt = 1, max_resp = 1;
  for (const auto& item : exchanges) {
    const Exchange& ex = get(item);
    if (ex.context.empty()) throw std::invalid_argument("exchange with empty context");
    if (ex.response.tokens.empty()) throw std::invalid_argument("exchange with empty response");
    max_ctx = std::max<std::int64_t>(max_ctx, static_cast<std::int64_t>(ex.context.size()));
    max_resp = std::max<std::int64_t>(max_resp, static_cast<std::int64_t>(ex.response.length()));
    for (const auto& utt : ex.context) {
      max_utt = std::max<std::int64_t>(max_utt, static_cast<std::int64_t>(utt.length()));
    }
  }

  ExchangeBatch out;
  out.context_tokens = torch::full({batch, max_ctx, max_utt}, kPadId, torch::kInt64);
  out.context_utt_lengths = torch::zeros({batch, max_ctx}, torch::kInt64);
  out.context_lengths = torch::zeros({batch}, torch::kInt64);
  out.floors = torch::zeros({batch, max_ctx}, torch::kFloat32);
  out.response_tokens = torch::full({batch, max_resp}, kPadId, torch::kInt64);
  out.response_lengths = torch::zeros({batch}, torch::kInt64);

  auto ctx = out.context_tokens.accessor<std::int64_t, 3>();
  auto utt_len = out.context_utt_lengths.accessor<std::int64_t, 2>();
  auto ctx_len = out.context_lengths.accessor<std::int64_t, 1>();
  auto floors = out.floors.accessor<float, 2>();
  auto resp = out.response_tokens.accessor<std::int64_t, 2>();
  auto resp_len = out.response_lengths.accessor<std::int64_t, 1>();

  std::int64_t b = 0;
  for (const auto& item : exchanges) {
    const Exchange& ex = get(item);
    ctx_len[b] = static_cast<std::int64_t>(ex.context.size());
    for (std::size_t w = 0; w < ex.context.size(); ++w) {
      const auto& tokens = ex.context[w].tokens;
      if (tokens.empty()) throw std::invalid_argument("context utterance with no tokens");
      const auto wi = static_cast<std::int64_t>(w);
      utt_len[b][wi] = static_cast<std::int64_t>(tokens.size());
      floors[b][wi] = ex.floors.at(w) ? 1.0F : 0.0F;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        ctx[b][wi][static_cast<std::int64_t>(t)] = tokens[t];
      }
    }
    resp_len[b] = static_cast<std::int64_t>(ex.response.length());
    for (std::size_t t = 0; t < ex.response.tokens.size(); ++t) {
      resp[b][static_cast<std::int64_t>(t)] = ex.response.tokens[t];
    }
    ++b;
  }
  return out;
}

}  // namespace

ExchangeBatch collate(std::span<const Exchange> exchanges) {
  return collate_impl(exchanges, [](const Exchange& ex) -> const Exchange& { return ex; });
}

ExchangeBatch collate(std::span<const std::reference_wrapper<const Exchange>> exchanges) {
  return collate_impl(exchanges, [](const std::reference_wrapper<const Exchange>& ex)
                                     -> const Exchange& { return ex.get(); });
}

BatchStream::BatchStream(std::span<const Exchange> exchanges, std::size_t batch_size,
                         std::optional<std::uint64_t> shuffle_seed)
    : exchanges_(exchanges), batch_size_(batch_size) {
  if (batch_size_ < 1) throw std::invalid_argument("batch_size must be >= 1");
  const auto n = static_cast<std::int64_t>(exchanges_.size());
  if (shuffle_seed && n > 0) {
    auto gen = make_generator(*shuffle_seed);
    auto perm = torch::randperm(n, gen, torch::kInt64);
    order_.assign(perm.data_ptr<std::int64_t>(), perm.data_ptr<std::int64_t>() + n);
  } else {
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), 0);
  }
}

std::size_t BatchStream::num_batches() const {
  return (exchanges_.size() + batch_size_ - 1) / batch_size_;
}

std::optional<ExchangeBatch> BatchStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  std::vector<std::reference_wrapper<const Exchange>> members;
  members.reserve(end - cursor_);
  for (std::size_t i = cursor_; i < end; ++i) {
    members.emplace_back(exchanges_[static_cast<std::size_t>(order_[i])]);
  }
  cursor_ = end;
  return collate(std::span<const std::reference_wrapper<const Exchange>>(members));
}

BatchStream batch_exchanges(std::span<const Exchange> exchanges, std::size_t batch_size,
                            std::optional<std::uint64_t> shuffle_seed) {
  return BatchStream(exchanges, batch_size, shuffle_seed);
}

}  // namespace dialogwae
