// Binary caches written by `prepare`. All integers are little-endian.
//
//   exchanges:  "DWAEXCH1" u32:count { u32:ctx_len {utt} u8[ctx_len]:floors utt }
//   utt:        u32:speaker_len bytes u32:n_tokens u32[n_tokens]
//   embeddings: "DWAEEMB1" u32:rows u32:dim f32[rows*dim]

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "dialogwae/corpus.hpp"

namespace dialogwae {

namespace {

constexpr std::array<char, 8> kExchangeMagic = {'D', 'W', 'A', 'E', 'X', 'C', 'H', '1'};
constexpr std::array<char, 8> kEmbeddingMagic = {'D', 'W', 'A', 'E', 'E', 'M', 'B', '1'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw CorpusError(path, 0, "cannot write cache file");
  }

  void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

  void u32(std::uint32_t v) {
    std::array<char, 4> buf{};
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
    bytes(buf.data(), buf.size());
  }

  void u8(std::uint8_t v) { bytes(reinterpret_cast<const char*>(&v), 1); }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void utterance(const Utterance& utt) {
    u32(static_cast<std::uint32_t>(utt.speaker.size()));
    bytes(utt.speaker.data(), utt.speaker.size());
    u32(static_cast<std::uint32_t>(utt.tokens.size()));
    for (TokenId id : utt.tokens) u32(static_cast<std::uint32_t>(id));
  }

  void finish() {
    out_.flush();
    if (!out_) throw CorpusError(path_, 0, "write failed");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw CorpusError(path, 0, "cannot open cache file");
  }

  void bytes(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw CorpusError(path_, 0, "truncated cache file");
  }

  std::uint32_t u32() {
    std::array<unsigned char, 4> buf{};
    bytes(reinterpret_cast<char*>(buf.data()), buf.size());
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
  }

  std::uint8_t u8() {
    char c = 0;
    bytes(&c, 1);
    return static_cast<std::uint8_t>(c);
  }

  float f32() { return std::bit_cast<float>(u32()); }

  Utterance utterance() {
    Utterance utt;
    utt.speaker.resize(u32());
    bytes(utt.speaker.data(), utt.speaker.size());
    const auto n = u32();
    utt.tokens.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) utt.tokens.push_back(static_cast<TokenId>(u32()));
    return utt;
  }

  void expect_magic(const std::array<char, 8>& magic) {
    std::array<char, 8> got{};
    bytes(got.data(), got.size());
    if (got != magic) throw CorpusError(path_, 0, "unrecognised cache header");
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace

void save_exchanges(const std::filesystem::path& path, std::span<const Exchange> exchanges) {
  Writer out(path);
  out.bytes(kExchangeMagic.data(), kExchangeMagic.size());
  out.u32(static_cast<std::uint32_t>(exchanges.size()));
  for (const auto& ex : exchanges) {
    out.u32(static_cast<std::uint32_t>(ex.context.size()));
    for (const auto& utt : ex.context) out.utterance(utt);
    for (auto f : ex.floors) out.u8(f);
    out.utterance(ex.response);
  }
  out.finish();
}

std::vector<Exchange> load_exchanges(const std::filesystem::path& path) {
  Reader in(path);
  in.expect_magic(kExchangeMagic);
  const auto count = in.u32();
  std::vector<Exchange> exchanges;
  exchanges.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Exchange ex;
    const auto ctx_len = in.u32();
    for (std::uint32_t j = 0; j < ctx_len; ++j) ex.context.push_back(in.utterance());
    for (std::uint32_t j = 0; j < ctx_len; ++j) ex.floors.push_back(in.u8());
    ex.response = in.utterance();
    exchanges.push_back(std::move(ex));
  }
  return exchanges;
}

void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table) {
  Writer out(path);
  out.bytes(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  auto weights = table.weights.to(torch::kFloat32).contiguous();
  out.u32(static_cast<std::uint32_t>(weights.size(0)));
  out.u32(static_cast<std::uint32_t>(weights.size(1)));
  const float* data = weights.data_ptr<float>();
  for (std::int64_t i = 0; i < weights.numel(); ++i) out.f32(data[i]);
  out.finish();
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
  Reader in(path);
  in.expect_magic(kEmbeddingMagic);
  const auto rows = static_cast<std::int64_t>(in.u32());
  const auto dim = static_cast<std::int64_t>(in.u32());
  auto weights = torch::empty({rows, dim}, torch::kFloat32);
  float* data = weights.data_ptr<float>();
  for (std::int64_t i = 0; i < rows * dim; ++i) data[i] = in.f32();
  return {weights};
}

}  // namespace dialogwae
