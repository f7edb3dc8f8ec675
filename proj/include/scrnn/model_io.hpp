#pragma once

// Model file layout (all integers little-endian):
//
//   "SCRNN1"
//   u32 metadata length, then the metadata block:
//     u32 hidden, u32 input_dim, u32 classes, u32 alphabet_size
//     u8 variant, u8 candidate activation, u64 iteration
//     list alphabet characters   (each a UTF-8 string)
//     list vocabulary words      (first is "<unk>")
//     u64 per word: training frequency
//     u64 covered tokens, u64 total tokens
//     string training config      (key=value lines)
//   u32 tensor count, then per tensor:
//     string name, u32 rows, u32 cols, rows*cols f32 in row-major order
//
// A string is u32 byte length + bytes; a list is u32 count + strings.
// Tensors: W_i W_f W_o W_g (H x (H+D)), b_i b_f b_o b_g (H x 1), W_h (v x H).

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scrnn/checkpoint.hpp"
#include "scrnn/encoder.hpp"
#include "scrnn/utf8.hpp"

namespace scrnn {

inline constexpr std::string_view kModelMagic = "SCRNN1";

class ModelFormatError : public std::runtime_error {
 public:
  enum class Code { BadMagic, Truncated, DimensionMismatch, Malformed, Io };

  ModelFormatError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.append(s); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * k);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(raw(u32())); }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      throw ModelFormatError(ModelFormatError::Code::Truncated,
                             "model file truncated at byte " + std::to_string(pos_));
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

template <typename M>
void write_tensor(ByteWriter& w, std::string_view name, const M& m) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f32(m(r, c));
}

template <typename M>
void read_tensor(ByteReader& in, std::string_view name, M&& m) {
  const auto got = in.str();
  if (got != name)
    throw ModelFormatError(ModelFormatError::Code::Malformed,
                           "expected tensor '" + std::string(name) + "', found '" + got + "'");
  const auto rows = in.u32(), cols = in.u32();
  if (rows != m.rows() || cols != m.cols())
    throw ModelFormatError(ModelFormatError::Code::DimensionMismatch,
                           "tensor '" + std::string(name) + "' is " + std::to_string(rows) + "x" +
                               std::to_string(cols) + ", expected " + std::to_string(m.rows()) + "x" +
                               std::to_string(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = in.f32();
}

inline constexpr std::array<std::string_view, 4> kGateNames = {"i", "f", "o", "g"};

}  // namespace detail

inline std::string serialize_model(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  detail::ByteWriter meta;
  meta.u32(static_cast<std::uint32_t>(p.hidden()));
  meta.u32(static_cast<std::uint32_t>(p.input_dim()));
  meta.u32(static_cast<std::uint32_t>(p.classes()));
  meta.u32(static_cast<std::uint32_t>(ckpt.alphabet.size()));
  meta.u8(static_cast<std::uint8_t>(ckpt.variant));
  meta.u8(static_cast<std::uint8_t>(p.lstm.candidate));
  meta.u64(ckpt.iteration);
  meta.u32(static_cast<std::uint32_t>(ckpt.alphabet.chars().size()));
  for (char32_t c : ckpt.alphabet.chars()) meta.str(utf8::encode(c));
  const auto& words = ckpt.vocab.words();
  meta.u32(static_cast<std::uint32_t>(words.size()));
  for (const auto& w : words) meta.str(w);
  for (std::size_t k = 0; k < words.size(); ++k) meta.u64(ckpt.vocab.frequency(static_cast<ClassId>(k)));
  meta.u64(ckpt.vocab.covered_tokens());
  meta.u64(ckpt.vocab.total_tokens());
  meta.str(to_key_values(ckpt.config));

  detail::ByteWriter out;
  out.raw(kModelMagic);
  out.str(meta.bytes());
  out.u32(9);
  for (auto g : kGates)
    detail::write_tensor(out, std::string("W_") + std::string(detail::kGateNames[static_cast<int>(g)]),
                         p.lstm.gate_weights(g));
  for (auto g : kGates)
    detail::write_tensor(out, std::string("b_") + std::string(detail::kGateNames[static_cast<int>(g)]),
                         p.lstm.gate_bias(g));
  detail::write_tensor(out, "W_h", p.softmax.weights);
  return std::move(out.bytes());
}

inline Checkpoint deserialize_model(std::string_view bytes) {
  using Code = ModelFormatError::Code;
  if (bytes.size() < kModelMagic.size() || bytes.substr(0, kModelMagic.size()) != kModelMagic)
    throw ModelFormatError(Code::BadMagic, "not a model file (magic 'SCRNN1' missing)");
  detail::ByteReader in(bytes.substr(kModelMagic.size()));
  const auto meta_bytes = in.str();
  detail::ByteReader meta(meta_bytes);

  Checkpoint ckpt;
  const auto hidden = meta.u32(), input_dim = meta.u32(), classes = meta.u32(), n_slots = meta.u32();
  const auto variant = meta.u8(), candidate = meta.u8();
  if (variant > 3 || candidate > 1) throw ModelFormatError(Code::Malformed, "unknown variant or activation code");
  ckpt.variant = static_cast<EncodingVariant>(variant);
  ckpt.iteration = meta.u64();

  const auto n_chars = meta.u32();
  if (n_chars > meta.remaining()) throw ModelFormatError(Code::Truncated, "model file truncated in alphabet");
  std::vector<char32_t> chars;
  for (std::uint32_t k = 0; k < n_chars; ++k) {
    const auto cps = utf8::decode(meta.str());
    if (cps.size() != 1) throw ModelFormatError(Code::Malformed, "alphabet entry is not a single character");
    chars.push_back(cps.front());
  }
  const auto n_words = meta.u32();
  if (n_words > meta.remaining()) throw ModelFormatError(Code::Truncated, "model file truncated in vocabulary");
  std::vector<std::string> words;
  for (std::uint32_t k = 0; k < n_words; ++k) words.push_back(meta.str());
  std::vector<std::uint64_t> freq;
  for (std::uint32_t k = 0; k < n_words; ++k) freq.push_back(meta.u64());
  const auto covered = meta.u64(), total = meta.u64();
  const auto config_text = meta.str();
  if (!meta.done()) throw ModelFormatError(Code::Malformed, "trailing bytes in metadata block");

  try {
    ckpt.alphabet = Alphabet(std::move(chars));
    if (words.empty() || words.front() != kUnkToken)
      throw ModelFormatError(Code::Malformed, "vocabulary does not start with <unk>");
    words.erase(words.begin());
    freq.erase(freq.begin());
    ckpt.vocab = Vocabulary(std::move(words), std::move(freq), covered, total);
    ckpt.config = parse_key_values(config_text);
  } catch (const ModelFormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelFormatError(Code::Malformed, std::string("bad metadata: ") + e.what());
  }

  if (n_slots != ckpt.alphabet.size() || classes != ckpt.vocab.size() || hidden == 0 ||
      input_dim != dimension(ckpt.variant, ckpt.alphabet.size()))
    throw ModelFormatError(Code::DimensionMismatch,
                           "metadata dimensions are inconsistent with the stored alphabet/vocabulary/variant");

  ckpt.params = ModelParams<float>::zeros(hidden, input_dim, classes, static_cast<CandidateActivation>(candidate));
  const auto count = in.u32();
  if (count != 9) throw ModelFormatError(Code::Malformed, "expected 9 tensors, found " + std::to_string(count));
  for (auto g : kGates)
    detail::read_tensor(in, std::string("W_") + std::string(detail::kGateNames[static_cast<int>(g)]),
                        ckpt.params.lstm.gate_weights(g));
  for (auto g : kGates)
    detail::read_tensor(in, std::string("b_") + std::string(detail::kGateNames[static_cast<int>(g)]),
                        ckpt.params.lstm.gate_bias(g));
  detail::read_tensor(in, "W_h", ckpt.params.softmax.weights);
  if (!in.done()) throw ModelFormatError(Code::Malformed, "trailing bytes after tensors");
  return ckpt;
}

inline void save_model(const Checkpoint& ckpt, const std::string& path) {
  const auto bytes = serialize_model(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelFormatError(ModelFormatError::Code::Io, "cannot write model file '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelFormatError(ModelFormatError::Code::Io, "write failed for '" + path + "'");
}

inline Checkpoint load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError(ModelFormatError::Code::Io, "cannot open model file '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace scrnn
