#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string_view>

#include "scrnn/corpus.hpp"
#include "scrnn/utf8.hpp"
#include "scrnn/variant.hpp"

namespace scrnn {

/// Input width for an alphabet of n slots.
constexpr std::size_t dimension(EncodingVariant variant, std::size_t n) {
  switch (variant) {
    case EncodingVariant::Int: return 3 * n;
    case EncodingVariant::End:
    case EncodingVariant::Beg: return 2 * n;
    case EncodingVariant::All: return n;
  }
  return 0;
}

template <typename Scalar>
struct SemiCharVector {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  EncodingVariant variant = EncodingVariant::Int;
};

/// Semi-character encoding of a token.
///
/// The first character is one-hot in the "begin" block, the last one-hot in
/// the "end" block and everything in between is counted in the "internal"
/// block. Variants other than Int add blocks together:
///   End = [b; i + e], Beg = [b + i; e], All = [b + i + e].
/// Characters outside the alphabet count in the OTHER slot. A one-character
/// token is both first and last character, so its values sum to 2; for any
/// longer token they sum to the token length.
template <typename Scalar = float>
SemiCharVector<Scalar> encode(std::string_view token, EncodingVariant variant, const Alphabet& alphabet) {
  const auto cps = utf8::decode(token);
  if (cps.empty()) throw std::invalid_argument("encode: empty token");
  const auto n = static_cast<Eigen::Index>(alphabet.size());

  // Block offsets of (begin, internal, end) within the output.
  Eigen::Index b = 0, i = n, e = 2 * n;
  switch (variant) {
    case EncodingVariant::Int: break;
    case EncodingVariant::End: i = n; e = n; break;
    case EncodingVariant::Beg: i = 0; e = n; break;
    case EncodingVariant::All: i = 0; e = 0; break;
  }

  SemiCharVector<Scalar> out;
  out.variant = variant;
  out.values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(static_cast<Eigen::Index>(dimension(variant, alphabet.size())));
  out.values[b + alphabet.slot(cps.front())] += Scalar(1);
  for (std::size_t k = 1; k + 1 < cps.size(); ++k) out.values[i + alphabet.slot(cps[k])] += Scalar(1);
  out.values[e + alphabet.slot(cps.back())] += Scalar(1);
  return out;
}

}  // namespace scrnn
