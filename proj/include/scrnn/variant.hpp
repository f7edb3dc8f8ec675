#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scrnn {

/// Which character positions the encoder collapses into an unordered bag.
///   Int: [first; internal; last]
///   End: [first; internal + last]
///   Beg: [first + internal; last]
///   All: [first + internal + last]
enum class EncodingVariant { Int, End, Beg, All };

inline constexpr std::array<EncodingVariant, 4> kAllVariants = {
    EncodingVariant::Int, EncodingVariant::End, EncodingVariant::Beg, EncodingVariant::All};

constexpr std::string_view to_string(EncodingVariant v) {
  switch (v) {
    case EncodingVariant::Int: return "int";
    case EncodingVariant::End: return "end";
    case EncodingVariant::Beg: return "beg";
    case EncodingVariant::All: return "all";
  }
  return "?";
}

inline EncodingVariant parse_variant(std::string_view name) {
  for (auto v : kAllVariants)
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown encoding variant '" + std::string(name) + "'");
}

}  // namespace scrnn
