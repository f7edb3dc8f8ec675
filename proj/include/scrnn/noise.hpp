#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scrnn/corpus.hpp"
#include "scrnn/rng.hpp"
#include "scrnn/utf8.hpp"
#include "scrnn/variant.hpp"

namespace scrnn {

enum class NoiseKind { Jumble, Delete, Insert, None };

constexpr std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::Jumble: return "jumble";
    case NoiseKind::Delete: return "delete";
    case NoiseKind::Insert: return "insert";
    case NoiseKind::None: return "none";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(std::string_view name) {
  for (auto k : {NoiseKind::Jumble, NoiseKind::Delete, NoiseKind::Insert, NoiseKind::None})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "'");
}

/// Character positions a jumble may permute. Internal is the standard
/// condition; the others match the collapsed region of an encoder variant.
enum class JumbleSpan { Internal, InternalLast, FirstInternal, All };

constexpr JumbleSpan jumble_span_for(EncodingVariant v) {
  switch (v) {
    case EncodingVariant::Int: return JumbleSpan::Internal;
    case EncodingVariant::End: return JumbleSpan::InternalLast;
    case EncodingVariant::Beg: return JumbleSpan::FirstInternal;
    case EncodingVariant::All: return JumbleSpan::All;
  }
  return JumbleSpan::Internal;
}

struct CorruptionRecord {
  std::string original;
  std::string corrupted;
  NoiseKind kind = NoiseKind::None;
  bool eligible = false;

  bool operator==(const CorruptionRecord&) const = default;
};

using CorruptedSentence = std::vector<CorruptionRecord>;

/// At least four characters and no decimal digit.
inline bool is_eligible(std::string_view token) {
  if (std::any_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return false;
  return utf8::length(token) >= 4;
}

namespace detail {

inline std::u32string require_eligible(std::string_view token, std::string_view op) {
  if (!is_eligible(token))
    throw std::invalid_argument(std::string(op) + ": token '" + std::string(token) +
                                "' is not eligible for noise");
  return utf8::decode(token);
}

}  // namespace detail

/// Permutes the characters in the span uniformly over the distinct
/// arrangements other than the original one. When every character in the
/// span is the same the token is returned unchanged.
inline std::string jumble(std::string_view token, Rng& rng, JumbleSpan span = JumbleSpan::Internal) {
  auto cps = detail::require_eligible(token, "jumble");
  std::size_t lo = 1, hi = cps.size() - 1;  // [lo, hi)
  switch (span) {
    case JumbleSpan::Internal: break;
    case JumbleSpan::InternalLast: hi = cps.size(); break;
    case JumbleSpan::FirstInternal: lo = 0; break;
    case JumbleSpan::All: lo = 0; hi = cps.size(); break;
  }
  std::span<char32_t> region(cps.data() + lo, hi - lo);
  if (std::adjacent_find(region.begin(), region.end(), std::not_equal_to<>()) == region.end())
    return std::string(token);
  const std::u32string before(region.begin(), region.end());
  // A uniform shuffle hits every distinct arrangement equally often, so
  // rejecting the original leaves the others uniform.
  do {
    rng.shuffle(region);
  } while (std::equal(region.begin(), region.end(), before.begin()));
  return utf8::encode(cps);
}

/// Removes one internal character chosen uniformly.
inline std::string delete_internal(std::string_view token, Rng& rng) {
  auto cps = detail::require_eligible(token, "delete");
  const auto pos = 1 + rng.below(cps.size() - 2);
  cps.erase(pos, 1);
  return utf8::encode(cps);
}

/// Inserts a lowercase a-z letter at a uniformly chosen internal boundary
/// (after position 1 .. before the last character).
inline std::string insert_internal(std::string_view token, Rng& rng) {
  auto cps = detail::require_eligible(token, "insert");
  const auto boundary = 1 + rng.below(cps.size() - 1);
  const auto letter = static_cast<char32_t>(U'a' + rng.below(26));
  cps.insert(cps.begin() + static_cast<std::ptrdiff_t>(boundary), letter);
  return utf8::encode(cps);
}

/// Applies kind to an eligible token (kind must not be None).
inline std::string corrupt_token(std::string_view token, NoiseKind kind, Rng& rng,
                                 JumbleSpan span = JumbleSpan::Internal) {
  switch (kind) {
    case NoiseKind::Jumble: return jumble(token, rng, span);
    case NoiseKind::Delete: return delete_internal(token, rng);
    case NoiseKind::Insert: return insert_internal(token, rng);
    case NoiseKind::None: break;
  }
  throw std::invalid_argument("corrupt_token: noise kind must not be none");
}

/// Stream seed for one token; the randomness of a record depends only on
/// (seed, stream, sentence index, token index).
inline std::uint64_t token_seed(std::uint64_t seed, std::uint64_t stream, std::size_t sentence,
                                std::size_t token) {
  return derive_seed(seed, {stream, sentence, token});
}

inline CorruptedSentence corrupt_sentence(const Sentence& sentence, NoiseKind kind, std::uint64_t seed,
                                          std::size_t sentence_index, std::uint64_t stream = 0,
                                          JumbleSpan span = JumbleSpan::Internal) {
  CorruptedSentence out;
  out.reserve(sentence.size());
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    const auto& token = sentence[t];
    if (!is_eligible(token)) {
      out.push_back({token, token, NoiseKind::None, false});
      continue;
    }
    Rng rng(token_seed(seed, stream, sentence_index, t));
    out.push_back({token, corrupt_token(token, kind, rng, span), kind, true});
  }
  return out;
}

/// Corrupts every eligible token with kind; ineligible tokens pass through
/// with kind None. stream separates independent passes (e.g. epochs).
inline std::vector<CorruptedSentence> corrupt_dataset(const Corpus& data, NoiseKind kind, std::uint64_t seed,
                                                      JumbleSpan span = JumbleSpan::Internal,
                                                      std::uint64_t stream = 0) {
  if (kind == NoiseKind::None) throw std::invalid_argument("corrupt_dataset: noise kind must not be none");
  std::vector<CorruptedSentence> out;
  out.reserve(data.size());
  for (std::size_t s = 0; s < data.size(); ++s)
    out.push_back(corrupt_sentence(data[s], kind, seed, s, stream, span));
  return out;
}

inline std::vector<CorruptedSentence> corrupt_dataset(const Dataset& data, NoiseKind kind, std::uint64_t seed,
                                                      JumbleSpan span = JumbleSpan::Internal,
                                                      std::uint64_t stream = 0) {
  return corrupt_dataset(surfaces(data), kind, seed, span, stream);
}

/// TSV: header line, one record per line, a blank line after each sentence.
inline void write_corruption_tsv(std::ostream& out, const std::vector<CorruptedSentence>& sentences) {
  out << "original\tcorrupted\tkind\teligible\n";
  for (const auto& sentence : sentences) {
    for (const auto& r : sentence)
      out << r.original << '\t' << r.corrupted << '\t' << to_string(r.kind) << '\t'
          << (r.eligible ? "true" : "false") << '\n';
    out << '\n';
  }
}

}  // namespace scrnn
