#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "scrnn/checkpoint.hpp"
#include "scrnn/corpus.hpp"
#include "scrnn/inference.hpp"
#include "scrnn/noise.hpp"
#include "scrnn/parallel.hpp"
#include "scrnn/rng.hpp"
#include "scrnn/utf8.hpp"

namespace scrnn {

struct ErrorCase {
  std::string gold;
  std::string predicted;
  std::string corrupted;
  std::size_t sentence = 0;

  bool operator==(const ErrorCase&) const = default;
};

struct EvalReport {
  NoiseKind noise = NoiseKind::None;
  EncodingVariant variant = EncodingVariant::Int;
  std::size_t n_eligible = 0;
  std::size_t n_correct = 0;
  double accuracy = 0;
  std::vector<ErrorCase> errors;
  /// 1/0 per scored token in corpus order; pairs reports for bootstrap tests.
  std::vector<std::uint8_t> outcomes;
};

namespace detail {

inline void check_alignment(const std::vector<CorruptedSentence>& corrupted, const Dataset& gold) {
  if (corrupted.size() != gold.sentences.size())
    throw std::invalid_argument("accuracy: " + std::to_string(corrupted.size()) + " corrupted sentences vs " +
                                std::to_string(gold.sentences.size()) + " gold sentences");
  for (std::size_t s = 0; s < corrupted.size(); ++s) {
    if (corrupted[s].size() != gold.sentences[s].size())
      throw std::invalid_argument("accuracy: sentence " + std::to_string(s) + " length differs from gold");
    for (std::size_t t = 0; t < corrupted[s].size(); ++t)
      if (corrupted[s][t].original != gold.sentences[s][t].surface)
        throw std::invalid_argument("accuracy: sentence " + std::to_string(s) + " token " + std::to_string(t) +
                                    " does not match gold");
  }
}

}  // namespace detail

/// Word recognition accuracy over tokens that were eligible for noise and
/// whose gold word is in the vocabulary. A prediction is correct iff the
/// predicted word equals the gold surface form.
template <typename Scalar>
EvalReport score_predictions(const ModelParams<Scalar>& params, const Alphabet& alphabet, const Vocabulary& vocab,
                             EncodingVariant variant, const std::vector<CorruptedSentence>& corrupted,
                             const Dataset& gold, unsigned threads = 1) {
  detail::check_alignment(corrupted, gold);
  std::vector<std::vector<ClassId>> predicted(corrupted.size());
  parallel_for(corrupted.size(), threads, [&](std::size_t s) {
    std::vector<std::string> tokens;
    tokens.reserve(corrupted[s].size());
    for (const auto& r : corrupted[s]) tokens.push_back(r.corrupted);
    predicted[s] = predict_labels(params, alphabet, variant, tokens);
  });

  EvalReport report;
  report.variant = variant;
  for (std::size_t s = 0; s < corrupted.size(); ++s) {
    for (std::size_t t = 0; t < corrupted[s].size(); ++t) {
      const auto& record = corrupted[s][t];
      const auto& g = gold.sentences[s][t];
      if (!record.eligible || g.label == kUnk) continue;
      if (report.noise == NoiseKind::None) report.noise = record.kind;
      ++report.n_eligible;
      const auto& word = vocab.word(predicted[s][t]);
      const bool ok = word == g.surface;
      report.outcomes.push_back(ok ? 1 : 0);
      if (ok)
        ++report.n_correct;
      else
        report.errors.push_back({g.surface, word, record.corrupted, s});
    }
  }
  report.accuracy = report.n_eligible == 0 ? 0.0 : static_cast<double>(report.n_correct) / report.n_eligible;
  return report;
}

inline EvalReport accuracy(const Checkpoint& ckpt, const std::vector<CorruptedSentence>& corrupted, const Dataset& gold,
                           unsigned threads = 1) {
  return score_predictions(ckpt.params, ckpt.alphabet, ckpt.vocab, ckpt.variant, corrupted, gold, threads);
}

struct ErrorGroup {
  std::string gold;
  std::string predicted;
  std::size_t count = 0;
  std::vector<ErrorCase> cases;
};

/// Errors grouped by (gold, predicted), most frequent first, ties in
/// lexicographic order. top_k == 0 keeps every group.
inline std::vector<ErrorGroup> error_analysis(const EvalReport& report, std::size_t top_k) {
  std::map<std::pair<std::string, std::string>, ErrorGroup> groups;
  for (const auto& e : report.errors) {
    auto& g = groups[{e.gold, e.predicted}];
    g.gold = e.gold;
    g.predicted = e.predicted;
    ++g.count;
    g.cases.push_back(e);
  }
  std::vector<ErrorGroup> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
  if (top_k != 0 && out.size() > top_k) out.resize(top_k);
  return out;
}

/// Unrestricted Damerau-Levenshtein distance (insertions, deletions,
/// substitutions and transpositions of adjacent characters, where
/// transposed characters may also be edited in between).
inline std::size_t damerau_levenshtein(std::u32string_view a, std::u32string_view b) {
  const std::size_t la = a.size(), lb = b.size();
  const std::size_t inf = la + lb;
  const std::size_t cols = lb + 2;
  std::vector<std::size_t> d((la + 2) * cols);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * cols + j]; };
  at(0, 0) = inf;
  for (std::size_t i = 0; i <= la; ++i) {
    at(i + 1, 0) = inf;
    at(i + 1, 1) = i;
  }
  for (std::size_t j = 0; j <= lb; ++j) {
    at(0, j + 1) = inf;
    at(1, j + 1) = j;
  }
  std::map<char32_t, std::size_t> last_row;
  for (std::size_t i = 1; i <= la; ++i) {
    std::size_t last_match_col = 0;
    for (std::size_t j = 1; j <= lb; ++j) {
      const auto it = last_row.find(b[j - 1]);
      const std::size_t i1 = it == last_row.end() ? 0 : it->second;
      const std::size_t j1 = last_match_col;
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      if (cost == 0) last_match_col = j;
      at(i + 1, j + 1) = std::min({at(i, j) + cost, at(i + 1, j) + 1, at(i, j + 1) + 1,
                                   at(i1, j1) + (i - i1 - 1) + 1 + (j - j1 - 1)});
    }
    last_row[a[i - 1]] = i;
  }
  return at(la + 1, lb + 1);
}

inline std::size_t damerau_levenshtein(std::string_view a, std::string_view b) {
  return damerau_levenshtein(std::u32string_view(utf8::decode(a)), std::u32string_view(utf8::decode(b)));
}

/// Dictionary baseline: the vocabulary word closest to the token in
/// Damerau-Levenshtein distance; ties go to the more frequent word, then the
/// lexicographically smaller one.
class EditDistanceCorrector {
 public:
  explicit EditDistanceCorrector(const Vocabulary& vocab) : vocab_(&vocab) {
    decoded_.reserve(vocab.size());
    for (const auto& w : vocab.words()) decoded_.push_back(utf8::decode(w));
  }

  std::string correct(std::string_view token) const {
    if (vocab_->label(token) != kUnk) return std::string(token);
    const auto cps = utf8::decode(token);
    ClassId best = kUnk;
    std::size_t best_distance = 0;
    for (std::size_t k = 1; k < decoded_.size(); ++k) {
      const auto& w = decoded_[k];
      const std::size_t gap = w.size() > cps.size() ? w.size() - cps.size() : cps.size() - w.size();
      if (best != kUnk && gap > best_distance) continue;
      const auto dist = damerau_levenshtein(cps, w);
      const auto id = static_cast<ClassId>(k);
      if (best == kUnk || better(dist, id, best_distance, best)) {
        best = id;
        best_distance = dist;
      }
    }
    return vocab_->word(best);
  }

 private:
  bool better(std::size_t dist, ClassId id, std::size_t best_dist, ClassId best) const {
    if (dist != best_dist) return dist < best_dist;
    if (vocab_->frequency(id) != vocab_->frequency(best)) return vocab_->frequency(id) > vocab_->frequency(best);
    return vocab_->word(id) < vocab_->word(best);
  }

  const Vocabulary* vocab_;
  std::vector<std::u32string> decoded_;
};

inline std::string baseline_correct(std::string_view token, const Vocabulary& vocab) {
  return EditDistanceCorrector(vocab).correct(token);
}

/// Scores the edit-distance baseline the same way as score_predictions.
inline EvalReport score_baseline(const Vocabulary& vocab, const std::vector<CorruptedSentence>& corrupted,
                                 const Dataset& gold) {
  detail::check_alignment(corrupted, gold);
  const EditDistanceCorrector corrector(vocab);
  EvalReport report;
  for (std::size_t s = 0; s < corrupted.size(); ++s) {
    for (std::size_t t = 0; t < corrupted[s].size(); ++t) {
      const auto& record = corrupted[s][t];
      const auto& g = gold.sentences[s][t];
      if (!record.eligible || g.label == kUnk) continue;
      if (report.noise == NoiseKind::None) report.noise = record.kind;
      ++report.n_eligible;
      const auto word = corrector.correct(record.corrupted);
      const bool ok = word == g.surface;
      report.outcomes.push_back(ok ? 1 : 0);
      if (ok)
        ++report.n_correct;
      else
        report.errors.push_back({g.surface, word, record.corrupted, s});
    }
  }
  report.accuracy = report.n_eligible == 0 ? 0.0 : static_cast<double>(report.n_correct) / report.n_eligible;
  return report;
}

/// One-sided paired bootstrap: the fraction of resamples in which system a
/// is not better than system b. Small values mean a is reliably better.
inline double paired_bootstrap_p_value(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b,
                                       std::size_t resamples = 10000, std::uint64_t seed = 1) {
  if (a.size() != b.size()) throw std::invalid_argument("paired bootstrap: outcome vectors differ in length");
  if (a.empty()) return 1.0;
  Rng rng(derive_seed(seed, {0xb007}));
  std::size_t not_better = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    long long diff = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const auto idx = rng.below(a.size());
      diff += static_cast<int>(a[idx]) - static_cast<int>(b[idx]);
    }
    if (diff <= 0) ++not_better;
  }
  return static_cast<double>(not_better) / static_cast<double>(resamples);
}

}  // namespace scrnn
