#pragma once

#include <span>
#include <string>
#include <vector>

#include "scrnn/checkpoint.hpp"
#include "scrnn/encoder.hpp"
#include "scrnn/network.hpp"

namespace scrnn {

/// Index of the largest entry; the lowest index wins ties.
template <typename Derived>
ClassId argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return static_cast<ClassId>(best);
}

/// Runs the encoder and LSTM left to right from a zero state and returns the
/// most probable class at every position.
template <typename Scalar>
std::vector<ClassId> predict_labels(const ModelParams<Scalar>& params, const Alphabet& alphabet,
                                    EncodingVariant variant, std::span<const std::string> tokens) {
  std::vector<ClassId> out;
  out.reserve(tokens.size());
  auto state = HiddenState<Scalar>::zeros(params.hidden());
  for (const auto& token : tokens) {
    auto trace = lstm_forward(params.lstm, state, encode<Scalar>(token, variant, alphabet).values);
    // Softmax is monotone, so the logits decide.
    out.push_back(argmax(logits(params.softmax, trace.h)));
    state = trace.state();
  }
  return out;
}

/// Predicted vocabulary word for each token (UNK is a possible output).
inline std::vector<std::string> correct_sentence(const Checkpoint& ckpt, std::span<const std::string> tokens) {
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (auto id : predict_labels(ckpt.params, ckpt.alphabet, ckpt.variant, tokens)) words.push_back(ckpt.vocab.word(id));
  return words;
}

}  // namespace scrnn
