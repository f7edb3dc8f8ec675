#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scrnn/checkpoint.hpp"
#include "scrnn/config.hpp"
#include "scrnn/corpus.hpp"
#include "scrnn/encoder.hpp"
#include "scrnn/eval.hpp"
#include "scrnn/network.hpp"
#include "scrnn/noise.hpp"
#include "scrnn/parallel.hpp"
#include "scrnn/rng.hpp"

namespace scrnn {

struct LearningCurvePoint {
  std::uint64_t iteration = 0;
  double train_loss = 0;
  double dev_accuracy = 0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LearningCurvePoint> curve;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sentences of a batch are split into this many gradient accumulators,
/// assigned round-robin and summed in a fixed order. The split does not
/// depend on the thread count, so neither do the results.
inline constexpr std::size_t kGradientGroups = 8;

namespace detail {

/// Accumulates the gradient of one sentence into grad and returns its
/// summed loss. At every position the current word's loss is backpropagated
/// through the last `beta` steps.
inline double sentence_gradient(const ModelParams<float>& params, const Alphabet& alphabet, EncodingVariant variant,
                                int beta, const CorruptedSentence& noisy, const std::vector<LabeledToken>& gold,
                                ModelParams<float>& grad) {
  const auto H = params.hidden();
  std::vector<StepTrace<float>> traces;
  traces.reserve(noisy.size());
  auto state = HiddenState<float>::zeros(H);
  std::vector<Vector<float>> dh(static_cast<std::size_t>(beta));
  double loss = 0;
  for (std::size_t n = 0; n < noisy.size(); ++n) {
    traces.push_back(lstm_forward(params.lstm, state, encode<float>(noisy[n].corrupted, variant, alphabet).values));
    state = traces.back().state();
    const auto probs = predict(params.softmax, traces.back().h);
    loss += cross_entropy(probs, gold[n].label);
    const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(beta), n + 1);
    for (auto& v : dh) v.resize(0);
    dh[len - 1] = backward_output(params.softmax, traces.back().h, probs, gold[n].label, grad.softmax);
    backward_lstm_window<float>(params.lstm, std::span(traces).subspan(n + 1 - len, len),
                                std::span<const Vector<float>>(dh.data(), len), grad.lstm);
  }
  return loss;
}

inline void check_labels(const Dataset& data, const Vocabulary& vocab, const char* name) {
  for (const auto& s : data.sentences)
    for (const auto& t : s)
      if (t.label < 0 || static_cast<std::size_t>(t.label) >= vocab.size() || t.surface.empty())
        throw std::invalid_argument(std::string("train: ") + name + " set has a label outside the vocabulary");
}

}  // namespace detail

/// Corrupts a dataset the way training and dev evaluation do for a config.
inline std::vector<CorruptedSentence> corrupt_for(const Dataset& data, const TrainingConfig& config,
                                                  std::uint64_t seed, std::uint64_t stream = 0) {
  return corrupt_dataset(data, config.noise, seed, jumble_span_for(config.variant), stream);
}

using ProgressFn = std::function<void(const LearningCurvePoint&)>;

/// Mini-batch truncated-BPTT training with plain SGD.
///
/// Every epoch visits the sentences in a seed-shuffled order, batch_size at a
/// time, with fresh noise on every eligible token. Gradients are averaged
/// per word over the batch, clipped to grad_clip in global L2 norm, and
/// applied with the epoch's learning rate. A learning-curve point (mean
/// training loss since the previous point, dev accuracy under a fixed
/// corruption) is recorded every eval_every batches and after the last one.
inline TrainResult train(const Dataset& train_set, const Dataset& dev_set, const Alphabet& alphabet,
                         const Vocabulary& vocab, const TrainingConfig& config, unsigned threads = 1,
                         const ProgressFn& progress = {}) {
  config.validate();
  if (train_set.sentences.empty() || train_set.token_count() == 0) throw std::invalid_argument("train: empty training set");
  detail::check_labels(train_set, vocab, "training");
  detail::check_labels(dev_set, vocab, "dev");

  const auto dim = static_cast<Eigen::Index>(dimension(config.variant, alphabet.size()));
  TrainResult result;
  auto& ckpt = result.checkpoint;
  ckpt.alphabet = alphabet;
  ckpt.vocab = vocab;
  ckpt.variant = config.variant;
  ckpt.config = config;
  ckpt.params = init_params<float>(config.seed, config.hidden, dim, static_cast<Eigen::Index>(vocab.size()),
                                   config.init_scale, config.candidate);
  auto& params = ckpt.params;

  const auto dev_noisy = dev_set.sentences.empty() ? std::vector<CorruptedSentence>{}
                                                   : corrupt_for(dev_set, config, config.dev_seed);
  const auto train_surfaces = surfaces(train_set);
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  const std::size_t groups = std::min(kGradientGroups, batch_size);
  std::vector<ModelParams<float>> group_grads(groups, params.zeros_like());
  std::vector<double> group_loss(groups);
  auto batch_grad = params.zeros_like();

  std::vector<std::size_t> order(train_set.sentences.size());
  double loss_sum = 0;
  std::size_t loss_words = 0;
  std::uint64_t iteration = 0;

  auto record_point = [&] {
    LearningCurvePoint point;
    point.iteration = iteration;
    point.train_loss = loss_words == 0 ? 0.0 : loss_sum / static_cast<double>(loss_words);
    if (!dev_noisy.empty())
      point.dev_accuracy =
          score_predictions(params, alphabet, vocab, config.variant, dev_noisy, dev_set, threads).accuracy;
    loss_sum = 0;
    loss_words = 0;
    result.curve.push_back(point);
    if (progress) progress(point);
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto lr = static_cast<float>(config.learning_rate_at(epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, {0x5eed, static_cast<std::uint64_t>(epoch)}));
    shuffle_rng.shuffle(std::span(order));

    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const auto batch = std::span(order).subspan(start, std::min(batch_size, order.size() - start));
      parallel_for(groups, threads, [&](std::size_t g) {
        group_grads[g].set_zero();
        group_loss[g] = 0;
        for (std::size_t k = g; k < batch.size(); k += groups) {
          const auto s = batch[k];
          const auto noisy = corrupt_sentence(train_surfaces[s], config.noise, config.seed, s,
                                              static_cast<std::uint64_t>(epoch), jumble_span_for(config.variant));
          group_loss[g] += detail::sentence_gradient(params, alphabet, config.variant, config.beta, noisy,
                                                     train_set.sentences[s], group_grads[g]);
        }
      });

      std::size_t words = 0;
      for (auto s : batch) words += train_set.sentences[s].size();
      batch_grad.set_zero();
      double batch_loss = 0;
      for (std::size_t g = 0; g < groups; ++g) {
        batch_grad.add_scaled(group_grads[g], 1.0f);
        batch_loss += group_loss[g];
      }
      if (!std::isfinite(batch_loss))
        throw TrainingDiverged("training diverged: non-finite loss in epoch " + std::to_string(epoch) +
                               " at iteration " + std::to_string(iteration + 1) + " (learning rate " +
                               detail::format_double(lr) + ")");
      if (words == 0) continue;
      batch_grad.scale(1.0f / static_cast<float>(words));
      const double norm = std::sqrt(static_cast<double>(batch_grad.squared_norm()));
      if (norm > config.grad_clip) batch_grad.scale(static_cast<float>(config.grad_clip / norm));
      params.add_scaled(batch_grad, -lr);
      if (!params.all_finite())
        throw TrainingDiverged("training diverged: non-finite parameters after iteration " +
                               std::to_string(iteration + 1));

      loss_sum += batch_loss;
      loss_words += words;
      ++iteration;
      if (iteration % static_cast<std::uint64_t>(config.eval_every) == 0) record_point();
    }
  }
  if (result.curve.empty() || result.curve.back().iteration != iteration) record_point();
  ckpt.iteration = iteration;
  return result;
}

/// CSV with header iteration,train_loss,dev_accuracy.
inline void emit_learning_curve(std::span<const LearningCurvePoint> points, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write learning curve '" + path + "'");
  out << "iteration,train_loss,dev_accuracy\n";
  for (const auto& p : points)
    out << p.iteration << ',' << detail::format_double(p.train_loss) << ',' << detail::format_double(p.dev_accuracy)
        << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace scrnn
