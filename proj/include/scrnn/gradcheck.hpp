#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scrnn/corpus.hpp"
#include "scrnn/encoder.hpp"
#include "scrnn/network.hpp"
#include "scrnn/rng.hpp"

namespace scrnn {

/// Denominator floor for the relative error. Central differences in double
/// carry ~1e-10 of round-off, so entries below this are effectively held
/// to an absolute tolerance of 1e-9.
inline constexpr double kGradCheckFloor = 1e-5;

struct GradCheckReport {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::string worst_tensor;
  Eigen::Index worst_row = -1, worst_col = -1;
  std::size_t entries = 0;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / scale;
}

/// Compares backward_window against central finite differences of
/// window_loss for every parameter entry.
inline GradCheckReport check_window_gradients(const ModelParams<double>& params, const HiddenState<double>& entering,
                                              std::span<const Vector<double>> inputs, std::span<const ClassId> targets,
                                              double step = 1e-5) {
  std::vector<StepTrace<double>> traces;
  HiddenState<double> state = entering;
  for (const auto& x : inputs) {
    traces.push_back(lstm_forward(params.lstm, state, x));
    state = traces.back().state();
  }
  auto analytic = params.zeros_like();
  backward_window<double>(params, traces, targets, analytic);

  GradCheckReport report;
  ModelParams<double> work = params;
  auto compare = [&](const char* name, auto& w, const auto& a) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const double saved = w(r, c);
        w(r, c) = saved + step;
        const double up = window_loss(work, entering, inputs, targets);
        w(r, c) = saved - step;
        const double down = window_loss(work, entering, inputs, targets);
        w(r, c) = saved;
        const double numeric = (up - down) / (2 * step);
        const double rel = relative_error(a(r, c), numeric);
        report.max_abs_error = std::max(report.max_abs_error, std::abs(a(r, c) - numeric));
        ++report.entries;
        if (rel > report.max_rel_error || report.worst_row < 0) {
          report.max_rel_error = std::max(report.max_rel_error, rel);
          report.worst_tensor = name;
          report.worst_row = r;
          report.worst_col = c;
        }
      }
    }
  };
  compare("lstm.weights", work.lstm.weights, analytic.lstm.weights);
  compare("lstm.bias", work.lstm.bias, analytic.lstm.bias);
  compare("softmax.weights", work.softmax.weights, analytic.softmax.weights);
  return report;
}

struct TinyNetSpec {
  EncodingVariant variant = EncodingVariant::Int;
  Eigen::Index hidden = 8;
  Eigen::Index classes = 12;
  std::size_t window = 3;
  /// Steps run before the window so that the entering state is not zero.
  std::size_t prefix = 2;
  double init_scale = 0.5;
  CandidateActivation candidate = CandidateActivation::Tanh;
};

/// The five-slot alphabet {a, b, c, d, OTHER} used by the tiny check.
inline Alphabet tiny_alphabet() { return Alphabet({U'a', U'b', U'c', U'd'}); }

/// Gradient check on a random tiny network: random words over a four
/// letter alphabet (plus 'z', which lands in the OTHER slot), random targets,
/// and a window whose entering state comes from a random prefix.
inline GradCheckReport run_tiny_gradcheck(std::uint64_t seed, const TinyNetSpec& spec = {}) {
  const auto alphabet = tiny_alphabet();
  const auto dim = static_cast<Eigen::Index>(dimension(spec.variant, alphabet.size()));
  auto params = init_params<double>(seed, spec.hidden, dim, spec.classes, spec.init_scale, spec.candidate);
  Rng rng(derive_seed(seed, {0x6772}));
  // Spread the biases too, including the forget gate.
  for (Eigen::Index r = 0; r < params.lstm.bias.size(); ++r) params.lstm.bias[r] = rng.uniform(-1.0, 1.0);

  auto random_word = [&] {
    static constexpr char letters[] = "abcdz";
    const auto len = 1 + rng.below(8);
    std::string w;
    for (std::uint64_t k = 0; k < len; ++k) w.push_back(letters[rng.below(5)]);
    return w;
  };

  HiddenState<double> state = HiddenState<double>::zeros(spec.hidden);
  for (std::size_t k = 0; k < spec.prefix; ++k)
    state = lstm_forward(params.lstm, state, encode<double>(random_word(), spec.variant, alphabet).values).state();

  std::vector<Vector<double>> inputs;
  std::vector<ClassId> targets;
  for (std::size_t k = 0; k < spec.window; ++k) {
    inputs.push_back(encode<double>(random_word(), spec.variant, alphabet).values);
    targets.push_back(static_cast<ClassId>(rng.below(static_cast<std::uint64_t>(spec.classes))));
  }
  return check_window_gradients(params, state, inputs, targets);
}

}  // namespace scrnn
