#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scrnn/corpus.hpp"
#include "scrnn/rng.hpp"

namespace scrnn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Marks a time step whose output contributes no loss.
inline constexpr ClassId kNoTarget = -1;

enum class Gate : int { Input = 0, Forget = 1, Output = 2, Candidate = 3 };
inline constexpr std::array<Gate, 4> kGates = {Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate};

/// Activation of the candidate gate g. Tanh is the standard LSTM; Sigmoid
/// reproduces the formulation where every gate uses the logistic function.
enum class CandidateActivation : std::uint8_t { Tanh = 0, Sigmoid = 1 };

constexpr std::string_view to_string(CandidateActivation a) {
  return a == CandidateActivation::Tanh ? "tanh" : "sigmoid";
}

inline CandidateActivation parse_candidate_activation(std::string_view name) {
  if (name == "tanh") return CandidateActivation::Tanh;
  if (name == "sigmoid") return CandidateActivation::Sigmoid;
  throw std::invalid_argument("unknown candidate activation '" + std::string(name) + "'");
}

/// The four gate matrices stacked row-wise (input, forget, output,
/// candidate), each H x (H + D) acting on [h_prev; x].
template <typename Scalar>
struct LstmParams {
  Matrix<Scalar> weights;  // 4H x (H + D)
  Vector<Scalar> bias;     // 4H
  CandidateActivation candidate = CandidateActivation::Tanh;

  Eigen::Index hidden() const { return bias.size() / 4; }
  Eigen::Index input_dim() const { return weights.cols() - hidden(); }

  auto gate_weights(Gate g) { return weights.middleRows(static_cast<Eigen::Index>(g) * hidden(), hidden()); }
  auto gate_weights(Gate g) const {
    return weights.middleRows(static_cast<Eigen::Index>(g) * hidden(), hidden());
  }
  auto gate_bias(Gate g) { return bias.segment(static_cast<Eigen::Index>(g) * hidden(), hidden()); }
  auto gate_bias(Gate g) const { return bias.segment(static_cast<Eigen::Index>(g) * hidden(), hidden()); }
};

/// Output projection W_h (v x H); there is no output bias.
template <typename Scalar>
struct SoftmaxParams {
  Matrix<Scalar> weights;

  Eigen::Index classes() const { return weights.rows(); }
};

template <typename Scalar>
struct ModelParams {
  LstmParams<Scalar> lstm;
  SoftmaxParams<Scalar> softmax;

  static ModelParams zeros(Eigen::Index hidden, Eigen::Index input_dim, Eigen::Index classes,
                           CandidateActivation candidate = CandidateActivation::Tanh) {
    ModelParams p;
    p.lstm.weights = Matrix<Scalar>::Zero(4 * hidden, hidden + input_dim);
    p.lstm.bias = Vector<Scalar>::Zero(4 * hidden);
    p.lstm.candidate = candidate;
    p.softmax.weights = Matrix<Scalar>::Zero(classes, hidden);
    return p;
  }

  ModelParams zeros_like() const {
    return zeros(lstm.hidden(), lstm.input_dim(), softmax.classes(), lstm.candidate);
  }

  Eigen::Index hidden() const { return lstm.hidden(); }
  Eigen::Index input_dim() const { return lstm.input_dim(); }
  Eigen::Index classes() const { return softmax.classes(); }

  void set_zero() {
    lstm.weights.setZero();
    lstm.bias.setZero();
    softmax.weights.setZero();
  }

  Scalar squared_norm() const {
    return lstm.weights.squaredNorm() + lstm.bias.squaredNorm() + softmax.weights.squaredNorm();
  }

  bool all_finite() const {
    return lstm.weights.allFinite() && lstm.bias.allFinite() && softmax.weights.allFinite();
  }

  /// this += alpha * other
  void add_scaled(const ModelParams& other, Scalar alpha) {
    lstm.weights += alpha * other.lstm.weights;
    lstm.bias += alpha * other.lstm.bias;
    softmax.weights += alpha * other.softmax.weights;
  }

  void scale(Scalar alpha) {
    lstm.weights *= alpha;
    lstm.bias *= alpha;
    softmax.weights *= alpha;
  }

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> p;
    p.lstm.weights = lstm.weights.template cast<Other>();
    p.lstm.bias = lstm.bias.template cast<Other>();
    p.lstm.candidate = lstm.candidate;
    p.softmax.weights = softmax.weights.template cast<Other>();
    return p;
  }

  /// Calls fn(name, matrix) for every trainable tensor.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    fn("lstm.weights", lstm.weights);
    fn("lstm.bias", lstm.bias);
    fn("softmax.weights", softmax.weights);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    fn("lstm.weights", lstm.weights);
    fn("lstm.bias", lstm.bias);
    fn("softmax.weights", softmax.weights);
  }

  bool operator==(const ModelParams& o) const {
    return lstm.candidate == o.lstm.candidate && lstm.weights == o.lstm.weights && lstm.bias == o.lstm.bias &&
           softmax.weights == o.softmax.weights;
  }
};

template <typename Scalar>
struct HiddenState {
  Vector<Scalar> h;
  Vector<Scalar> c;

  static HiddenState zeros(Eigen::Index hidden) {
    return {Vector<Scalar>::Zero(hidden), Vector<Scalar>::Zero(hidden)};
  }
};

/// Everything backprop needs from one forward step.
template <typename Scalar>
struct StepTrace {
  Vector<Scalar> x;
  Vector<Scalar> h_prev, c_prev;
  Vector<Scalar> i, f, o, g;
  Vector<Scalar> c, tanh_c, h;

  HiddenState<Scalar> state() const { return {h, c}; }
};

namespace detail {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return S(1) / (S(1) + (-z).exp());
}

}  // namespace detail

/// One LSTM step:
///   i, f, o = sigmoid(W_* [h_prev; x] + b_*)
///   g       = tanh(W_g [h_prev; x] + b_g)   (or sigmoid, see CandidateActivation)
///   c       = f * c_prev + i * g
///   h       = o * tanh(c)
template <typename Scalar>
StepTrace<Scalar> lstm_forward(const LstmParams<Scalar>& p, const HiddenState<Scalar>& state,
                               const Vector<Scalar>& x) {
  const Eigen::Index H = p.hidden();
  if (x.size() != p.input_dim())
    throw std::invalid_argument("lstm_step: input has length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(p.input_dim()));
  if (state.h.size() != H || state.c.size() != H)
    throw std::invalid_argument("lstm_step: hidden state does not match hidden size");

  Vector<Scalar> z = p.bias;
  z.noalias() += p.weights.leftCols(H) * state.h;
  // Semi-character inputs are sparse counts.
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (x[j] != Scalar(0)) z += x[j] * p.weights.col(H + j);

  StepTrace<Scalar> t;
  t.x = x;
  t.h_prev = state.h;
  t.c_prev = state.c;
  t.i = detail::sigmoid(z.segment(0, H).array()).matrix();
  t.f = detail::sigmoid(z.segment(H, H).array()).matrix();
  t.o = detail::sigmoid(z.segment(2 * H, H).array()).matrix();
  if (p.candidate == CandidateActivation::Tanh)
    t.g = z.segment(3 * H, H).array().tanh().matrix();
  else
    t.g = detail::sigmoid(z.segment(3 * H, H).array()).matrix();
  t.c = (t.f.array() * t.c_prev.array() + t.i.array() * t.g.array()).matrix();
  t.tanh_c = t.c.array().tanh().matrix();
  t.h = (t.o.array() * t.tanh_c.array()).matrix();
  return t;
}

template <typename Scalar>
std::pair<HiddenState<Scalar>, StepTrace<Scalar>> lstm_step(const LstmParams<Scalar>& p,
                                                             const HiddenState<Scalar>& state,
                                                             const Vector<Scalar>& x) {
  auto trace = lstm_forward(p, state, x);
  auto next = trace.state();
  return {std::move(next), std::move(trace)};
}

template <typename Scalar>
Vector<Scalar> logits(const SoftmaxParams<Scalar>& sm, const Vector<Scalar>& h) {
  if (h.size() != sm.weights.cols()) throw std::invalid_argument("predict: hidden vector has wrong length");
  return sm.weights * h;
}

/// Softmax of a logit vector, shifted by its maximum.
template <typename Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& z) {
  Vector<Scalar> p = (z.array() - z.maxCoeff()).exp().matrix();
  p /= p.sum();
  return p;
}

/// Class distribution exp(W_h h) / sum exp(W_h h).
template <typename Scalar>
Vector<Scalar> predict(const SoftmaxParams<Scalar>& sm, const Vector<Scalar>& h) {
  return softmax<Scalar>(logits(sm, h));
}

template <typename Scalar>
Scalar cross_entropy(const Vector<Scalar>& probs, ClassId target) {
  if (target < 0 || target >= probs.size()) throw std::out_of_range("cross_entropy: target out of range");
  return -std::log(std::max(probs[target], Scalar(1e-30)));
}

/// Adds scale * dCE/dW_h for one step into grad and returns scale * dCE/dh.
template <typename Scalar>
Vector<Scalar> backward_output(const SoftmaxParams<Scalar>& sm, const Vector<Scalar>& h, const Vector<Scalar>& probs,
                               ClassId target, SoftmaxParams<Scalar>& grad, Scalar scale = Scalar(1)) {
  Vector<Scalar> dz = scale * probs;
  dz[target] -= scale;
  grad.weights.noalias() += dz * h.transpose();
  return sm.weights.transpose() * dz;
}

/// Backpropagates through a window of consecutive steps.
///
/// dh_out[t] is the loss gradient arriving at h_t from the output layer (an
/// empty vector means none). The state entering traces.front() is treated
/// as a constant, so nothing flows past the start of the window.
template <typename Scalar>
void backward_lstm_window(const LstmParams<Scalar>& p, std::span<const StepTrace<Scalar>> traces,
                          std::span<const Vector<Scalar>> dh_out, LstmParams<Scalar>& grad) {
  if (traces.size() != dh_out.size()) throw std::invalid_argument("backward window: trace/gradient count mismatch");
  const Eigen::Index H = p.hidden();
  if (grad.weights.rows() != p.weights.rows() || grad.weights.cols() != p.weights.cols() ||
      grad.bias.size() != p.bias.size())
    throw std::invalid_argument("backward window: gradient buffer shape mismatch");

  Vector<Scalar> dh = Vector<Scalar>::Zero(H);
  Vector<Scalar> dc = Vector<Scalar>::Zero(H);
  Vector<Scalar> da(4 * H);
  for (std::size_t k = traces.size(); k-- > 0;) {
    const auto& t = traces[k];
    if (t.x.size() != p.input_dim() || t.h.size() != H)
      throw std::invalid_argument("backward window: trace shape mismatch");
    if (dh_out[k].size() != 0) dh += dh_out[k];

    const auto tc = t.tanh_c.array();
    dc.array() += dh.array() * t.o.array() * (Scalar(1) - tc * tc);
    const auto i = t.i.array(), f = t.f.array(), o = t.o.array(), g = t.g.array();
    da.segment(0, H).array() = dc.array() * g * i * (Scalar(1) - i);
    da.segment(H, H).array() = dc.array() * t.c_prev.array() * f * (Scalar(1) - f);
    da.segment(2 * H, H).array() = dh.array() * tc * o * (Scalar(1) - o);
    if (p.candidate == CandidateActivation::Tanh)
      da.segment(3 * H, H).array() = dc.array() * i * (Scalar(1) - g * g);
    else
      da.segment(3 * H, H).array() = dc.array() * i * g * (Scalar(1) - g);

    grad.weights.leftCols(H).noalias() += da * t.h_prev.transpose();
    for (Eigen::Index j = 0; j < t.x.size(); ++j)
      if (t.x[j] != Scalar(0)) grad.weights.col(H + j) += t.x[j] * da;
    grad.bias += da;

    if (k == 0) break;
    dh.noalias() = p.weights.leftCols(H).transpose() * da;
    dc.array() *= f;
  }
}

/// Gradient of the summed cross-entropy over a window (steps whose target is
/// kNoTarget add no loss). Accumulates loss_scale * gradient into grad and
/// returns the unscaled window loss.
template <typename Scalar>
Scalar backward_window(const ModelParams<Scalar>& params, std::span<const StepTrace<Scalar>> traces,
                       std::span<const ClassId> targets, ModelParams<Scalar>& grad,
                       Scalar loss_scale = Scalar(1)) {
  if (traces.size() != targets.size()) throw std::invalid_argument("backward_window: one target per step required");
  if (grad.softmax.weights.rows() != params.softmax.weights.rows() ||
      grad.softmax.weights.cols() != params.softmax.weights.cols())
    throw std::invalid_argument("backward_window: gradient buffer shape mismatch");
  Scalar loss = 0;
  std::vector<Vector<Scalar>> dh(traces.size());
  for (std::size_t k = 0; k < traces.size(); ++k) {
    if (targets[k] == kNoTarget) continue;
    const auto probs = predict(params.softmax, traces[k].h);
    loss += cross_entropy(probs, targets[k]);
    dh[k] = backward_output(params.softmax, traces[k].h, probs, targets[k], grad.softmax, loss_scale);
  }
  backward_lstm_window<Scalar>(params.lstm, traces, dh, grad.lstm);
  return loss;
}

/// Runs the window forward from a fixed entering state and returns the
/// summed cross-entropy.
template <typename Scalar>
Scalar window_loss(const ModelParams<Scalar>& params, const HiddenState<Scalar>& entering,
                   std::span<const Vector<Scalar>> inputs, std::span<const ClassId> targets) {
  HiddenState<Scalar> state = entering;
  Scalar loss = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto trace = lstm_forward(params.lstm, state, inputs[k]);
    if (targets[k] != kNoTarget) loss += cross_entropy(predict(params.softmax, trace.h), targets[k]);
    state = trace.state();
  }
  return loss;
}

/// Uniform(-scale, scale) for every entry, then forget-gate bias set to 1.
/// Entries are drawn in a fixed order, so the result depends only on the
/// arguments.
template <typename Scalar>
ModelParams<Scalar> init_params(std::uint64_t seed, Eigen::Index hidden, Eigen::Index input_dim, Eigen::Index classes,
                                double scale = 0.1, CandidateActivation candidate = CandidateActivation::Tanh) {
  if (hidden <= 0 || input_dim <= 0 || classes <= 0) throw std::invalid_argument("init_params: dimensions must be positive");
  auto p = ModelParams<Scalar>::zeros(hidden, input_dim, classes, candidate);
  Rng rng(derive_seed(seed, {0x1417}));
  p.for_each_tensor([&](std::string_view, auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<Scalar>(rng.uniform(-scale, scale));
  });
  p.lstm.gate_bias(Gate::Forget).setOnes();
  return p;
}

}  // namespace scrnn
