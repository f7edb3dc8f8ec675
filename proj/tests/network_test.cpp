#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "scrnn/gradcheck.hpp"
#include "scrnn/network.hpp"

using namespace scrnn;

namespace {

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Plain-loop reference LSTM, independent of the Eigen implementation.
struct RefLstm {
  int H, D;
  std::vector<double> W;  // row-major 4H x (H + D), rows i, f, o, g
  std::vector<double> b;  // 4H

  double w(int r, int c) const { return W[static_cast<std::size_t>(r * (H + D) + c)]; }

  struct Step {
    std::vector<double> i, f, o, g, c, h;
  };

  Step forward(const std::vector<double>& h_prev, const std::vector<double>& c_prev,
               const std::vector<double>& x) const {
    Step s;
    for (int gate = 0; gate < 4; ++gate) {
      for (int u = 0; u < H; ++u) {
        const int r = gate * H + u;
        double z = b[static_cast<std::size_t>(r)];
        for (int k = 0; k < H; ++k) z += w(r, k) * h_prev[static_cast<std::size_t>(k)];
        for (int k = 0; k < D; ++k) z += w(r, H + k) * x[static_cast<std::size_t>(k)];
        if (gate == 0) s.i.push_back(sig(z));
        if (gate == 1) s.f.push_back(sig(z));
        if (gate == 2) s.o.push_back(sig(z));
        if (gate == 3) s.g.push_back(std::tanh(z));
      }
    }
    for (int u = 0; u < H; ++u) {
      const auto k = static_cast<std::size_t>(u);
      s.c.push_back(s.f[k] * c_prev[k] + s.i[k] * s.g[k]);
      s.h.push_back(s.o[k] * std::tanh(s.c[k]));
    }
    return s;
  }
};

LstmParams<double> to_params(const RefLstm& ref) {
  LstmParams<double> p;
  p.weights.resize(4 * ref.H, ref.H + ref.D);
  for (int r = 0; r < 4 * ref.H; ++r)
    for (int c = 0; c < ref.H + ref.D; ++c) p.weights(r, c) = ref.w(r, c);
  p.bias = Eigen::Map<const Vector<double>>(ref.b.data(), 4 * ref.H);
  return p;
}

RefLstm random_ref(int H, int D, std::uint64_t seed) {
  Rng rng(seed);
  RefLstm ref{H, D, {}, {}};
  for (int k = 0; k < 4 * H * (H + D); ++k) ref.W.push_back(rng.uniform(-0.8, 0.8));
  for (int k = 0; k < 4 * H; ++k) ref.b.push_back(rng.uniform(-0.5, 0.5));
  return ref;
}

}  // namespace

TEST(LstmForward, ZeroParametersFixedPoint) {
  auto p = ModelParams<double>::zeros(3, 4, 5).lstm;
  Vector<double> x(4);
  x << 1, 0, 2, 1;
  const auto t = lstm_forward(p, HiddenState<double>::zeros(3), x);
  EXPECT_TRUE(t.i.isApproxToConstant(0.5));
  EXPECT_TRUE(t.f.isApproxToConstant(0.5));
  EXPECT_TRUE(t.o.isApproxToConstant(0.5));
  EXPECT_TRUE(t.g.isZero());
  EXPECT_TRUE(t.c.isZero());
  EXPECT_TRUE(t.h.isZero());
}

TEST(LstmForward, ScalarHandComputed) {
  // H = 1, D = 1: every gate is a scalar affine function of (h, x).
  LstmParams<double> p;
  p.weights.resize(4, 2);
  p.weights << 0.5, -0.3,  // i
      0.2, 0.7,            // f
      -0.4, 0.1,           // o
      0.9, -0.6;           // g
  p.bias.resize(4);
  p.bias << 0.1, -0.2, 0.3, 0.05;
  HiddenState<double> s{Vector<double>::Constant(1, 0.25), Vector<double>::Constant(1, -0.5)};
  const Vector<double> x = Vector<double>::Constant(1, 2.0);

  const double i = sig(0.5 * 0.25 - 0.3 * 2 + 0.1);
  const double f = sig(0.2 * 0.25 + 0.7 * 2 - 0.2);
  const double o = sig(-0.4 * 0.25 + 0.1 * 2 + 0.3);
  const double g = std::tanh(0.9 * 0.25 - 0.6 * 2 + 0.05);
  const double c = f * -0.5 + i * g;
  const double h = o * std::tanh(c);

  const auto t = lstm_forward(p, s, x);
  EXPECT_NEAR(t.i[0], i, 1e-12);
  EXPECT_NEAR(t.f[0], f, 1e-12);
  EXPECT_NEAR(t.o[0], o, 1e-12);
  EXPECT_NEAR(t.g[0], g, 1e-12);
  EXPECT_NEAR(t.c[0], c, 1e-12);
  EXPECT_NEAR(t.h[0], h, 1e-12);
}

TEST(LstmForward, MatchesReferenceOverASequence) {
  const auto ref = random_ref(4, 6, 12);
  const auto p = to_params(ref);
  Rng rng(3);
  std::vector<double> h(4, 0.0), c(4, 0.0);
  auto state = HiddenState<double>::zeros(4);
  for (int step = 0; step < 6; ++step) {
    std::vector<double> x(6);
    for (auto& v : x) v = static_cast<double>(rng.below(3));
    const auto r = ref.forward(h, c, x);
    const auto t = lstm_forward(p, state, Eigen::Map<const Vector<double>>(x.data(), 6).eval());
    for (int u = 0; u < 4; ++u) {
      EXPECT_NEAR(t.h[u], r.h[static_cast<std::size_t>(u)], 1e-12);
      EXPECT_NEAR(t.c[u], r.c[static_cast<std::size_t>(u)], 1e-12);
    }
    h = r.h;
    c = r.c;
    state = t.state();
  }
}

TEST(LstmForward, GatesStayInRange) {
  auto p = init_params<double>(1, 6, 9, 4, 2.0);
  Rng rng(9);
  auto state = HiddenState<double>::zeros(6);
  for (int step = 0; step < 30; ++step) {
    Vector<double> x(9);
    for (auto& v : x) v = static_cast<double>(rng.below(4));
    const auto t = lstm_forward(p.lstm, state, x);
    for (const auto* gate : {&t.i, &t.f, &t.o}) {
      EXPECT_GT(gate->minCoeff(), 0.0);
      EXPECT_LT(gate->maxCoeff(), 1.0);
    }
    EXPECT_LT(t.g.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LT(t.tanh_c.cwiseAbs().maxCoeff(), 1.0);
    state = t.state();
  }
}

TEST(LstmForward, SaturatedGatesCarryTheCell) {
  auto p = ModelParams<double>::zeros(2, 3, 2).lstm;
  p.gate_bias(Gate::Forget).setConstant(50);
  p.gate_bias(Gate::Input).setConstant(-50);
  HiddenState<double> s{Vector<double>::Zero(2), Vector<double>::Constant(2, 0.7)};
  for (int k = 0; k < 5; ++k) s = lstm_forward(p, s, Vector<double>(Vector<double>::Ones(3))).state();
  EXPECT_NEAR(s.c[0], 0.7, 1e-12);
  EXPECT_NEAR(s.c[1], 0.7, 1e-12);
}

TEST(LstmForward, DimensionMismatchThrows) {
  auto p = ModelParams<double>::zeros(2, 3, 2).lstm;
  EXPECT_THROW(lstm_forward(p, HiddenState<double>::zeros(2), Vector<double>(Vector<double>::Zero(4))), std::invalid_argument);
  EXPECT_THROW(lstm_forward(p, HiddenState<double>::zeros(3), Vector<double>(Vector<double>::Zero(3))), std::invalid_argument);
}

TEST(LstmForward, SigmoidCandidate) {
  auto p = ModelParams<double>::zeros(1, 1, 2, CandidateActivation::Sigmoid).lstm;
  const auto t = lstm_forward(p, HiddenState<double>::zeros(1), Vector<double>(Vector<double>::Zero(1)));
  EXPECT_DOUBLE_EQ(t.g[0], 0.5);
  EXPECT_DOUBLE_EQ(t.c[0], 0.25);
}

TEST(Softmax, ZeroWeightsGiveUniform) {
  SoftmaxParams<double> sm{Matrix<double>::Zero(7, 3)};
  const auto p = predict(sm, Vector<double>(Vector<double>::Constant(3, 0.4)));
  EXPECT_TRUE(p.isApproxToConstant(1.0 / 7));
}

TEST(Softmax, ClosedForm) {
  Vector<double> z(2);
  z << std::log(3.0), 0.0;
  const auto p = softmax(z);
  EXPECT_NEAR(p[0], 0.75, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
}

TEST(Softmax, StableForLargeLogits) {
  Vector<float> z(3);
  z << 1000.0f, 999.0f, -1000.0f;
  const auto p = softmax(z);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p.sum(), 1.0f, 1e-6f);
  EXPECT_NEAR(p[0] / p[1], std::exp(1.0f), 1e-4f);
}

TEST(Softmax, ArgmaxMatchesLogits) {
  auto params = init_params<double>(4, 5, 3, 11, 1.0);
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    Vector<double> h(5);
    for (auto& v : h) v = rng.uniform(-1, 1);
    Eigen::Index a = 0, b = 0;
    predict(params.softmax, h).maxCoeff(&a);
    logits(params.softmax, h).maxCoeff(&b);
    EXPECT_EQ(a, b);
    EXPECT_NEAR(predict(params.softmax, h).sum(), 1.0, 1e-12);
  }
}

TEST(CrossEntropy, Values) {
  Vector<double> onehot = Vector<double>::Zero(3);
  onehot[1] = 1;
  EXPECT_DOUBLE_EQ(cross_entropy(onehot, 1), 0.0);
  EXPECT_NEAR(cross_entropy(Vector<double>::Constant(4, 0.25).eval(), 2), std::log(4.0), 1e-15);
  EXPECT_NEAR(cross_entropy(Vector<double>::Constant(4, 0.25).eval(), 2), 1.3863, 1e-4);
  EXPECT_TRUE(std::isfinite(cross_entropy(Vector<double>::Zero(2).eval(), 0)));
  EXPECT_THROW(cross_entropy(onehot, 3), std::out_of_range);
}

TEST(CrossEntropy, DecreasesWithTargetProbability) {
  double last = INFINITY;
  for (double q = 0.05; q < 1.0; q += 0.05) {
    Vector<double> p(3);
    p << q, (1 - q) * 0.3, (1 - q) * 0.7;
    const double ce = cross_entropy(p, 0);
    EXPECT_LT(ce, last);
    last = ce;
  }
}

TEST(Backward, SingleStepMatchesHandDerivation) {
  // Window of length 1 from a nonzero entering state; reference gradient
  // derived step by step with plain loops.
  const int H = 3, D = 4, V = 5;
  const auto ref = random_ref(H, D, 31);
  ModelParams<double> params;
  params.lstm = to_params(ref);
  Rng rng(2);
  params.softmax.weights.resize(V, H);
  for (auto& w : params.softmax.weights.reshaped()) w = rng.uniform(-1, 1);
  const std::vector<double> h0 = {0.1, -0.3, 0.2}, c0 = {0.5, -0.1, 0.0}, x = {1, 0, 2, 1};
  const ClassId target = 3;

  const auto s = ref.forward(h0, c0, x);
  std::vector<double> logit(V), prob(V);
  double mx = -INFINITY;
  for (int k = 0; k < V; ++k) {
    for (int u = 0; u < H; ++u) logit[k] += params.softmax.weights(k, u) * s.h[static_cast<std::size_t>(u)];
    mx = std::max(mx, logit[k]);
  }
  double sum = 0;
  for (int k = 0; k < V; ++k) sum += (prob[k] = std::exp(logit[k] - mx));
  for (auto& p : prob) p /= sum;

  std::vector<double> dz(prob);
  dz[target] -= 1;
  std::vector<double> dh(H, 0.0);
  for (int u = 0; u < H; ++u)
    for (int k = 0; k < V; ++k) dh[u] += params.softmax.weights(k, u) * dz[k];
  std::vector<double> da(4 * H);
  for (int u = 0; u < H; ++u) {
    const auto k = static_cast<std::size_t>(u);
    const double tc = std::tanh(s.c[k]);
    const double dc = dh[k] * s.o[k] * (1 - tc * tc);
    da[k] = dc * s.g[k] * s.i[k] * (1 - s.i[k]);
    da[k + H] = dc * c0[k] * s.f[k] * (1 - s.f[k]);
    da[k + 2 * H] = dh[k] * tc * s.o[k] * (1 - s.o[k]);
    da[k + 3 * H] = dc * s.i[k] * (1 - s.g[k] * s.g[k]);
  }

  auto grad = params.zeros_like();
  HiddenState<double> entering{Eigen::Map<const Vector<double>>(h0.data(), H), Eigen::Map<const Vector<double>>(c0.data(), H)};
  std::vector<StepTrace<double>> traces = {
      lstm_forward(params.lstm, entering, Eigen::Map<const Vector<double>>(x.data(), D).eval())};
  std::vector<ClassId> targets = {target};
  const double loss = backward_window<double>(params, traces, targets, grad);
  EXPECT_NEAR(loss, -std::log(prob[target]), 1e-12);

  for (int k = 0; k < V; ++k)
    for (int u = 0; u < H; ++u) EXPECT_NEAR(grad.softmax.weights(k, u), dz[k] * s.h[u], 1e-12);
  for (int r = 0; r < 4 * H; ++r) {
    EXPECT_NEAR(grad.lstm.bias[r], da[r], 1e-12);
    for (int c = 0; c < H; ++c) EXPECT_NEAR(grad.lstm.weights(r, c), da[r] * h0[c], 1e-12);
    for (int c = 0; c < D; ++c) EXPECT_NEAR(grad.lstm.weights(r, H + c), da[r] * x[c], 1e-12);
  }
}

TEST(Backward, LossScaleIsLinear) {
  auto params = init_params<double>(5, 4, 6, 7, 0.5);
  Rng rng(4);
  auto state = HiddenState<double>::zeros(4);
  std::vector<StepTrace<double>> traces;
  for (int k = 0; k < 3; ++k) {
    Vector<double> x(6);
    for (auto& v : x) v = static_cast<double>(rng.below(3));
    traces.push_back(lstm_forward(params.lstm, state, x));
    state = traces.back().state();
  }
  std::vector<ClassId> targets = {1, kNoTarget, 5};
  auto g1 = params.zeros_like(), g2 = params.zeros_like();
  backward_window<double>(params, traces, targets, g1, 1.0);
  backward_window<double>(params, traces, targets, g2, 2.0);
  EXPECT_TRUE(g2.lstm.weights.isApprox(2.0 * g1.lstm.weights, 1e-14));
  EXPECT_TRUE(g2.lstm.bias.isApprox(2.0 * g1.lstm.bias, 1e-14));
  EXPECT_TRUE(g2.softmax.weights.isApprox(2.0 * g1.softmax.weights, 1e-14));
}

TEST(Backward, NoTargetsNoGradient) {
  auto params = init_params<double>(5, 3, 4, 5);
  std::vector<StepTrace<double>> traces = {
      lstm_forward(params.lstm, HiddenState<double>::zeros(3), Vector<double>::Ones(4).eval())};
  std::vector<ClassId> targets = {kNoTarget};
  auto g = params.zeros_like();
  EXPECT_EQ(backward_window<double>(params, traces, targets, g), 0.0);
  EXPECT_EQ(g.squared_norm(), 0.0);
}

class GradCheck : public ::testing::TestWithParam<EncodingVariant> {};

TEST_P(GradCheck, TinyNetwork) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TinyNetSpec spec;
    spec.variant = GetParam();
    const auto r = run_tiny_gradcheck(seed, spec);
    EXPECT_EQ(r.entries, static_cast<std::size_t>(4 * 8 * (8 + dimension(spec.variant, 5)) + 4 * 8 + 12 * 8));
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst " << r.worst_tensor;
  }
}

TEST_P(GradCheck, SigmoidCandidate) {
  TinyNetSpec spec;
  spec.variant = GetParam();
  spec.candidate = CandidateActivation::Sigmoid;
  EXPECT_LT(run_tiny_gradcheck(4, spec).max_rel_error, 1e-4);
}

TEST_P(GradCheck, WindowOfOne) {
  TinyNetSpec spec;
  spec.variant = GetParam();
  spec.window = 1;
  EXPECT_LT(run_tiny_gradcheck(5, spec).max_rel_error, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Variants, GradCheck, ::testing::ValuesIn(kAllVariants),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(RelativeError, Floor) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(2e-10, 0.0), 2e-5);
}

TEST(Init, Deterministic) {
  EXPECT_TRUE(init_params<float>(3, 5, 7, 9) == init_params<float>(3, 5, 7, 9));
  EXPECT_FALSE(init_params<float>(3, 5, 7, 9) == init_params<float>(4, 5, 7, 9));
}

TEST(Init, ZeroScale) {
  const auto p = init_params<double>(1, 4, 3, 5, 0.0);
  EXPECT_TRUE(p.lstm.weights.isZero());
  EXPECT_TRUE(p.softmax.weights.isZero());
  EXPECT_TRUE(p.lstm.gate_bias(Gate::Input).isZero());
  EXPECT_TRUE(p.lstm.gate_bias(Gate::Forget).isOnes());
  EXPECT_TRUE(p.lstm.gate_bias(Gate::Output).isZero());
  EXPECT_TRUE(p.lstm.gate_bias(Gate::Candidate).isZero());
}

TEST(Init, UniformStatistics) {
  // 4 * 50 * 450 = 90000 entries in W_i..W_g; W_i alone is 50 * 450 = 22500.
  const auto p = init_params<double>(7, 50, 400, 10, 0.1);
  const auto wi = p.lstm.gate_weights(Gate::Input);
  const double n = static_cast<double>(wi.size());
  const double mean = wi.mean();
  const double var = (wi.array() - mean).square().sum() / n;
  const double sigma = 0.1 / std::sqrt(3.0);
  EXPECT_LT(std::abs(mean), 3 * sigma / std::sqrt(n));
  EXPECT_NEAR(var, sigma * sigma, 0.05 * sigma * sigma);
  EXPECT_LE(wi.cwiseAbs().maxCoeff(), 0.1);
}
