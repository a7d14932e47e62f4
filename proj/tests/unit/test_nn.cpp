#include <gtest/gtest.h>

#include <cmath>

#include "edgeav/errors.hpp"
#include "edgeav/nn.hpp"

using namespace edgeav;
using namespace edgeav::nn;

namespace {

DenseLayer layer(std::size_t out, std::size_t in, std::vector<double> w, Vector b, Activation a) {
  DenseLayer l;
  l.W = Matrix(out, in);
  l.W.data() = std::move(w);
  l.b = std::move(b);
  l.activation = a;
  return l;
}

Mlp random_mlp(std::vector<std::size_t> sizes, std::vector<Activation> acts, std::uint64_t seed) {
  Rng rng(seed);
  return Mlp::create(sizes, acts, rng);
}

Vector random_vec(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.standard_normal();
  return v;
}

}  // namespace

TEST(Dense, IdentityRelu) {
  const DenseLayer l = layer(2, 2, {1, 0, 0, 1}, {0, 0}, Activation::ReLU);
  const double x[] = {1.0, -2.0};
  EXPECT_EQ(dense_forward(l, x), (Vector{1.0, 0.0}));
}

TEST(Dense, BiasOnlyRelu) {
  const DenseLayer l = layer(2, 3, std::vector<double>(6, 0.0), {3, -3}, Activation::ReLU);
  const double x[] = {5.0, -1.0, 7.0};
  EXPECT_EQ(dense_forward(l, x), (Vector{3.0, 0.0}));
}

TEST(Dense, HandMultiplyLinear) {
  const DenseLayer l = layer(2, 2, {1, 2, 3, 4}, {0.5, -0.5}, Activation::Linear);
  const double x[] = {1.0, 1.0};
  EXPECT_EQ(dense_forward(l, x), (Vector{3.5, 6.5}));
}

TEST(Dense, ShapeMismatch) {
  const DenseLayer l = layer(2, 2, {1, 2, 3, 4}, {0, 0}, Activation::Linear);
  const double x[] = {1.0, 1.0, 1.0};
  EXPECT_THROW(dense_forward(l, x), ShapeError);
}

TEST(Rnn, ZeroCellGivesHalf) {
  const RecurrentCell c = RecurrentCell::zeros(3, 2);
  const double h[] = {0.4, -1.0, 2.0};
  const double x[] = {0.0, 0.0};
  for (double v : rnn_step(c, h, x)) EXPECT_EQ(v, 0.5);
}

TEST(Rnn, ZeroRecurrentWeightsIgnoreHistory) {
  Rng rng(3);
  RecurrentCell c = RecurrentCell::create(4, 2, rng);
  c.W_h = Matrix(4, 4, 0.0);
  const double x[] = {0.3, -0.7};
  const Vector a = rnn_step(c, Vector{1, 2, 3, 4}, x);
  const Vector b = rnn_step(c, Vector{-5, 0, 0.1, 9}, x);
  EXPECT_EQ(a, b);
}

TEST(Rnn, ScalarHandValue) {
  RecurrentCell c = RecurrentCell::zeros(1, 1);
  c.W_h(0, 0) = 1.0;
  c.W_x(0, 0) = 1.0;
  const double h[] = {0.2};
  const double x[] = {0.3};
  EXPECT_NEAR(rnn_step(c, h, x)[0], 1.0 / (1.0 + std::exp(-0.5)), 1e-15);
  EXPECT_NEAR(rnn_step(c, h, x)[0], 0.62246, 1e-5);
}

TEST(Rnn, OutputsStrictlyInsideUnitInterval) {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const RecurrentCell c = RecurrentCell::create(5, 3, rng);
    const Vector h = random_vec(5, rng);
    const Vector x = random_vec(3, rng);
    for (double v : rnn_step(c, h, x)) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Rnn, ShapeMismatch) {
  const RecurrentCell c = RecurrentCell::zeros(2, 2);
  const double h[] = {0.0};
  const double x[] = {0.0, 0.0};
  EXPECT_THROW(rnn_step(c, h, x), ShapeError);
}

TEST(Mlp, IdentityLayerPassesThrough) {
  Mlp m;
  m.layers.push_back(layer(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, Activation::Linear));
  const double x[] = {1.5, -2.0, 0.25};
  EXPECT_EQ(mlp_forward(m, x), (Vector{1.5, -2.0, 0.25}));
}

TEST(Mlp, TwoLayerHandEvaluation) {
  Mlp m;
  m.layers.push_back(layer(2, 2, {1, -1, 2, 1}, {0, -1}, Activation::ReLU));
  m.layers.push_back(layer(2, 2, {1, 1, -1, 2}, {0.5, 0}, Activation::Linear));
  const double x[] = {1.0, 2.0};
  // hidden = relu([1 - 2, 2 + 2 - 1]) = [0, 3]; out = [0 + 3 + 0.5, 0 + 6]
  EXPECT_EQ(mlp_forward(m, x), (Vector{3.5, 6.0}));
}

TEST(Mlp, WrongInputDimension) {
  const Mlp m = random_mlp({4, 3, 2}, {Activation::ReLU, Activation::Linear}, 1);
  const double x[] = {1, 2, 3};
  EXPECT_THROW(mlp_forward(m, x), ShapeError);
}

TEST(Mlp, GlorotInitBounds) {
  const Mlp m = random_mlp({8, 16, 4}, {Activation::ReLU, Activation::Linear}, 4);
  const double lim0 = std::sqrt(6.0 / 24.0);
  const double lim1 = std::sqrt(6.0 / 20.0);
  for (double w : m.layers[0].W.data()) EXPECT_LE(std::abs(w), lim0);
  for (double w : m.layers[1].W.data()) EXPECT_LE(std::abs(w), lim1);
  for (double b : m.layers[0].b) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(m, random_mlp({8, 16, 4}, {Activation::ReLU, Activation::Linear}, 4));
  EXPECT_EQ(m.num_weights(), 8u * 16u + 16u * 4u);
  EXPECT_EQ(m.num_parameters(), m.num_weights() + 20u);
}

TEST(Backward, ZeroLossGradGivesZeroGradients) {
  const Mlp m = random_mlp({3, 5, 2}, {Activation::Sigmoid, Activation::Linear}, 2);
  MlpCache cache;
  const double x[] = {0.1, 0.2, 0.3};
  mlp_forward(m, x, &cache);
  const double g[] = {0.0, 0.0};
  EXPECT_TRUE(backward(m, cache, g).all_zero());
}

TEST(Backward, ScalarHandGradient) {
  Mlp m;
  m.layers.push_back(layer(1, 1, {2.0}, {0.0}, Activation::Linear));
  MlpCache cache;
  const double x[] = {3.0};
  const Vector y = mlp_forward(m, x, &cache);
  const double t[] = {0.0};
  const MlpGradients g = backward(m, cache, squared_error_grad(y, t));
  EXPECT_EQ(g.dW[0](0, 0), 36.0);
  EXPECT_EQ(g.db[0][0], 12.0);
}

TEST(Backward, InputGradientMatchesFiniteDifference) {
  Rng rng(6);
  const Mlp m = random_mlp({5, 7, 3}, {Activation::Sigmoid, Activation::Linear}, 6);
  const Vector x = random_vec(5, rng);
  const Vector t = random_vec(3, rng);
  MlpCache cache;
  const Vector y = mlp_forward(m, x, &cache);
  MlpGradients g = MlpGradients::zeros_like(m);
  const Vector dx = backward(m, cache, squared_error_grad(y, t), g);
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vector up = x, down = x;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    const double num = (squared_error(mlp_forward(m, up), t) - squared_error(mlp_forward(m, down), t)) / 2e-6;
    EXPECT_NEAR(dx[i], num, 1e-7 * (1.0 + std::abs(num)));
  }
}

TEST(Backward, StaleCacheRejected) {
  const Mlp a = random_mlp({3, 4, 2}, {Activation::ReLU, Activation::Linear}, 1);
  const Mlp b = random_mlp({3, 5, 2}, {Activation::ReLU, Activation::Linear}, 1);
  MlpCache cache;
  const double x[] = {1, 2, 3};
  mlp_forward(a, x, &cache);
  const double g[] = {1.0, 1.0};
  EXPECT_THROW(backward(b, cache, g), UsageError);
  const MlpCache empty;
  EXPECT_THROW(backward(a, empty, g), UsageError);
  mlp_forward(a, x, &cache);
  const double wrong[] = {1.0, 1.0, 1.0};
  EXPECT_THROW(backward(a, cache, wrong), ShapeError);
}

TEST(Backward, GradientsAccumulate) {
  const Mlp m = random_mlp({2, 3, 1}, {Activation::ReLU, Activation::Linear}, 3);
  MlpCache cache;
  const double x[] = {0.4, -0.9};
  mlp_forward(m, x, &cache);
  const double g[] = {1.0};
  MlpGradients once = MlpGradients::zeros_like(m);
  backward(m, cache, g, once);
  MlpGradients twice = MlpGradients::zeros_like(m);
  backward(m, cache, g, twice);
  backward(m, cache, g, twice);
  once.scale(2.0);
  EXPECT_NEAR(once.squared_norm(), twice.squared_norm(), 1e-12);
}

TEST(Sgd, MaskedWeightsStayPut) {
  Mlp m = random_mlp({2, 2}, {Activation::Linear}, 5);
  m.layers[0].mask = {1, 0, 1, 1};
  m.layers[0].W.data()[1] = 0.0;
  MlpCache cache;
  const double x[] = {1.0, 2.0};
  const Vector y = mlp_forward(m, x, &cache);
  const double t[] = {5.0, -5.0};
  const MlpGradients g = backward(m, cache, squared_error_grad(y, t));
  const Mlp before = m;
  sgd_step(m, g, 0.1);
  EXPECT_EQ(m.layers[0].W.data()[1], 0.0);
  EXPECT_NEAR(m.layers[0].W.data()[0], before.layers[0].W.data()[0] - 0.1 * g.dW[0].data()[0], 1e-15);
}

TEST(Bptt, ZeroLossGradsGiveZeroGradients) {
  Rng rng(2);
  const RecurrentCell c = RecurrentCell::create(3, 2, rng);
  std::vector<Vector> xs{random_vec(2, rng), random_vec(2, rng)};
  RnnCache cache;
  rnn_unroll(c, Vector(3, 0.0), xs, &cache);
  const std::vector<Vector> g(2, Vector(3, 0.0));
  EXPECT_TRUE(rnn_backward(c, cache, g).all_zero());
}

TEST(Bptt, InitialStateGradientMatchesFiniteDifference) {
  Rng rng(10);
  const RecurrentCell c = RecurrentCell::create(3, 2, rng);
  std::vector<Vector> xs, ts;
  for (int t = 0; t < 4; ++t) {
    xs.push_back(random_vec(2, rng));
    ts.push_back(Vector{0.2, 0.5, 0.9});
  }
  const Vector h0 = random_vec(3, rng);
  auto loss = [&](const Vector& h) {
    const auto hs = rnn_unroll(c, h, xs);
    double s = 0.0;
    for (std::size_t t = 0; t < hs.size(); ++t) s += squared_error(hs[t], ts[t]);
    return s;
  };
  RnnCache cache;
  const auto hs = rnn_unroll(c, h0, xs, &cache);
  std::vector<Vector> dh;
  for (std::size_t t = 0; t < hs.size(); ++t) dh.push_back(squared_error_grad(hs[t], ts[t]));
  const RnnGradients g = rnn_backward(c, cache, dh);
  for (std::size_t i = 0; i < 3; ++i) {
    Vector up = h0, down = h0;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    EXPECT_NEAR(g.dh0[i], (loss(up) - loss(down)) / 2e-6, 1e-8);
  }
}

TEST(GradCheck, LinearScalarModelIsExact) {
  Mlp m;
  m.layers.push_back(layer(1, 1, {2.0}, {0.5}, Activation::Linear));
  const double x[] = {3.0};
  const double t[] = {1.0};
  EXPECT_LT(gradient_check(m, x, t).max_relative_error, 1e-8);
}

TEST(GradCheck, RandomReluMlpOffKinks) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Mlp m = random_mlp({8, 16, 4}, {Activation::ReLU, Activation::Linear}, seed + 100);
    Vector x = random_vec(8, rng);
    while (relu_margin(m, x) < 1e-3) x = random_vec(8, rng);
    const Vector t = random_vec(4, rng);
    EXPECT_LT(gradient_check(m, x, t).max_relative_error, 1e-5) << "seed " << seed;
  }
}

TEST(GradCheck, RecurrentFiveSteps) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const RecurrentCell c = RecurrentCell::create(4, 3, rng);
    std::vector<Vector> xs, ts;
    for (int t = 0; t < 5; ++t) {
      xs.push_back(random_vec(3, rng));
      ts.push_back(Vector{rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()});
    }
    EXPECT_LT(gradient_check_rnn(c, Vector(4, 0.0), xs, ts).max_relative_error, 1e-5);
  }
}

TEST(GradCheck, InjectedFaultIsReportedByName) {
  const Mlp m = random_mlp({3, 4, 2}, {Activation::Sigmoid, Activation::Linear}, 9);
  const double x[] = {0.1, -0.4, 0.8};
  const double t[] = {1.0, 0.0};
  GradCheckOptions opt;
  opt.inject_fault = 1e-2;
  const GradCheckResult r = gradient_check(m, x, t, opt);
  EXPECT_GT(r.max_relative_error, 1e-5);
  EXPECT_EQ(r.worst_parameter, "layer0.W[0]");
  EXPECT_EQ(r.parameters_checked, m.num_parameters());
}

TEST(GradCheck, QNetworkOnlyChosenActionCarriesGradient) {
  Rng rng(12);
  const Mlp q = random_mlp({8, 32, 5}, {Activation::ReLU, Activation::Linear}, 12);
  Vector x = random_vec(8, rng);
  while (relu_margin(q, x) < 1e-3) x = random_vec(8, rng);
  EXPECT_LT(gradient_check_q(q, x, 3, 1.5).max_relative_error, 1e-5);
  EXPECT_THROW(gradient_check_q(q, x, 5, 0.0), DomainError);
}

TEST(RelativeError, Definition) {
  EXPECT_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-12, 0.0), 1e-12 / kGradCheckFloor);
}

TEST(ReluMargin, NoReluIsInfinite) {
  const Mlp m = random_mlp({2, 2}, {Activation::Linear}, 1);
  const double x[] = {0.0, 0.0};
  EXPECT_TRUE(std::isinf(relu_margin(m, x)));
}

TEST(Activations, NamesRoundTrip) {
  for (Activation a : {Activation::ReLU, Activation::Sigmoid, Activation::Linear}) {
    EXPECT_EQ(parse_activation(to_string(a)), a);
  }
  EXPECT_FALSE(parse_activation("tanh").has_value());
}

TEST(Activations, SigmoidStableAtExtremes) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_NEAR(sigmoid(-2.0) + sigmoid(2.0), 1.0, 1e-15);
}
