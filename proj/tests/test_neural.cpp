#include <gtest/gtest.h>

#include <cmath>

#include "mcmh/neural.hpp"
#include "mcmh/random.hpp"
#include "oracles.hpp"

using namespace mcmh;

namespace {

std::vector<double> random_input(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

double loss_of(const DenseParams& net, const std::vector<double>& x, int label) {
  return cross_entropy(forward(net, x).logits(), label).loss;
}

}  // namespace

TEST(Network, LayerWidthsHalveAndClamp) {
  EXPECT_EQ(layer_widths(Arch::mlp, 365, 2), (std::vector<std::size_t>{365, 182, 91, 2}));
  EXPECT_EQ(layer_widths(Arch::mlp, 3, 6), (std::vector<std::size_t>{3, 2, 2, 6}));
  EXPECT_EQ(layer_widths(Arch::linear, 7, 2), (std::vector<std::size_t>{7, 2}));
}

TEST(Network, GlorotBoundsAndZeroBias) {
  Rng rng(1);
  const auto net = make_network(Arch::mlp, 40, 2, &rng);
  const auto widths = layer_widths(Arch::mlp, 40, 2);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
    for (const double w : net.layers[l].weight.values) EXPECT_LE(std::abs(w), limit);
    for (const double b : net.layers[l].bias) EXPECT_EQ(b, 0.0);
  }
}

TEST(Network, ForwardRejectsWrongInput) {
  const auto net = make_network(Arch::linear, 3, 2, nullptr);
  EXPECT_THROW(forward(net, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(Network, HandComputedForward) {
  DenseParams net = make_network(Arch::linear, 2, 2, nullptr);
  net.layers[0].weight(0, 0) = 1.0;
  net.layers[0].weight(1, 1) = -2.0;
  net.layers[0].bias = {0.5, 0.25};
  const auto out = forward(net, std::vector<double>{3.0, 1.0});
  EXPECT_EQ(out.logits()[0], 3.5);
  EXPECT_EQ(out.logits()[1], -1.75);
}

TEST(Loss, ZeroLogitsGiveLogTwo) {
  const auto ce = cross_entropy(std::vector<double>{0.0, 0.0}, 1);
  EXPECT_DOUBLE_EQ(ce.loss, std::log(2.0));
  EXPECT_DOUBLE_EQ(ce.dlogits[0], 0.5);
  EXPECT_DOUBLE_EQ(ce.dlogits[1], -0.5);
}

TEST(Loss, StableForLargeLogits) {
  const auto ce = cross_entropy(std::vector<double>{1000.0, -1000.0}, 1);
  EXPECT_TRUE(std::isfinite(ce.loss));
  EXPECT_NEAR(ce.loss, 2000.0, 1e-9);
  const auto p = softmax(std::vector<double>{800.0, 800.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(derive_seed(3, "fd"));
  for (int trial = 0; trial < 20; ++trial) {
    const Arch arch = trial % 2 == 0 ? Arch::mlp : Arch::linear;
    const std::size_t dim = 1 + rng.below(16);
    const std::size_t out = trial % 3 == 0 ? 2 * dim : 2;
    auto net = make_network(arch, dim, out, &rng);
    for (auto& layer : net.layers) {
      for (auto& b : layer.bias) b = rng.uniform(-0.1, 0.1);
    }
    const auto x = random_input(rng, dim);
    const int label = static_cast<int>(rng.below(out));
    const auto cache = forward(net, x);
    const auto analytic = oracle::flatten(backward(net, cache, cross_entropy(cache.logits(), label).dlogits));
    const auto numeric = oracle::numeric_gradient(net, [&](const DenseParams& n) { return loss_of(n, x, label); });
    EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-6) << "trial " << trial;
  }
}

TEST(Adam, HandTrace) {
  DenseParams p = make_network(Arch::linear, 1, 1, nullptr);
  p.layers[0].weight(0, 0) = 1.0;
  auto state = AdamState::for_params(p, 0.1);
  const double expected[] = {0.900000002, 0.9366103542405654, 0.9502794203389762};
  const double grads[] = {0.5, -1.0, 0.25};
  for (int t = 0; t < 3; ++t) {
    DenseParams g = zeros_like(p);
    g.layers[0].weight(0, 0) = grads[t];
    adam_step(p, g, state);
    EXPECT_NEAR(p.layers[0].weight(0, 0), expected[t], 1e-15);
    EXPECT_EQ(p.layers[0].bias[0], 0.0);
  }
  EXPECT_EQ(state.step, 3);
}

TEST(Adam, ShapeMismatchThrows) {
  auto a = make_network(Arch::linear, 2, 2, nullptr);
  auto b = make_network(Arch::linear, 3, 2, nullptr);
  auto state = AdamState::for_params(a, 0.1);
  EXPECT_THROW(adam_step(a, b, state), std::invalid_argument);
}

TEST(ParamCount, AnchorsAndDirectTally) {
  EXPECT_EQ(param_count(365, Arch::mlp, 1), 83449u);
  EXPECT_EQ(param_count(365, Arch::mlp, 3), 250347u);
  EXPECT_EQ(game_param_count(365, Arch::linear), 84913u);
  Rng rng(2);
  EXPECT_EQ(make_network(Arch::mlp, 365, 2, &rng).parameter_count(), 83449u);
  EXPECT_EQ(make_network(Arch::linear, 365, 2, nullptr).parameter_count(), 732u);
}
