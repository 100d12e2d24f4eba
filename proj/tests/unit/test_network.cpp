#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qdpref/network.hpp"
#include "support.hpp"

using namespace qdpref;

namespace {

// Loss evaluated from scratch through predict(); the finite-difference oracle perturbs this.
double loss_at(const FeedForwardNet& net, const std::vector<double>& x, int label) {
  return -std::log(net.predict(x)[static_cast<std::size_t>(label)]);
}

}  // namespace

TEST_CASE("shapes and parameter layout") {
  FeedForwardNet net({4, 3, 2});
  CHECK(net.parameter_count() == 4 * 3 + 3 + 3 * 2 + 2);
  std::vector<double> p(net.parameter_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.01 * static_cast<double>(i);
  net.set_parameters(p);
  CHECK(net.parameters() == p);
  CHECK(net.layers()[0].weights[0] == 0.0);
  CHECK(net.layers()[0].bias[0] == doctest::Approx(0.12));
  CHECK_CODE(net.predict(std::vector<double>(5, 0.0)), ShapeMismatch);
}

TEST_CASE("zero output layer predicts uniform") {
  std::mt19937_64 rng(1);
  const auto net = FeedForwardNet::initialized({91, 100, 50, 6}, rng, true);
  std::vector<double> x(91, 0.5);
  for (double p : net.predict(x)) CHECK(p == doctest::Approx(1.0 / 6).epsilon(1e-15));
  const auto& first = net.layers()[0];
  const double limit = std::sqrt(6.0 / (91 + 100));
  for (double w : first.weights) REQUIRE(std::abs(w) <= limit);
}

TEST_CASE("softmax outputs form a distribution") {
  std::mt19937_64 rng(2);
  const auto net = FeedForwardNet::initialized({10, 8, 6}, rng, false);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(10);
    for (auto& v : x) v = u(rng);
    const auto p = net.predict(x);
    double sum = 0;
    for (double q : p) {
      REQUIRE(q > 0.0);
      sum += q;
    }
    REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  const std::vector<double> probs{0.5, 0.25, 0.25};
  CHECK(cross_entropy(probs, 0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, 5);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    auto net = FeedForwardNet::initialized({12, 8, 6, 6}, rng, false);
    auto params = net.parameters();
    for (auto& b : params) b += 0.05 * (u(rng) - 0.5);  // non-zero biases too
    net.set_parameters(params);
    std::vector<double> x(12);
    for (auto& v : x) v = u(rng);
    const int y = label(rng);

    std::vector<double> grad(params.size(), 0.0);
    const double loss = net.accumulate_gradient(x, y, grad);
    CHECK(loss == doctest::Approx(loss_at(net, x, y)).epsilon(1e-12));

    const double h = 1e-5;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto plus = params, minus = params;
      plus[i] += h;
      minus[i] -= h;
      FeedForwardNet a = net, b = net;
      a.set_parameters(plus);
      b.set_parameters(minus);
      const double numeric = (loss_at(a, x, y) - loss_at(b, x, y)) / (2 * h);
      const double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("training on a repeated sample lowers the loss") {
  std::mt19937_64 rng(4);
  auto net = FeedForwardNet::initialized({6, 5, 6}, rng, true);
  const std::vector<double> x{0, 1.0 / 3, 2.0 / 3, 1, 0, 1};
  std::vector<const std::vector<double>*> batch(8, &x);
  std::vector<int> labels(8, 4);
  std::vector<double> scratch;
  double last = 1e9;
  for (int epoch = 0; epoch < 5; ++epoch) {
    const double l = net.train_batch(batch, labels, 0.05, scratch);
    CHECK(l < last);
    last = l;
  }
}
