#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "rrl/neural.hpp"

using namespace rrl;

namespace {

std::vector<double> random_vec(int n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

void zero_params(MlpNet& net) {
  for (auto& layer : net.w)
    for (double& x : layer) x = 0.0;
  for (auto& layer : net.b)
    for (double& x : layer) x = 0.0;
}

bool same_params(const MlpNet& a, const MlpNet& b) {
  return a.sizes == b.sizes && a.w == b.w && a.b == b.b;
}

}  // namespace

TEST_CASE("forward composes affine maps and activations") {
  SUBCASE("zero parameters give zero output") {
    MlpNet net = make_mlp({3, 8, 2}, 4);
    zero_params(net);
    const auto y = forward(net, std::vector<double>{1.0, -2.0, 0.5});
    CHECK(y == std::vector<double>{0.0, 0.0});
  }

  SUBCASE("a single linear layer is a matrix multiply") {
    MlpNet net = make_mlp({2, 2}, 0);
    net.w[0] = {1.0, 2.0, 3.0, 4.0};  // rows (1,2) and (3,4)
    net.b[0] = {0.5, -1.0};
    const auto y = forward(net, std::vector<double>{10.0, 20.0});
    CHECK(y[0] == 1.0 * 10.0 + 2.0 * 20.0 + 0.5);
    CHECK(y[1] == 3.0 * 10.0 + 4.0 * 20.0 - 1.0);
  }

  SUBCASE("all-negative pre-activations zero the hidden layer") {
    MlpNet net = make_mlp({2, 4, 1}, 1);
    zero_params(net);
    for (double& x : net.b[0]) x = -3.0;
    net.b[1][0] = 7.0;
    ForwardCache cache;
    const auto y = forward(net, std::vector<double>{5.0, -5.0}, &cache);
    CHECK(y[0] == 7.0);
    CHECK(cache.act[1] == std::vector<double>(4, 0.0));
  }

  SUBCASE("tanh output squashes into the action interval") {
    MlpNet net = make_mlp({1, 1}, 2, OutputKind::tanh_scaled, -2.0, 2.0);
    net.w[0] = {0.0};
    net.b[0] = {100.0};
    CHECK(forward(net, std::vector<double>{0.0})[0] == doctest::Approx(2.0));
    net.b[0] = {-100.0};
    CHECK(forward(net, std::vector<double>{0.0})[0] == doctest::Approx(-2.0));
    net.b[0] = {0.5};
    CHECK(forward(net, std::vector<double>{0.0})[0] ==
          doctest::Approx(2.0 * std::tanh(0.5)));
  }

  SUBCASE("shape violations throw") {
    MlpNet net = make_mlp({3, 2}, 0);
    CHECK_THROWS_AS(forward(net, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_mlp({4}, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_mlp({4, 0, 2}, 0), std::invalid_argument);
  }
}

TEST_CASE("seeded initialization is reproducible and fan-in bounded") {
  const MlpNet a = make_mlp({5, 16, 3}, 99);
  const MlpNet b = make_mlp({5, 16, 3}, 99);
  const MlpNet c = make_mlp({5, 16, 3}, 100);
  CHECK(same_params(a, b));
  CHECK_FALSE(a.w == c.w);
  for (double x : a.w[0]) CHECK(std::fabs(x) <= 1.0 / std::sqrt(5.0));
  for (double x : a.w[1]) CHECK(std::fabs(x) <= 0.25);
}

TEST_CASE("backward reproduces hand gradients on linear layers") {
  MlpNet net = make_mlp({3, 1}, 7);
  const std::vector<double> x{1.5, -2.0, 4.0};
  ForwardCache cache;
  forward(net, x, &cache);
  GradBundle g = zero_grads(net);
  const auto dx = backward(net, cache, std::vector<double>{1.0}, g);
  CHECK(g.w[0] == x);  // d(w.x)/dw = x, exactly
  CHECK(g.b[0] == std::vector<double>{1.0});
  CHECK(dx == net.w[0]);  // d(w.x)/dx = w

  MlpNet wide = make_mlp({3, 2}, 8);
  forward(wide, x, &cache);
  GradBundle g2 = zero_grads(wide);
  const std::vector<double> og{2.0, -1.0};
  const auto dx2 = backward(wide, cache, og, g2);
  for (int c = 0; c < 3; ++c)
    CHECK(dx2[c] == doctest::Approx(wide.w[0][c] * 2.0 + wide.w[0][3 + c] * -1.0)
                        .epsilon(1e-15));
}

TEST_CASE("backward matches central finite differences on random nets") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> width(1, 6), depth(0, 2), kind(0, 2);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<int> sizes{width(rng)};
    const int hidden = depth(rng);
    for (int l = 0; l < hidden; ++l) sizes.push_back(width(rng));
    sizes.push_back(width(rng));
    const bool squash = kind(rng) == 0;
    const MlpNet net =
        make_mlp(sizes, 500 + i,
                 squash ? OutputKind::tanh_scaled : OutputKind::linear, -2.0, 2.0);
    const auto input = random_vec(sizes.front(), 900 + i);
    const auto target = random_vec(sizes.back(), 1300 + i);
    const auto rep = grad_check(net, input, target, 1e-4);
    INFO(rep.worst_location);
    CHECK(rep.pass);
    worst = std::max(worst, rep.worst_rel_err);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("grad_check names corrupted gradients and allows linear models") {
  const MlpNet net = make_mlp({3, 4, 2}, 31);
  const auto input = random_vec(3, 1);
  const auto target = random_vec(2, 2);

  const GradProvider corrupt = [](const MlpNet& n, std::span<const double> in,
                                  std::span<const double> t, GradBundle& g,
                                  std::vector<double>& ig) {
    ForwardCache cache;
    const auto y = forward(n, in, &cache);
    std::vector<double> og(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) og[i] = y[i] - t[i];
    ig = backward(n, cache, og, g);
    g.b[1][0] += 0.5;  // sabotage one bias gradient
  };
  const auto rep = grad_check(net, input, target, 1e-4, corrupt);
  CHECK_FALSE(rep.pass);
  CHECK(rep.worst_location == "layer 1 biases[0]");

  const MlpNet linear = make_mlp({4, 3}, 77);
  CHECK(grad_check(linear, random_vec(4, 3), random_vec(3, 4), 1e-4).pass);
}

TEST_CASE("adam steps are deterministic and detect divergence") {
  SUBCASE("zero gradient leaves parameters alone") {
    MlpNet net = make_mlp({2, 3, 1}, 5);
    const MlpNet before = net;
    AdamState st = make_adam(net);
    CHECK(adam_step(net, st, zero_grads(net), 1e-3));
    CHECK(same_params(net, before));
  }

  SUBCASE("identical calls from identical state agree exactly") {
    MlpNet n1 = make_mlp({2, 4, 2}, 6), n2 = make_mlp({2, 4, 2}, 6);
    AdamState s1 = make_adam(n1), s2 = make_adam(n2);
    GradBundle g = zero_grads(n1);
    for (auto& layer : g.w)
      for (double& x : layer) x = 0.3;
    for (int i = 0; i < 5; ++i) {
      CHECK(adam_step(n1, s1, g, 1e-2));
      CHECK(adam_step(n2, s2, g, 1e-2));
    }
    CHECK(same_params(n1, n2));
  }

  SUBCASE("constant gradients approach signed fixed step") {
    MlpNet net = make_mlp({1, 1}, 9);
    AdamState st = make_adam(net);
    GradBundle g = zero_grads(net);
    g.w[0][0] = 2.5;
    g.b[0][0] = -0.7;
    const double lr = 1e-3;
    double prev_w = net.w[0][0], prev_b = net.b[0][0];
    for (int i = 0; i < 3000; ++i) {
      CHECK(adam_step(net, st, g, lr));
      if (i < 2999) {
        prev_w = net.w[0][0];
        prev_b = net.b[0][0];
      }
    }
    CHECK(prev_w - net.w[0][0] == doctest::Approx(lr).epsilon(0.01));
    CHECK(net.b[0][0] - prev_b == doctest::Approx(lr).epsilon(0.01));
  }

  SUBCASE("non-finite updates are refused wholesale") {
    MlpNet net = make_mlp({2, 2}, 10);
    const MlpNet before = net;
    AdamState st = make_adam(net);
    const AdamState st_before = st;
    GradBundle g = zero_grads(net);
    g.w[0][0] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(adam_step(net, st, g, 1e-3));
    CHECK(same_params(net, before));
    CHECK(st.t == st_before.t);
    CHECK(st.mw == st_before.mw);
  }

  CHECK_THROWS_AS([] {
    MlpNet net = make_mlp({2, 2}, 1);
    AdamState st = make_adam(net);
    adam_step(net, st, zero_grads(net), 0.0);
  }(), std::invalid_argument);
}

TEST_CASE("soft updates blend toward the online network") {
  MlpNet online = make_mlp({2, 3, 1}, 12);
  MlpNet target = make_mlp({2, 3, 1}, 13);

  SUBCASE("tau one copies") {
    soft_update(target, online, 1.0);
    CHECK(same_params(target, online));
  }

  SUBCASE("small tau moves proportionally") {
    zero_params(target);
    MlpNet ones = online;
    for (auto& layer : ones.w)
      for (double& x : layer) x = 1.0;
    for (auto& layer : ones.b)
      for (double& x : layer) x = 1.0;
    soft_update(target, ones, 0.005);
    for (const auto& layer : target.w)
      for (double x : layer) CHECK(x == 0.005);
  }

  SUBCASE("distance contracts geometrically with ratio one minus tau") {
    const double tau = 0.25;
    double prev = -1.0;
    for (int k = 0; k < 20; ++k) {
      double dist = 0.0;
      for (std::size_t l = 0; l < target.w.size(); ++l)
        for (std::size_t i = 0; i < target.w[l].size(); ++i)
          dist = std::max(dist, std::fabs(target.w[l][i] - online.w[l][i]));
      if (prev >= 0.0) CHECK(dist == doctest::Approx(prev * (1.0 - tau)).epsilon(1e-9));
      prev = dist;
      soft_update(target, online, tau);
    }
  }

  SUBCASE("bad arguments throw") {
    MlpNet other = make_mlp({2, 4, 1}, 14);
    CHECK_THROWS_AS(soft_update(other, online, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(soft_update(target, online, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(soft_update(target, online, 1.5), std::invalid_argument);
  }
}

TEST_CASE("checkpoints reload bit-exactly and reject corruption") {
  const MlpNet net = make_mlp({3, 5, 2}, 21, OutputKind::tanh_scaled, -2.0, 2.0);
  const std::string text = net_to_text(net);
  const MlpNet back = net_from_text(text);
  CHECK(same_params(net, back));
  CHECK(back.output == OutputKind::tanh_scaled);
  CHECK(back.out_low == -2.0);
  CHECK(back.out_high == 2.0);

  const MlpNet lin = make_mlp({4, 4}, 22);
  CHECK(same_params(lin, net_from_text(net_to_text(lin))));

  CHECK_THROWS_AS(net_from_text(""), std::invalid_argument);
  CHECK_THROWS_AS(net_from_text("mlp 1 4"), std::invalid_argument);
  CHECK_THROWS_AS(net_from_text("perceptron 2 1 1 linear 0 1"), std::invalid_argument);
  CHECK_THROWS_AS(net_from_text(text + " 0x1p+0"), std::invalid_argument);
  CHECK_THROWS_AS(net_from_text(text.substr(0, text.size() / 2)),
                  std::invalid_argument);

  const std::string path = "/tmp/rrl_net_ckpt_test.txt";
  save_net(net, path);
  CHECK(same_params(net, load_net(path)));
  CHECK_THROWS_AS(load_net("/nonexistent/dir/net.txt"), std::runtime_error);
}

TEST_CASE("gradient bundles accumulate and rescale") {
  const MlpNet net = make_mlp({2, 2}, 30);
  GradBundle a = zero_grads(net), b = zero_grads(net);
  a.w[0] = {1.0, 2.0, 3.0, 4.0};
  b.w[0] = {10.0, 10.0, 10.0, 10.0};
  add_scaled(a, b, 0.5);
  CHECK(a.w[0] == std::vector<double>{6.0, 7.0, 8.0, 9.0});
  scale_grads(a, 2.0);
  CHECK(a.w[0] == std::vector<double>{12.0, 14.0, 16.0, 18.0});
  GradBundle wrong;
  CHECK_THROWS_AS(add_scaled(a, wrong, 1.0), std::invalid_argument);
}
