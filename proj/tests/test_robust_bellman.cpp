#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rrl/grid_env.hpp"
#include "rrl/robust_bellman.hpp"

using namespace rrl;

namespace {

TabularMdp random_mdp(int ns, int na, double gamma, std::uint64_t seed,
                      bool self_loops = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TabularMdp m(ns, na, gamma);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      m.c(s, a) = u(rng);
      double sum = 0.0;
      for (int j = 0; j < ns; ++j) {
        m.p(s, a, j) = u(rng) + (self_loops && j == s ? 0.5 : 1e-3);
        sum += m.p(s, a, j);
      }
      for (int j = 0; j < ns; ++j) m.p(s, a, j) /= sum;
    }
  return m;
}

QTable random_q(int ns, int na, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  QTable q(ns, na);
  for (auto& v : q.values) v = u(rng);
  return q;
}

std::vector<int> all_states(int ns) {
  std::vector<int> out(ns);
  for (int i = 0; i < ns; ++i) out[i] = i;
  return out;
}

// plain value iteration on V, written independently of the library operator
QTable classic_vi(const TabularMdp& m, double tol) {
  std::vector<double> v(m.n_states, 0.0);
  for (int it = 0; it < 1000000; ++it) {
    double res = 0.0;
    std::vector<double> nv(m.n_states);
    for (int s = 0; s < m.n_states; ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.n_actions; ++a) {
        double q = m.c(s, a);
        for (int j = 0; j < m.n_states; ++j) q += m.gamma * m.p(s, a, j) * v[j];
        best = std::min(best, q);
      }
      nv[s] = best;
      res = std::max(res, std::fabs(nv[s] - v[s]));
    }
    v = nv;
    if (res < tol) break;
  }
  QTable q(m.n_states, m.n_actions);
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_actions; ++a) {
      double val = m.c(s, a);
      for (int j = 0; j < m.n_states; ++j) val += m.gamma * m.p(s, a, j) * v[j];
      q(s, a) = val;
    }
  return q;
}

}  // namespace

TEST_CASE("support_function closed forms on a two-point distribution") {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<double> v{0.0, 1.0};
  const std::vector<int> both{0, 1};
  const std::vector<int> only0{0};

  CHECK(support_function(UncertaintySetSpec::nominal(), p, v, both) == 0.5);
  CHECK(support_function(UncertaintySetSpec::contamination(0.2), p, v, both) ==
        doctest::Approx(0.6).epsilon(1e-15));
  CHECK(support_function(UncertaintySetSpec::adjacent(0.2), p, v, both) ==
        doctest::Approx(0.6).epsilon(1e-15));
  CHECK(support_function(UncertaintySetSpec::adjacent(0.2), p, v, only0) ==
        doctest::Approx(0.4).epsilon(1e-15));
  CHECK(support_function(UncertaintySetSpec::contamination(1.0), p, v, both) == 1.0);
  CHECK(support_function(UncertaintySetSpec::adjacent(1.0), p, v, only0) == 0.0);
  CHECK(support_function(UncertaintySetSpec::adjacent(0.0), p, v, only0) == 0.5);
}

TEST_CASE("support_function rejects bad inputs") {
  const std::vector<double> p{1.0, 0.0};
  const std::vector<double> v{0.0, 1.0};
  CHECK_THROWS_AS(
      support_function(UncertaintySetSpec::adjacent(0.5), p, v, std::vector<int>{}),
      std::invalid_argument);
  CHECK_THROWS_AS(UncertaintySetSpec::adjacent(1.5), std::invalid_argument);
  CHECK_THROWS_AS(UncertaintySetSpec::contamination(-0.1), std::invalid_argument);
  const std::vector<double> v3{0.0, 1.0, 2.0};
  CHECK_THROWS_AS(
      support_function(UncertaintySetSpec::nominal(), p, v3, std::vector<int>{0}),
      std::invalid_argument);
}

TEST_CASE("support_function matches the vertex-enumeration oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> nstates(2, 12);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = nstates(rng);
    std::vector<double> p(n), v(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      p[i] = u(rng) + 1e-6;
      sum += p[i];
      v[i] = 2.0 * u(rng) - 1.0;
    }
    for (auto& x : p) x /= sum;
    std::vector<int> nbrs;
    for (int i = 0; i < n; ++i)
      if (u(rng) < 0.5) nbrs.push_back(i);
    if (nbrs.empty()) nbrs.push_back(0);
    const double R = u(rng);
    for (const auto spec : {UncertaintySetSpec::nominal(),
                            UncertaintySetSpec::contamination(R),
                            UncertaintySetSpec::adjacent(R)}) {
      const double fast = support_function(spec, p, v, nbrs);
      const double slow = lp_support_oracle(spec, p, v, nbrs);
      CHECK(std::fabs(fast - slow) <= 1e-12);
    }
  }
}

TEST_CASE("lp_support_oracle refuses large instances") {
  std::vector<double> p(13, 1.0 / 13.0), v(13, 0.0);
  const auto nbrs = all_states(13);
  CHECK_THROWS_AS(
      lp_support_oracle(UncertaintySetSpec::contamination(0.5), p, v, nbrs),
      std::invalid_argument);
}

TEST_CASE("nominal support is bounded by adjacent which is bounded by contamination") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 6;
    std::vector<double> p(n, 0.0), v(n);
    std::vector<int> support;
    for (int i = 0; i < n; ++i) {
      v[i] = 2.0 * u(rng) - 1.0;
      if (u(rng) < 0.6) support.push_back(i);
    }
    if (support.empty()) support.push_back(2);
    double sum = 0.0;
    for (int i : support) {
      p[i] = u(rng) + 1e-6;
      sum += p[i];
    }
    for (auto& x : p) x /= sum;
    const double R = u(rng);
    const double nom = support_function(UncertaintySetSpec::nominal(), p, v, support);
    const double adj = support_function(UncertaintySetSpec::adjacent(R), p, v, support);
    const double rc = support_function(UncertaintySetSpec::contamination(R), p, v, support);
    CHECK(nom <= adj + 1e-12);
    CHECK(adj <= rc + 1e-12);
  }
}

TEST_CASE("adjacent with full neighbor sets equals plain contamination") {
  const TabularMdp m = random_mdp(6, 3, 0.9, 21);
  NeighborTable full(6);
  for (int s = 0; s < 6; ++s)
    for (int j = 0; j < 6; ++j) full.record(s, j);
  const QTable q = random_q(6, 3, -3.0, 3.0, 22);
  const QTable a = robust_backup(m, UncertaintySetSpec::adjacent(0.3), full, q);
  const QTable b = robust_backup(m, UncertaintySetSpec::contamination(0.3), full, q);
  CHECK(a.values == b.values);
}

TEST_CASE("robust_backup with R=0 is the standard expected backup") {
  const TabularMdp m = random_mdp(5, 2, 0.95, 31);
  const NeighborTable nbrs = true_neighbor_sets(m);
  const QTable q = random_q(5, 2, -2.0, 2.0, 32);
  const QTable out = robust_backup(m, UncertaintySetSpec::adjacent(0.0), nbrs, q);
  const auto v = values_of(q);
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 2; ++a) {
      double expect = m.c(s, a);
      double pv = 0.0;
      for (int j = 0; j < 5; ++j) pv += m.p(s, a, j) * v[j];
      expect += m.gamma * pv;
      CHECK(out(s, a) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("robust_backup on a uniform table with zero cost scales by gamma") {
  TabularMdp m = random_mdp(4, 2, 0.7, 41);
  for (auto& c : m.cost) c = 0.0;
  const NeighborTable nbrs = true_neighbor_sets(m);
  QTable q(4, 2, 2.0);
  const QTable out = robust_backup(m, UncertaintySetSpec::adjacent(0.4), nbrs, q);
  for (double val : out.values) CHECK(val == doctest::Approx(1.4).epsilon(1e-14));
}

TEST_CASE("two-state fixed point matches the hand-solved system") {
  // p(0)=[0.9,0.1], p(1)=[0.1,0.9], c=[1,0], gamma=0.5, R=0.5,
  // neighbor sets {self}: Q = (21/11, 1/11)
  TabularMdp m(2, 1, 0.5);
  m.c(0, 0) = 1.0;
  m.c(1, 0) = 0.0;
  m.p(0, 0, 0) = 0.9; m.p(0, 0, 1) = 0.1;
  m.p(1, 0, 0) = 0.1; m.p(1, 0, 1) = 0.9;
  NeighborTable self_only(2);
  self_only.record(0, 0);
  self_only.record(1, 1);
  const auto res = robust_value_iteration(m, UncertaintySetSpec::adjacent(0.5),
                                          self_only, 1e-13);
  REQUIRE(res.converged);
  CHECK(res.q(0, 0) == doctest::Approx(21.0 / 11.0).epsilon(1e-10));
  CHECK(res.q(1, 0) == doctest::Approx(1.0 / 11.0).epsilon(1e-10));
}

TEST_CASE("value iteration residuals contract at rate gamma") {
  // zero costs keep the iterates scale-free, so the geometric decay is clean
  TabularMdp m(3, 2, 0.9);
  for (auto& c : m.cost) c = 0.0;
  const int succ[3][2] = {{1, 2}, {0, 2}, {1, 0}};
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) m.p(s, a, succ[s][a]) = 1.0;
  const NeighborTable nbrs = true_neighbor_sets(m);
  QTable init(3, 2);
  init(0, 0) = 1.0; init(0, 1) = 0.5; init(1, 0) = 0.25; init(1, 1) = 1.0;
  init(2, 0) = 0.75; init(2, 1) = 0.125;
  const auto res = robust_value_iteration(m, UncertaintySetSpec::adjacent(0.5), nbrs,
                                          1e-10, 200000, &init);
  REQUIRE(res.converged);
  REQUIRE(res.residual_history.size() >= 10);
  for (std::size_t k = 1; k < res.residual_history.size(); ++k) {
    const double prev = res.residual_history[k - 1];
    if (prev == 0.0) break;
    CHECK(res.residual_history[k] <= 0.9 * prev + 1e-12 * prev + 1e-300);
  }
}

TEST_CASE("nominal value iteration agrees with an independent classic solver") {
  GridEnv cliff{cliffwalking_spec()};
  const TabularMdp m = cliff.to_mdp(0.99);
  CHECK(validate_mdp(m).empty());
  const NeighborTable nbrs = true_neighbor_sets(m);
  const auto res = robust_value_iteration(m, UncertaintySetSpec::nominal(), nbrs, 1e-10);
  REQUIRE(res.converged);
  const QTable ref = classic_vi(m, 1e-10);
  CHECK(max_abs_diff(res.q, ref) < 1e-6);
  // optimal cost-to-go from the start: 13 discounted unit steps
  double expect = 0.0;
  for (int k = 0; k < 13; ++k) expect += std::pow(0.99, k);
  const int start = cliff.cell(3, 0);
  CHECK(state_value(res.q, start) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("value iteration reaches the same fixed point from any start") {
  const TabularMdp m = random_mdp(6, 3, 0.85, 51);
  const NeighborTable nbrs = true_neighbor_sets(m);
  const auto spec = UncertaintySetSpec::adjacent(0.25);
  const auto from_zero = robust_value_iteration(m, spec, nbrs, 1e-12);
  const QTable init = random_q(6, 3, -20.0, 20.0, 52);
  const auto from_rand = robust_value_iteration(m, spec, nbrs, 1e-12, 200000, &init);
  REQUIRE(from_zero.converged);
  REQUIRE(from_rand.converged);
  CHECK(max_abs_diff(from_zero.q, from_rand.q) < 1e-10);
}

TEST_CASE("operator is a sup-norm contraction on random pairs") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int ns = 2 + static_cast<int>(u(rng) * 6);
    const int na = 1 + static_cast<int>(u(rng) * 3);
    const double gamma = 0.1 + 0.89 * u(rng);
    TabularMdp m = random_mdp(ns, na, gamma, 1000 + trial, true);
    const NeighborTable nbrs = true_neighbor_sets(m);
    const double Rs[4] = {0.0, 0.25, 0.5, 1.0};
    const auto spec = UncertaintySetSpec::adjacent(Rs[trial % 4]);
    const QTable q1 = random_q(ns, na, -5.0, 5.0, 2000 + trial);
    const QTable q2 = random_q(ns, na, -5.0, 5.0, 3000 + trial);
    const double lhs = max_abs_diff(robust_backup(m, spec, nbrs, q1),
                                    robust_backup(m, spec, nbrs, q2));
    CHECK(lhs <= gamma * max_abs_diff(q1, q2) + 1e-12);
  }
}

TEST_CASE("estimate_neighbors unions observed successors") {
  const auto t = estimate_neighbors({{0, 1}, {0, 1}, {0, 2}}, 3);
  CHECK(t.visited(0));
  CHECK(t.raw(0) == std::vector<int>{1, 2});
  CHECK(t.neighbors_of(0) == std::vector<int>{1, 2});
  CHECK_FALSE(t.visited(1));
  CHECK(t.neighbors_of(1) == std::vector<int>{1});  // fallback keeps sets nonempty
  CHECK(t.neighbors_of(2) == std::vector<int>{2});
  CHECK_THROWS_AS(estimate_neighbors({{0, 3}}, 3), std::out_of_range);
  CHECK_THROWS_AS(estimate_neighbors({{-1, 0}}, 3), std::out_of_range);
}

TEST_CASE("empty stream leaves every state unvisited") {
  const auto t = estimate_neighbors({}, 4);
  for (int s = 0; s < 4; ++s) {
    CHECK_FALSE(t.visited(s));
    CHECK(t.neighbors_of(s) == std::vector<int>{s});
  }
}

TEST_CASE("cliffwalking neighbor sets by exact kernel enumeration") {
  GridEnv cliff{cliffwalking_spec()};
  const TabularMdp m = cliff.to_mdp(0.99);
  const NeighborTable nbrs = true_neighbor_sets(m);
  const int start = cliff.cell(3, 0);

  // interior cell above the safe rows: four orthogonal neighbors, no self
  const int mid = cliff.cell(1, 5);
  CHECK(nbrs.neighbors_of(mid) ==
        std::vector<int>{cliff.cell(0, 5), cliff.cell(1, 4), cliff.cell(1, 6),
                         cliff.cell(2, 5)});

  // cliff-adjacent cell: stepping down teleports to the start
  const int edge = cliff.cell(2, 5);
  CHECK(nbrs.contains(edge, start));
  CHECK_FALSE(nbrs.contains(edge, edge));

  // start bumps two walls and teleports from the cliff, so it keeps itself
  CHECK(nbrs.neighbors_of(start) == std::vector<int>{cliff.cell(2, 0), start});

  // top-left corner bumps walls and keeps itself
  const int corner = cliff.cell(0, 0);
  CHECK(nbrs.neighbors_of(corner) ==
        std::vector<int>{corner, cliff.cell(0, 1), cliff.cell(1, 0)});

  // wherever some action loops back, the state is its own neighbor
  for (int s = 0; s < m.n_states; ++s) {
    bool loops = false;
    for (int a = 0; a < m.n_actions; ++a) loops = loops || m.p(s, a, s) > 0.0;
    if (loops) CHECK(nbrs.contains(s, s));
  }
}

TEST_CASE("random exploration recovers the exact neighbor sets") {
  GridEnv cliff{cliffwalking_spec()};
  const TabularMdp m = cliff.to_mdp(0.99);
  const NeighborTable truth = true_neighbor_sets(m);
  cliff.seed(5);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> act(0, 3);
  std::vector<std::pair<int, int>> stream;
  int s = cliff.reset();
  for (int t = 0; t < 100000; ++t) {
    const StepOut out = cliff.step(act(rng));
    stream.emplace_back(s, cliff.state());
    s = cliff.state();
    if (out.done) s = cliff.reset();
  }
  const NeighborTable est = estimate_neighbors(stream, m.n_states);
  CHECK(est.subset_of(truth));
  for (int st = 0; st < m.n_states; ++st)
    if (est.visited(st)) CHECK(est.raw(st) == truth.neighbors_of(st));
}

TEST_CASE("check_assumption2 flags missing maximizers") {
  NeighborTable truth(3);
  truth.record(0, 1);
  truth.record(0, 2);
  truth.record(1, 0);
  truth.record(2, 2);
  const std::vector<double> v{0.0, 1.0, 2.0};

  const auto all_ok = check_assumption2(truth, truth, v);
  CHECK(all_ok == std::vector<bool>{true, true, true});

  NeighborTable partial(3);
  partial.record(0, 1);  // missing state 2, the maximizer for state 0
  partial.record(1, 0);
  partial.record(2, 2);
  const auto flags = check_assumption2(partial, truth, v);
  CHECK(flags == std::vector<bool>{false, true, true});
}
