#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "rrl/grid_env.hpp"
#include "rrl/robust_bellman.hpp"
#include "rrl/tabular_agents.hpp"

using namespace rrl;

namespace {

QTable random_table(int ns, int na, std::uint64_t seed, double lo = -5.0,
                    double hi = 5.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  QTable q(ns, na);
  for (double& v : q.values) v = u(rng);
  return q;
}

TabularMdp random_mdp(int ns, int na, double gamma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  TabularMdp m(ns, na, gamma);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      m.c(s, a) = u01(rng);
      double tot = 0;
      std::vector<double> w(ns);
      for (int j = 0; j < ns; ++j) tot += (w[j] = 0.05 + u01(rng));
      for (int j = 0; j < ns; ++j) m.p(s, a, j) = w[j] / tot;
    }
  return m;
}

// Kernel rows are multiples of 1/8 and every other quantity is a small
// binary fraction, so double arithmetic on them is exact.
TabularMdp dyadic_mdp(int ns, int na, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> slot(0, ns - 1);
  std::uniform_int_distribution<int> cost8(-8, 8);
  TabularMdp m(ns, na, 0.5);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      m.c(s, a) = cost8(rng) / 4.0;
      std::vector<int> units(ns, 0);
      for (int u = 0; u < 8; ++u) ++units[slot(rng)];
      for (int j = 0; j < ns; ++j) m.p(s, a, j) = units[j] / 8.0;
    }
  return m;
}

int grid_index(int row, int col) { return row * 12 + col; }

std::vector<int> greedy_rollout(const TabularEnv& env, const QTable& q,
                                int limit = 60) {
  auto e = env.clone();
  int s = e->reset_with_seed(1);
  std::vector<int> path{s};
  for (int i = 0; i < limit && !e->terminal(s); ++i) {
    e->set_state(s);
    e->step(greedy_action(q, s));
    s = e->state();
    path.push_back(s);
  }
  return path;
}

// Cells orthogonally adjacent to a CliffWalking hazard, hazards included.
std::set<int> cliff_adjacent_cells() {
  std::set<int> bad;
  for (int col = 1; col <= 10; ++col) {
    bad.insert(grid_index(3, col));
    bad.insert(grid_index(2, col));
    bad.insert(grid_index(3, col - 1));
    bad.insert(grid_index(3, col + 1));
  }
  return bad;
}

std::vector<int> argmax_map(const QTable& q, const NeighborTable& nb) {
  std::vector<int> out(nb.n_states(), -1);
  for (int s = 0; s < nb.n_states(); ++s) {
    double best = -1e300;
    for (int j : nb.neighbors_of(s)) {
      const double v = state_value(q, j);
      if (v > best) {
        best = v;
        out[s] = j;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("single-sample updates hit their targets and only one entry") {
  QTable q(3, 2);
  q_learning_update(q, {1, 0, 2.0, 2, false}, 1.0, 0.9);
  CHECK(q(1, 0) == 2.0);  // zero table bootstraps nothing

  QTable q2 = random_table(3, 2, 11);
  const QTable before = q2;
  q_learning_update(q2, {0, 1, 3.0, 2, false}, 0.0, 0.9);
  CHECK(q2.values == before.values);  // alpha 0 is a no-op

  QTable q3 = random_table(4, 3, 12);
  const QTable snap = q3;
  robust_q_update(q3, {2, 1, 1.5, 0, false}, 0.25, 0.9, 0.3, table_vmax(snap));
  int changed = 0;
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 3; ++a)
      if (q3(s, a) != snap(s, a)) {
        ++changed;
        CHECK(s == 2);
        CHECK(a == 1);
      }
  CHECK(changed == 1);

  QTable q4(3, 2);
  robust_q_update(q4, {2, 0, 7.0, 1, false}, 1.0, 0.9, 1.0, table_vmax(q4));
  CHECK(q4(2, 0) == 7.0);  // R=1 on a zero table leaves only the cost

  QTable q5(3, 2);
  prq_pessimistic_update(q5, {0, 0, 0.0, 1, false, 1, -4.0, 2, false}, 1.0, 0.9);
  CHECK(q5(0, 1) == -4.0);

  QTable q6(3, 2);
  prq_robust_update(q6, {1, 1, 2.5, 0, false, 0, 0.0, 2, false}, 1.0, 0.9, 0.4);
  CHECK(q6(1, 1) == 2.5);

  CHECK(table_vmax(random_table(1, 1, 1, 2.0, 2.0)) == 2.0);
}

TEST_CASE("R=0 collapses every robust update to the plain one, bit for bit") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> st(0, 4), ac(0, 2), coin(0, 1);
  std::uniform_real_distribution<double> cost(-3.0, 3.0);
  NeighborTable full(5);
  for (int s = 0; s < 5; ++s)
    for (int j = 0; j < 5; ++j) full.record(s, j);

  QTable base = random_table(5, 3, 5);
  QTable qa = base, qb = base, qc = base, qd = base;
  for (int i = 0; i < 300; ++i) {
    const Transition t{st(rng), ac(rng), cost(rng), st(rng), coin(rng) == 1};
    const DoubleAgentTransition d{t.s,  t.a,        t.c,     t.s_next, t.done,
                                  ac(rng), cost(rng), st(rng), coin(rng) == 1};
    q_learning_update(qa, t, 0.3, 0.95);
    robust_q_update(qb, t, 0.3, 0.95, 0.0, table_vmax(qb));
    arq_update(qc, t, full, 0.3, 0.95, 0.0);
    prq_robust_update(qd, d, 0.3, 0.95, 0.0);
    CHECK(qa.values == qb.values);
    CHECK(qa.values == qc.values);
    CHECK(qa.values == qd.values);
  }
}

TEST_CASE("full neighbor set turns the adjacent update into the all-states one") {
  NeighborTable full(4);
  for (int s = 0; s < 4; ++s)
    for (int j = 0; j < 4; ++j) full.record(s, j);
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> st(0, 3), ac(0, 1), coin(0, 1);
  std::uniform_real_distribution<double> cost(-2.0, 2.0);
  QTable qa = random_table(4, 2, 9), qb = qa;
  for (int i = 0; i < 200; ++i) {
    const Transition t{st(rng), ac(rng), cost(rng), st(rng), coin(rng) == 1};
    arq_update(qa, t, full, 0.2, 0.9, 0.35);
    robust_q_update(qb, t, 0.2, 0.9, 0.35, table_vmax(qb));
    CHECK(qa.values == qb.values);
  }
}

TEST_CASE("pessimistic successor equal to the maximizer reproduces the "
          "neighbor-set update") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> st(0, 5), ac(0, 2), coin(0, 1);
  std::uniform_real_distribution<double> cost(-4.0, 4.0);
  NeighborTable nhat(6);
  for (int s = 0; s < 6; ++s) {
    nhat.record(s, st(rng));
    nhat.record(s, st(rng));
    nhat.record(s, st(rng));
  }
  QTable qa = random_table(6, 3, 55), qb = qa;
  for (int i = 0; i < 300; ++i) {
    const int s = st(rng);
    const Transition t{s, ac(rng), cost(rng), st(rng), coin(rng) == 1};
    int best = -1;
    double bestv = -1e300;
    for (int j : nhat.neighbors_of(s)) {
      const double v = state_value(qb, j);
      if (v > bestv) {
        bestv = v;
        best = j;
      }
    }
    const DoubleAgentTransition d{t.s, t.a, t.c, t.s_next, t.done,
                                  0,   0.0, best, false};
    arq_update(qa, t, nhat, 0.15, 0.92, 0.4);
    prq_robust_update(qb, d, 0.15, 0.92, 0.4);
    CHECK(qa.values == qb.values);
  }
}

TEST_CASE("two-state chain reaches its closed-form fixed point") {
  // s0 -> s1 costs 1, s1 -> terminal costs 4, gamma 1/2:
  // Q*(s1) = 4, Q*(s0) = 1 + 4/2 = 3.
  QTable q(2, 1);
  for (int i = 0; i < 300; ++i) {
    q_learning_update(q, {1, 0, 4.0, 0, true}, 0.5, 0.5);
    q_learning_update(q, {0, 0, 1.0, 1, false}, 0.5, 0.5);
  }
  CHECK(q(1, 0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(q(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("pessimistic table learns the cost-maximizing policy on a chain") {
  // Two states, two actions each. Action 0 takes the expensive route,
  // action 1 bails out for free. Negated costs make the pessimist prefer
  // the expensive route everywhere.
  QTable q_phi(2, 2);
  const DoubleAgentTransition s1_costly{1, 0, 0.0, 0, false, 0, -10.0, 0, true};
  const DoubleAgentTransition s1_free{1, 0, 0.0, 0, false, 1, 0.0, 0, true};
  const DoubleAgentTransition s0_costly{0, 0, 0.0, 0, false, 0, -1.0, 1, false};
  const DoubleAgentTransition s0_free{0, 0, 0.0, 0, false, 1, 0.0, 0, true};
  for (int i = 0; i < 400; ++i) {
    prq_pessimistic_update(q_phi, s1_costly, 0.5, 0.5);
    prq_pessimistic_update(q_phi, s1_free, 0.5, 0.5);
    prq_pessimistic_update(q_phi, s0_costly, 0.5, 0.5);
    prq_pessimistic_update(q_phi, s0_free, 0.5, 0.5);
  }
  CHECK(q_phi(1, 0) == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(q_phi(0, 0) == doctest::Approx(-6.0).epsilon(1e-12));
  CHECK(q_phi(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(greedy_action(q_phi, 0) == 0);
  CHECK(greedy_action(q_phi, 1) == 0);
}

TEST_CASE("expected single-sample update equals the synchronous backup") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int ns = 3 + static_cast<int>(seed % 3);
    const int na = 1 + static_cast<int>(seed % 2);
    const TabularMdp m = dyadic_mdp(ns, na, seed);
    const NeighborTable tn = true_neighbor_sets(m);
    const double R = (seed % 4) / 4.0 + (seed % 4 == 3 ? 0.25 : 0.0);
    std::mt19937_64 rng(seed * 13);
    std::uniform_int_distribution<int> q8(-16, 16);
    QTable q0(ns, na);
    for (double& v : q0.values) v = q8(rng) / 8.0;

    const QTable backed = robust_backup(m, UncertaintySetSpec::adjacent(R), tn, q0);
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < na; ++a) {
        double expected = 0.0;
        for (int j = 0; j < ns; ++j) {
          if (m.p(s, a, j) == 0.0) continue;
          QTable fresh = q0;
          arq_update(fresh, {s, a, m.c(s, a), j, false}, tn, 1.0, m.gamma, R);
          expected += m.p(s, a, j) * fresh(s, a);
        }
        CHECK(expected == backed(s, a));
      }
  }
}

TEST_CASE("sampled updates with 1/k rates recover the oracle fixed points") {
  for (std::uint64_t seed : {3, 5}) {
    const double gamma = 0.45, R = 0.3;
    const TabularMdp m = random_mdp(5, 2, gamma, seed);
    const NeighborTable tn = true_neighbor_sets(m);
    const auto vi_adj = robust_value_iteration(m, UncertaintySetSpec::adjacent(R), tn);
    const auto vi_rc =
        robust_value_iteration(m, UncertaintySetSpec::contamination(R), tn);

    std::vector<std::discrete_distribution<int>> dists;
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 2; ++a) {
        auto row = m.row(s, a);
        dists.emplace_back(row.begin(), row.end());
      }
    QTable qa(5, 2), qr(5, 2);
    std::mt19937_64 g(seed * 77 + 1);
    for (long k = 1; k <= 400000; ++k) {
      const double alpha = 1.0 / static_cast<double>(k);
      for (int s = 0; s < 5; ++s)
        for (int a = 0; a < 2; ++a) {
          arq_update(qa, {s, a, m.c(s, a), dists[s * 2 + a](g), false}, tn,
                     alpha, gamma, R);
          robust_q_update(qr, {s, a, m.c(s, a), dists[s * 2 + a](g), false},
                          alpha, gamma, R, table_vmax(qr));
        }
    }
    CHECK(max_abs_diff(qa, vi_adj.q) < 1e-3);
    CHECK(max_abs_diff(qr, vi_rc.q) < 1e-3);
  }
}

TEST_CASE("double-agent stepping shares the state and branches the cost") {
  GridEnv env(cliffwalking_spec());

  SUBCASE("pessimistic branch dives while the robust branch is unaffected") {
    env.reset_with_seed(3);
    const int s = grid_index(2, 1);
    const auto t = double_agent_step(env, s, GridAction::kUp, GridAction::kDown);
    CHECK(t.s == s);
    CHECK(t.s_next == grid_index(1, 1));
    CHECK(t.c == 1.0);
    CHECK_FALSE(t.done);
    CHECK(t.c_p == -100.0);
    CHECK(t.x_next == grid_index(3, 0));  // hazard teleports home
    CHECK_FALSE(t.done_p);
    CHECK(env.state() == t.s_next);  // robust successor drives on
  }

  SUBCASE("goal termination is per branch") {
    env.reset_with_seed(3);
    const auto t = double_agent_step(env, grid_index(2, 11), GridAction::kDown,
                                     GridAction::kUp);
    CHECK(t.done);
    CHECK(t.s_next == grid_index(3, 11));
    CHECK(t.c == 1.0);
    CHECK_FALSE(t.done_p);
    CHECK(t.x_next == grid_index(1, 11));
    CHECK(t.c_p == -1.0);
  }

  SUBCASE("identical policies make the branches coincide") {
    const QTable q = random_table(env.n_states(), env.n_actions(), 19);
    const TabularActor actor = [&q](int s, std::mt19937_64&) {
      return greedy_action(q, s);
    };
    ReplayBuffer<DoubleAgentTransition> buf(1000, 4);
    const int end_state = double_agent_sample(env, actor, actor, 250, buf, 21);
    CHECK(buf.size() == 250);
    CHECK(env.state() == end_state);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const auto& t = buf.at(i);
      CHECK(t.s_next == t.x_next);
      CHECK(t.c_p == -t.c);
      CHECK(t.done == t.done_p);
      if (i + 1 < buf.size()) {
        const int expect = t.done ? grid_index(3, 0) : t.s_next;
        CHECK(buf.at(i + 1).s == expect);
      }
    }
  }

  SUBCASE("same seed reproduces the sampled stream") {
    std::mt19937_64 pol_rng(0);
    const TabularActor uniform = [](int, std::mt19937_64& g) {
      return std::uniform_int_distribution<int>(0, 3)(g);
    };
    ReplayBuffer<DoubleAgentTransition> b1(500, 9), b2(500, 9);
    GridEnv e1(cliffwalking_spec()), e2(cliffwalking_spec());
    double_agent_sample(e1, uniform, uniform, 300, b1, 33);
    double_agent_sample(e2, uniform, uniform, 300, b2, 33);
    for (std::size_t i = 0; i < b1.size(); ++i) {
      CHECK(b1.at(i).s == b2.at(i).s);
      CHECK(b1.at(i).a == b2.at(i).a);
      CHECK(b1.at(i).u == b2.at(i).u);
      CHECK(b1.at(i).x_next == b2.at(i).x_next);
    }
  }
}

TEST_CASE("replay buffer evicts oldest first and samples reproducibly") {
  ReplayBuffer<int> b(3, 1);
  for (int i = 1; i <= 5; ++i) b.push(i);
  CHECK(b.size() == 3);
  CHECK(b.at(0) == 3);
  CHECK(b.at(1) == 4);
  CHECK(b.at(2) == 5);
  CHECK(b.dump() == std::vector<int>{3, 4, 5});
  CHECK_THROWS_AS((void)b.at(3), std::out_of_range);

  ReplayBuffer<int> c1(100, 42), c2(100, 42);
  for (int i = 0; i < 100; ++i) {
    c1.push(i);
    c2.push(i);
  }
  CHECK(c1.sample_batch(50) == c2.sample_batch(50));

  CHECK_THROWS_AS(ReplayBuffer<int>(0, 1), std::invalid_argument);
  ReplayBuffer<int> inert;
  CHECK_THROWS_AS(inert.push(1), std::runtime_error);
  ReplayBuffer<int> empty(4, 0);
  CHECK_THROWS_AS((void)empty.sample(), std::runtime_error);
}

TEST_CASE("training configs are validated and carry the stock defaults") {
  const TabularTrainConfig d;
  CHECK(d.alpha == 0.01);
  CHECK(d.gamma == 0.99);
  CHECK(d.batch_size == 32);
  CHECK(d.buffer_capacity == 20000);
  CHECK(d.episodes == 1000);

  GridEnv env(cliffwalking_spec());
  auto bad = [&](auto mutate) {
    TabularTrainConfig c;
    c.episodes = 1;
    mutate(c);
    CHECK_THROWS_AS(train_tabular(env, TabularAlgo::q_learning, c),
                    std::invalid_argument);
  };
  bad([](TabularTrainConfig& c) { c.alpha = 0.0; });
  bad([](TabularTrainConfig& c) { c.alpha = 1.5; });
  bad([](TabularTrainConfig& c) { c.gamma = 1.0; });
  bad([](TabularTrainConfig& c) { c.R = -0.1; });
  bad([](TabularTrainConfig& c) { c.R = 1.2; });
  bad([](TabularTrainConfig& c) { c.episodes = 0; });
  bad([](TabularTrainConfig& c) { c.batch_size = 0; });
  bad([](TabularTrainConfig& c) { c.eps_start = 1.5; });

  CHECK(std::string(tabular_algo_name(TabularAlgo::q_learning)) == "qlearning");
  CHECK(std::string(tabular_algo_name(TabularAlgo::robust_q)) == "robustq");
  CHECK(std::string(tabular_algo_name(TabularAlgo::arq)) == "arq");
  CHECK(std::string(tabular_algo_name(TabularAlgo::prq)) == "prq");
}

TEST_CASE("training is deterministic under a fixed seed") {
  GridEnv env(cliffwalking_spec());
  TabularTrainConfig cfg;
  cfg.episodes = 120;
  cfg.seed = 17;

  GridEnv e1 = env, e2 = env;
  const auto r1 = arq_train(e1, cfg);
  const auto r2 = arq_train(e2, cfg);
  CHECK(r1.q.values == r2.q.values);
  CHECK(r1.total_steps == r2.total_steps);
  REQUIRE(r1.log.size() == r2.log.size());
  CHECK(r1.log.size() == 3);  // every 50 episodes plus the final one
  CHECK(r1.log[0].episode == 50);
  CHECK(r1.log[2].episode == 120);
  for (std::size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].mean_return == r2.log[i].mean_return);
    CHECK(r1.log[i].std_return == r2.log[i].std_return);
  }

  cfg.episodes = 80;
  GridEnv e3 = env, e4 = env;
  const auto p1 = prq_train(e3, cfg);
  const auto p2 = prq_train(e4, cfg);
  CHECK(p1.q.values == p2.q.values);
  CHECK(p1.q_phi.values == p2.q_phi.values);
}

TEST_CASE("a zero robustness level leaves the whole training run unchanged") {
  GridEnv env(cliffwalking_spec());
  TabularTrainConfig cfg;
  cfg.episodes = 150;
  cfg.seed = 23;
  cfg.R = 0.0;
  GridEnv e1 = env, e2 = env, e3 = env;
  const auto ql = q_learning_train(e1, cfg);
  const auto ar = arq_train(e2, cfg);
  const auto rq = robust_q_train(e3, cfg);
  CHECK(ql.q.values == ar.q.values);
  CHECK(ql.q.values == rq.q.values);
  CHECK(ql.total_steps == ar.total_steps);
}

TEST_CASE("nominal training matches the planner on CliffWalking") {
  GridEnv env(cliffwalking_spec());
  const TabularMdp mdp = env.to_mdp(0.99);
  const auto vi = robust_value_iteration(mdp, UncertaintySetSpec::nominal(),
                                         true_neighbor_sets(mdp));
  TabularTrainConfig cfg;
  cfg.R = 0.0;
  cfg.seed = 11;
  GridEnv e = env;
  const auto res = arq_train(e, cfg);
  CHECK(max_abs_diff(res.q, vi.q) < 0.05);
  CHECK(res.nhat.subset_of(true_neighbor_sets(mdp)));
  for (int s = 0; s < mdp.n_states; ++s)
    if (res.visit_counts[s] > 0) CHECK_FALSE(res.nhat.raw(s).empty());
}

TEST_CASE("robust training detours while nominal training hugs the cliff") {
  GridEnv env(cliffwalking_spec());
  const std::set<int> bad = cliff_adjacent_cells();
  const int start = grid_index(3, 0), goal = grid_index(3, 11);

  TabularTrainConfig cfg;
  cfg.seed = 5;

  GridEnv e1 = env;
  cfg.R = 0.0;
  const auto nominal = q_learning_train(e1, cfg);
  const auto nominal_path = greedy_rollout(env, nominal.q);
  REQUIRE(nominal_path.back() == goal);
  bool nominal_hugs = false;
  for (int s : nominal_path)
    if (s != start && s != goal && bad.count(s)) nominal_hugs = true;
  CHECK(nominal_hugs);

  GridEnv e2 = env;
  cfg.R = 0.2;
  const auto robust = arq_train(e2, cfg);
  const auto robust_path = greedy_rollout(env, robust.q);
  REQUIRE(robust_path.back() == goal);
  for (int s : robust_path)
    if (s != start && s != goal) CHECK(bad.count(s) == 0);
}

TEST_CASE("double-agent training mirrors the neighbor-set learner") {
  GridEnv env(cliffwalking_spec());
  const TabularMdp mdp = env.to_mdp(0.99);
  const std::set<int> bad = cliff_adjacent_cells();
  const int start = grid_index(3, 0), goal = grid_index(3, 11);

  TabularTrainConfig cfg;
  cfg.R = 0.2;
  cfg.episodes = 2000;
  cfg.seed = 5;
  GridEnv e1 = env, e2 = env;
  const auto prq = prq_train(e1, cfg);
  const auto arq = arq_train(e2, cfg);

  const auto prq_path = greedy_rollout(env, prq.q);
  REQUIRE(prq_path.back() == goal);
  for (int s : prq_path)
    if (s != start && s != goal) CHECK(bad.count(s) == 0);

  // Both algorithms should induce the same estimated-maximizer map over the
  // states both visited.
  const auto ma = argmax_map(arq.q, arq.nhat);
  const auto mp = argmax_map(prq.q, arq.nhat);
  int n = 0, hits = 0;
  for (int s = 0; s < mdp.n_states; ++s) {
    if (prq.visit_counts[s] == 0 || arq.visit_counts[s] == 0) continue;
    ++n;
    hits += ma[s] == mp[s];
  }
  REQUIRE(n >= 30);
  CHECK(static_cast<double>(hits) / n >= 0.9);

  // Every buffered pessimistic successor is reachable from its shared state
  // under the nominal kernel.
  REQUIRE_FALSE(prq.transitions.empty());
  for (const auto& t : prq.transitions) {
    CHECK(mdp.p(t.s, t.u, t.x_next) > 0.0);
    CHECK(mdp.p(t.s, t.a, t.s_next) > 0.0);
  }
}

TEST_CASE("maximizer-vs-pessimist report") {
  GridEnv env(cliffwalking_spec());
  const TabularMdp mdp = env.to_mdp(0.99);
  const NeighborTable truth = true_neighbor_sets(mdp);
  const auto vi = robust_value_iteration(mdp, UncertaintySetSpec::adjacent(0.2), truth);

  SUBCASE("a pessimist that walks to the maximizer scores 1.0") {
    QTable q_phi(mdp.n_states, mdp.n_actions);
    const auto am = argmax_map(vi.q, truth);
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a)
        if (mdp.p(s, a, am[s]) == 1.0) {
          q_phi(s, a) = -1.0;
          break;
        }
    }
    const auto rep = max_state_report(vi.q, truth, q_phi, mdp);
    CHECK(rep.agreement == 1.0);
    for (int s = 0; s < mdp.n_states; ++s)
      if (rep.considered[s]) CHECK(rep.argmax_state[s] == rep.pessimistic_next[s]);
  }

  SUBCASE("the exact cost-maximizing pessimist reproduces the oracle rate") {
    TabularMdp negated = mdp;
    for (double& c : negated.cost) c = -c;
    const auto pess_vi =
        robust_value_iteration(negated, UncertaintySetSpec::nominal(), truth);
    const auto rep = max_state_report(vi.q, truth, pess_vi.q, mdp);
    CHECK(rep.agreement == doctest::Approx(29.0 / 37.0).epsilon(1e-12));
  }

  SUBCASE("a random pessimist agrees at the combinatorial rate") {
    const auto am = argmax_map(vi.q, truth);
    double expect = 0.0;
    int considered = 0;
    std::vector<bool> absorbing(mdp.n_states, true);
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a)
        if (mdp.p(s, a, s) != 1.0) absorbing[s] = false;
      if (absorbing[s]) continue;
      int to_max = 0;
      for (int a = 0; a < mdp.n_actions; ++a)
        if (mdp.p(s, a, am[s]) == 1.0) ++to_max;
      expect += to_max / 4.0;
      ++considered;
    }
    expect /= considered;

    double mean = 0.0;
    const int draws = 400;
    for (int i = 0; i < draws; ++i) {
      const QTable q_phi = random_table(mdp.n_states, mdp.n_actions, 1000 + i);
      mean += max_state_report(vi.q, truth, q_phi, mdp).agreement;
    }
    mean /= draws;
    CHECK(mean == doctest::Approx(expect).epsilon(0.12));
  }

  SUBCASE("masks and shape checks") {
    QTable q_phi(mdp.n_states, mdp.n_actions);
    std::vector<bool> none(mdp.n_states, false);
    const auto rep = max_state_report(vi.q, truth, q_phi, mdp, &none);
    CHECK(rep.agreement == 0.0);
    for (int s = 0; s < mdp.n_states; ++s) CHECK_FALSE(rep.considered[s]);
    const QTable wrong(3, 2);
    CHECK_THROWS_AS(max_state_report(wrong, truth, q_phi, mdp),
                    std::invalid_argument);
  }
}
