#include "rrl/tabular_agents.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rrl {

namespace {

double robust_target(double c, double gamma, double R, double boot_nominal,
                     double boot_worst) {
  return c + gamma * ((1.0 - R) * boot_nominal + R * boot_worst);
}

void blend(QTable& q, int s, int a, double alpha, double target) {
  q(s, a) = (1.0 - alpha) * q(s, a) + alpha * target;
}

bool absorbing(const TabularMdp& mdp, int s) {
  for (int a = 0; a < mdp.n_actions; ++a)
    if (mdp.p(s, a, s) != 1.0) return false;
  return true;
}

}  // namespace

void q_learning_update(QTable& q, const Transition& t, double alpha, double gamma) {
  const double boot = t.done ? 0.0 : state_value(q, t.s_next);
  blend(q, t.s, t.a, alpha, t.c + gamma * boot);
}

double table_vmax(const QTable& q) {
  double m = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < q.n_states; ++s) m = std::max(m, state_value(q, s));
  return m;
}

void robust_q_update(QTable& q, const Transition& t, double alpha, double gamma,
                     double R, double vmax) {
  const double boot = t.done ? 0.0 : state_value(q, t.s_next);
  blend(q, t.s, t.a, alpha, robust_target(t.c, gamma, R, boot, vmax));
}

void arq_update(QTable& q, const Transition& t, const NeighborTable& nhat,
                double alpha, double gamma, double R) {
  const double boot = t.done ? 0.0 : state_value(q, t.s_next);
  double worst = -std::numeric_limits<double>::infinity();
  for (int j : nhat.neighbors_of(t.s)) worst = std::max(worst, state_value(q, j));
  blend(q, t.s, t.a, alpha, robust_target(t.c, gamma, R, boot, worst));
}

void prq_pessimistic_update(QTable& q_phi, const DoubleAgentTransition& t,
                            double alpha, double gamma) {
  const double boot = t.done_p ? 0.0 : state_value(q_phi, t.x_next);
  blend(q_phi, t.s, t.u, alpha, t.c_p + gamma * boot);
}

void prq_robust_update(QTable& q_pi, const DoubleAgentTransition& t, double alpha,
                       double gamma, double R) {
  const double boot = t.done ? 0.0 : state_value(q_pi, t.s_next);
  const double worst = t.done_p ? 0.0 : state_value(q_pi, t.x_next);
  blend(q_pi, t.s, t.a, alpha, robust_target(t.c, gamma, R, boot, worst));
}

int eps_greedy(const QTable& q, int s, double eps, std::mt19937_64& rng) {
  if (eps > 0.0) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng) < eps) {
      std::uniform_int_distribution<int> pick(0, q.n_actions - 1);
      return pick(rng);
    }
  }
  return greedy_action(q, s);
}

DoubleAgentTransition double_agent_step(TabularEnv& env, int s, int a, int u) {
  DoubleAgentTransition t;
  t.s = s;
  t.a = a;
  t.u = u;
  env.set_state(s);
  const StepOut robust_out = env.step(a);
  t.c = robust_out.cost;
  t.s_next = env.state();
  t.done = robust_out.done;
  env.set_state(s);
  const StepOut pess_out = env.step(u);
  t.c_p = -pess_out.cost;
  t.x_next = env.state();
  t.done_p = pess_out.done;
  env.set_state(t.s_next);
  return t;
}

int double_agent_sample(TabularEnv& env, const TabularActor& robust_policy,
                        const TabularActor& pessimistic_policy, int steps,
                        ReplayBuffer<DoubleAgentTransition>& buffer,
                        std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0xda));
  int s = env.reset_with_seed(seed);
  for (int i = 0; i < steps; ++i) {
    const int a = robust_policy(s, rng);
    const int u = pessimistic_policy(s, rng);
    const DoubleAgentTransition t = double_agent_step(env, s, a, u);
    buffer.push(t);
    s = t.done ? env.reset() : t.s_next;
  }
  return s;
}

const char* tabular_algo_name(TabularAlgo algo) {
  switch (algo) {
    case TabularAlgo::q_learning: return "qlearning";
    case TabularAlgo::robust_q: return "robustq";
    case TabularAlgo::arq: return "arq";
    case TabularAlgo::prq: return "prq";
  }
  return "?";
}

namespace {

void validate_train_config(const TabularTrainConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
    throw std::invalid_argument("train config: alpha out of (0,1]");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw std::invalid_argument("train config: gamma out of (0,1)");
  if (!(cfg.R >= 0.0 && cfg.R <= 1.0))
    throw std::invalid_argument("train config: R out of [0,1]");
  if (cfg.episodes <= 0 || cfg.max_steps <= 0)
    throw std::invalid_argument("train config: non-positive episode budget");
  if (cfg.batch_size <= 0 || cfg.buffer_capacity <= 0)
    throw std::invalid_argument("train config: non-positive buffer settings");
  if (!(cfg.eps_start >= 0.0 && cfg.eps_start <= 1.0 && cfg.eps_end >= 0.0 &&
        cfg.eps_end <= 1.0))
    throw std::invalid_argument("train config: exploration rates out of [0,1]");
}

double eps_at(const TabularTrainConfig& cfg, int episode) {
  // linear decay over the first half of training
  const double horizon = std::max(1.0, cfg.episodes / 2.0);
  const double f = std::min(1.0, episode / horizon);
  return cfg.eps_start + f * (cfg.eps_end - cfg.eps_start);
}

void log_checkpoint(TabularEnv& env, const QTable& q, const TabularTrainConfig& cfg,
                    int episode, long step, std::vector<TrainLogRow>& log) {
  auto eval_env = env.clone();
  const TabularPolicy pol = greedy_policy(q);
  const EvalReport rep =
      evaluate_policy(*eval_env, pol, cfg.log_eval_episodes, cfg.max_steps,
                      mix_seed(cfg.seed, 7000 + episode));
  log.push_back({episode, step, rep.mean_return, rep.std_return});
}

TabularTrainResult train_single(TabularEnv& env, TabularAlgo algo,
                                const TabularTrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  TabularTrainResult out;
  out.q = QTable(env.n_states(), env.n_actions());
  out.nhat = NeighborTable(env.n_states());
  out.visit_counts.assign(env.n_states(), 0);

  ReplayBuffer<Transition> buffer(cfg.buffer_capacity, mix_seed(cfg.seed, 2));
  std::mt19937_64 explore_rng(mix_seed(cfg.seed, 1));
  env.seed(cfg.seed);
  long step = 0;

  auto apply = [&](const Transition& t) {
    switch (algo) {
      case TabularAlgo::q_learning:
        q_learning_update(out.q, t, cfg.alpha, cfg.gamma);
        break;
      case TabularAlgo::robust_q:
        robust_q_update(out.q, t, cfg.alpha, cfg.gamma, cfg.R, table_vmax(out.q));
        break;
      case TabularAlgo::arq:
        arq_update(out.q, t, out.nhat, cfg.alpha, cfg.gamma, cfg.R);
        break;
      case TabularAlgo::prq:
        throw std::logic_error("train_single: prq");
    }
  };

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const double eps = eps_at(cfg, ep);
    int s = env.reset();
    for (int t = 0; t < cfg.max_steps; ++t) {
      const int a = eps_greedy(out.q, s, eps, explore_rng);
      const StepOut so = env.step(a);
      const Transition tr{s, a, so.cost, env.state(), so.done};
      out.nhat.record(tr.s, tr.s_next);
      ++out.visit_counts[s];
      ++step;
      if (cfg.online) {
        apply(tr);
      } else {
        buffer.push(tr);
        if (step > cfg.warmup_steps)
          for (int k = 0; k < cfg.batch_size; ++k) apply(buffer.sample());
      }
      s = tr.s_next;
      if (tr.done) break;
    }
    if (cfg.log_every > 0 &&
        ((ep + 1) % cfg.log_every == 0 || ep + 1 == cfg.episodes))
      log_checkpoint(env, out.q, cfg, ep + 1, step, out.log);
  }
  out.total_steps = step;
  out.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

TabularTrainResult train_prq(TabularEnv& env, const TabularTrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  TabularTrainResult out;
  out.q = QTable(env.n_states(), env.n_actions());
  out.q_phi = QTable(env.n_states(), env.n_actions());
  out.nhat = NeighborTable(env.n_states());
  out.visit_counts.assign(env.n_states(), 0);

  ReplayBuffer<DoubleAgentTransition> buffer(cfg.buffer_capacity, mix_seed(cfg.seed, 2));
  std::mt19937_64 explore_rng(mix_seed(cfg.seed, 1));
  env.seed(cfg.seed);
  long step = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const double eps = eps_at(cfg, ep);
    int s = env.reset();
    for (int t = 0; t < cfg.max_steps; ++t) {
      const int a = eps_greedy(out.q, s, eps, explore_rng);
      const int u = eps_greedy(out.q_phi, s, eps, explore_rng);
      const DoubleAgentTransition tr = double_agent_step(env, s, a, u);
      out.nhat.record(tr.s, tr.s_next);
      ++out.visit_counts[s];
      ++step;
      buffer.push(tr);
      if (step > cfg.warmup_steps)
        for (int k = 0; k < cfg.batch_size; ++k) {
          const DoubleAgentTransition& b = buffer.sample();
          prq_pessimistic_update(out.q_phi, b, cfg.alpha, cfg.gamma);
          prq_robust_update(out.q, b, cfg.alpha, cfg.gamma, cfg.R);
        }
      s = tr.s_next;
      if (tr.done) break;
    }
    if (cfg.log_every > 0 &&
        ((ep + 1) % cfg.log_every == 0 || ep + 1 == cfg.episodes))
      log_checkpoint(env, out.q, cfg, ep + 1, step, out.log);
  }
  out.transitions = buffer.dump();
  out.total_steps = step;
  out.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace

TabularTrainResult train_tabular(TabularEnv& env, TabularAlgo algo,
                                 const TabularTrainConfig& cfg) {
  validate_train_config(cfg);
  if (algo == TabularAlgo::prq) return train_prq(env, cfg);
  return train_single(env, algo, cfg);
}

TabularTrainResult q_learning_train(TabularEnv& env, const TabularTrainConfig& cfg) {
  return train_tabular(env, TabularAlgo::q_learning, cfg);
}
TabularTrainResult robust_q_train(TabularEnv& env, const TabularTrainConfig& cfg) {
  return train_tabular(env, TabularAlgo::robust_q, cfg);
}
TabularTrainResult arq_train(TabularEnv& env, const TabularTrainConfig& cfg) {
  return train_tabular(env, TabularAlgo::arq, cfg);
}
TabularTrainResult prq_train(TabularEnv& env, const TabularTrainConfig& cfg) {
  return train_tabular(env, TabularAlgo::prq, cfg);
}

MaxStateReport max_state_report(const QTable& q_pi, const NeighborTable& neighbors,
                                const QTable& q_phi, const TabularMdp& mdp,
                                const std::vector<bool>* mask) {
  if (q_pi.n_states != mdp.n_states || q_phi.n_states != mdp.n_states ||
      neighbors.n_states() != mdp.n_states)
    throw std::invalid_argument("max_state_report: shape mismatch");
  MaxStateReport rep;
  rep.argmax_state.assign(mdp.n_states, -1);
  rep.pessimistic_next.assign(mdp.n_states, -1);
  rep.considered.assign(mdp.n_states, false);
  int hits = 0, total = 0;
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mask && !(*mask)[s]) continue;
    if (absorbing(mdp, s)) continue;
    int arg = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int j : neighbors.neighbors_of(s)) {
      const double vj = state_value(q_pi, j);
      if (vj > best) {
        best = vj;
        arg = j;
      }
    }
    const int u = greedy_action(q_phi, s);
    int modal = -1;
    double pbest = -1.0;
    for (int j = 0; j < mdp.n_states; ++j)
      if (mdp.p(s, u, j) > pbest) {
        pbest = mdp.p(s, u, j);
        modal = j;
      }
    rep.argmax_state[s] = arg;
    rep.pessimistic_next[s] = modal;
    rep.considered[s] = true;
    ++total;
    if (arg == modal) ++hits;
  }
  rep.agreement = total > 0 ? static_cast<double>(hits) / total : 0.0;
  return rep;
}

}  // namespace rrl
