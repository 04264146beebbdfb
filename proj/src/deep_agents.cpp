#include "rrl/deep_agents.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "rrl/replay.hpp"

namespace rrl {

namespace {

std::vector<double> critic_input(const std::vector<double>& obs, double action) {
  std::vector<double> in(obs);
  in.push_back(action);
  return in;
}

double blend(double c, double gamma, double R, double boot_nominal, double boot_worst) {
  return c + gamma * ((1.0 - R) * boot_nominal + R * boot_worst);
}

}  // namespace

VmaxBuffer::VmaxBuffer(std::size_t capacity) : capacity_(capacity) {}

void VmaxBuffer::push(double v) {
  if (capacity_ == 0) return;
  order_.push_back(v);
  sorted_.insert(v);
  if (order_.size() > capacity_) {
    sorted_.erase(sorted_.find(order_.front()));
    order_.pop_front();
  }
}

double VmaxBuffer::max_or(double fallback) const {
  if (sorted_.empty()) return fallback;
  return *sorted_.rbegin();
}

double q_min_value(const MlpNet& q, const std::vector<double>& obs) {
  std::vector<double> out = forward(q, obs);
  return *std::min_element(out.begin(), out.end());
}

int q_argmin(const MlpNet& q, const std::vector<double>& obs) {
  std::vector<double> out = forward(q, obs);
  int best = 0;
  for (int a = 1; a < static_cast<int>(out.size()); ++a)
    if (out[a] < out[best]) best = a;
  return best;
}

double critic_value(const MlpNet& critic, const std::vector<double>& obs, double action) {
  return forward(critic, critic_input(obs, action))[0];
}

double dqn_target(const DeepTransition& t, const MlpNet& q_target, double gamma) {
  double boot = t.done ? 0.0 : q_min_value(q_target, t.obs_next);
  return t.c + gamma * boot;
}

double pr_dqn_pessimistic_target(const DeepTransition& t, const MlpNet& q_phi_target,
                                 double gamma) {
  double boot = t.done_p ? 0.0 : q_min_value(q_phi_target, t.obs_x);
  return t.c_p + gamma * boot;
}

double pr_dqn_robust_target(const DeepTransition& t, const MlpNet& q_pi_target,
                            double gamma, double R) {
  double boot_nominal = t.done ? 0.0 : q_min_value(q_pi_target, t.obs_next);
  double boot_worst = t.done_p ? 0.0 : q_min_value(q_pi_target, t.obs_x);
  return blend(t.c, gamma, R, boot_nominal, boot_worst);
}

double r_dqn_target(const DeepTransition& t, const MlpNet& q_pi_target, double gamma,
                    double R, const VmaxBuffer& vmax) {
  double boot_nominal = t.done ? 0.0 : q_min_value(q_pi_target, t.obs_next);
  double boot_worst = vmax.max_or(boot_nominal);
  return blend(t.c, gamma, R, boot_nominal, boot_worst);
}

double ddpg_target(const DeepTransition& t, const MlpNet& critic_target,
                   const MlpNet& actor_target, double gamma) {
  double boot = 0.0;
  if (!t.done) {
    double a = forward(actor_target, t.obs_next)[0];
    boot = critic_value(critic_target, t.obs_next, a);
  }
  return t.c + gamma * boot;
}

DdpgTargetPair pr_ddpg_targets(const DeepTransition& t, const MlpNet& critic_pi_target,
                               const MlpNet& critic_phi_target,
                               const MlpNet& actor_pi_target,
                               const MlpNet& actor_phi_target, double gamma, double R) {
  double boot_nominal = 0.0;
  if (!t.done) {
    double a = forward(actor_pi_target, t.obs_next)[0];
    boot_nominal = critic_value(critic_pi_target, t.obs_next, a);
  }
  double boot_worst = 0.0;
  if (!t.done_p) {
    double a = forward(actor_pi_target, t.obs_x)[0];
    boot_worst = critic_value(critic_pi_target, t.obs_x, a);
  }
  DdpgTargetPair out;
  out.y_pi = blend(t.c, gamma, R, boot_nominal, boot_worst);
  double boot_phi = 0.0;
  if (!t.done_p) {
    double a = forward(actor_phi_target, t.obs_x)[0];
    boot_phi = critic_value(critic_phi_target, t.obs_x, a);
  }
  out.y_phi = t.c_p + gamma * boot_phi;
  return out;
}

double r_ddpg_target(const DeepTransition& t, const MlpNet& critic_target,
                     const MlpNet& actor_target, double gamma, double R,
                     const VmaxBuffer& vmax) {
  double boot_nominal = 0.0;
  if (!t.done) {
    double a = forward(actor_target, t.obs_next)[0];
    boot_nominal = critic_value(critic_target, t.obs_next, a);
  }
  double boot_worst = vmax.max_or(boot_nominal);
  return blend(t.c, gamma, R, boot_nominal, boot_worst);
}

double q_batch_loss_grad(const MlpNet& q, const std::vector<const DeepTransition*>& batch,
                         const std::vector<double>& y, bool pessimistic_branch,
                         GradBundle& grads) {
  if (batch.empty() || batch.size() != y.size())
    throw std::invalid_argument("q_batch_loss_grad: batch/target size mismatch");
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  ForwardCache cache;
  std::vector<double> out_grad(static_cast<std::size_t>(q.output_dim()), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const DeepTransition& t = *batch[i];
    int act = pessimistic_branch ? t.u : t.a;
    if (act < 0 || act >= q.output_dim())
      throw std::invalid_argument("q_batch_loss_grad: action out of range");
    std::vector<double> out = forward(q, t.obs, &cache);
    double diff = out[act] - y[i];
    loss += 0.5 * diff * diff / n;
    std::fill(out_grad.begin(), out_grad.end(), 0.0);
    out_grad[act] = diff / n;
    backward(q, cache, out_grad, grads);
  }
  return loss;
}

double critic_batch_loss_grad(const MlpNet& critic,
                              const std::vector<const DeepTransition*>& batch,
                              const std::vector<double>& y, bool pessimistic_branch,
                              GradBundle& grads) {
  if (batch.empty() || batch.size() != y.size())
    throw std::invalid_argument("critic_batch_loss_grad: batch/target size mismatch");
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  ForwardCache cache;
  std::vector<double> out_grad(1, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const DeepTransition& t = *batch[i];
    double act = pessimistic_branch ? t.u_cont : t.a_cont;
    std::vector<double> out = forward(critic, critic_input(t.obs, act), &cache);
    double diff = out[0] - y[i];
    loss += 0.5 * diff * diff / n;
    out_grad[0] = diff / n;
    backward(critic, cache, out_grad, grads);
  }
  return loss;
}

double ddpg_policy_grad(const MlpNet& actor, const MlpNet& critic,
                        const std::vector<std::vector<double>>& states,
                        GradBundle& grads) {
  if (states.empty()) throw std::invalid_argument("ddpg_policy_grad: empty batch");
  if (critic.input_dim() != actor.input_dim() + actor.output_dim())
    throw std::invalid_argument("ddpg_policy_grad: critic input must be state plus action");
  const double n = static_cast<double>(states.size());
  const std::size_t obs_dim = static_cast<std::size_t>(actor.input_dim());
  double mean_value = 0.0;
  ForwardCache actor_cache, critic_cache;
  GradBundle critic_scratch = zero_grads(critic);
  std::vector<double> critic_out_grad(1, 1.0 / n);
  std::vector<double> actor_out_grad(1, 0.0);
  for (const std::vector<double>& x : states) {
    std::vector<double> a = forward(actor, x, &actor_cache);
    std::vector<double> out = forward(critic, critic_input(x, a[0]), &critic_cache);
    mean_value += out[0] / n;
    std::vector<double> dinput =
        backward(critic, critic_cache, critic_out_grad, critic_scratch);
    actor_out_grad[0] = dinput[obs_dim];
    backward(actor, actor_cache, actor_out_grad, grads);
  }
  return mean_value;
}

std::string deep_algo_name(DeepAlgo algo) {
  switch (algo) {
    case DeepAlgo::dqn: return "dqn";
    case DeepAlgo::r_dqn: return "rdqn";
    case DeepAlgo::pr_dqn: return "prdqn";
    case DeepAlgo::ddpg: return "ddpg";
    case DeepAlgo::r_ddpg: return "rddpg";
    case DeepAlgo::pr_ddpg: return "prddpg";
  }
  throw std::invalid_argument("deep_algo_name: unknown algorithm");
}

bool deep_algo_discrete(DeepAlgo algo) {
  return algo == DeepAlgo::dqn || algo == DeepAlgo::r_dqn || algo == DeepAlgo::pr_dqn;
}

void validate_deep_config(const DeepTrainConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0))
    throw std::invalid_argument("deep config: gamma must be in [0,1)");
  if (!(cfg.R >= 0.0 && cfg.R <= 1.0))
    throw std::invalid_argument("deep config: R must be in [0,1]");
  if (!(cfg.lr_q > 0.0) || !(cfg.lr_actor > 0.0))
    throw std::invalid_argument("deep config: learning rates must be positive");
  if (!(cfg.tau > 0.0 && cfg.tau <= 1.0))
    throw std::invalid_argument("deep config: tau must be in (0,1]");
  if (cfg.hidden <= 0) throw std::invalid_argument("deep config: hidden width must be positive");
  if (cfg.batch_size <= 0) throw std::invalid_argument("deep config: batch size must be positive");
  if (cfg.buffer_capacity < cfg.batch_size)
    throw std::invalid_argument("deep config: buffer must hold at least one batch");
  if (cfg.warmup_steps < 0) throw std::invalid_argument("deep config: warmup must be nonnegative");
  if (cfg.total_steps <= 0) throw std::invalid_argument("deep config: total steps must be positive");
  if (!(cfg.eps_start >= 0.0 && cfg.eps_start <= 1.0) ||
      !(cfg.eps_end >= 0.0 && cfg.eps_end <= cfg.eps_start))
    throw std::invalid_argument("deep config: epsilon schedule must satisfy 0 <= end <= start <= 1");
  if (!(cfg.eps_fraction > 0.0 && cfg.eps_fraction <= 1.0))
    throw std::invalid_argument("deep config: eps fraction must be in (0,1]");
  if (!(cfg.noise_scale >= 0.0))
    throw std::invalid_argument("deep config: noise scale must be nonnegative");
  if (cfg.log_every <= 0) throw std::invalid_argument("deep config: log interval must be positive");
  if (cfg.log_eval_episodes <= 0)
    throw std::invalid_argument("deep config: eval episodes must be positive");
}

DiscreteActor make_q_actor(const MlpNet& q) {
  return [q](const std::vector<double>& obs, std::mt19937_64&) { return q_argmin(q, obs); };
}

ContinuousActor make_ddpg_actor(const MlpNet& actor) {
  return [actor](const std::vector<double>& obs, std::mt19937_64&) {
    return forward(actor, obs)[0];
  };
}

namespace {

double eps_at_step(const DeepTrainConfig& cfg, long step) {
  double horizon = cfg.eps_fraction * static_cast<double>(cfg.total_steps);
  if (horizon < 1.0) horizon = 1.0;
  double frac = static_cast<double>(step) / horizon;
  if (frac > 1.0) frac = 1.0;
  return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
}

int eps_greedy_deep(const MlpNet& q, const std::vector<double>& obs, double eps,
                    int n_actions, std::mt19937_64& rng) {
  if (eps > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < eps) {
      std::uniform_int_distribution<int> pick(0, n_actions - 1);
      return pick(rng);
    }
  }
  return q_argmin(q, obs);
}

struct TrainedNet {
  MlpNet* net = nullptr;
  MlpNet* target = nullptr;
  AdamState opt;
  const char* label = "";
};

}  // namespace

DeepTrainResult deep_train(PhysicsEnv& env, DeepAlgo algo, const DeepTrainConfig& cfg) {
  validate_deep_config(cfg);
  const bool discrete = deep_algo_discrete(algo);
  if (discrete != env.discrete_actions())
    throw std::invalid_argument("deep_train: algorithm and environment action types differ");
  const bool paired = algo == DeepAlgo::pr_dqn || algo == DeepAlgo::pr_ddpg;
  const bool windowed = algo == DeepAlgo::r_dqn || algo == DeepAlgo::r_ddpg;

  const auto t0 = std::chrono::steady_clock::now();
  const int od = env.obs_dim();
  const double low = env.action_low();
  const double high = env.action_high();
  const double half_range = 0.5 * (high - low);

  DeepTrainResult res;
  res.algo = algo;
  if (discrete) {
    const int na = env.n_actions();
    if (na < 2) throw std::invalid_argument("deep_train: need at least two discrete actions");
    std::vector<int> sizes{od, cfg.hidden, cfg.hidden, na};
    res.q_pi = make_mlp(sizes, mix_seed(cfg.seed, 101));
    res.q_phi = make_mlp(sizes, mix_seed(cfg.seed, 102));
  } else {
    std::vector<int> csizes{od + 1, cfg.hidden, cfg.hidden, 1};
    std::vector<int> asizes{od, cfg.hidden, cfg.hidden, 1};
    res.q_pi = make_mlp(csizes, mix_seed(cfg.seed, 101));
    res.q_phi = make_mlp(csizes, mix_seed(cfg.seed, 102));
    res.actor_pi = make_mlp(asizes, mix_seed(cfg.seed, 103), OutputKind::tanh_scaled, low, high);
    res.actor_phi = make_mlp(asizes, mix_seed(cfg.seed, 104), OutputKind::tanh_scaled, low, high);
    res.actor_pi_target = res.actor_pi;
    res.actor_phi_target = res.actor_phi;
  }
  res.q_pi_target = res.q_pi;
  res.q_phi_target = res.q_phi;

  AdamState opt_q_pi = make_adam(res.q_pi);
  AdamState opt_q_phi = make_adam(res.q_phi);
  AdamState opt_actor_pi;
  AdamState opt_actor_phi;
  if (!discrete) {
    opt_actor_pi = make_adam(res.actor_pi);
    opt_actor_phi = make_adam(res.actor_phi);
  }

  ReplayBuffer<DeepTransition> buffer(static_cast<std::size_t>(cfg.buffer_capacity),
                                      mix_seed(cfg.seed, 3));
  VmaxBuffer vmax(cfg.vmax_capacity);
  std::mt19937_64 explore(mix_seed(cfg.seed, 2));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  env.seed(mix_seed(cfg.seed, 1));
  std::vector<double> obs = env.reset();
  double ep_return = 0.0;
  int ep_steps = 0;
  double last_train_return = 0.0;

  GradBundle grads;
  DeepLogRow losses;  // carries the most recent batch losses

  auto pick_robust_discrete = [&](long step) {
    return eps_greedy_deep(res.q_pi, obs, eps_at_step(cfg, step), env.n_actions(), explore);
  };
  auto pick_pessimistic_discrete = [&](const std::vector<double>& at_obs, long step) {
    if (cfg.random_pessimist) {
      std::uniform_int_distribution<int> pick(0, env.n_actions() - 1);
      return pick(explore);
    }
    return eps_greedy_deep(res.q_phi, at_obs, eps_at_step(cfg, step), env.n_actions(), explore);
  };
  auto clamp_action = [&](double a) { return std::min(high, std::max(low, a)); };
  auto pick_robust_continuous = [&](long step) {
    if (step <= cfg.warmup_steps) {
      std::uniform_real_distribution<double> pick(low, high);
      return pick(explore);
    }
    double a = forward(res.actor_pi, obs)[0];
    return clamp_action(a + cfg.noise_scale * half_range * gauss(explore));
  };
  auto pick_pessimistic_continuous = [&](const std::vector<double>& at_obs, long step) {
    if (cfg.random_pessimist || step <= cfg.warmup_steps) {
      std::uniform_real_distribution<double> pick(low, high);
      return pick(explore);
    }
    double a = forward(res.actor_phi, at_obs)[0];
    return clamp_action(a + cfg.noise_scale * half_range * gauss(explore));
  };

  // Applies one Adam step from freshly accumulated grads; false means the
  // update produced a non-finite parameter and the run must stop.
  auto apply = [&](MlpNet& net, AdamState& opt, double lr, long step, const char* label) {
    if (adam_step(net, opt, grads, lr)) return true;
    res.diverged = true;
    res.divergence_step = step;
    res.divergence_note = std::string("non-finite update in ") + label + " at step " +
                          std::to_string(step);
    return false;
  };

  std::vector<DeepTransition> batch;
  std::vector<const DeepTransition*> ptrs;
  std::vector<double> targets;
  std::vector<std::vector<double>> batch_obs;

  long step = 0;
  for (step = 1; step <= cfg.total_steps; ++step) {
    DeepTransition t;
    t.obs = obs;
    t.state = env.internal_state();

    StepOut so;
    if (discrete) {
      t.a = pick_robust_discrete(step);
      t.a_cont = static_cast<double>(t.a);
      so = env.step_discrete(t.a);
    } else {
      t.a_cont = pick_robust_continuous(step);
      so = env.step_continuous(t.a_cont);
    }
    t.c = so.cost;
    t.done = so.done;
    t.obs_next = env.observation();
    t.state_next = env.internal_state();

    if (paired) {
      env.set_internal_state(t.state);
      StepOut sp;
      if (discrete) {
        t.u = pick_pessimistic_discrete(t.obs, step);
        t.u_cont = static_cast<double>(t.u);
        sp = env.step_discrete(t.u);
      } else {
        t.u_cont = pick_pessimistic_continuous(t.obs, step);
        sp = env.step_continuous(t.u_cont);
      }
      t.c_p = -sp.cost;
      t.done_p = sp.done;
      t.obs_x = env.observation();
      t.state_x = env.internal_state();
      env.set_internal_state(t.state_next);
    } else {
      t.u = t.a;
      t.u_cont = t.a_cont;
      t.c_p = -t.c;
      t.done_p = t.done;
      t.obs_x = t.obs_next;
      t.state_x = t.state_next;
    }

    ep_return -= t.c;
    ep_steps += 1;
    buffer.push(t);

    if (t.done || ep_steps >= env.step_limit()) {
      last_train_return = ep_return;
      ep_return = 0.0;
      ep_steps = 0;
      obs = env.reset();
    } else {
      obs = t.obs_next;
    }

    if (step > cfg.warmup_steps &&
        buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      batch = buffer.sample_batch(static_cast<std::size_t>(cfg.batch_size));
      ptrs.clear();
      for (const DeepTransition& b : batch) ptrs.push_back(&b);

      if (windowed) {
        for (const DeepTransition& b : batch)
          if (!b.done)
            vmax.push(discrete ? q_min_value(res.q_pi_target, b.obs_next)
                               : critic_value(res.q_pi_target, b.obs_next,
                                              forward(res.actor_pi_target, b.obs_next)[0]));
      }

      targets.resize(ptrs.size());
      bool ok = true;

      if (discrete) {
        if (paired && !cfg.random_pessimist) {
          for (std::size_t i = 0; i < ptrs.size(); ++i)
            targets[i] = pr_dqn_pessimistic_target(*ptrs[i], res.q_phi_target, cfg.gamma);
          grads = zero_grads(res.q_phi);
          losses.loss_q_phi = q_batch_loss_grad(res.q_phi, ptrs, targets, true, grads);
          ok = apply(res.q_phi, opt_q_phi, cfg.lr_q, step, "pessimistic value net");
          if (ok) soft_update(res.q_phi_target, res.q_phi, cfg.tau);
        }
        if (ok) {
          for (std::size_t i = 0; i < ptrs.size(); ++i) {
            if (paired)
              targets[i] = pr_dqn_robust_target(*ptrs[i], res.q_pi_target, cfg.gamma, cfg.R);
            else if (windowed)
              targets[i] = r_dqn_target(*ptrs[i], res.q_pi_target, cfg.gamma, cfg.R, vmax);
            else
              targets[i] = dqn_target(*ptrs[i], res.q_pi_target, cfg.gamma);
          }
          grads = zero_grads(res.q_pi);
          losses.loss_q_pi = q_batch_loss_grad(res.q_pi, ptrs, targets, false, grads);
          ok = apply(res.q_pi, opt_q_pi, cfg.lr_q, step, "robust value net");
          if (ok) soft_update(res.q_pi_target, res.q_pi, cfg.tau);
        }
      } else {
        batch_obs.clear();
        for (const DeepTransition& b : batch) batch_obs.push_back(b.obs);

        if (paired && !cfg.random_pessimist) {
          for (std::size_t i = 0; i < ptrs.size(); ++i)
            targets[i] = pr_ddpg_targets(*ptrs[i], res.q_pi_target, res.q_phi_target,
                                         res.actor_pi_target, res.actor_phi_target,
                                         cfg.gamma, cfg.R)
                             .y_phi;
          grads = zero_grads(res.q_phi);
          losses.loss_q_phi = critic_batch_loss_grad(res.q_phi, ptrs, targets, true, grads);
          ok = apply(res.q_phi, opt_q_phi, cfg.lr_q, step, "pessimistic critic");
          if (ok) {
            soft_update(res.q_phi_target, res.q_phi, cfg.tau);
            grads = zero_grads(res.actor_phi);
            losses.loss_actor_phi =
                ddpg_policy_grad(res.actor_phi, res.q_phi, batch_obs, grads);
            ok = apply(res.actor_phi, opt_actor_phi, cfg.lr_actor, step, "pessimistic actor");
            if (ok) soft_update(res.actor_phi_target, res.actor_phi, cfg.tau);
          }
        }
        if (ok) {
          for (std::size_t i = 0; i < ptrs.size(); ++i) {
            if (paired)
              targets[i] = pr_ddpg_targets(*ptrs[i], res.q_pi_target, res.q_phi_target,
                                           res.actor_pi_target, res.actor_phi_target,
                                           cfg.gamma, cfg.R)
                               .y_pi;
            else if (windowed)
              targets[i] = r_ddpg_target(*ptrs[i], res.q_pi_target, res.actor_pi_target,
                                         cfg.gamma, cfg.R, vmax);
            else
              targets[i] = ddpg_target(*ptrs[i], res.q_pi_target, res.actor_pi_target,
                                       cfg.gamma);
          }
          grads = zero_grads(res.q_pi);
          losses.loss_q_pi = critic_batch_loss_grad(res.q_pi, ptrs, targets, false, grads);
          ok = apply(res.q_pi, opt_q_pi, cfg.lr_q, step, "robust critic");
          if (ok) {
            soft_update(res.q_pi_target, res.q_pi, cfg.tau);
            grads = zero_grads(res.actor_pi);
            losses.loss_actor_pi =
                ddpg_policy_grad(res.actor_pi, res.q_pi, batch_obs, grads);
            ok = apply(res.actor_pi, opt_actor_pi, cfg.lr_actor, step, "robust actor");
            if (ok) soft_update(res.actor_pi_target, res.actor_pi, cfg.tau);
          }
        }
      }
      if (!ok) break;
    }

    if (step % cfg.log_every == 0 || step == cfg.total_steps) {
      std::unique_ptr<PhysicsEnv> probe = env.clone();
      EvalReport rep;
      if (discrete)
        rep = evaluate_policy(*probe, make_q_actor(res.q_pi), cfg.log_eval_episodes,
                              env.step_limit(), mix_seed(cfg.seed, 7000 + step));
      else
        rep = evaluate_policy(*probe, make_ddpg_actor(res.actor_pi), cfg.log_eval_episodes,
                              env.step_limit(), mix_seed(cfg.seed, 7000 + step));
      DeepLogRow row = losses;
      row.step = step;
      row.train_return = last_train_return;
      row.eval_mean = rep.mean_return;
      row.eval_std = rep.std_return;
      res.log.push_back(row);
    }
  }

  res.total_steps = std::min(step, cfg.total_steps);
  if (cfg.keep_transitions) res.transitions = buffer.dump();
  res.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace rrl
