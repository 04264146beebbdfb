#include "rrl/evaluate.hpp"

#include <stdexcept>

namespace rrl {

namespace {

template <class ResetFn, class EpisodeFn>
EvalReport run_episodes(int episodes, int max_steps, std::uint64_t seed,
                        ResetFn reset, EpisodeFn run_one) {
  if (episodes <= 0) throw std::invalid_argument("evaluate_policy: episode count");
  if (max_steps <= 0) throw std::invalid_argument("evaluate_policy: step cap");
  std::vector<double> returns;
  returns.reserve(episodes);
  int truncated = 0;
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t ep_seed = seed + static_cast<std::uint64_t>(e);
    std::mt19937_64 actor_rng(mix_seed(ep_seed, 0xac70));
    reset(ep_seed);
    bool was_truncated = false;
    returns.push_back(run_one(actor_rng, max_steps, was_truncated));
    if (was_truncated) ++truncated;
  }
  return make_report(std::move(returns), seed, truncated);
}

}  // namespace

EvalReport evaluate_policy(TabularEnv& env, const TabularActor& actor, int episodes,
                           int max_steps, std::uint64_t seed) {
  return run_episodes(
      episodes, max_steps, seed,
      [&](std::uint64_t s) { env.reset_with_seed(s); },
      [&](std::mt19937_64& rng, int cap, bool& truncated) {
        double total_cost = 0.0;
        for (int t = 0; t < cap; ++t) {
          const StepOut out = env.step(actor(env.state(), rng));
          total_cost += out.cost;
          if (out.done) return -total_cost;
        }
        truncated = true;
        return -total_cost;
      });
}

EvalReport evaluate_policy(TabularEnv& env, const TabularPolicy& policy, int episodes,
                           int max_steps, std::uint64_t seed) {
  const auto bad = validate_policy(policy, env.n_states(), env.n_actions());
  if (!bad.empty()) throw std::invalid_argument("evaluate_policy: " + bad.front());
  TabularActor actor;
  if (policy.stochastic()) {
    actor = [&policy](int s, std::mt19937_64& rng) {
      std::discrete_distribution<int> d(policy.probs[s].begin(), policy.probs[s].end());
      return d(rng);
    };
  } else {
    actor = [&policy](int s, std::mt19937_64&) { return policy.actions[s]; };
  }
  return evaluate_policy(env, actor, episodes, max_steps, seed);
}

EvalReport evaluate_policy(PhysicsEnv& env, const DiscreteActor& actor, int episodes,
                           int max_steps, std::uint64_t seed) {
  if (!env.discrete_actions())
    throw std::invalid_argument("evaluate_policy: env takes continuous actions");
  return run_episodes(
      episodes, max_steps, seed,
      [&](std::uint64_t s) { env.reset_with_seed(s); },
      [&](std::mt19937_64& rng, int cap, bool& truncated) {
        double total_cost = 0.0;
        for (int t = 0; t < cap; ++t) {
          const StepOut out = env.step_discrete(actor(env.observation(), rng));
          total_cost += out.cost;
          if (out.done) return -total_cost;
        }
        truncated = true;
        return -total_cost;
      });
}

EvalReport evaluate_policy(PhysicsEnv& env, const ContinuousActor& actor, int episodes,
                           int max_steps, std::uint64_t seed) {
  if (env.discrete_actions())
    throw std::invalid_argument("evaluate_policy: env takes discrete actions");
  return run_episodes(
      episodes, max_steps, seed,
      [&](std::uint64_t s) { env.reset_with_seed(s); },
      [&](std::mt19937_64& rng, int cap, bool& truncated) {
        double total_cost = 0.0;
        for (int t = 0; t < cap; ++t) {
          const StepOut out = env.step_continuous(actor(env.observation(), rng));
          total_cost += out.cost;
          if (out.done) return -total_cost;
        }
        truncated = true;
        return -total_cost;
      });
}

}  // namespace rrl
