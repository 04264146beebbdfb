#pragma once

#include <functional>
#include <random>

#include "rrl/env.hpp"

namespace rrl {

using TabularActor = std::function<int(int state, std::mt19937_64& rng)>;
using DiscreteActor = std::function<int(const std::vector<double>& obs, std::mt19937_64& rng)>;
using ContinuousActor = std::function<double(const std::vector<double>& obs, std::mt19937_64& rng)>;

// Runs independent episodes seeded seed, seed+1, ... and reports returns in
// reward convention (negated cumulative cost). Episodes hitting max_steps
// without terminating are truncated and counted in the report.
EvalReport evaluate_policy(TabularEnv& env, const TabularActor& actor, int episodes,
                           int max_steps, std::uint64_t seed);
EvalReport evaluate_policy(TabularEnv& env, const TabularPolicy& policy, int episodes,
                           int max_steps, std::uint64_t seed);
EvalReport evaluate_policy(PhysicsEnv& env, const DiscreteActor& actor, int episodes,
                           int max_steps, std::uint64_t seed);
EvalReport evaluate_policy(PhysicsEnv& env, const ContinuousActor& actor, int episodes,
                           int max_steps, std::uint64_t seed);

}  // namespace rrl
