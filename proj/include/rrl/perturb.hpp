#pragma once

#include <utility>

#include "rrl/env.hpp"

namespace rrl {

struct PerturbSpec {
  enum class Kind { action, parameter };
  Kind kind = Kind::action;
  double action_noise_prob = 0.0;
  std::vector<std::pair<std::string, double>> parameter_scales;
};

std::vector<std::string> validate_perturb(const PerturbSpec& spec);

// With probability p the agent's action is replaced by a uniformly random
// one. The wrapper keeps its own rng so p=0 leaves trajectories untouched.
std::unique_ptr<TabularEnv> wrap_action_perturbation(std::unique_ptr<TabularEnv> env,
                                                     double p);
std::unique_ptr<PhysicsEnv> wrap_action_perturbation(std::unique_ptr<PhysicsEnv> env,
                                                     double p);

// Clone with each named parameter multiplied by its scale. Throws
// std::invalid_argument for unknown names or non-positive scales.
std::unique_ptr<PhysicsEnv> wrap_parameter_perturbation(const PhysicsEnv& env,
                                                        const PerturbSpec& spec);

}  // namespace rrl
